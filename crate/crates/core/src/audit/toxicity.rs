//! Sentence toxicity scoring and corpus-to-corpus comparison.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use super::{AuditError, DescriptorHit, PrevalenceReport};
use crate::ratelimit::{Clock, RateLimiter, SystemClock};

pub const PERSPECTIVE_ENDPOINT_ENV: &str = "PERSPECTIVE_ENDPOINT";
pub const PERSPECTIVE_KEY_ENV: &str = "PERSPECTIVE_API_KEY";
const DEFAULT_ENDPOINT: &str = "https://commentanalyzer.googleapis.com/v1alpha1/comments:analyze";

/// Maps a sentence to a toxicity score in `[0, 1]`.
pub trait ToxicityScorer: Send + Sync {
    fn score(&self, sentence: &str) -> Result<f64, AuditError>;
}

/// Offline scorer: `chars / (chars + 200)`. Deterministic, for tests and
/// dry runs.
#[derive(Debug, Clone, Copy, Default)]
pub struct LengthStubScorer;

impl ToxicityScorer for LengthStubScorer {
    fn score(&self, sentence: &str) -> Result<f64, AuditError> {
        let n = sentence.chars().count() as f64;
        Ok(n / (n + 200.0))
    }
}

/// JSON POST abstraction so the HTTP scorer can run against a fake.
pub trait HttpPost: Send + Sync {
    /// Returns the status code and response body.
    fn post_json(&self, url: &str, body: &str) -> Result<(u16, String), String>;
}

pub struct ReqwestPost {
    client: reqwest::blocking::Client,
}

impl ReqwestPost {
    pub fn new(timeout: Duration) -> Result<Self, AuditError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| AuditError::Scorer(e.to_string()))?;
        Ok(Self { client })
    }
}

impl HttpPost for ReqwestPost {
    fn post_json(&self, url: &str, body: &str) -> Result<(u16, String), String> {
        let resp = self
            .client
            .post(url)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body.to_string())
            .send()
            .map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        Ok((status, resp.text().map_err(|e| e.to_string())?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerspectiveConfig {
    pub endpoint: String,
    #[serde(skip_serializing)]
    pub api_key: String,
    pub max_in_flight: usize,
    pub max_requests_per_second: f64,
    pub retry_limit: u32,
    pub backoff_base_ms: u64,
    pub timeout_ms: u64,
}

impl Default for PerspectiveConfig {
    fn default() -> Self {
        Self {
            endpoint: DEFAULT_ENDPOINT.into(),
            api_key: String::new(),
            max_in_flight: 4,
            max_requests_per_second: 1.0,
            retry_limit: 3,
            backoff_base_ms: 1000,
            timeout_ms: 30_000,
        }
    }
}

impl PerspectiveConfig {
    /// Defaults overridden by the endpoint and key environment variables.
    pub fn from_env() -> Self {
        let mut cfg = Self::default();
        if let Ok(url) = std::env::var(PERSPECTIVE_ENDPOINT_ENV) {
            cfg.endpoint = url;
        }
        cfg.api_key = std::env::var(PERSPECTIVE_KEY_ENV).unwrap_or_default();
        cfg
    }

    pub fn validate(&self) -> Result<(), AuditError> {
        if self.api_key.is_empty() {
            return Err(AuditError::ScorerConfig(format!("{PERSPECTIVE_KEY_ENV} is not set")));
        }
        if self.max_in_flight == 0 {
            return Err(AuditError::ScorerConfig("max_in_flight must be positive".into()));
        }
        let rps = self.max_requests_per_second;
        if !(rps.is_finite() && rps > 0.0) {
            return Err(AuditError::ScorerConfig(format!("invalid request rate {rps}")));
        }
        Ok(())
    }
}

/// Client for the Perspective comment-analysis API.
pub struct PerspectiveScorer {
    config: PerspectiveConfig,
    post: Box<dyn HttpPost>,
    limiter: RateLimiter,
    clock: Arc<dyn Clock>,
}

impl PerspectiveScorer {
    pub fn new(config: PerspectiveConfig) -> Result<Self, AuditError> {
        let post = ReqwestPost::new(Duration::from_millis(config.timeout_ms))?;
        Self::with_transport(config, Box::new(post), Arc::new(SystemClock::new()))
    }

    pub fn with_transport(
        config: PerspectiveConfig,
        post: Box<dyn HttpPost>,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, AuditError> {
        config.validate()?;
        Ok(Self {
            limiter: RateLimiter::new(config.max_requests_per_second),
            config,
            post,
            clock,
        })
    }

    pub fn max_in_flight(&self) -> usize {
        self.config.max_in_flight
    }

    fn url(&self) -> String {
        format!("{}?key={}", self.config.endpoint, self.config.api_key)
    }
}

fn parse_perspective(body: &str) -> Result<f64, String> {
    let v: serde_json::Value = serde_json::from_str(body).map_err(|e| e.to_string())?;
    v.pointer("/attributeScores/TOXICITY/summaryScore/value")
        .and_then(serde_json::Value::as_f64)
        .ok_or_else(|| "response has no TOXICITY summary score".to_string())
}

impl ToxicityScorer for PerspectiveScorer {
    fn score(&self, sentence: &str) -> Result<f64, AuditError> {
        let body = serde_json::json!({
            "comment": { "text": sentence },
            "languages": ["en"],
            "requestedAttributes": { "TOXICITY": {} },
        })
        .to_string();
        let url = self.url();
        let mut last = String::new();
        for attempt in 0..=self.config.retry_limit {
            if attempt > 0 {
                let backoff = self.config.backoff_base_ms.saturating_mul(1 << (attempt - 1).min(16));
                self.clock.sleep(Duration::from_millis(backoff));
            }
            self.limiter.acquire(self.clock.as_ref());
            match self.post.post_json(&url, &body) {
                Ok((200, text)) => return parse_perspective(&text).map_err(AuditError::Scorer),
                Ok((status, text)) if status == 429 || status >= 500 => {
                    last = format!("status {status}: {}", text.chars().take(200).collect::<String>());
                }
                Ok((status, text)) => {
                    return Err(AuditError::Scorer(format!(
                        "status {status}: {}",
                        text.chars().take(200).collect::<String>()
                    )))
                }
                Err(e) => last = e,
            }
        }
        Err(AuditError::Scorer(format!(
            "gave up after {} attempts: {last}",
            self.config.retry_limit + 1
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoredHits {
    pub hits: Vec<DescriptorHit>,
    /// Parallel to `hits`; `None` where scoring failed.
    pub scores: Vec<Option<f64>>,
    pub unscored: usize,
}

impl ScoredHits {
    /// Scored values per descriptor, in hit order.
    pub fn by_descriptor(&self) -> BTreeMap<String, Vec<f64>> {
        let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (hit, score) in self.hits.iter().zip(&self.scores) {
            let entry = out.entry(hit.descriptor.clone()).or_default();
            if let Some(s) = score {
                entry.push(*s);
            }
        }
        out
    }

    pub fn scored_values(&self) -> Vec<f64> {
        self.scores.iter().flatten().copied().collect()
    }
}

/// Scores every hit with at most `max_in_flight` concurrent calls. Failed
/// or out-of-range scores are recorded as `None` and counted.
pub fn score_sentences(hits: Vec<DescriptorHit>, scorer: &dyn ToxicityScorer, max_in_flight: usize) -> ScoredHits {
    let scores = Mutex::new(vec![None; hits.len()]);
    let next = AtomicUsize::new(0);
    let workers = max_in_flight.max(1).min(hits.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(hit) = hits.get(i) else { break };
                let result = match scorer.score(&hit.sentence) {
                    Ok(s) if (0.0..=1.0).contains(&s) => Some(s),
                    Ok(s) => {
                        tracing::warn!(index = i, score = s, "score out of range");
                        None
                    }
                    Err(e) => {
                        tracing::warn!(index = i, error = %e, "sentence left unscored");
                        None
                    }
                };
                scores.lock().expect("score table poisoned")[i] = result;
            });
        }
    });
    let scores = scores.into_inner().expect("score table poisoned");
    let unscored = scores.iter().filter(|s| s.is_none()).count();
    ScoredHits { hits, scores, unscored }
}

/// Fills sentence counts and mean toxicity into a prevalence report.
pub fn attach_toxicity(report: &mut PrevalenceReport, scored: &ScoredHits) {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for hit in &scored.hits {
        *counts.entry(hit.descriptor.as_str()).or_insert(0) += 1;
    }
    let values = scored.by_descriptor();
    for axis in &mut report.axes {
        for d in &mut axis.descriptors {
            d.sentence_count = counts.get(d.descriptor.as_str()).copied().unwrap_or(0);
            d.mean_toxicity = values.get(&d.descriptor).and_then(|v| mean(v));
        }
    }
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

fn sample_variance(values: &[f64], mean: f64) -> f64 {
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    /// Two-tailed.
    pub p_value: f64,
}

/// Two-sample unequal-variance t-test. `None` if either side has fewer
/// than two values.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Option<WelchResult> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a)?, mean(b)?);
    let (qa, qb) = (sample_variance(a, ma) / na, sample_variance(b, mb) / nb);
    let se2 = qa + qb;
    if se2 == 0.0 {
        // Both samples constant: the test degenerates.
        let df = na + nb - 2.0;
        return Some(if ma == mb {
            WelchResult { t: 0.0, df, p_value: 1.0 }
        } else {
            WelchResult {
                t: (ma - mb).signum() * f64::INFINITY,
                df,
                p_value: 0.0,
            }
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    let p_value = beta_reg(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0);
    Some(WelchResult { t, df, p_value })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionRow {
    pub descriptor: String,
    pub n_a: usize,
    pub n_b: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    /// `(mean_a - mean_b) / mean_b` in percent; negative when this corpus
    /// is less toxic.
    pub reduction_percent: f64,
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedDescriptor {
    pub descriptor: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ToxicityReport {
    pub rows: Vec<ReductionRow>,
    pub skipped: Vec<SkippedDescriptor>,
}

/// Compares per-descriptor scores of this corpus (`a`) against a
/// comparison corpus (`b`).
pub fn toxicity_reduction(a: &BTreeMap<String, Vec<f64>>, b: &BTreeMap<String, Vec<f64>>) -> ToxicityReport {
    let mut report = ToxicityReport::default();
    let names: std::collections::BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    let empty = Vec::new();
    for name in names {
        let xa = a.get(name).unwrap_or(&empty);
        let xb = b.get(name).unwrap_or(&empty);
        let skip = |reason: String| SkippedDescriptor {
            descriptor: name.clone(),
            reason,
        };
        let Some(w) = welch_t_test(xa, xb) else {
            report
                .skipped
                .push(skip(format!("need at least 2 scores per side, have {} and {}", xa.len(), xb.len())));
            continue;
        };
        let (ma, mb) = (mean(xa).unwrap_or(0.0), mean(xb).unwrap_or(0.0));
        if mb == 0.0 {
            report.skipped.push(skip("comparison mean is zero".into()));
            continue;
        }
        report.rows.push(ReductionRow {
            descriptor: name.clone(),
            n_a: xa.len(),
            n_b: xb.len(),
            mean_a: ma,
            mean_b: mb,
            reduction_percent: (ma - mb) / mb * 100.0,
            t: w.t,
            df: w.df,
            p_value: w.p_value,
        });
    }
    report
}
