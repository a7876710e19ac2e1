use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ArchiveRef, EdgarError};
use crate::ratelimit::{Clock, RateLimiter, SystemClock};

/// Environment variable holding the contact string sent as `User-Agent`.
pub const USER_AGENT_ENV: &str = "EDGAR_USER_AGENT";

/// SEC fair-access ceiling.
const MAX_ALLOWED_RPS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FetchPolicy {
    pub max_requests_per_second: f64,
    pub max_concurrent: usize,
    pub user_agent_contact: String,
    pub retry_limit: u32,
    #[serde(with = "duration_millis")]
    pub backoff_base: Duration,
}

impl Default for FetchPolicy {
    fn default() -> Self {
        Self {
            max_requests_per_second: 8.0,
            max_concurrent: 4,
            user_agent_contact: std::env::var(USER_AGENT_ENV).unwrap_or_default(),
            retry_limit: 5,
            backoff_base: Duration::from_millis(500),
        }
    }
}

impl FetchPolicy {
    pub fn validate(&self) -> Result<(), EdgarError> {
        let rps = self.max_requests_per_second;
        if !(rps.is_finite() && rps > 0.0 && rps <= MAX_ALLOWED_RPS) {
            return Err(EdgarError::InvalidPolicy(format!(
                "max_requests_per_second must be in (0, {MAX_ALLOWED_RPS}], got {rps}"
            )));
        }
        if self.max_concurrent == 0 {
            return Err(EdgarError::InvalidPolicy(
                "max_concurrent must be positive".into(),
            ));
        }
        if self.user_agent_contact.trim().is_empty() {
            return Err(EdgarError::InvalidPolicy(format!(
                "a user-agent contact string is required (set {USER_AGENT_ENV})"
            )));
        }
        Ok(())
    }
}

mod duration_millis {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

/// Minimal GET abstraction so the fetcher can be driven by a fake server.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str, user_agent: &str) -> Result<HttpResponse, String>;
}

/// Blocking HTTP(S) transport.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Result<Self, EdgarError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| EdgarError::Transport {
                url: String::new(),
                message: e.to_string(),
            })?;
        Ok(Self { client })
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str, user_agent: &str) -> Result<HttpResponse, String> {
        let resp = self
            .client
            .get(url)
            .header(reqwest::header::USER_AGENT, user_agent)
            .send()
            .map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.bytes().map_err(|e| e.to_string())?.to_vec();
        Ok(HttpResponse { status, body })
    }
}

/// Serves `file://` URLs from a local mirror of the archive host.
#[derive(Debug, Default, Clone)]
pub struct FileTransport;

impl Transport for FileTransport {
    fn get(&self, url: &str, _user_agent: &str) -> Result<HttpResponse, String> {
        let path = url.strip_prefix("file://").unwrap_or(url);
        match fs::read(path) {
            Ok(body) => Ok(HttpResponse { status: 200, body }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(HttpResponse {
                status: 404,
                body: Vec::new(),
            }),
            Err(e) => Err(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchedArchive {
    pub archive: ArchiveRef,
    pub path: PathBuf,
    pub sha256: String,
    /// False when the cached copy was reused.
    pub transferred: bool,
}

/// Downloads archives into `<cache>/<yyyy>/<mm>/<dd>/<archive-name>` with a
/// `<archive-name>.sha256` sidecar.
pub struct Fetcher {
    policy: FetchPolicy,
    base_url: String,
    cache_dir: PathBuf,
    transport: Arc<dyn Transport>,
    clock: Arc<dyn Clock>,
    limiter: Arc<RateLimiter>,
}

impl Fetcher {
    pub fn new(
        policy: FetchPolicy,
        base_url: impl Into<String>,
        cache_dir: impl Into<PathBuf>,
        transport: Arc<dyn Transport>,
    ) -> Result<Self, EdgarError> {
        Self::with_clock(policy, base_url, cache_dir, transport, Arc::new(SystemClock::new()))
    }

    pub fn with_clock(
        policy: FetchPolicy,
        base_url: impl Into<String>,
        cache_dir: impl Into<PathBuf>,
        transport: Arc<dyn Transport>,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, EdgarError> {
        policy.validate()?;
        let limiter = Arc::new(RateLimiter::new(policy.max_requests_per_second));
        Ok(Self {
            policy,
            base_url: base_url.into().trim_end_matches('/').to_string(),
            cache_dir: cache_dir.into(),
            transport,
            clock,
            limiter,
        })
    }

    pub fn cache_path(&self, archive: &ArchiveRef) -> PathBuf {
        self.cache_dir
            .join(archive.date.format("%Y").to_string())
            .join(archive.date.format("%m").to_string())
            .join(archive.date.format("%d").to_string())
            .join(archive.archive_name())
    }

    pub fn url(&self, archive: &ArchiveRef) -> String {
        format!("{}/{}", self.base_url, archive.url_path.trim_start_matches('/'))
    }

    /// Fetches one archive unless a cached copy matches its recorded checksum.
    pub fn fetch_archive(&self, archive: &ArchiveRef) -> Result<FetchedArchive, EdgarError> {
        let path = self.cache_path(archive);
        let sidecar = sidecar_path(&path);
        if let Some(sha256) = cached_checksum(&path, &sidecar)? {
            tracing::debug!(archive = %archive.archive_name(), "cache hit");
            return Ok(FetchedArchive {
                archive: archive.clone(),
                path,
                sha256,
                transferred: false,
            });
        }

        let url = self.url(archive);
        let body = self.download(&url, archive)?;
        let sha256 = hex::encode(Sha256::digest(&body));

        let dir = path.parent().expect("cache path has a parent");
        fs::create_dir_all(dir).map_err(|e| EdgarError::io(dir, e))?;
        write_atomically(&path, &body)?;
        write_atomically(&sidecar, format!("{sha256}\n").as_bytes())?;
        tracing::info!(archive = %archive.archive_name(), bytes = body.len(), "fetched");
        Ok(FetchedArchive {
            archive: archive.clone(),
            path,
            sha256,
            transferred: true,
        })
    }

    /// Fetches many archives with at most `max_concurrent` transfers in
    /// flight, all behind the shared rate limiter. Results come back in the
    /// order of `archives`.
    pub fn fetch_all(&self, archives: &[ArchiveRef]) -> Vec<Result<FetchedArchive, EdgarError>> {
        let next = Mutex::new(0usize);
        let results: Mutex<Vec<Option<Result<FetchedArchive, EdgarError>>>> =
            Mutex::new((0..archives.len()).map(|_| None).collect());
        let workers = self.policy.max_concurrent.min(archives.len()).max(1);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let idx = {
                        let mut n = next.lock().unwrap();
                        let idx = *n;
                        *n += 1;
                        idx
                    };
                    let Some(archive) = archives.get(idx) else { break };
                    let result = self.fetch_archive(archive);
                    results.lock().unwrap()[idx] = Some(result);
                });
            }
        });
        results
            .into_inner()
            .unwrap()
            .into_iter()
            .map(|r| r.expect("every archive visited"))
            .collect()
    }

    fn download(&self, url: &str, archive: &ArchiveRef) -> Result<Vec<u8>, EdgarError> {
        let mut retries = 0u32;
        loop {
            self.limiter.acquire(self.clock.as_ref());
            let (error, retryable) = match self.transport.get(url, &self.policy.user_agent_contact) {
                Ok(resp) if resp.status == 200 => return Ok(resp.body),
                Ok(resp) if resp.status == 404 => {
                    return Err(EdgarError::MissingArchive {
                        date: archive.date,
                        url: url.to_string(),
                    })
                }
                Ok(resp) if matches!(resp.status, 403 | 429) => (
                    EdgarError::RateLimited {
                        url: url.to_string(),
                        retries,
                        status: resp.status,
                    },
                    true,
                ),
                Ok(resp) => (
                    EdgarError::HttpStatus {
                        url: url.to_string(),
                        status: resp.status,
                    },
                    resp.status >= 500,
                ),
                Err(message) => (
                    EdgarError::Transport {
                        url: url.to_string(),
                        message,
                    },
                    true,
                ),
            };
            if !retryable || retries >= self.policy.retry_limit {
                return Err(error);
            }
            let backoff = self.policy.backoff_base * 2u32.saturating_pow(retries);
            tracing::warn!(url, retries, backoff_ms = backoff.as_millis() as u64, "retrying");
            self.clock.sleep(backoff);
            retries += 1;
        }
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".sha256");
    path.with_file_name(name)
}

fn cached_checksum(path: &Path, sidecar: &Path) -> Result<Option<String>, EdgarError> {
    let Ok(recorded) = fs::read_to_string(sidecar) else {
        return Ok(None);
    };
    let Ok(bytes) = fs::read(path) else {
        return Ok(None);
    };
    let actual = hex::encode(Sha256::digest(&bytes));
    Ok((actual == recorded.trim()).then_some(actual))
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<(), EdgarError> {
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".part");
    let tmp = path.with_file_name(tmp_name);
    let mut file = fs::File::create(&tmp).map_err(|e| EdgarError::io(&tmp, e))?;
    file.write_all(bytes).map_err(|e| EdgarError::io(&tmp, e))?;
    file.sync_all().map_err(|e| EdgarError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| EdgarError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edgar_client::ArchiveNaming;
    use crate::ratelimit::ManualClock;
    use chrono::NaiveDate;
    use std::collections::VecDeque;

    /// Scripted server: pops one status per request, recording release times.
    struct Scripted {
        statuses: Mutex<VecDeque<u16>>,
        calls: Mutex<Vec<(String, Duration)>>,
        clock: Arc<ManualClock>,
    }

    impl Scripted {
        fn new(statuses: &[u16], clock: Arc<ManualClock>) -> Arc<Self> {
            Arc::new(Self {
                statuses: Mutex::new(statuses.iter().copied().collect()),
                calls: Mutex::new(Vec::new()),
                clock,
            })
        }
        fn call_count(&self) -> usize {
            self.calls.lock().unwrap().len()
        }
    }

    impl Transport for Scripted {
        fn get(&self, url: &str, user_agent: &str) -> Result<HttpResponse, String> {
            assert!(!user_agent.is_empty());
            self.calls
                .lock()
                .unwrap()
                .push((url.to_string(), self.clock.now()));
            let status = self.statuses.lock().unwrap().pop_front().unwrap_or(200);
            Ok(HttpResponse {
                status,
                body: if status == 200 {
                    format!("archive body for {url}").into_bytes()
                } else {
                    Vec::new()
                },
            })
        }
    }

    fn policy() -> FetchPolicy {
        FetchPolicy {
            user_agent_contact: "Research Bot research@example.com".into(),
            retry_limit: 2,
            backoff_base: Duration::from_millis(100),
            ..FetchPolicy::default()
        }
    }

    fn archive(day: u32) -> ArchiveRef {
        ArchiveNaming::default().archive_for(NaiveDate::from_ymd_opt(2020, 1, day).unwrap())
    }

    fn fetcher(transport: Arc<dyn Transport>, clock: Arc<ManualClock>, dir: &Path) -> Fetcher {
        Fetcher::with_clock(policy(), "https://example.test", dir, transport, clock).unwrap()
    }

    #[test]
    fn writes_file_and_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let clock = Arc::new(ManualClock::new());
        let server = Scripted::new(&[], clock.clone());
        let f = fetcher(server.clone(), clock, dir.path());
        let got = f.fetch_archive(&archive(6)).unwrap();
        assert!(got.transferred);
        assert_eq!(got.path, dir.path().join("2020/01/06/20200106.nc.tar.gz"));
        let body = fs::read(&got.path).unwrap();
        assert_eq!(got.sha256, hex::encode(Sha256::digest(&body)));
        let sidecar = fs::read_to_string(dir.path().join("2020/01/06/20200106.nc.tar.gz.sha256")).unwrap();
        assert_eq!(sidecar.trim(), got.sha256);
    }

    #[test]
    fn second_fetch_is_served_from_cache() {
        let dir = tempfile::tempdir().unwrap();
        let clock = Arc::new(ManualClock::new());
        let server = Scripted::new(&[], clock.clone());
        let f = fetcher(server.clone(), clock, dir.path());
        f.fetch_archive(&archive(6)).unwrap();
        let again = f.fetch_archive(&archive(6)).unwrap();
        assert!(!again.transferred);
        assert_eq!(server.call_count(), 1);
    }

    #[test]
    fn tampered_cache_is_refetched() {
        let dir = tempfile::tempdir().unwrap();
        let clock = Arc::new(ManualClock::new());
        let server = Scripted::new(&[], clock.clone());
        let f = fetcher(server.clone(), clock, dir.path());
        let first = f.fetch_archive(&archive(6)).unwrap();
        fs::write(&first.path, b"truncated").unwrap();
        let again = f.fetch_archive(&archive(6)).unwrap();
        assert!(again.transferred);
        assert_eq!(server.call_count(), 2);
    }

    #[test]
    fn gives_up_after_retry_limit() {
        let dir = tempfile::tempdir().unwrap();
        let clock = Arc::new(ManualClock::new());
        let server = Scripted::new(&[429, 429, 429], clock.clone());
        let f = fetcher(server.clone(), clock, dir.path());
        match f.fetch_archive(&archive(6)) {
            Err(EdgarError::RateLimited { retries, status, .. }) => {
                assert_eq!(retries, 2);
                assert_eq!(status, 429);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(server.call_count(), 3);
    }

    #[test]
    fn backoff_then_success() {
        let dir = tempfile::tempdir().unwrap();
        let clock = Arc::new(ManualClock::new());
        let server = Scripted::new(&[403, 200], clock.clone());
        let f = fetcher(server.clone(), clock, dir.path());
        assert!(f.fetch_archive(&archive(6)).unwrap().transferred);
        let calls = server.calls.lock().unwrap();
        assert!(calls[1].1 - calls[0].1 >= Duration::from_millis(100));
    }

    #[test]
    fn not_found_carries_date() {
        let dir = tempfile::tempdir().unwrap();
        let clock = Arc::new(ManualClock::new());
        let server = Scripted::new(&[404], clock.clone());
        let f = fetcher(server, clock, dir.path());
        match f.fetch_archive(&archive(6)) {
            Err(EdgarError::MissingArchive { date, .. }) => {
                assert_eq!(date, NaiveDate::from_ymd_opt(2020, 1, 6).unwrap())
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn concurrent_fetches_respect_rate_limit() {
        let dir = tempfile::tempdir().unwrap();
        let clock = Arc::new(ManualClock::new());
        let server = Scripted::new(&[], clock.clone());
        let f = fetcher(server.clone(), clock, dir.path());
        let refs: Vec<_> = (1..=31).map(archive).collect();
        let results = f.fetch_all(&refs);
        assert!(results.iter().all(Result::is_ok));
        for (r, res) in refs.iter().zip(&results) {
            assert_eq!(&res.as_ref().unwrap().archive, r);
        }
        let mut times: Vec<_> = server.calls.lock().unwrap().iter().map(|c| c.1).collect();
        times.sort();
        for (i, t) in times.iter().enumerate() {
            let in_window = times[i..]
                .iter()
                .take_while(|x| **x < *t + Duration::from_secs(1))
                .count();
            assert!(in_window <= 8, "{in_window} requests within one second");
        }
    }

    #[test]
    fn policy_validation() {
        let mut p = policy();
        p.max_requests_per_second = 11.0;
        assert!(p.validate().is_err());
        let mut p = policy();
        p.user_agent_contact = "  ".into();
        assert!(p.validate().is_err());
        assert!(policy().validate().is_ok());
    }

    #[test]
    fn file_transport_serves_local_mirror() {
        let dir = tempfile::tempdir().unwrap();
        let rel = "Archives/edgar/Feed/2020/QTR1/20200106.nc.tar.gz";
        fs::create_dir_all(dir.path().join(rel).parent().unwrap()).unwrap();
        fs::write(dir.path().join(rel), b"abc").unwrap();
        let cache = tempfile::tempdir().unwrap();
        let base = format!("file://{}", dir.path().display());
        let f = Fetcher::new(policy(), base, cache.path(), Arc::new(FileTransport)).unwrap();
        let got = f.fetch_archive(&archive(6)).unwrap();
        assert_eq!(fs::read(got.path).unwrap(), b"abc");
        assert!(matches!(
            f.fetch_archive(&archive(7)),
            Err(EdgarError::MissingArchive { .. })
        ));
    }
}
