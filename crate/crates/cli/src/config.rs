//! Pipeline configuration file.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use chrono::NaiveDate;
use filing_corpus::cleaning::CleaningConfig;
use filing_corpus::dedup::DedupConfig;
use filing_corpus::edgar_client::{ArchiveNaming, FetchPolicy, FIRST_ARCHIVE_DATE};
use filing_corpus::extraction::ExtractionConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FetchSection {
    pub from: NaiveDate,
    pub to: NaiveDate,
    /// `https://...` host, or a local mirror directory of the same layout.
    pub base_url: String,
    pub mirror_dir: Option<PathBuf>,
    pub cache_dir: PathBuf,
    pub naming: ArchiveNaming,
    pub policy: FetchPolicy,
    pub timeout_secs: u64,
}

impl Default for FetchSection {
    fn default() -> Self {
        Self {
            from: FIRST_ARCHIVE_DATE,
            to: FIRST_ARCHIVE_DATE,
            base_url: "https://www.sec.gov".into(),
            mirror_dir: None,
            cache_dir: "work/archives".into(),
            naming: ArchiveNaming::default(),
            policy: FetchPolicy::default(),
            timeout_secs: 120,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DedupSection {
    pub bands: usize,
    pub rows: usize,
    pub shingle_size: usize,
    pub threshold: f64,
    pub oversize_limit: usize,
    pub seed: u64,
}

impl Default for DedupSection {
    fn default() -> Self {
        let d = DedupConfig::default();
        Self {
            bands: d.bands,
            rows: d.rows,
            shingle_size: d.shingle_size,
            threshold: d.threshold,
            oversize_limit: d.oversize_limit,
            seed: 0,
        }
    }
}

impl DedupSection {
    pub fn params(&self) -> DedupConfig {
        DedupConfig {
            bands: self.bands,
            rows: self.rows,
            shingle_size: self.shingle_size,
            threshold: self.threshold,
            oversize_limit: self.oversize_limit,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitsSection {
    /// CSV `cik,start_date,end_date`; no fraud split when absent.
    pub fraud_list: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScorerKind {
    /// Deterministic length-based stand-in.
    Stub,
    /// Perspective API; endpoint and key from the environment.
    Perspective,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditSection {
    pub lexicon: PathBuf,
    pub ff48: PathBuf,
    pub tokenizer: String,
    /// Merge list for a `bpe` tokenizer.
    pub bpe_merges: Option<PathBuf>,
    pub scorer: ScorerKind,
    pub max_in_flight: usize,
    /// JSONL records with a `text` field standing in for a web corpus.
    pub comparison_corpus: Option<PathBuf>,
    pub sample_seed: u64,
    pub top_k: usize,
}

impl Default for AuditSection {
    fn default() -> Self {
        Self {
            lexicon: "data/lexicon.csv".into(),
            ff48: "data/ff48.csv".into(),
            tokenizer: filing_corpus::corpus_model::WHITESPACE_TOKENIZER.into(),
            bpe_merges: None,
            scorer: ScorerKind::Stub,
            max_in_flight: 4,
            comparison_corpus: None,
            sample_seed: 0,
            top_k: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub work_dir: PathBuf,
    pub shard_dir: PathBuf,
    pub report_dir: PathBuf,
    pub max_shard_bytes: u64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            work_dir: "work".into(),
            shard_dir: "work/shards".into(),
            report_dir: "work/report".into(),
            max_shard_bytes: 1 << 30,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub fetch: FetchSection,
    pub extraction: ExtractionConfig,
    pub cleaning: CleaningConfig,
    pub dedup: DedupSection,
    pub splits: SplitsSection,
    pub audit: AuditSection,
    pub output: OutputSection,
}

impl PipelineConfig {
    /// Reads a TOML file. Relative paths are taken relative to the file.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let config: Self = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path
            .parent()
            .map(Path::to_path_buf)
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or_else(|| PathBuf::from("."));
        Ok((config, base))
    }

    pub fn validate(&self, base: &Path) -> Result<()> {
        self.dedup.params().validate().context("invalid [dedup] section")?;
        self.cleaning.validate().context("invalid [cleaning] section")?;
        ensure!(
            self.extraction.cpt_min.is_finite() && self.extraction.cpt_min >= 0.0,
            "extraction.cpt_min must be a non-negative number"
        );
        ensure!(self.fetch.from <= self.fetch.to, "fetch.from is after fetch.to");
        ensure!(self.fetch.from >= FIRST_ARCHIVE_DATE, "fetch.from precedes {FIRST_ARCHIVE_DATE}");
        ensure!(self.audit.max_in_flight > 0, "audit.max_in_flight must be positive");
        ensure!(self.output.max_shard_bytes > 0, "output.max_shard_bytes must be positive");
        let mut inputs = vec![("audit.lexicon", &self.audit.lexicon), ("audit.ff48", &self.audit.ff48)];
        if let Some(p) = &self.splits.fraud_list {
            inputs.push(("splits.fraud_list", p));
        }
        if let Some(p) = &self.audit.bpe_merges {
            inputs.push(("audit.bpe_merges", p));
        }
        if let Some(p) = &self.audit.comparison_corpus {
            inputs.push(("audit.comparison_corpus", p));
        }
        if let Some(p) = &self.fetch.mirror_dir {
            inputs.push(("fetch.mirror_dir", p));
        }
        for (key, p) in inputs {
            let resolved = resolve(base, p);
            if !resolved.exists() {
                bail!("{key} does not exist: {}", resolved.display());
            }
        }
        if self.audit.tokenizer == "bpe" && self.audit.bpe_merges.is_none() {
            bail!("audit.tokenizer = \"bpe\" requires audit.bpe_merges");
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form. Paths enter as written, so
    /// the same file in two checkouts has the same digest. The user-agent
    /// contact is left out because it defaults from the environment.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.fetch.policy.user_agent_contact.clear();
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}

pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = PipelineConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.dedup.params().num_perm(), 260);
        assert_eq!(cfg.cleaning.min_words, 200);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg: PipelineConfig = toml::from_str("[dedup]\nseed = 7\nthreshold = 0.9\n").unwrap();
        assert_eq!(cfg.dedup.seed, 7);
        assert_eq!(cfg.dedup.threshold, 0.9);
        assert_eq!(cfg.dedup.bands, 20);
        assert_ne!(cfg.digest(), PipelineConfig::default().digest());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<PipelineConfig>("[dedup]\nbandz = 3\n").is_err());
    }

    #[test]
    fn validation_catches_bad_values() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = PipelineConfig::default();
        assert!(cfg.validate(dir.path()).is_err(), "lexicon path missing");
        std::fs::create_dir_all(dir.path().join("data")).unwrap();
        std::fs::write(dir.path().join("data/lexicon.csv"), "").unwrap();
        std::fs::write(dir.path().join("data/ff48.csv"), "").unwrap();
        cfg.validate(dir.path()).unwrap();
        cfg.dedup.threshold = 1.5;
        assert!(cfg.validate(dir.path()).is_err());
    }
}
