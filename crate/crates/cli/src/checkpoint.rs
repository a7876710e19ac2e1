//! Per-stage progress records under `<work>/checkpoints/`.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Fetch,
    Extract,
    Clean,
    Dedup,
    Split,
    Audit,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Fetch,
        Stage::Extract,
        Stage::Clean,
        Stage::Dedup,
        Stage::Split,
        Stage::Audit,
        Stage::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Fetch => "fetch",
            Stage::Extract => "extract",
            Stage::Clean => "clean",
            Stage::Dedup => "dedup",
            Stage::Split => "split",
            Stage::Audit => "audit",
            Stage::Report => "report",
        }
    }

    pub fn previous(self) -> Option<Stage> {
        let i = Stage::ALL.iter().position(|s| *s == self)?;
        i.checked_sub(1).map(|j| Stage::ALL[j])
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Failures that callers distinguish by kind in the error report.
#[derive(Debug, Error)]
pub enum StageError {
    #[error("stage {stage} needs {requires} to complete first")]
    OrderedDependency { stage: Stage, requires: Stage },
    #[error(
        "checkpoint for {stage} was written under config digest {found}, current config is {expected}; \
         rerun with --restart to discard it"
    )]
    DigestMismatch {
        stage: Stage,
        expected: String,
        found: String,
    },
}

impl StageError {
    pub fn kind(&self) -> &'static str {
        match self {
            StageError::OrderedDependency { .. } => "ordered-dependency",
            StageError::DigestMismatch { .. } => "config-digest-mismatch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCheckpoint {
    pub stage: Stage,
    pub config_digest: String,
    /// Inputs whose outputs are already on disk.
    pub processed: BTreeSet<String>,
    pub complete: bool,
}

impl StageCheckpoint {
    pub fn new(stage: Stage, config_digest: &str) -> Self {
        Self {
            stage,
            config_digest: config_digest.to_string(),
            processed: BTreeSet::new(),
            complete: false,
        }
    }

    pub fn path(dir: &Path, stage: Stage) -> PathBuf {
        dir.join(format!("{stage}.json"))
    }

    pub fn read(dir: &Path, stage: Stage) -> Result<Option<Self>> {
        let path = Self::path(dir, stage);
        match std::fs::read(&path) {
            Ok(bytes) => Ok(Some(
                serde_json::from_slice(&bytes).with_context(|| format!("reading checkpoint {}", path.display()))?,
            )),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e).with_context(|| format!("reading checkpoint {}", path.display())),
        }
    }

    /// Loads the checkpoint for `stage`, or a fresh one. A checkpoint from
    /// a different configuration is an error.
    pub fn resume(dir: &Path, stage: Stage, config_digest: &str) -> Result<Self> {
        match Self::read(dir, stage)? {
            Some(cp) if cp.config_digest != config_digest => Err(StageError::DigestMismatch {
                stage,
                expected: config_digest.to_string(),
                found: cp.config_digest,
            }
            .into()),
            Some(cp) => Ok(cp),
            None => Ok(Self::new(stage, config_digest)),
        }
    }

    /// Fails unless `stage` completed under `config_digest`.
    pub fn require_complete(dir: &Path, stage: Stage, requested_by: Stage, config_digest: &str) -> Result<()> {
        match Self::read(dir, stage)? {
            Some(cp) if cp.complete && cp.config_digest == config_digest => Ok(()),
            Some(cp) if cp.complete => Err(StageError::DigestMismatch {
                stage,
                expected: config_digest.to_string(),
                found: cp.config_digest,
            }
            .into()),
            _ => Err(StageError::OrderedDependency {
                stage: requested_by,
                requires: stage,
            }
            .into()),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        crate::io::write_json(&Self::path(dir, self.stage), self)
    }
}
