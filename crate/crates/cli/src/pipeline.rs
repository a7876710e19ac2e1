//! Stage orchestration over a shared configuration and work directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use filing_corpus::corpus_model::{BpeTokenizer, Tokenizer, TokenizerRegistry};
use serde::{Deserialize, Serialize};

use crate::checkpoint::{Stage, StageCheckpoint};
use crate::config::{resolve, PipelineConfig};
use crate::stages;

/// Audit analyses that can run on their own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Pronouns,
    Descriptors,
    Toxicity,
    Volume,
    Overlap,
}

impl Analysis {
    pub const ALL: [Analysis; 5] = [
        Analysis::Pronouns,
        Analysis::Descriptors,
        Analysis::Toxicity,
        Analysis::Volume,
        Analysis::Overlap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Analysis::Pronouns => "pronouns",
            Analysis::Descriptors => "descriptors",
            Analysis::Toxicity => "toxicity",
            Analysis::Volume => "volume",
            Analysis::Overlap => "overlap",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Discard this stage's checkpoint and outputs, and every later
    /// stage's checkpoint, before running.
    pub restart: bool,
    /// Stop after this many new inputs (fetch and extract only), leaving
    /// the stage incomplete.
    pub limit: Option<usize>,
    /// Audit analyses to run; all when empty.
    pub analyses: Vec<Analysis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: Stage,
    pub complete: bool,
    /// True when the stage was already complete and nothing ran.
    #[serde(default)]
    pub up_to_date: bool,
    pub counts: BTreeMap<String, serde_json::Value>,
}

impl StageSummary {
    pub fn new(stage: Stage) -> Self {
        Self {
            stage,
            complete: true,
            up_to_date: false,
            counts: BTreeMap::new(),
        }
    }

    pub fn count(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.counts.insert(key.to_string(), value.into());
    }
}

/// A validated configuration with resolved paths.
pub struct Pipeline {
    pub config: PipelineConfig,
    pub base: PathBuf,
    pub digest: String,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, base: PathBuf) -> Result<Self> {
        config.validate(&base)?;
        let digest = config.digest();
        Ok(Self { config, base, digest })
    }

    pub fn load(path: &Path, seed: Option<u64>) -> Result<Self> {
        let (mut config, base) = PipelineConfig::load(path)?;
        if let Some(seed) = seed {
            config.dedup.seed = seed;
            config.audit.sample_seed = seed;
        }
        Self::new(config, base)
    }

    pub fn path(&self, p: &Path) -> PathBuf {
        resolve(&self.base, p)
    }

    pub fn work_dir(&self) -> PathBuf {
        self.path(&self.config.output.work_dir)
    }

    pub fn checkpoint_dir(&self) -> PathBuf {
        self.work_dir().join("checkpoints")
    }

    /// Private output directory of a stage.
    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.work_dir().join(stage.as_str())
    }

    pub fn shard_dir(&self) -> PathBuf {
        self.path(&self.config.output.shard_dir)
    }

    pub fn report_dir(&self) -> PathBuf {
        self.path(&self.config.output.report_dir)
    }

    pub fn tokenizers(&self) -> Result<TokenizerRegistry> {
        let mut registry = TokenizerRegistry::default();
        if let Some(merges) = &self.config.audit.bpe_merges {
            let bpe = BpeTokenizer::load(&self.path(merges))?;
            registry.register("bpe", Tokenizer::Bpe(bpe));
        }
        registry.get(&self.config.audit.tokenizer)?;
        Ok(registry)
    }

    fn outputs_of(&self, stage: Stage) -> Vec<PathBuf> {
        let mut out = vec![self.stage_dir(stage)];
        match stage {
            Stage::Split => out.push(self.shard_dir()),
            Stage::Report => out.push(self.report_dir()),
            _ => {}
        }
        out
    }

    fn discard(&self, stage: Stage) -> Result<()> {
        let later = Stage::ALL.iter().filter(|s| **s >= stage);
        for s in later {
            let cp = StageCheckpoint::path(&self.checkpoint_dir(), *s);
            if cp.exists() {
                std::fs::remove_file(&cp).with_context(|| format!("removing {}", cp.display()))?;
            }
        }
        for dir in self.outputs_of(stage) {
            if dir.exists() {
                std::fs::remove_dir_all(&dir).with_context(|| format!("removing {}", dir.display()))?;
            }
        }
        Ok(())
    }

    pub fn run_stage(&self, stage: Stage, options: &RunOptions) -> Result<StageSummary> {
        if options.restart {
            self.discard(stage)?;
        }
        let cp_dir = self.checkpoint_dir();
        if let Some(prev) = stage.previous() {
            StageCheckpoint::require_complete(&cp_dir, prev, stage, &self.digest)?;
        }
        let mut checkpoint = StageCheckpoint::resume(&cp_dir, stage, &self.digest)?;
        let summary_path = self.stage_dir(stage).join("summary.json");
        let wants_subset = stage == Stage::Audit && !options.analyses.is_empty();
        if checkpoint.complete && !wants_subset && summary_path.exists() {
            let mut summary: StageSummary = crate::io::read_json(&summary_path)?;
            summary.up_to_date = true;
            tracing::info!(stage = %stage, "stage already complete");
            return Ok(summary);
        }
        tracing::info!(stage = %stage, "stage started");
        let summary = match stage {
            Stage::Fetch => stages::fetch::run(self, &mut checkpoint, options)?,
            Stage::Extract => stages::extract::run(self, &mut checkpoint, options)?,
            Stage::Clean => stages::clean::run(self)?,
            Stage::Dedup => stages::dedup::run(self)?,
            Stage::Split => stages::split::run(self)?,
            Stage::Audit => stages::audit::run(self, &mut checkpoint, options)?,
            Stage::Report => stages::report::run(self)?,
        };
        checkpoint.complete = summary.complete;
        if !matches!(stage, Stage::Fetch | Stage::Extract | Stage::Audit) {
            checkpoint.processed.insert(stage.as_str().to_string());
        }
        crate::io::write_json(&summary_path, &summary)?;
        checkpoint.save(&cp_dir)?;
        tracing::info!(stage = %stage, complete = summary.complete, "stage finished");
        Ok(summary)
    }

    /// Runs every stage in order.
    pub fn run_all(&self, options: &RunOptions) -> Result<Vec<StageSummary>> {
        if options.restart {
            self.discard(Stage::Fetch)?;
        }
        let per_stage = RunOptions {
            restart: false,
            ..options.clone()
        };
        let mut out = Vec::new();
        for stage in Stage::ALL {
            let summary = self.run_stage(stage, &per_stage)?;
            let done = summary.complete;
            out.push(summary);
            if !done {
                break;
            }
        }
        Ok(out)
    }
}
