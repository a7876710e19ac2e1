//! Content analyses over a built corpus: volume, industries, pronouns,
//! demographic descriptors and toxicity.

mod industry;
mod lexicon;
mod prevalence;
pub mod report;
mod sampling;
mod sentences;
mod toxicity;
mod volume;

use std::path::PathBuf;

use thiserror::Error;

pub use industry::{IndustryMap, IndustryRange, UNCLASSIFIED};
pub use lexicon::{
    assign_descriptor, extract_hits, Axis, DescriptorHit, DescriptorLexicon, DescriptorMatch, DEFAULT_EXCLUSIONS,
};
pub use prevalence::{
    descriptor_prevalence, pronoun_classes, pronoun_prevalence, AxisStats, ClassShare, DescriptorStats, FilingText,
    PrevalenceReport, PronounClass, PronounReport,
};
pub use sampling::{frequency_matched_sample, SampleOutcome, Shortfall};
pub use sentences::split_sentences;
pub use toxicity::{
    attach_toxicity, mean, score_sentences, toxicity_reduction, welch_t_test, HttpPost, LengthStubScorer,
    PerspectiveConfig, PerspectiveScorer, ReductionRow, ReqwestPost, ScoredHits, SkippedDescriptor, ToxicityReport,
    ToxicityScorer, WelchResult, PERSPECTIVE_ENDPOINT_ENV, PERSPECTIVE_KEY_ENV,
};
pub use volume::{volume_stats, VolumeRecord, VolumeStats};

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{source_name}:{line}: {reason}")]
    Malformed {
        source_name: String,
        line: u64,
        reason: String,
    },
    #[error("overlapping industry ranges: {0}")]
    OverlappingRanges(String),
    #[error("toxicity scorer error: {0}")]
    Scorer(String),
    #[error("scorer is not configured: {0}")]
    ScorerConfig(String),
}

impl AuditError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}
