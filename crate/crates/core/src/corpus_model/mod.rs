//! Dataset records, split assignment and on-disk shards.

mod fraud;
mod shards;
mod tokenize;

use std::fmt;
use std::path::PathBuf;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edgar_client::AccessionNumber;
use crate::extraction::ExtractionStats;

pub use fraud::{apply_fraud_split, FraudEntry, FraudList};
pub use shards::{read_manifest, read_records, write_records, Manifest, ShardEntry, WriteOptions, MANIFEST_FILE};
pub use tokenize::{token_count, BpeTokenizer, Tokenizer, TokenizerRegistry, WHITESPACE_TOKENIZER};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("integrity error in {shard}: {reason}")]
    Integrity { shard: String, reason: String },
    #[error("invalid fraud list {path}: {reason}")]
    FraudList { path: PathBuf, reason: String },
    #[error("unknown tokenizer {0:?}")]
    UnknownTokenizer(String),
    #[error("invalid merges file {path}: {reason}")]
    Merges { path: PathBuf, reason: String },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
}

impl CorpusError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitLabel {
    Clean,
    Fraud,
    Final,
}

impl SplitLabel {
    pub const ALL: [SplitLabel; 3] = [SplitLabel::Clean, SplitLabel::Fraud, SplitLabel::Final];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitLabel::Clean => "clean",
            SplitLabel::Fraud => "fraud",
            SplitLabel::Final => "final",
        }
    }
}

impl fmt::Display for SplitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SplitLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SplitLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown split {s:?}"))
    }
}

/// ISO-8601 at second precision, without a zone.
pub mod iso_seconds {
    use chrono::NaiveDateTime;
    use serde::{Deserialize, Deserializer, Serializer};

    pub const FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

    pub fn serialize<S: Serializer>(ts: &NaiveDateTime, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&ts.format(FORMAT))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDateTime, D::Error> {
        let raw = String::deserialize(d)?;
        NaiveDateTime::parse_from_str(&raw, FORMAT).map_err(serde::de::Error::custom)
    }
}

/// One extracted document. Field order is the serialized key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub accession_number: AccessionNumber,
    pub cik: u64,
    pub company_name: String,
    pub form_type: String,
    #[serde(with = "iso_seconds")]
    pub acceptance_timestamp: NaiveDateTime,
    pub document_sequence: u32,
    pub document_type: String,
    pub filename: String,
    /// Standard Industrial Classification code from the filing header.
    pub sic: Option<u16>,
    pub text: String,
    pub split: SplitLabel,
    pub extraction_stats: Option<ExtractionStats>,
}

impl DatasetRecord {
    /// Stable document identifier: accession number and sequence.
    pub fn id(&self) -> String {
        format!("{}#{}", self.accession_number, self.document_sequence)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.text.is_empty() {
            return Err(CorpusError::InvalidRecord(format!("{} has empty text", self.id())));
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn record(seq: u32, cik: u64, ts: &str, text: &str) -> DatasetRecord {
        DatasetRecord {
            accession_number: format!("00000{cik:05}-20-{seq:06}").parse().unwrap(),
            cik,
            company_name: "Acme Corp".into(),
            form_type: "10-K".into(),
            acceptance_timestamp: NaiveDateTime::parse_from_str(ts, iso_seconds::FORMAT).unwrap(),
            document_sequence: seq,
            document_type: "10-K".into(),
            filename: format!("d{seq}.htm"),
            sic: Some(6022),
            text: text.into(),
            split: SplitLabel::Clean,
            extraction_stats: None,
        }
    }
}
