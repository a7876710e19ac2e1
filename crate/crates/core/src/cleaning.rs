//! Quality filters for extracted documents.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::ExtractedDocument;

/// Structured-data forms with little narrative text.
pub const DEFAULT_EXCLUDED_FORMS: &[&str] = &[
    "3", "4", "5", "13F-HR", "13F-NT", "13F-CTR", "N-MFP", "N-MFP1", "N-MFP2", "N-MFP3", "NPORT-P",
    "NPORT-NP", "NPORT-EX", "N-CEN", "N-Q", "N-PX", "MA-I", "D", "X-17A-5", "TA-2", "13H",
    "SDR", "FWP", "EX-27",
];

#[derive(Debug, Error, PartialEq)]
pub enum CleaningError {
    #[error("whitespace fraction of empty text is undefined")]
    EmptyText,
    #[error("percentile over an empty corpus")]
    EmptyCorpus,
    #[error("invalid cleaning config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleaningConfig {
    pub excluded_forms: BTreeSet<String>,
    pub min_words: usize,
    pub max_whitespace_fraction: f64,
    pub whitespace_percentile: f64,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        Self {
            excluded_forms: DEFAULT_EXCLUDED_FORMS.iter().map(|f| f.to_string()).collect(),
            min_words: 200,
            max_whitespace_fraction: 0.41,
            whitespace_percentile: 99.0,
        }
    }
}

impl CleaningConfig {
    pub fn validate(&self) -> Result<(), CleaningError> {
        if !(0.0..=1.0).contains(&self.max_whitespace_fraction) {
            return Err(CleaningError::InvalidConfig(format!(
                "max_whitespace_fraction {} outside [0, 1]",
                self.max_whitespace_fraction
            )));
        }
        if !(self.whitespace_percentile > 0.0 && self.whitespace_percentile <= 100.0) {
            return Err(CleaningError::InvalidConfig(format!(
                "whitespace_percentile {} outside (0, 100]",
                self.whitespace_percentile
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterReason {
    Kept,
    ExcludedForm,
    TooShort,
    TooWhitespacy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub keep: bool,
    pub reason: FilterReason,
}

impl FilterVerdict {
    pub fn from_reason(reason: FilterReason) -> Self {
        Self {
            keep: reason == FilterReason::Kept,
            reason,
        }
    }
}

fn base_form(form_type: &str) -> String {
    let upper = form_type.trim().to_ascii_uppercase();
    upper.strip_suffix("/A").unwrap_or(&upper).to_string()
}

/// Case-insensitive membership after stripping an amendment suffix.
pub fn is_excluded_form(form_type: &str, config: &CleaningConfig) -> bool {
    let form = base_form(form_type);
    config
        .excluded_forms
        .iter()
        .any(|f| base_form(f) == form)
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

pub fn whitespace_fraction(text: &str) -> Result<f64, CleaningError> {
    let mut total = 0usize;
    let mut space = 0usize;
    for c in text.chars() {
        total += 1;
        if c.is_whitespace() {
            space += 1;
        }
    }
    if total == 0 {
        return Err(CleaningError::EmptyText);
    }
    Ok(space as f64 / total as f64)
}

/// Applies the form, length and whitespace rules in that order.
pub fn clean_filter(doc: &ExtractedDocument, form_type: &str, config: &CleaningConfig) -> FilterVerdict {
    filter_text(&doc.text, form_type, config)
}

pub fn filter_text(text: &str, form_type: &str, config: &CleaningConfig) -> FilterVerdict {
    let reason = if is_excluded_form(form_type, config) {
        FilterReason::ExcludedForm
    } else if word_count(text) < config.min_words {
        FilterReason::TooShort
    } else {
        // An empty text with min_words = 0 has no defined fraction; keep it.
        match whitespace_fraction(text) {
            Ok(f) if f > config.max_whitespace_fraction => FilterReason::TooWhitespacy,
            _ => FilterReason::Kept,
        }
    };
    FilterVerdict::from_reason(reason)
}

/// Nearest-rank percentile: the smallest value with at least `percentile`
/// percent of the sample at or below it.
pub fn nearest_rank(mut values: Vec<f64>, percentile: f64) -> Result<f64, CleaningError> {
    if values.is_empty() {
        return Err(CleaningError::EmptyCorpus);
    }
    if !(percentile > 0.0 && percentile <= 100.0) {
        return Err(CleaningError::InvalidConfig(format!("percentile {percentile} outside (0, 100]")));
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let rank = ((percentile * n as f64) / 100.0).ceil() as usize;
    Ok(values[rank.clamp(1, n) - 1])
}

/// Percentile of per-document whitespace fractions. Empty documents are
/// skipped since their fraction is undefined.
pub fn compute_whitespace_percentile<I, S>(corpus: I, percentile: f64) -> Result<f64, CleaningError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let fractions = corpus
        .into_iter()
        .filter_map(|t| whitespace_fraction(t.as_ref()).ok())
        .collect();
    nearest_rank(fractions, percentile)
}
