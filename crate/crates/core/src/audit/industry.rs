//! SIC code to Fama-French 48 industry lookup.

use std::path::Path;

use serde::Deserialize;

use super::AuditError;

pub const UNCLASSIFIED: &str = "Unclassified";

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct IndustryRange {
    pub sic_low: u16,
    pub sic_high: u16,
    pub industry: String,
}

/// Sorted, non-overlapping SIC ranges.
#[derive(Debug, Clone, Default)]
pub struct IndustryMap {
    ranges: Vec<IndustryRange>,
}

impl IndustryMap {
    pub fn new(mut ranges: Vec<IndustryRange>) -> Result<Self, AuditError> {
        if let Some(bad) = ranges.iter().find(|r| r.sic_low > r.sic_high) {
            return Err(AuditError::OverlappingRanges(format!(
                "empty range {}-{} ({})",
                bad.sic_low, bad.sic_high, bad.industry
            )));
        }
        ranges.sort_by_key(|r| (r.sic_low, r.sic_high));
        for w in ranges.windows(2) {
            if w[1].sic_low <= w[0].sic_high {
                return Err(AuditError::OverlappingRanges(format!(
                    "{}-{} ({}) and {}-{} ({})",
                    w[0].sic_low, w[0].sic_high, w[0].industry, w[1].sic_low, w[1].sic_high, w[1].industry
                )));
            }
        }
        Ok(Self { ranges })
    }

    /// Parses CSV with header `sic_low,sic_high,industry`.
    pub fn from_csv(input: &str) -> Result<Self, AuditError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input.as_bytes());
        let mut ranges = Vec::new();
        for row in reader.deserialize::<IndustryRange>() {
            let row = row.map_err(|e| AuditError::Malformed {
                source_name: "industry map".into(),
                line: e.position().map_or(0, |p| p.line()),
                reason: e.to_string(),
            })?;
            ranges.push(row);
        }
        Self::new(ranges)
    }

    pub fn load(path: &Path) -> Result<Self, AuditError> {
        let text = std::fs::read_to_string(path).map_err(|e| AuditError::io(path, e))?;
        Self::from_csv(&text).map_err(|e| match e {
            AuditError::Malformed { line, reason, .. } => AuditError::Malformed {
                source_name: path.display().to_string(),
                line,
                reason,
            },
            other => other,
        })
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn classify(&self, sic: Option<u16>) -> &str {
        let Some(sic) = sic else { return UNCLASSIFIED };
        let idx = self.ranges.partition_point(|r| r.sic_high < sic);
        match self.ranges.get(idx) {
            Some(r) if r.sic_low <= sic => &r.industry,
            _ => UNCLASSIFIED,
        }
    }
}
