use std::collections::BTreeMap;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::{CorpusError, DatasetRecord, SplitLabel};

/// A firm named in an enforcement action. Missing bounds are open; bounds
/// are inclusive calendar dates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FraudEntry {
    pub cik: u64,
    pub start_date: Option<NaiveDate>,
    pub end_date: Option<NaiveDate>,
}

impl FraudEntry {
    pub fn covers(&self, ts: NaiveDateTime) -> bool {
        let day = ts.date();
        self.start_date.is_none_or(|s| day >= s) && self.end_date.is_none_or(|e| day <= e)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FraudList {
    by_cik: BTreeMap<u64, Vec<FraudEntry>>,
}

#[derive(Deserialize)]
struct Row {
    cik: String,
    start_date: String,
    end_date: String,
}

fn parse_date(raw: &str) -> Result<Option<NaiveDate>, String> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(None);
    }
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .map(Some)
        .map_err(|e| format!("bad date {raw:?}: {e}"))
}

impl FraudList {
    pub fn new(entries: impl IntoIterator<Item = FraudEntry>) -> Result<Self, String> {
        let mut by_cik: BTreeMap<u64, Vec<FraudEntry>> = BTreeMap::new();
        for e in entries {
            if e.cik == 0 {
                return Err("cik must be positive".into());
            }
            if let (Some(s), Some(t)) = (e.start_date, e.end_date) {
                if s > t {
                    return Err(format!("cik {}: start {s} after end {t}", e.cik));
                }
            }
            by_cik.entry(e.cik).or_default().push(e);
        }
        Ok(Self { by_cik })
    }

    /// Parses CSV with header `cik,start_date,end_date`; dates are
    /// `YYYY-MM-DD` or empty.
    pub fn from_csv(input: &str) -> Result<Self, String> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input.as_bytes());
        let headers = reader.headers().map_err(|e| e.to_string())?.clone();
        if headers.iter().collect::<Vec<_>>() != ["cik", "start_date", "end_date"] {
            return Err(format!("expected header cik,start_date,end_date, got {:?}", headers.iter().collect::<Vec<_>>()));
        }
        let mut entries = Vec::new();
        for (line, row) in reader.deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| format!("row {}: {e}", line + 2))?;
            let cik = row
                .cik
                .parse()
                .map_err(|_| format!("row {}: bad cik {:?}", line + 2, row.cik))?;
            entries.push(FraudEntry {
                cik,
                start_date: parse_date(&row.start_date)?,
                end_date: parse_date(&row.end_date)?,
            });
        }
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
        Self::from_csv(&text).map_err(|reason| CorpusError::FraudList {
            path: path.to_path_buf(),
            reason,
        })
    }

    pub fn matches(&self, cik: u64, ts: NaiveDateTime) -> bool {
        self.by_cik
            .get(&cik)
            .is_some_and(|entries| entries.iter().any(|e| e.covers(ts)))
    }

    pub fn len(&self) -> usize {
        self.by_cik.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_cik.is_empty()
    }
}

/// Labels each record `fraud` when its filer and date match the list,
/// `clean` otherwise.
pub fn apply_fraud_split(mut records: Vec<DatasetRecord>, list: &FraudList) -> Vec<DatasetRecord> {
    for r in &mut records {
        r.split = if list.matches(r.cik, r.acceptance_timestamp) {
            SplitLabel::Fraud
        } else {
            SplitLabel::Clean
        };
    }
    records
}
