//! Token volume by year, form type, firm and industry.

use std::collections::BTreeMap;

use chrono::Datelike;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::IndustryMap;
use crate::corpus_model::{DatasetRecord, Tokenizer};

/// The fields of a record that volume statistics depend on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VolumeRecord {
    pub year: i32,
    pub form_type: String,
    pub cik: u64,
    pub company_name: String,
    pub sic: Option<u16>,
    pub document_sequence: u32,
    pub tokens: u64,
}

impl VolumeRecord {
    pub fn from_record(record: &DatasetRecord, tokenizer: &Tokenizer) -> Self {
        Self {
            year: record.acceptance_timestamp.year(),
            form_type: record.form_type.clone(),
            cik: record.cik,
            company_name: record.company_name.clone(),
            sic: record.sic,
            document_sequence: record.document_sequence,
            tokens: tokenizer.count(&record.text),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirmVolume {
    pub cik: u64,
    /// Lexicographically smallest name seen for the CIK.
    pub company_name: String,
    pub tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VolumeStats {
    pub documents: u64,
    pub total_tokens: u64,
    pub by_year: BTreeMap<i32, u64>,
    pub by_year_form: BTreeMap<i32, BTreeMap<String, u64>>,
    pub by_form: BTreeMap<String, u64>,
    pub by_firm: BTreeMap<u64, FirmVolume>,
    pub by_industry: BTreeMap<String, u64>,
    /// Tokens in documents with sequence number above 1.
    pub attachment_tokens: u64,
}

impl VolumeStats {
    pub fn attachment_share(&self) -> f64 {
        if self.total_tokens == 0 {
            0.0
        } else {
            self.attachment_tokens as f64 / self.total_tokens as f64
        }
    }

    fn add(&mut self, r: &VolumeRecord, industries: &IndustryMap) {
        self.documents += 1;
        self.total_tokens += r.tokens;
        *self.by_year.entry(r.year).or_insert(0) += r.tokens;
        *self.by_form.entry(r.form_type.clone()).or_insert(0) += r.tokens;
        *self
            .by_year_form
            .entry(r.year)
            .or_default()
            .entry(r.form_type.clone())
            .or_insert(0) += r.tokens;
        *self.by_industry.entry(industries.classify(r.sic).to_string()).or_insert(0) += r.tokens;
        let firm = self.by_firm.entry(r.cik).or_insert_with(|| FirmVolume {
            cik: r.cik,
            company_name: r.company_name.clone(),
            tokens: 0,
        });
        firm.tokens += r.tokens;
        if r.company_name < firm.company_name {
            firm.company_name = r.company_name.clone();
        }
        if r.document_sequence > 1 {
            self.attachment_tokens += r.tokens;
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.documents += other.documents;
        self.total_tokens += other.total_tokens;
        self.attachment_tokens += other.attachment_tokens;
        for (k, v) in other.by_year {
            *self.by_year.entry(k).or_insert(0) += v;
        }
        for (year, forms) in other.by_year_form {
            let row = self.by_year_form.entry(year).or_default();
            for (k, v) in forms {
                *row.entry(k).or_insert(0) += v;
            }
        }
        for (k, v) in other.by_form {
            *self.by_form.entry(k).or_insert(0) += v;
        }
        for (k, v) in other.by_industry {
            *self.by_industry.entry(k).or_insert(0) += v;
        }
        for (k, v) in other.by_firm {
            match self.by_firm.get_mut(&k) {
                Some(f) => {
                    f.tokens += v.tokens;
                    if v.company_name < f.company_name {
                        f.company_name = v.company_name;
                    }
                }
                None => {
                    self.by_firm.insert(k, v);
                }
            }
        }
        self
    }

    /// Entries sorted by tokens descending, then key ascending.
    pub fn top<K: Clone + Ord>(map: &BTreeMap<K, u64>, k: usize) -> Vec<(K, u64)> {
        let mut v: Vec<(K, u64)> = map.iter().map(|(a, b)| (a.clone(), *b)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v.truncate(k);
        v
    }

    pub fn top_firms(&self, k: usize) -> Vec<FirmVolume> {
        let mut v: Vec<FirmVolume> = self.by_firm.values().cloned().collect();
        v.sort_by(|a, b| b.tokens.cmp(&a.tokens).then(a.cik.cmp(&b.cik)));
        v.truncate(k);
        v
    }
}

pub fn volume_stats(records: &[VolumeRecord], industries: &IndustryMap) -> VolumeStats {
    records
        .par_iter()
        .fold(VolumeStats::default, |mut acc, r| {
            acc.add(r, industries);
            acc
        })
        .reduce(VolumeStats::default, VolumeStats::merge)
}
