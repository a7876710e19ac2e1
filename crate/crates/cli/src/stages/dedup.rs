use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use anyhow::Result;
use filing_corpus::audit::report::FormDuplicates;
use filing_corpus::corpus_model::{apply_fraud_split, DatasetRecord, FraudList, SplitLabel};
use filing_corpus::dedup::{dedup_corpus, DedupItem, DedupOutcome};

use crate::checkpoint::Stage;
use crate::pipeline::{Pipeline, StageSummary};

pub const OUTCOME_FILE: &str = "outcome.json";
pub const FORM_DUPLICATES_FILE: &str = "form_duplicates.json";

pub fn outcome_path(p: &Pipeline) -> PathBuf {
    p.stage_dir(Stage::Dedup).join(OUTCOME_FILE)
}

pub fn form_duplicates_path(p: &Pipeline) -> PathBuf {
    p.stage_dir(Stage::Dedup).join(FORM_DUPLICATES_FILE)
}

/// Cleaned records labelled `clean` or `fraud`.
pub fn labelled_records(p: &Pipeline) -> Result<Vec<DatasetRecord>> {
    let records: Vec<DatasetRecord> = crate::io::read_jsonl_gz(&super::clean::records_path(p))?;
    let list = match &p.config.splits.fraud_list {
        Some(path) => FraudList::load(&p.path(path))?,
        None => FraudList::default(),
    };
    Ok(apply_fraud_split(records, &list))
}

pub fn run(p: &Pipeline) -> Result<StageSummary> {
    let records = labelled_records(p)?;
    let clean: Vec<&DatasetRecord> = records.iter().filter(|r| r.split == SplitLabel::Clean).collect();
    let items: Vec<DedupItem> = clean
        .iter()
        .map(|r| DedupItem {
            id: r.id(),
            accession: r.accession_number.to_string(),
            acceptance: Some(r.acceptance_timestamp),
            text: r.text.clone(),
        })
        .collect();
    let (outcome, _index) = dedup_corpus(&items, &p.config.dedup.params(), p.config.dedup.seed)?;
    crate::io::write_json(&outcome_path(p), &outcome)?;

    let registry = p.tokenizers()?;
    let tokenizer = registry.get(&p.config.audit.tokenizer)?;
    let removed: HashSet<&str> = outcome.removed.iter().map(String::as_str).collect();
    let mut forms: BTreeMap<String, FormDuplicates> = BTreeMap::new();
    for r in &clean {
        let tokens = tokenizer.count(&r.text);
        let entry = forms.entry(r.form_type.clone()).or_default();
        entry.total_tokens += tokens;
        if removed.contains(r.id().as_str()) {
            entry.duplicate_tokens += tokens;
        }
    }
    crate::io::write_json(&form_duplicates_path(p), &forms)?;

    let mut summary = StageSummary::new(Stage::Dedup);
    summary.count("clean_documents", clean.len());
    summary.count("fraud_documents", records.len() - clean.len());
    summary.count("retained", outcome.retained.len());
    summary.count("removed", outcome.removed.len());
    summary.count("clusters", outcome.clusters.len());
    summary.count("oversize_clusters", outcome.clusters.iter().filter(|c| c.oversize).count());
    Ok(summary)
}

pub fn read_outcome(p: &Pipeline) -> Result<DedupOutcome> {
    crate::io::read_json(&outcome_path(p))
}
