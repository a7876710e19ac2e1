use std::collections::HashSet;

use anyhow::Result;
use filing_corpus::corpus_model::{write_records, DatasetRecord, SplitLabel, WriteOptions};

use crate::checkpoint::Stage;
use crate::pipeline::{Pipeline, StageSummary};

/// Writes the `clean`, `fraud` and `final` splits as shards. `final` is the
/// clean split minus documents removed as near-duplicates.
pub fn run(p: &Pipeline) -> Result<StageSummary> {
    let records = super::dedup::labelled_records(p)?;
    let outcome = super::dedup::read_outcome(p)?;
    let removed: HashSet<&str> = outcome.removed.iter().map(String::as_str).collect();
    let finals: Vec<DatasetRecord> = records
        .iter()
        .filter(|r| r.split == SplitLabel::Clean && !removed.contains(r.id().as_str()))
        .map(|r| DatasetRecord {
            split: SplitLabel::Final,
            ..r.clone()
        })
        .collect();
    let mut all = records;
    all.extend(finals);

    let registry = p.tokenizers()?;
    let options = WriteOptions {
        max_shard_bytes: p.config.output.max_shard_bytes,
        tokenizers: registry.ids().map(str::to_string).collect(),
        config_digest: Some(p.digest.clone()),
    };
    let manifest = write_records(&all, &p.shard_dir(), &options, &registry)?;

    let mut summary = StageSummary::new(Stage::Split);
    for label in SplitLabel::ALL {
        summary.count(label.as_str(), manifest.split_counts.get(label.as_str()).copied().unwrap_or(0));
    }
    summary.count("shards", manifest.shards.len());
    summary.count("token_counts", serde_json::to_value(&manifest.token_counts)?);
    Ok(summary)
}
