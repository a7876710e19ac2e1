use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Result;
use filing_corpus::cleaning::{compute_whitespace_percentile, filter_text, is_excluded_form, FilterReason};
use filing_corpus::corpus_model::DatasetRecord;
use rayon::prelude::*;

use super::extract;
use super::fetch::{ArchiveList, ARCHIVES_FILE};
use crate::checkpoint::Stage;
use crate::pipeline::{Pipeline, StageSummary};

pub const RECORDS_FILE: &str = "records.jsonl.gz";

pub fn records_path(p: &Pipeline) -> PathBuf {
    p.stage_dir(Stage::Clean).join(RECORDS_FILE)
}

fn reason_key(r: FilterReason) -> &'static str {
    match r {
        FilterReason::Kept => "kept",
        FilterReason::ExcludedForm => "excluded_form",
        FilterReason::TooShort => "too_short",
        FilterReason::TooWhitespacy => "too_whitespacy",
    }
}

pub fn run(p: &Pipeline) -> Result<StageSummary> {
    let list: ArchiveList = crate::io::read_json(&p.stage_dir(Stage::Fetch).join(ARCHIVES_FILE))?;
    let extract_dir = p.stage_dir(Stage::Extract);
    let mut input: Vec<DatasetRecord> = Vec::new();
    for a in &list.archives {
        input.extend(crate::io::read_jsonl_gz::<DatasetRecord>(&extract::records_path(
            &extract_dir,
            a.archive.archive_name(),
        ))?);
    }
    let cfg = &p.config.cleaning;
    // The submission form decides first; a document whose own type is an
    // excluded form (e.g. a data schedule attachment) is dropped as well.
    let verdicts: Vec<FilterReason> = input
        .par_iter()
        .map(|r| {
            let v = filter_text(&r.text, &r.form_type, cfg);
            if v.keep && is_excluded_form(&r.document_type, cfg) {
                FilterReason::ExcludedForm
            } else {
                v.reason
            }
        })
        .collect();

    let mut by_reason: BTreeMap<&str, u64> = BTreeMap::new();
    for v in &verdicts {
        *by_reason.entry(reason_key(*v)).or_insert(0) += 1;
    }
    let percentile = compute_whitespace_percentile(input.iter().map(|r| r.text.as_str()), cfg.whitespace_percentile).ok();
    let kept: Vec<&DatasetRecord> = input
        .iter()
        .zip(&verdicts)
        .filter(|(_, v)| **v == FilterReason::Kept)
        .map(|(r, _)| r)
        .collect();
    crate::io::write_jsonl_gz(&records_path(p), kept.iter().copied())?;

    let mut summary = StageSummary::new(Stage::Clean);
    summary.count("input_documents", input.len());
    for (k, v) in by_reason {
        summary.count(k, v);
    }
    summary.count("whitespace_fraction_percentile", percentile);
    Ok(summary)
}
