use std::path::{Path, PathBuf};

use anyhow::Result;
use filing_corpus::corpus_model::{DatasetRecord, SplitLabel};
use filing_corpus::edgar_client::{for_each_submission, parse_dissemination, RawSubmission};
use filing_corpus::extraction::{extract_document, ExtractionConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fetch::{ArchiveList, ARCHIVES_FILE};
use crate::checkpoint::{Stage, StageCheckpoint};
use crate::pipeline::{Pipeline, RunOptions, StageSummary};

/// A submission set aside instead of dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quarantined {
    pub member_name: String,
    pub reason: String,
    /// Raw bytes, relative to the extract directory; absent when the
    /// member could not be read at all.
    pub saved_as: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveExtraction {
    pub archive: String,
    pub submissions: usize,
    pub documents: usize,
    pub binary_documents: usize,
    pub empty_documents: usize,
    pub quarantined: Vec<Quarantined>,
}

pub fn records_path(extract_dir: &Path, archive_name: &str) -> PathBuf {
    extract_dir.join(format!("{}.jsonl.gz", stem(archive_name)))
}

fn stem(archive_name: &str) -> &str {
    archive_name.split('.').next().unwrap_or(archive_name)
}

enum Outcome {
    Parsed(Vec<DatasetRecord>, usize, usize),
    Quarantine(String),
}

fn extract_submission(raw: &RawSubmission, config: &ExtractionConfig) -> Outcome {
    let filing = match parse_dissemination(&raw.bytes) {
        Ok(f) => f,
        Err(e) => return Outcome::Quarantine(e.to_string()),
    };
    let (mut binary, mut empty) = (0, 0);
    let mut records = Vec::new();
    for doc in &filing.documents {
        let Some(extracted) = extract_document(&doc.text(), doc.content_kind, config) else {
            binary += 1;
            continue;
        };
        if extracted.text.trim().is_empty() {
            empty += 1;
            continue;
        }
        records.push(DatasetRecord {
            accession_number: filing.accession_number.clone(),
            cik: filing.cik,
            company_name: filing.company_name.clone(),
            form_type: filing.form_type.clone(),
            acceptance_timestamp: filing.acceptance_timestamp,
            document_sequence: doc.sequence,
            document_type: doc.doc_type.clone(),
            filename: doc.filename.clone(),
            sic: filing.sic_code,
            text: extracted.text,
            split: SplitLabel::Clean,
            extraction_stats: Some(extracted.stats),
        });
    }
    Outcome::Parsed(records, binary, empty)
}

fn safe_member_name(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' })
        .collect()
}

fn extract_archive(p: &Pipeline, path: &Path, archive: &super::fetch::CachedArchive) -> Result<ArchiveExtraction> {
    let name = archive.archive.archive_name().to_string();
    let out_dir = p.stage_dir(Stage::Extract);
    let mut raws = Vec::new();
    let unpacked = for_each_submission(
        path,
        archive.archive.expected_compression,
        Some(archive.archive.date),
        |raw| raws.push(raw),
    )?;
    let outcomes: Vec<Outcome> = raws
        .par_iter()
        .map(|raw| extract_submission(raw, &p.config.extraction))
        .collect();

    let mut report = ArchiveExtraction {
        archive: name.clone(),
        submissions: raws.len(),
        ..Default::default()
    };
    let mut records = Vec::new();
    for skipped in unpacked.skipped {
        report.quarantined.push(Quarantined {
            member_name: skipped.member_name,
            reason: skipped.reason,
            saved_as: None,
        });
    }
    for (raw, outcome) in raws.iter().zip(outcomes) {
        match outcome {
            Outcome::Parsed(docs, binary, empty) => {
                report.binary_documents += binary;
                report.empty_documents += empty;
                records.extend(docs);
            }
            Outcome::Quarantine(reason) => {
                let rel = format!("quarantine/{}/{}", stem(&name), safe_member_name(&raw.member_name));
                crate::io::write_bytes(&out_dir.join(&rel), &raw.bytes)?;
                tracing::warn!(member = %raw.member_name, %reason, "submission quarantined");
                report.quarantined.push(Quarantined {
                    member_name: raw.member_name.clone(),
                    reason,
                    saved_as: Some(rel),
                });
            }
        }
    }
    records.sort_by(|a, b| {
        (a.accession_number.as_str(), a.document_sequence).cmp(&(b.accession_number.as_str(), b.document_sequence))
    });
    records.dedup_by(|a, b| a.accession_number == b.accession_number && a.document_sequence == b.document_sequence);
    report.documents = records.len();
    crate::io::write_jsonl_gz(&records_path(&out_dir, &name), &records)?;
    crate::io::write_json(&out_dir.join(format!("{}.report.json", stem(&name))), &report)?;
    Ok(report)
}

pub fn run(p: &Pipeline, checkpoint: &mut StageCheckpoint, options: &RunOptions) -> Result<StageSummary> {
    let list: ArchiveList = crate::io::read_json(&p.stage_dir(Stage::Fetch).join(ARCHIVES_FILE))?;
    let cache_dir = p.path(&p.config.fetch.cache_dir);
    let mut done_now = 0usize;
    for archive in &list.archives {
        let name = archive.archive.archive_name();
        if checkpoint.processed.contains(name) {
            tracing::debug!(archive = name, "already extracted");
            continue;
        }
        if options.limit.is_some_and(|n| done_now >= n) {
            break;
        }
        let report = extract_archive(p, &cache_dir.join(&archive.path), archive)?;
        tracing::info!(
            archive = name,
            documents = report.documents,
            quarantined = report.quarantined.len(),
            "archive extracted"
        );
        checkpoint.processed.insert(name.to_string());
        checkpoint.save(&p.checkpoint_dir())?;
        done_now += 1;
    }

    let out_dir = p.stage_dir(Stage::Extract);
    let mut summary = StageSummary::new(Stage::Extract);
    summary.complete = list
        .archives
        .iter()
        .all(|a| checkpoint.processed.contains(a.archive.archive_name()));
    let (mut submissions, mut documents, mut quarantined) = (0, 0, 0);
    for a in &list.archives {
        let report_path = out_dir.join(format!("{}.report.json", stem(a.archive.archive_name())));
        if let Ok(r) = crate::io::read_json::<ArchiveExtraction>(&report_path) {
            submissions += r.submissions;
            documents += r.documents;
            quarantined += r.quarantined.len();
        }
    }
    summary.count("archives_extracted", checkpoint.processed.len());
    summary.count("archives_extracted_this_run", done_now);
    summary.count("submissions", submissions);
    summary.count("documents", documents);
    summary.count("quarantined", quarantined);
    Ok(summary)
}
