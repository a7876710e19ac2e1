use std::sync::Arc;
use std::time::Duration;

use anyhow::Result;
use chrono::NaiveDate;
use filing_corpus::edgar_client::{
    list_daily_archives, ArchiveRef, EdgarError, Fetcher, FileTransport, HttpTransport, Transport,
};
use serde::{Deserialize, Serialize};

use crate::checkpoint::{Stage, StageCheckpoint};
use crate::pipeline::{Pipeline, RunOptions, StageSummary};

pub const ARCHIVES_FILE: &str = "archives.json";

/// An archive available in the local cache.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachedArchive {
    pub archive: ArchiveRef,
    /// Relative to the cache directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveList {
    pub archives: Vec<CachedArchive>,
    /// Dates for which the host had no archive (holidays, outages).
    pub missing: Vec<NaiveDate>,
}

fn fetcher(p: &Pipeline) -> Result<Fetcher> {
    let fetch = &p.config.fetch;
    let mut policy = fetch.policy.clone();
    let (transport, base_url): (Arc<dyn Transport>, String) = match &fetch.mirror_dir {
        Some(dir) => {
            if policy.user_agent_contact.trim().is_empty() {
                policy.user_agent_contact = "local-mirror".into();
            }
            let dir = std::path::absolute(p.path(dir))?;
            (Arc::new(FileTransport), format!("file://{}", dir.display()))
        }
        None => (
            Arc::new(HttpTransport::new(Duration::from_secs(fetch.timeout_secs))?),
            fetch.base_url.clone(),
        ),
    };
    Ok(Fetcher::new(policy, base_url, p.path(&fetch.cache_dir), transport)?)
}

pub fn run(p: &Pipeline, checkpoint: &mut StageCheckpoint, options: &RunOptions) -> Result<StageSummary> {
    let cfg = &p.config.fetch;
    let cache_dir = p.path(&cfg.cache_dir);
    let listed = list_daily_archives(cfg.from, cfg.to, &cfg.naming)?;
    let list_path = p.stage_dir(Stage::Fetch).join(ARCHIVES_FILE);
    let mut list: ArchiveList = if list_path.exists() {
        crate::io::read_json(&list_path)?
    } else {
        ArchiveList::default()
    };

    let pending: Vec<ArchiveRef> = listed
        .iter()
        .filter(|a| !checkpoint.processed.contains(a.archive_name()))
        .take(options.limit.unwrap_or(usize::MAX))
        .cloned()
        .collect();
    let fetcher = fetcher(p)?;
    let (mut transferred, mut cached) = (0u64, 0u64);
    let mut failure = None;
    for (archive, result) in pending.iter().zip(fetcher.fetch_all(&pending)) {
        match result {
            Ok(f) => {
                if f.transferred {
                    transferred += 1;
                } else {
                    cached += 1;
                }
                let rel = f.path.strip_prefix(&cache_dir).unwrap_or(&f.path);
                list.archives.push(CachedArchive {
                    archive: f.archive,
                    path: rel.to_string_lossy().replace('\\', "/"),
                    sha256: f.sha256,
                });
            }
            Err(EdgarError::MissingArchive { date, url }) => {
                tracing::warn!(%date, %url, "no archive published");
                list.missing.push(date);
            }
            Err(e) => {
                failure.get_or_insert(e);
                continue;
            }
        }
        checkpoint.processed.insert(archive.archive_name().to_string());
    }
    list.archives.sort_by_key(|a| a.archive.date);
    list.archives.dedup_by(|a, b| a.archive == b.archive);
    list.missing.sort();
    list.missing.dedup();
    crate::io::write_json(&list_path, &list)?;
    checkpoint.save(&p.checkpoint_dir())?;
    if let Some(e) = failure {
        return Err(e.into());
    }

    let mut summary = StageSummary::new(Stage::Fetch);
    summary.complete = listed.iter().all(|a| checkpoint.processed.contains(a.archive_name()));
    summary.count("business_days", listed.len());
    summary.count("archives", list.archives.len());
    summary.count("missing", list.missing.len());
    summary.count("transferred_this_run", transferred);
    summary.count("cache_hits_this_run", cached);
    Ok(summary)
}
