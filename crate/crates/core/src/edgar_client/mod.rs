//! Enumerating, fetching, unpacking and parsing EDGAR daily dissemination
//! archives.
//!
//! The flow for one day is
//! [`list_daily_archives`] → [`Fetcher::fetch_archive`] →
//! [`for_each_submission`] → [`parse_dissemination`], with
//! [`classify_content`] deciding which documents are worth extracting.

mod archive;
mod content;
mod dissemination;
mod fetch;
mod unpack;

use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

pub use archive::{
    is_business_day, list_daily_archives, ArchiveNaming, ArchiveRef, Compression,
    FIRST_ARCHIVE_DATE,
};
pub use content::{classify_content, ContentKind};
pub use dissemination::{
    parse_dissemination, AccessionNumber, DocumentRecord, FilingSubmission, ACCEPTANCE_FORMAT,
};
pub use fetch::{
    FetchPolicy, FetchedArchive, Fetcher, FileTransport, HttpResponse, HttpTransport, Transport,
    USER_AGENT_ENV,
};
pub use unpack::{for_each_submission, RawSubmission, SkippedMember, UnpackSummary};

#[derive(Debug, Error)]
pub enum EdgarError {
    #[error("archives are only available from {earliest}; requested {requested}")]
    BeforeAvailability {
        requested: NaiveDate,
        earliest: NaiveDate,
    },
    #[error("invalid date range: {from} is after {to}")]
    InvalidRange { from: NaiveDate, to: NaiveDate },
    #[error("invalid fetch policy: {0}")]
    InvalidPolicy(String),
    #[error("no archive published for {date} ({url})")]
    MissingArchive { date: NaiveDate, url: String },
    #[error("rate limited fetching {url} after {retries} retries (last status {status})")]
    RateLimited {
        url: String,
        retries: u32,
        status: u16,
    },
    #[error("unexpected HTTP status {status} fetching {url}")]
    HttpStatus { url: String, status: u16 },
    #[error("transport error fetching {url}: {message}")]
    Transport { url: String, message: String },
    #[error("corrupt archive container {path}: {source}")]
    CorruptContainer {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unparseable submission: {0}")]
    Unparseable(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl EdgarError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}
