use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use chrono::NaiveDate;
use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};

use super::{Compression, EdgarError};

/// One member of a daily archive, still in dissemination format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSubmission {
    pub archive_date: Option<NaiveDate>,
    pub member_name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedMember {
    pub member_name: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnpackSummary {
    pub emitted: usize,
    pub skipped: Vec<SkippedMember>,
}

/// Streams every submission in a daily archive to `sink`, in member order.
///
/// Members that are themselves gzip-compressed are inflated; a member that
/// fails to inflate is skipped and reported in the summary. A container that
/// cannot be read at all is a fatal [`EdgarError::CorruptContainer`].
pub fn for_each_submission<F>(
    path: &Path,
    compression: Compression,
    archive_date: Option<NaiveDate>,
    mut sink: F,
) -> Result<UnpackSummary, EdgarError>
where
    F: FnMut(RawSubmission),
{
    let file = File::open(path).map_err(|e| EdgarError::io(path, e))?;
    let reader: Box<dyn Read> = match compression {
        Compression::GzipTar => Box::new(GzDecoder::new(BufReader::new(file))),
        Compression::Plain => Box::new(BufReader::new(file)),
    };
    let corrupt = |source: std::io::Error| EdgarError::CorruptContainer {
        path: path.to_path_buf(),
        source,
    };

    let mut archive = tar::Archive::new(reader);
    let mut summary = UnpackSummary::default();
    for entry in archive.entries().map_err(corrupt)? {
        let mut entry = entry.map_err(corrupt)?;
        if !entry.header().entry_type().is_file() {
            continue;
        }
        let member_name = entry
            .path()
            .map(|p| p.to_string_lossy().into_owned())
            .unwrap_or_else(|_| String::from_utf8_lossy(&entry.path_bytes()).into_owned());
        let mut bytes = Vec::with_capacity(entry.size() as usize);
        entry.read_to_end(&mut bytes).map_err(corrupt)?;

        let bytes = if member_name.ends_with(".gz") {
            let mut inflated = Vec::new();
            match GzDecoder::new(bytes.as_slice()).read_to_end(&mut inflated) {
                Ok(_) => inflated,
                Err(e) => {
                    tracing::warn!(member = %member_name, error = %e, "skipping corrupt member");
                    summary.skipped.push(SkippedMember {
                        member_name,
                        reason: e.to_string(),
                    });
                    continue;
                }
            }
        } else {
            bytes
        };
        if bytes.is_empty() {
            tracing::warn!(member = %member_name, "skipping empty member");
            summary.skipped.push(SkippedMember {
                member_name,
                reason: "empty member".into(),
            });
            continue;
        }
        summary.emitted += 1;
        sink(RawSubmission {
            archive_date,
            member_name,
            bytes,
        });
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use std::io::Write;

    fn gz(bytes: &[u8]) -> Vec<u8> {
        let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(bytes).unwrap();
        enc.finish().unwrap()
    }

    fn build(members: &[(&str, Vec<u8>)], compress: bool) -> Vec<u8> {
        let mut builder = tar::Builder::new(Vec::new());
        for (name, data) in members {
            let mut header = tar::Header::new_gnu();
            header.set_size(data.len() as u64);
            header.set_mode(0o644);
            header.set_cksum();
            builder.append_data(&mut header, name, data.as_slice()).unwrap();
        }
        let tar = builder.into_inner().unwrap();
        if compress {
            gz(&tar)
        } else {
            tar
        }
    }

    fn collect(bytes: &[u8], compression: Compression) -> Result<(Vec<RawSubmission>, UnpackSummary), EdgarError> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.tar");
        std::fs::write(&path, bytes).unwrap();
        let mut items = Vec::new();
        let summary = for_each_submission(&path, compression, None, |s| items.push(s))?;
        Ok((items, summary))
    }

    #[test]
    fn emits_members_in_order() {
        let archive = build(
            &[
                ("b.nc", b"<SUBMISSION>b".to_vec()),
                ("a.nc", b"<SUBMISSION>a".to_vec()),
                ("c.nc", b"<SUBMISSION>c".to_vec()),
            ],
            true,
        );
        let (items, summary) = collect(&archive, Compression::GzipTar).unwrap();
        let names: Vec<_> = items.iter().map(|i| i.member_name.as_str()).collect();
        assert_eq!(names, ["b.nc", "a.nc", "c.nc"]);
        assert_eq!(summary.emitted, 3);
        assert!(summary.skipped.is_empty());
    }

    #[test]
    fn corrupt_member_is_skipped() {
        let mut broken = gz(b"<SUBMISSION>two");
        let mid = broken.len() / 2;
        broken.truncate(mid);
        let archive = build(
            &[
                ("one.nc.gz", gz(b"<SUBMISSION>one")),
                ("two.nc.gz", broken),
                ("three.nc", b"<SUBMISSION>three".to_vec()),
            ],
            false,
        );
        let (items, summary) = collect(&archive, Compression::Plain).unwrap();
        assert_eq!(items.len(), 2);
        assert_eq!(items[0].bytes, b"<SUBMISSION>one");
        assert_eq!(summary.skipped.len(), 1);
        assert_eq!(summary.skipped[0].member_name, "two.nc.gz");
    }

    #[test]
    fn empty_archive() {
        let (items, summary) = collect(&build(&[], true), Compression::GzipTar).unwrap();
        assert!(items.is_empty());
        assert_eq!(summary, UnpackSummary::default());
    }

    #[test]
    fn corrupt_container_is_fatal() {
        let mut archive = build(&[("a.nc", vec![b'x'; 4000])], true);
        archive.truncate(archive.len() / 2);
        assert!(matches!(
            collect(&archive, Compression::GzipTar),
            Err(EdgarError::CorruptContainer { .. })
        ));
        assert!(matches!(
            collect(b"definitely not gzip", Compression::GzipTar),
            Err(EdgarError::CorruptContainer { .. })
        ));
    }

    #[test]
    fn deterministic_across_runs() {
        let archive = build(&[("x.nc", b"1".to_vec()), ("y.nc", b"2".to_vec())], true);
        let a = collect(&archive, Compression::GzipTar).unwrap().0;
        let b = collect(&archive, Compression::GzipTar).unwrap().0;
        assert_eq!(a, b);
    }
}
