use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Component, Path, PathBuf};

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CorpusError, DatasetRecord, SplitLabel, TokenizerRegistry, WHITESPACE_TOKENIZER};

pub const MANIFEST_FILE: &str = "manifest.json";
const DEFAULT_MAX_SHARD_BYTES: u64 = 1 << 30;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardEntry {
    /// Relative to the shard directory, `/`-separated.
    pub path: String,
    pub split: SplitLabel,
    pub records: u64,
    pub uncompressed_bytes: u64,
    pub sha256: String,
    pub token_counts: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub record_count: u64,
    /// Distinct (accession number, document sequence) pairs.
    pub document_count: u64,
    pub split_counts: BTreeMap<String, u64>,
    pub form_type_counts: BTreeMap<String, u64>,
    pub token_counts: BTreeMap<String, u64>,
    pub shards: Vec<ShardEntry>,
    pub config_digest: Option<String>,
}

#[derive(Debug, Clone)]
pub struct WriteOptions {
    /// Upper bound on uncompressed bytes per shard; a single larger record
    /// still gets a shard of its own.
    pub max_shard_bytes: u64,
    pub tokenizers: Vec<String>,
    pub config_digest: Option<String>,
}

impl Default for WriteOptions {
    fn default() -> Self {
        Self {
            max_shard_bytes: DEFAULT_MAX_SHARD_BYTES,
            tokenizers: vec![WHITESPACE_TOKENIZER.to_string()],
            config_digest: None,
        }
    }
}

fn shard_path(split: SplitLabel, index: usize) -> String {
    format!("split={split}/part-{index:05}.jsonl.gz")
}

struct Line {
    json: String,
    tokens: Vec<u64>,
}

fn write_shard(dir: &Path, rel: &str, lines: &[&Line]) -> Result<(u64, String), CorpusError> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CorpusError::io(parent, e))?;
    }
    let mut encoder = GzEncoder::new(Vec::new(), Compression::default());
    let mut bytes = 0u64;
    for line in lines {
        encoder
            .write_all(line.json.as_bytes())
            .and_then(|_| encoder.write_all(b"\n"))
            .map_err(|e| CorpusError::io(&path, e))?;
        bytes += line.json.len() as u64 + 1;
    }
    let compressed = encoder.finish().map_err(|e| CorpusError::io(&path, e))?;
    fs::write(&path, &compressed).map_err(|e| CorpusError::io(&path, e))?;
    Ok((bytes, hex::encode(Sha256::digest(&compressed))))
}

/// Writes records as gzip JSONL shards under `split=<label>/` and then the
/// manifest. Records are grouped by split in label order and keep their
/// input order within a split. Existing shards and manifest in `dir` are
/// replaced; on failure every shard written by this call is removed.
pub fn write_records(
    records: &[DatasetRecord],
    dir: &Path,
    options: &WriteOptions,
    registry: &TokenizerRegistry,
) -> Result<Manifest, CorpusError> {
    for r in records {
        r.validate()?;
    }
    let tokenizers = options
        .tokenizers
        .iter()
        .map(|id| registry.get(id))
        .collect::<Result<Vec<_>, _>>()?;
    fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))?;
    remove_previous(dir)?;

    let lines: Vec<Line> = records
        .par_iter()
        .map(|r| {
            let json = serde_json::to_string(r).expect("records serialize");
            let tokens = tokenizers.iter().map(|t| t.count(&r.text)).collect();
            Line { json, tokens }
        })
        .collect();

    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| {
        let mut shards = Vec::new();
        for split in SplitLabel::ALL {
            let indices: Vec<usize> = (0..records.len()).filter(|&i| records[i].split == split).collect();
            let mut start = 0;
            while start < indices.len() {
                let mut end = start;
                let mut size = 0u64;
                while end < indices.len() {
                    let len = lines[indices[end]].json.len() as u64 + 1;
                    if end > start && size + len > options.max_shard_bytes {
                        break;
                    }
                    size += len;
                    end += 1;
                }
                let rel = shard_path(split, shards.iter().filter(|s: &&ShardEntry| s.split == split).count());
                let chunk: Vec<&Line> = indices[start..end].iter().map(|&i| &lines[i]).collect();
                written.push(dir.join(&rel));
                let (bytes, sha256) = write_shard(dir, &rel, &chunk)?;
                let mut token_counts = BTreeMap::new();
                for (t, id) in options.tokenizers.iter().enumerate() {
                    token_counts.insert(id.clone(), chunk.iter().map(|l| l.tokens[t]).sum());
                }
                shards.push(ShardEntry {
                    path: rel,
                    split,
                    records: (end - start) as u64,
                    uncompressed_bytes: bytes,
                    sha256,
                    token_counts,
                });
                start = end;
            }
        }
        let manifest = build_manifest(records, shards, options);
        write_manifest(dir, &manifest)?;
        Ok(manifest)
    })();
    if result.is_err() {
        for path in &written {
            let _ = fs::remove_file(path);
        }
    }
    result
}

fn build_manifest(records: &[DatasetRecord], shards: Vec<ShardEntry>, options: &WriteOptions) -> Manifest {
    let mut split_counts = BTreeMap::new();
    let mut form_type_counts = BTreeMap::new();
    let mut docs = BTreeSet::new();
    for r in records {
        *split_counts.entry(r.split.to_string()).or_insert(0) += 1;
        *form_type_counts.entry(r.form_type.clone()).or_insert(0) += 1;
        docs.insert((r.accession_number.as_str(), r.document_sequence));
    }
    let mut token_counts: BTreeMap<String, u64> = options.tokenizers.iter().map(|t| (t.clone(), 0)).collect();
    for shard in &shards {
        for (id, n) in &shard.token_counts {
            *token_counts.entry(id.clone()).or_insert(0) += n;
        }
    }
    Manifest {
        record_count: records.len() as u64,
        document_count: docs.len() as u64,
        split_counts,
        form_type_counts,
        token_counts,
        shards,
        config_digest: options.config_digest.clone(),
    }
}

fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<(), CorpusError> {
    let path = dir.join(MANIFEST_FILE);
    let tmp = dir.join(format!("{MANIFEST_FILE}.part"));
    let mut json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    json.push('\n');
    fs::write(&tmp, json).map_err(|e| CorpusError::io(&tmp, e))?;
    fs::rename(&tmp, &path).map_err(|e| CorpusError::io(&path, e))
}

fn remove_previous(dir: &Path) -> Result<(), CorpusError> {
    let manifest = dir.join(MANIFEST_FILE);
    if manifest.exists() {
        fs::remove_file(&manifest).map_err(|e| CorpusError::io(&manifest, e))?;
    }
    for split in SplitLabel::ALL {
        let sub = dir.join(format!("split={split}"));
        if sub.exists() {
            fs::remove_dir_all(&sub).map_err(|e| CorpusError::io(&sub, e))?;
        }
    }
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, CorpusError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| CorpusError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| CorpusError::Integrity {
        shard: MANIFEST_FILE.to_string(),
        reason: e.to_string(),
    })
}

fn read_shard(dir: &Path, entry: &ShardEntry) -> Result<Vec<DatasetRecord>, CorpusError> {
    let integrity = |reason: String| CorpusError::Integrity {
        shard: entry.path.clone(),
        reason,
    };
    let rel = Path::new(&entry.path);
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return Err(integrity("path escapes the shard directory".into()));
    }
    let path = dir.join(rel);
    let bytes = fs::read(&path).map_err(|e| CorpusError::io(&path, e))?;
    let actual = hex::encode(Sha256::digest(&bytes));
    if actual != entry.sha256 {
        return Err(integrity(format!("checksum {actual} does not match manifest {}", entry.sha256)));
    }
    let mut out = Vec::new();
    for (n, line) in BufReader::new(GzDecoder::new(bytes.as_slice())).lines().enumerate() {
        let line = line.map_err(|e| integrity(format!("decompression failed: {e}")))?;
        let record: DatasetRecord =
            serde_json::from_str(&line).map_err(|e| integrity(format!("line {}: {e}", n + 1)))?;
        if record.split != entry.split {
            return Err(integrity(format!("line {}: record in split {}", n + 1, record.split)));
        }
        out.push(record);
    }
    if out.len() as u64 != entry.records {
        return Err(integrity(format!("manifest lists {} records, shard holds {}", entry.records, out.len())));
    }
    Ok(out)
}

/// Reads every shard listed in the manifest, in manifest order, verifying
/// checksums and record counts.
pub fn read_records(dir: &Path) -> Result<Vec<DatasetRecord>, CorpusError> {
    let manifest = read_manifest(dir)?;
    let shards = manifest
        .shards
        .par_iter()
        .map(|entry| read_shard(dir, entry))
        .collect::<Result<Vec<_>, _>>()?;
    let records: Vec<DatasetRecord> = shards.into_iter().flatten().collect();
    if records.len() as u64 != manifest.record_count {
        return Err(CorpusError::Integrity {
            shard: MANIFEST_FILE.to_string(),
            reason: format!(
                "manifest lists {} records, shards hold {}",
                manifest.record_count,
                records.len()
            ),
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::super::test_support::record;
    use super::*;

    fn sample(n: u32) -> Vec<DatasetRecord> {
        (1..=n)
            .map(|i| record(i, 100 + i as u64, "2018-07-01T09:00:00", &format!("Document number {i} discusses liquidity.")))
            .collect()
    }

    fn write(records: &[DatasetRecord], dir: &Path, options: &WriteOptions) -> Manifest {
        write_records(records, dir, options, &TokenizerRegistry::default()).unwrap()
    }

    #[test]
    fn three_records_one_shard() {
        let dir = tempfile::tempdir().unwrap();
        let records = sample(3);
        let m = write(&records, dir.path(), &WriteOptions::default());
        assert_eq!(m.record_count, 3);
        assert_eq!(m.shards.len(), 1);
        assert_eq!(m.shards[0].path, "split=clean/part-00000.jsonl.gz");
        assert_eq!(m.token_counts[WHITESPACE_TOKENIZER], 15);
        assert_eq!(read_records(dir.path()).unwrap(), records);
    }

    #[test]
    fn zero_records() {
        let dir = tempfile::tempdir().unwrap();
        let m = write(&[], dir.path(), &WriteOptions::default());
        assert_eq!((m.record_count, m.shards.len()), (0, 0));
        assert!(read_records(dir.path()).unwrap().is_empty());
    }

    #[test]
    fn small_shard_limit_splits_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let records = sample(10);
        let options = WriteOptions { max_shard_bytes: 900, ..Default::default() };
        let m = write(&records, dir.path(), &options);
        assert!(m.shards.len() >= 2);
        assert!(m.shards.iter().all(|s| s.uncompressed_bytes <= 900 || s.records == 1));
        let total: u64 = m.shards.iter().map(|s| s.token_counts[WHITESPACE_TOKENIZER]).sum();
        assert_eq!(total, m.token_counts[WHITESPACE_TOKENIZER]);
        assert_eq!(read_records(dir.path()).unwrap(), records);
    }

    #[test]
    fn splits_go_to_their_own_directories() {
        let dir = tempfile::tempdir().unwrap();
        let mut records = sample(4);
        records[1].split = SplitLabel::Fraud;
        let m = write(&records, dir.path(), &WriteOptions::default());
        let paths: Vec<_> = m.shards.iter().map(|s| s.path.as_str()).collect();
        assert_eq!(paths, ["split=clean/part-00000.jsonl.gz", "split=fraud/part-00000.jsonl.gz"]);
        assert_eq!(m.split_counts["fraud"], 1);
        let back = read_records(dir.path()).unwrap();
        assert_eq!(back[3], records[1]);
    }

    #[test]
    fn output_is_byte_deterministic() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let records = sample(5);
        write(&records, a.path(), &WriteOptions::default());
        write(&records, b.path(), &WriteOptions::default());
        for rel in [MANIFEST_FILE, "split=clean/part-00000.jsonl.gz"] {
            assert_eq!(fs::read(a.path().join(rel)).unwrap(), fs::read(b.path().join(rel)).unwrap());
        }
    }

    #[test]
    fn count_mismatch_and_tampering_detected() {
        let dir = tempfile::tempdir().unwrap();
        write(&sample(4), dir.path(), &WriteOptions::default());
        let mut manifest = read_manifest(dir.path()).unwrap();
        manifest.record_count = 5;
        write_manifest(dir.path(), &manifest).unwrap();
        assert!(matches!(read_records(dir.path()), Err(CorpusError::Integrity { .. })));

        write(&sample(4), dir.path(), &WriteOptions::default());
        let shard = dir.path().join("split=clean/part-00000.jsonl.gz");
        let mut bytes = fs::read(&shard).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0xff;
        fs::write(&shard, bytes).unwrap();
        match read_records(dir.path()) {
            Err(CorpusError::Integrity { shard, .. }) => assert_eq!(shard, "split=clean/part-00000.jsonl.gz"),
            other => panic!("expected integrity error, got {other:?}"),
        }
    }

    #[test]
    fn empty_text_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut records = sample(1);
        records[0].text.clear();
        assert!(write_records(&records, dir.path(), &WriteOptions::default(), &TokenizerRegistry::default()).is_err());
    }

    #[test]
    fn unknown_tokenizer_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let options = WriteOptions { tokenizers: vec!["nope".into()], ..Default::default() };
        assert!(matches!(
            write_records(&sample(1), dir.path(), &options, &TokenizerRegistry::default()),
            Err(CorpusError::UnknownTokenizer(_))
        ));
    }
}
