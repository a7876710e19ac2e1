//! On-disk signature cache.
//!
//! Layout, all integers little-endian:
//! magic `MHSIGv1\0`, then the parameter block (seed u64, bands u32,
//! rows u32, shingle size u32), then records of
//! (id length u32, id bytes, seed u64, bands*rows u32 components).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{DedupConfig, DedupError, MinHashSignature};

const MAGIC: &[u8; 8] = b"MHSIGv1\0";

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> DedupError + '_ {
    move |source| DedupError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn header(config: &DedupConfig, seed: u64) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    out.extend(seed.to_le_bytes());
    out.extend((config.bands as u32).to_le_bytes());
    out.extend((config.rows as u32).to_le_bytes());
    out.extend((config.shingle_size as u32).to_le_bytes());
    out
}

/// Writes the cache atomically through a sibling temporary file.
pub fn write_signature_cache(
    path: &Path,
    config: &DedupConfig,
    seed: u64,
    entries: &[(String, MinHashSignature)],
) -> Result<(), DedupError> {
    let tmp = path.with_extension("part");
    let file = File::create(&tmp).map_err(io_err(&tmp))?;
    let mut w = BufWriter::new(file);
    let mut write = |bytes: &[u8]| w.write_all(bytes).map_err(io_err(&tmp));
    write(&header(config, seed))?;
    for (id, sig) in entries {
        if sig.seed != seed || sig.components.len() != config.num_perm() {
            return Err(DedupError::ParamMismatch(format!("signature for {id} does not match cache parameters")));
        }
        write(&(id.len() as u32).to_le_bytes())?;
        write(id.as_bytes())?;
        write(&sig.seed.to_le_bytes())?;
        let comps: Vec<u8> = sig.components.iter().flat_map(|c| c.to_le_bytes()).collect();
        write(&comps)?;
    }
    w.into_inner()
        .map_err(|e| e.into_error())
        .and_then(|f| f.sync_all())
        .map_err(io_err(&tmp))?;
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

/// Reads a cache written with the same parameters. A missing file or a
/// parameter mismatch yields `Ok(None)`, meaning the cache is stale.
pub fn read_signature_cache(
    path: &Path,
    config: &DedupConfig,
    seed: u64,
) -> Result<Option<Vec<(String, MinHashSignature)>>, DedupError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut r = BufReader::new(file);
    let expected = header(config, seed);
    let mut got = vec![0u8; expected.len()];
    if r.read_exact(&mut got).is_err() || got[..8] != expected[..8] {
        return Err(DedupError::CorruptCache {
            path: path.to_path_buf(),
            reason: "bad magic".into(),
        });
    }
    if got != expected {
        return Ok(None);
    }
    let corrupt = |reason: &str| DedupError::CorruptCache {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let mut out = Vec::new();
    let mut len = [0u8; 4];
    loop {
        match r.read_exact(&mut len) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(io_err(path)(e)),
        }
        let mut id = vec![0u8; u32::from_le_bytes(len) as usize];
        let mut seed_bytes = [0u8; 8];
        let mut comps = vec![0u8; 4 * config.num_perm()];
        r.read_exact(&mut id)
            .and_then(|_| r.read_exact(&mut seed_bytes))
            .and_then(|_| r.read_exact(&mut comps))
            .map_err(|_| corrupt("truncated record"))?;
        let id = String::from_utf8(id).map_err(|_| corrupt("id is not UTF-8"))?;
        let record_seed = u64::from_le_bytes(seed_bytes);
        if record_seed != seed {
            return Err(corrupt("record seed differs from header"));
        }
        let components = comps
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        out.push((id, MinHashSignature { components, seed }));
    }
    Ok(Some(out))
}

#[cfg(test)]
mod tests {
    use super::super::{minhash, shingle};
    use super::*;

    #[test]
    fn round_trip_and_invalidation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sigs.bin");
        let config = DedupConfig::default();
        let entries = vec![
            ("doc-1".to_string(), minhash(&shingle("alpha beta gamma delta epsilon zeta", 5), 3).unwrap()),
            ("doc-2".to_string(), minhash(&shingle("one two", 5), 3).unwrap()),
        ];
        assert!(read_signature_cache(&path, &config, 3).unwrap().is_none());
        write_signature_cache(&path, &config, 3, &entries).unwrap();
        assert_eq!(read_signature_cache(&path, &config, 3).unwrap().unwrap(), entries);
        assert!(read_signature_cache(&path, &config, 4).unwrap().is_none());
        let other = DedupConfig { shingle_size: 4, ..config };
        assert!(read_signature_cache(&path, &other, 3).unwrap().is_none());

        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read_signature_cache(&path, &config, 3), Err(DedupError::CorruptCache { .. })));
    }
}
