//! Near-duplicate detection with MinHash signatures and LSH banding.
//!
//! Documents are shingled into lowercased word 5-grams, each hashed to 64
//! bits. A signature keeps, for each of `bands * rows` seeded universal
//! hash functions `(a*x + b) mod (2^61 - 1)`, the minimum over the
//! shingles, truncated to 32 bits. The fraction of equal components
//! estimates Jaccard similarity. Banding the signature into `bands` groups
//! of `rows` components makes a pair with similarity `s` collide in at
//! least one band with probability `1 - (1 - s^rows)^bands`.

mod cache;
mod lsh;

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use xxhash_rust::xxh3::xxh3_64;

pub use cache::{read_signature_cache, write_signature_cache};
pub use lsh::{
    banding_collides, cross_corpus_overlap, dedup_corpus, resolve_clusters, select_survivors,
    BandKey, CandidateGraph, DedupItem, DedupOutcome, DocMeta, DupCluster, LshIndex, Overlap,
    ResolvedCluster,
};

pub const SHINGLE_SIZE: usize = 5;
pub const DEFAULT_BANDS: usize = 20;
pub const DEFAULT_ROWS: usize = 13;
pub const DEFAULT_THRESHOLD: f64 = 0.8;
pub const DEFAULT_OVERSIZE_LIMIT: usize = 10_000;

const MERSENNE_61: u64 = (1 << 61) - 1;

#[derive(Debug, Error)]
pub enum DedupError {
    #[error("cannot sign an empty shingle set")]
    EmptyShingleSet,
    #[error("signatures use different seeds ({0} vs {1})")]
    SeedMismatch(u64, u64),
    #[error("signatures have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("parameter mismatch: {0}")]
    ParamMismatch(String),
    #[error("invalid dedup parameters: {0}")]
    InvalidParams(String),
    #[error("document {0} has no acceptance timestamp")]
    MissingTimestamp(String),
    #[error("document {0} has no metadata")]
    MissingMetadata(String),
    #[error("duplicate document id {0}")]
    DuplicateId(String),
    #[error("corrupt signature cache {path}: {reason}")]
    CorruptCache { path: PathBuf, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DedupConfig {
    pub bands: usize,
    pub rows: usize,
    pub shingle_size: usize,
    pub threshold: f64,
    pub oversize_limit: usize,
}

impl Default for DedupConfig {
    fn default() -> Self {
        Self {
            bands: DEFAULT_BANDS,
            rows: DEFAULT_ROWS,
            shingle_size: SHINGLE_SIZE,
            threshold: DEFAULT_THRESHOLD,
            oversize_limit: DEFAULT_OVERSIZE_LIMIT,
        }
    }
}

impl DedupConfig {
    pub fn num_perm(&self) -> usize {
        self.bands * self.rows
    }

    pub fn validate(&self) -> Result<(), DedupError> {
        if self.bands == 0 || self.rows == 0 || self.shingle_size == 0 {
            return Err(DedupError::InvalidParams(
                "bands, rows and shingle_size must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(DedupError::InvalidParams(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        if self.oversize_limit < 2 {
            return Err(DedupError::InvalidParams("oversize_limit must be at least 2".into()));
        }
        Ok(())
    }

    /// Probability that a pair at Jaccard `s` shares at least one band.
    pub fn collision_probability(&self, s: f64) -> f64 {
        1.0 - (1.0 - s.powi(self.rows as i32)).powi(self.bands as i32)
    }
}

/// Sorted, distinct 64-bit shingle hashes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ShingleSet {
    pub shingles: Vec<u64>,
}

impl ShingleSet {
    pub fn from_hashes<I: IntoIterator<Item = u64>>(hashes: I) -> Self {
        let set: BTreeSet<u64> = hashes.into_iter().collect();
        Self {
            shingles: set.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.shingles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shingles.is_empty()
    }

    /// Exact Jaccard similarity; two empty sets are identical.
    pub fn jaccard(&self, other: &ShingleSet) -> f64 {
        let (mut i, mut j, mut inter) = (0, 0, 0usize);
        let (a, b) = (&self.shingles, &other.shingles);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    inter += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        let union = a.len() + b.len() - inter;
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// Hashes of the lowercased word `n`-grams of `text`. Texts with fewer than
/// `n` words yield one shingle for the whole (lowercased) word sequence;
/// texts without words yield an empty set.
pub fn shingle(text: &str, n: usize) -> ShingleSet {
    let words: Vec<String> = text.split_whitespace().map(str::to_lowercase).collect();
    if words.is_empty() {
        return ShingleSet::default();
    }
    if words.len() < n {
        return ShingleSet::from_hashes([xxh3_64(words.join(" ").as_bytes())]);
    }
    ShingleSet::from_hashes(words.windows(n).map(|w| xxh3_64(w.join(" ").as_bytes())))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MinHashSignature {
    pub components: Vec<u32>,
    pub seed: u64,
}

/// `x mod (2^61 - 1)` for `x < 2^122`.
fn mod_mersenne(x: u128) -> u64 {
    let r = (x as u64 & MERSENNE_61) as u128 + (x >> 61);
    let r = (r as u64 & MERSENNE_61) + (r >> 61) as u64;
    if r >= MERSENNE_61 {
        r - MERSENNE_61
    } else {
        r
    }
}

/// A family of seeded permutation hashes.
#[derive(Debug, Clone)]
pub struct MinHasher {
    seed: u64,
    coefficients: Vec<(u64, u64)>,
}

impl MinHasher {
    pub fn new(seed: u64, num_perm: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coefficients = (0..num_perm)
            .map(|_| (rng.random_range(1..MERSENNE_61), rng.random_range(0..MERSENNE_61)))
            .collect();
        Self { seed, coefficients }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_perm(&self) -> usize {
        self.coefficients.len()
    }

    pub fn sign(&self, set: &ShingleSet) -> Result<MinHashSignature, DedupError> {
        if set.is_empty() {
            return Err(DedupError::EmptyShingleSet);
        }
        let mut components = vec![u32::MAX; self.coefficients.len()];
        for &x in &set.shingles {
            let x = mod_mersenne(x as u128) as u128;
            for (slot, &(a, b)) in components.iter_mut().zip(&self.coefficients) {
                let h = mod_mersenne(a as u128 * x + b as u128) as u32;
                if h < *slot {
                    *slot = h;
                }
            }
        }
        Ok(MinHashSignature {
            components,
            seed: self.seed,
        })
    }
}

/// Signature with the default 260 permutations.
pub fn minhash(set: &ShingleSet, seed: u64) -> Result<MinHashSignature, DedupError> {
    MinHasher::new(seed, DEFAULT_BANDS * DEFAULT_ROWS).sign(set)
}

pub fn estimate_jaccard(a: &MinHashSignature, b: &MinHashSignature) -> Result<f64, DedupError> {
    if a.seed != b.seed {
        return Err(DedupError::SeedMismatch(a.seed, b.seed));
    }
    if a.components.len() != b.components.len() {
        return Err(DedupError::LengthMismatch(a.components.len(), b.components.len()));
    }
    if a.components.is_empty() {
        return Ok(1.0);
    }
    let equal = a
        .components
        .iter()
        .zip(&b.components)
        .filter(|(x, y)| x == y)
        .count();
    Ok(equal as f64 / a.components.len() as f64)
}

/// One key per band; band `b` covers components `[rows*b, rows*b + rows)`.
pub fn band_keys(sig: &MinHashSignature, rows: usize) -> Vec<BandKey> {
    sig.components
        .chunks(rows)
        .enumerate()
        .map(|(band, chunk)| {
            let bytes: Vec<u8> = chunk.iter().flat_map(|c| c.to_le_bytes()).collect();
            BandKey {
                band,
                digest: xxh3_64(&bytes),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn shingle_counts() {
        assert_eq!(shingle("one two three four five", 5).len(), 1);
        assert_eq!(shingle("one two three four five six seven", 5).len(), 3);
        assert_eq!(shingle("one two three", 5).len(), 1);
        assert!(shingle("   ", 5).is_empty());
        assert_eq!(shingle("A B C D E", 5), shingle("a  b\nc d e", 5));
    }

    #[test]
    fn repeated_ngrams_are_one_shingle() {
        assert_eq!(shingle("a b c d e a b c d e", 5).len(), 5);
    }

    #[test]
    fn mersenne_reduction_matches_modulo() {
        for x in [0u128, 1, MERSENNE_61 as u128, (MERSENNE_61 as u128) * 3 + 7, u64::MAX as u128, (1u128 << 122) - 1] {
            assert_eq!(mod_mersenne(x) as u128, x % MERSENNE_61 as u128, "{x}");
        }
    }

    #[test]
    fn signatures_are_deterministic() {
        let s = shingle("the quick brown fox jumps over the lazy dog", 5);
        let a = minhash(&s, 7).unwrap();
        assert_eq!(a, minhash(&s, 7).unwrap());
        assert_eq!(a.components.len(), 260);
        assert_eq!(estimate_jaccard(&a, &a).unwrap(), 1.0);
        assert_ne!(a, minhash(&s, 8).unwrap());
    }

    #[test]
    fn errors() {
        assert!(matches!(minhash(&ShingleSet::default(), 1), Err(DedupError::EmptyShingleSet)));
        let s = shingle("a b c d e f", 5);
        let a = minhash(&s, 1).unwrap();
        let b = minhash(&s, 2).unwrap();
        assert!(matches!(estimate_jaccard(&a, &b), Err(DedupError::SeedMismatch(1, 2))));
    }

    #[test]
    fn disjoint_sets_estimate_near_zero() {
        let a = ShingleSet::from_hashes(0..200);
        let b = ShingleSet::from_hashes(1000..1200);
        let est = estimate_jaccard(&minhash(&a, 3).unwrap(), &minhash(&b, 3).unwrap()).unwrap();
        assert!(est < 0.02, "{est}");
    }

    #[test]
    fn half_overlap_within_three_sigma() {
        // |A| = |B| = 150 sharing 100: J = 100 / 200.
        let a = ShingleSet::from_hashes(0..150);
        let b = ShingleSet::from_hashes(50..200);
        assert_eq!(a.jaccard(&b), 0.5);
        let sigma = (0.25f64 / 260.0).sqrt();
        let est = estimate_jaccard(&minhash(&a, 11).unwrap(), &minhash(&b, 11).unwrap()).unwrap();
        assert!((est - 0.5).abs() <= 3.0 * sigma, "{est}");
    }

    #[test]
    fn band_locality() {
        let s = shingle("lorem ipsum dolor sit amet consectetur adipiscing elit", 5);
        let a = minhash(&s, 1).unwrap();
        let mut b = a.clone();
        b.components[0] ^= 1;
        let (ka, kb) = (band_keys(&a, 13), band_keys(&b, 13));
        assert_eq!(ka.len(), 20);
        assert_ne!(ka[0], kb[0]);
        assert_eq!(ka[1..], kb[1..]);
        assert_eq!(band_keys(&a, 13), ka);
    }

    #[test]
    fn s_curve_values() {
        let c = DedupConfig::default();
        assert!((c.collision_probability(0.8) - 0.678).abs() < 1e-3);
        assert!((c.collision_probability(0.9) - 0.997).abs() < 1e-3);
        assert!((c.collision_probability(0.5) - 0.00244).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn identical_sets_collide_in_every_band(words in proptest::collection::vec("[a-z]{1,6}", 1..40), seed: u64) {
            let text = words.join(" ");
            let a = minhash(&shingle(&text, 5), seed).unwrap();
            let b = minhash(&shingle(&text.to_uppercase(), 5), seed).unwrap();
            prop_assert_eq!(band_keys(&a, 13), band_keys(&b, 13));
        }

        #[test]
        fn estimate_is_symmetric_fraction(x in proptest::collection::btree_set(0u64..500, 1..80),
                                          y in proptest::collection::btree_set(0u64..500, 1..80),
                                          seed: u64) {
            let a = minhash(&ShingleSet::from_hashes(x), seed).unwrap();
            let b = minhash(&ShingleSet::from_hashes(y), seed).unwrap();
            let ab = estimate_jaccard(&a, &b).unwrap();
            prop_assert_eq!(ab, estimate_jaccard(&b, &a).unwrap());
            prop_assert!((0.0..=1.0).contains(&ab));
        }
    }
}
