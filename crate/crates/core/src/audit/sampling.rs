//! Frequency-matched sampling of comparison-corpus sentences.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64;

use super::DescriptorHit;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shortfall {
    pub descriptor: String,
    pub requested: usize,
    pub available: usize,
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SampleOutcome {
    /// Sampled hits, grouped by descriptor in name order, each group in
    /// the order of the source hits.
    pub hits: Vec<DescriptorHit>,
    pub shortfalls: Vec<Shortfall>,
}

/// For each descriptor with reference count `n`, draws `min(n, available)`
/// comparison hits uniformly without replacement.
///
/// Each descriptor gets its own generator derived from `seed` and the
/// descriptor name, so adding a descriptor never changes another's sample.
pub fn frequency_matched_sample(
    reference_counts: &BTreeMap<String, usize>,
    comparison_hits: &[DescriptorHit],
    seed: u64,
) -> SampleOutcome {
    let mut by_descriptor: BTreeMap<&str, Vec<&DescriptorHit>> = BTreeMap::new();
    for hit in comparison_hits {
        by_descriptor.entry(hit.descriptor.as_str()).or_default().push(hit);
    }
    let mut out = SampleOutcome::default();
    for (descriptor, &requested) in reference_counts {
        let pool = by_descriptor.get(descriptor.as_str()).map_or(&[][..], Vec::as_slice);
        let take = requested.min(pool.len());
        if take < requested {
            out.shortfalls.push(Shortfall {
                descriptor: descriptor.clone(),
                requested,
                available: pool.len(),
                missing: requested - take,
            });
        }
        if take == 0 {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ xxh3_64(descriptor.as_bytes()));
        let mut picked = rand::seq::index::sample(&mut rng, pool.len(), take).into_vec();
        picked.sort_unstable();
        out.hits.extend(picked.into_iter().map(|i| pool[i].clone()));
    }
    out
}
