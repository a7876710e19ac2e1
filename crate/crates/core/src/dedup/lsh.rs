use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::NaiveDateTime;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{band_keys, estimate_jaccard, shingle, DedupConfig, DedupError, MinHashSignature, MinHasher};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BandKey {
    pub band: usize,
    pub digest: u64,
}

/// Band-sharded LSH index. Each band owns its own bucket map, so shards
/// are built independently and queries merge their results.
#[derive(Debug, Clone)]
pub struct LshIndex {
    bands: usize,
    rows: usize,
    seed: u64,
    ids: Vec<String>,
    signatures: Vec<MinHashSignature>,
    shards: Vec<HashMap<u64, Vec<u32>>>,
}

impl LshIndex {
    pub fn new(config: &DedupConfig, seed: u64) -> Self {
        Self {
            bands: config.bands,
            rows: config.rows,
            seed,
            ids: Vec::new(),
            signatures: Vec::new(),
            shards: vec![HashMap::new(); config.bands],
        }
    }

    /// Builds an index over `entries` in canonical (id-sorted) order, so the
    /// result does not depend on the order entries were produced in.
    pub fn build(
        config: &DedupConfig,
        seed: u64,
        mut entries: Vec<(String, MinHashSignature)>,
    ) -> Result<Self, DedupError> {
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(DedupError::DuplicateId(w[0].0.clone()));
        }
        let mut index = Self::new(config, seed);
        for (_, sig) in &entries {
            index.check(sig)?;
        }
        let keys: Vec<Vec<super::BandKey>> = entries
            .par_iter()
            .map(|(_, sig)| band_keys(sig, index.rows))
            .collect();
        index.shards = (0..index.bands)
            .into_par_iter()
            .map(|band| {
                let mut shard: HashMap<u64, Vec<u32>> = HashMap::new();
                for (doc, k) in keys.iter().enumerate() {
                    shard.entry(k[band].digest).or_default().push(doc as u32);
                }
                shard
            })
            .collect();
        let (ids, signatures) = entries.into_iter().unzip();
        index.ids = ids;
        index.signatures = signatures;
        Ok(index)
    }

    fn check(&self, sig: &MinHashSignature) -> Result<(), DedupError> {
        if sig.seed != self.seed {
            return Err(DedupError::SeedMismatch(self.seed, sig.seed));
        }
        if sig.components.len() != self.bands * self.rows {
            return Err(DedupError::LengthMismatch(self.bands * self.rows, sig.components.len()));
        }
        Ok(())
    }

    pub fn insert(&mut self, id: impl Into<String>, sig: MinHashSignature) -> Result<usize, DedupError> {
        self.check(&sig)?;
        let doc = self.ids.len();
        for key in band_keys(&sig, self.rows) {
            self.shards[key.band].entry(key.digest).or_default().push(doc as u32);
        }
        self.ids.push(id.into());
        self.signatures.push(sig);
        Ok(doc)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn signatures(&self) -> &[MinHashSignature] {
        &self.signatures
    }

    /// Positions of inserted documents sharing at least one band key with `sig`.
    pub fn find_candidate_indices(&self, sig: &MinHashSignature) -> Result<BTreeSet<usize>, DedupError> {
        self.check(sig)?;
        let mut out = BTreeSet::new();
        for key in band_keys(sig, self.rows) {
            if let Some(bucket) = self.shards[key.band].get(&key.digest) {
                out.extend(bucket.iter().map(|&d| d as usize));
            }
        }
        Ok(out)
    }

    pub fn find_candidates(&self, sig: &MinHashSignature) -> Result<BTreeSet<&str>, DedupError> {
        Ok(self
            .find_candidate_indices(sig)?
            .into_iter()
            .map(|d| self.ids[d].as_str())
            .collect())
    }

    /// Every bucket holding two or more documents, in canonical order.
    pub fn candidate_graph(&self) -> CandidateGraph {
        let mut buckets: Vec<Vec<u32>> = self
            .shards
            .iter()
            .flat_map(|shard| shard.values().filter(|b| b.len() > 1).cloned())
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        buckets.sort_unstable();
        buckets.dedup();
        CandidateGraph {
            nodes: self.ids.len(),
            buckets,
        }
    }
}

/// Candidate edges, stored as buckets: every pair inside a bucket is a
/// candidate pair. Keeps memory linear when many exact duplicates share a
/// bucket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateGraph {
    pub nodes: usize,
    pub buckets: Vec<Vec<u32>>,
}

impl CandidateGraph {
    pub fn from_pairs(nodes: usize, pairs: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut buckets: Vec<Vec<u32>> = pairs
            .into_iter()
            .map(|(a, b)| if a < b { vec![a, b] } else { vec![b, a] })
            .collect();
        buckets.sort_unstable();
        buckets.dedup();
        Self { nodes, buckets }
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut x = x;
        while self.parent[x as usize] != root {
            let next = self.parent[x as usize];
            self.parent[x as usize] = root;
            x = next;
        }
        root
    }

    /// The smaller root wins, keeping roots deterministic.
    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
        true
    }

    fn groups(&mut self) -> BTreeMap<u32, Vec<u32>> {
        let mut out: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for x in 0..self.parent.len() as u32 {
            let r = self.find(x);
            out.entry(r).or_default().push(x);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DupCluster {
    /// Document positions, ascending.
    pub members: Vec<u32>,
    /// Accepted without pairwise verification.
    pub oversize: bool,
}

/// Groups candidate pairs into duplicate clusters.
///
/// A candidate pair is an edge when its signature estimate reaches
/// `threshold`. A connected candidate component with more than
/// `oversize_limit` members is taken as one cluster without verification.
/// Only clusters with two or more members are returned.
pub fn resolve_clusters(
    graph: &CandidateGraph,
    signatures: &[MinHashSignature],
    threshold: f64,
    oversize_limit: usize,
) -> Result<Vec<DupCluster>, DedupError> {
    let mut candidates = UnionFind::new(graph.nodes);
    for bucket in &graph.buckets {
        for w in bucket.windows(2) {
            candidates.union(w[0], w[1]);
        }
    }
    let components = candidates.groups();
    let oversize: BTreeSet<u32> = components
        .iter()
        .filter(|(_, m)| m.len() > oversize_limit)
        .map(|(r, _)| *r)
        .collect();

    let mut verified = UnionFind::new(graph.nodes);
    for bucket in &graph.buckets {
        if oversize.contains(&candidates.find(bucket[0])) {
            continue;
        }
        for (i, &a) in bucket.iter().enumerate() {
            for &b in &bucket[i + 1..] {
                if verified.find(a) == verified.find(b) {
                    continue;
                }
                let estimate = estimate_jaccard(&signatures[a as usize], &signatures[b as usize])?;
                if estimate >= threshold {
                    verified.union(a, b);
                }
            }
        }
    }

    let mut clusters: Vec<DupCluster> = components
        .into_iter()
        .filter(|(r, _)| oversize.contains(r))
        .map(|(_, members)| DupCluster {
            members,
            oversize: true,
        })
        .collect();
    clusters.extend(
        verified
            .groups()
            .into_values()
            .filter(|m| m.len() > 1 && !oversize.contains(&candidates.find(m[0])))
            .map(|members| DupCluster {
                members,
                oversize: false,
            }),
    );
    clusters.sort_by(|a, b| a.members[0].cmp(&b.members[0]));
    Ok(clusters)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocMeta {
    pub accession: String,
    pub acceptance: Option<NaiveDateTime>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedCluster {
    pub members: Vec<String>,
    pub survivor: String,
    pub oversize: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupOutcome {
    pub retained: Vec<String>,
    pub removed: Vec<String>,
    pub clusters: Vec<ResolvedCluster>,
}

/// Keeps one member per cluster: the earliest acceptance timestamp, ties
/// going to the lexicographically smallest accession number, then id.
/// Documents outside every cluster are retained.
pub fn select_survivors(
    clusters: &[DupCluster],
    ids: &[String],
    meta: &HashMap<String, DocMeta>,
) -> Result<DedupOutcome, DedupError> {
    let mut removed = BTreeSet::new();
    let mut resolved = Vec::with_capacity(clusters.len());
    for cluster in clusters {
        let mut best: Option<(NaiveDateTime, &str, &str)> = None;
        for &m in &cluster.members {
            let id = ids[m as usize].as_str();
            let doc = meta.get(id).ok_or_else(|| DedupError::MissingMetadata(id.to_string()))?;
            let ts = doc.acceptance.ok_or_else(|| DedupError::MissingTimestamp(id.to_string()))?;
            let key = (ts, doc.accession.as_str(), id);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        let survivor = best.map(|b| b.2.to_string()).unwrap_or_default();
        let members: Vec<String> = cluster.members.iter().map(|&m| ids[m as usize].clone()).collect();
        removed.extend(members.iter().filter(|m| **m != survivor).cloned());
        resolved.push(ResolvedCluster {
            members,
            survivor,
            oversize: cluster.oversize,
        });
    }
    let retained = ids.iter().filter(|id| !removed.contains(*id)).cloned().collect();
    Ok(DedupOutcome {
        retained,
        removed: removed.into_iter().collect(),
        clusters: resolved,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupItem {
    pub id: String,
    pub accession: String,
    pub acceptance: Option<NaiveDateTime>,
    pub text: String,
}

/// Signs, indexes, clusters and picks survivors for a whole corpus.
/// Documents without any words cannot be signed and are always retained.
pub fn dedup_corpus(
    items: &[DedupItem],
    config: &DedupConfig,
    seed: u64,
) -> Result<(DedupOutcome, LshIndex), DedupError> {
    config.validate()?;
    let hasher = MinHasher::new(seed, config.num_perm());
    let signed: Vec<(String, Option<MinHashSignature>)> = items
        .par_iter()
        .map(|item| {
            let set = shingle(&item.text, config.shingle_size);
            let sig = if set.is_empty() { None } else { Some(hasher.sign(&set)) };
            (item.id.clone(), sig.transpose())
        })
        .map(|(id, sig)| sig.map(|s| (id, s)))
        .collect::<Result<_, _>>()?;
    let meta: HashMap<String, DocMeta> = items
        .iter()
        .map(|i| {
            (
                i.id.clone(),
                DocMeta {
                    accession: i.accession.clone(),
                    acceptance: i.acceptance,
                },
            )
        })
        .collect();
    let unsigned: Vec<String> = signed.iter().filter(|(_, s)| s.is_none()).map(|(id, _)| id.clone()).collect();
    let entries = signed.into_iter().filter_map(|(id, s)| s.map(|s| (id, s))).collect();
    let index = LshIndex::build(config, seed, entries)?;
    let clusters = resolve_clusters(
        &index.candidate_graph(),
        index.signatures(),
        config.threshold,
        config.oversize_limit,
    )?;
    let mut outcome = select_survivors(&clusters, index.ids(), &meta)?;
    outcome.retained.extend(unsigned);
    outcome.retained.sort();
    Ok((outcome, index))
}

/// Whether two signatures agree on every component of some band, checked
/// component by component rather than through digests.
pub fn banding_collides(a: &MinHashSignature, b: &MinHashSignature, rows: usize) -> bool {
    a.components
        .chunks(rows)
        .zip(b.components.chunks(rows))
        .any(|(x, y)| x == y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    pub matched: usize,
    pub total: usize,
    pub fraction: f64,
}

/// Share of `a` with at least one candidate in `b` whose estimate reaches
/// `threshold`.
pub fn cross_corpus_overlap(
    a: &[MinHashSignature],
    b: &LshIndex,
    threshold: f64,
) -> Result<Overlap, DedupError> {
    let hits = a
        .par_iter()
        .map(|sig| {
            let found = b
                .find_candidate_indices(sig)
                .map_err(|e| DedupError::ParamMismatch(e.to_string()))?;
            for d in found {
                if estimate_jaccard(sig, &b.signatures[d])? >= threshold {
                    return Ok(true);
                }
            }
            Ok(false)
        })
        .collect::<Result<Vec<bool>, DedupError>>()?;
    let matched = hits.iter().filter(|h| **h).count();
    let total = a.len();
    Ok(Overlap {
        matched,
        total,
        fraction: if total == 0 { 0.0 } else { matched as f64 / total as f64 },
    })
}
