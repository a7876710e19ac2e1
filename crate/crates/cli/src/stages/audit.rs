use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Result;
use filing_corpus::audit::{
    attach_toxicity, descriptor_prevalence, extract_hits, frequency_matched_sample, mean, pronoun_prevalence,
    score_sentences, toxicity_reduction, volume_stats, DescriptorHit, DescriptorLexicon, FilingText, IndustryMap,
    LengthStubScorer, PerspectiveConfig, PerspectiveScorer, ScoredHits, Shortfall, ToxicityReport, ToxicityScorer,
    VolumeRecord,
};
use filing_corpus::corpus_model::{read_records, DatasetRecord, SplitLabel};
use filing_corpus::dedup::{cross_corpus_overlap, shingle, DedupConfig, DedupError, LshIndex, MinHasher, Overlap};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{Stage, StageCheckpoint};
use crate::config::ScorerKind;
use crate::pipeline::{Analysis, Pipeline, RunOptions, StageSummary};

pub const SCORED_HITS_FILE: &str = "scored_hits.json";

pub fn output_path(p: &Pipeline, analysis: Analysis) -> PathBuf {
    p.stage_dir(Stage::Audit).join(format!("{}.json", analysis.as_str()))
}

/// One line of a comparison corpus file.
#[derive(Debug, Clone, Deserialize)]
struct ComparisonDoc {
    #[serde(default)]
    id: Option<String>,
    text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToxicityOutput {
    pub comparison_corpus: Option<PathBuf>,
    pub sentences: usize,
    pub unscored: usize,
    pub corpus_mean: Option<f64>,
    pub corpus_median: Option<f64>,
    pub comparison_sentences: usize,
    pub comparison_unscored: usize,
    pub shortfalls: Vec<Shortfall>,
    pub report: ToxicityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapOutput {
    pub comparison_corpus: Option<PathBuf>,
    pub threshold: f64,
    /// Final-split documents with a near-duplicate in the comparison
    /// corpus; absent without one.
    pub overlap: Option<Overlap>,
}

struct Inputs {
    records: Vec<DatasetRecord>,
}

impl Inputs {
    fn filings(&self) -> Vec<FilingText<'_>> {
        self.records
            .iter()
            .map(|r| FilingText {
                filing_id: r.accession_number.as_str(),
                text: &r.text,
            })
            .collect()
    }
}

fn scorer(p: &Pipeline) -> Result<Box<dyn ToxicityScorer>> {
    Ok(match p.config.audit.scorer {
        ScorerKind::Stub => Box::new(LengthStubScorer),
        ScorerKind::Perspective => {
            let cfg = PerspectiveConfig {
                max_in_flight: p.config.audit.max_in_flight,
                ..PerspectiveConfig::from_env()
            };
            Box::new(PerspectiveScorer::new(cfg)?)
        }
    })
}

fn hits_of<'a>(docs: impl IntoParallelIterator<Item = (String, &'a str)>, lex: &DescriptorLexicon) -> Vec<DescriptorHit> {
    docs.into_par_iter()
        .map(|(id, text)| extract_hits(&id, text, lex))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Scored descriptor sentences of the final split, computed once.
fn scored_corpus_hits(p: &Pipeline, inputs: &Inputs, lex: &DescriptorLexicon) -> Result<ScoredHits> {
    let path = p.stage_dir(Stage::Audit).join(SCORED_HITS_FILE);
    if path.exists() {
        return crate::io::read_json(&path);
    }
    let docs: Vec<(String, &str)> = inputs.records.iter().map(|r| (r.id(), r.text.as_str())).collect();
    let hits = hits_of(docs, lex);
    let scored = score_sentences(hits, scorer(p)?.as_ref(), p.config.audit.max_in_flight);
    crate::io::write_json(&path, &scored)?;
    Ok(scored)
}

fn comparison_docs(p: &Pipeline) -> Result<Option<Vec<(String, String)>>> {
    let Some(path) = &p.config.audit.comparison_corpus else {
        return Ok(None);
    };
    let docs: Vec<ComparisonDoc> = crate::io::read_jsonl(&p.path(path))?;
    Ok(Some(
        docs.into_iter()
            .enumerate()
            .map(|(i, d)| (d.id.unwrap_or_else(|| format!("comparison-{i}")), d.text))
            .collect(),
    ))
}

fn median(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

fn run_toxicity(p: &Pipeline, inputs: &Inputs, lex: &DescriptorLexicon) -> Result<ToxicityOutput> {
    let scored = scored_corpus_hits(p, inputs, lex)?;
    let values = scored.scored_values();
    let mut out = ToxicityOutput {
        comparison_corpus: p.config.audit.comparison_corpus.clone(),
        sentences: scored.hits.len(),
        unscored: scored.unscored,
        corpus_mean: mean(&values),
        corpus_median: median(values),
        comparison_sentences: 0,
        comparison_unscored: 0,
        shortfalls: Vec::new(),
        report: ToxicityReport::default(),
    };
    let Some(docs) = comparison_docs(p)? else {
        tracing::info!("no comparison corpus configured; toxicity comparison left empty");
        return Ok(out);
    };
    let pool = hits_of(docs.iter().map(|(id, t)| (id.clone(), t.as_str())).collect::<Vec<_>>(), lex);
    let mut reference: BTreeMap<String, usize> = BTreeMap::new();
    for hit in &scored.hits {
        *reference.entry(hit.descriptor.clone()).or_insert(0) += 1;
    }
    let sample = frequency_matched_sample(&reference, &pool, p.config.audit.sample_seed);
    let comparison = score_sentences(sample.hits, scorer(p)?.as_ref(), p.config.audit.max_in_flight);
    out.comparison_sentences = comparison.hits.len();
    out.comparison_unscored = comparison.unscored;
    out.shortfalls = sample.shortfalls;
    out.report = toxicity_reduction(&scored.by_descriptor(), &comparison.by_descriptor());
    Ok(out)
}

fn run_overlap(p: &Pipeline, inputs: &Inputs) -> Result<OverlapOutput> {
    let params: DedupConfig = p.config.dedup.params();
    let seed = p.config.dedup.seed;
    let mut out = OverlapOutput {
        comparison_corpus: p.config.audit.comparison_corpus.clone(),
        threshold: params.threshold,
        overlap: None,
    };
    let Some(docs) = comparison_docs(p)? else {
        tracing::info!("no comparison corpus configured; overlap skipped");
        return Ok(out);
    };
    let hasher = MinHasher::new(seed, params.num_perm());
    let sign = |text: &str| {
        let set = shingle(text, params.shingle_size);
        (!set.is_empty()).then(|| hasher.sign(&set)).transpose()
    };
    let comparison = docs
        .par_iter()
        .map(|(id, text)| Ok(sign(text)?.map(|s| (id.clone(), s))))
        .collect::<Result<Vec<_>, DedupError>>()?;
    let index = LshIndex::build(&params, seed, comparison.into_iter().flatten().collect())?;
    let ours = inputs
        .records
        .par_iter()
        .map(|r| sign(&r.text))
        .collect::<Result<Vec<_>, DedupError>>()?;
    let ours: Vec<_> = ours.into_iter().flatten().collect();
    out.overlap = Some(cross_corpus_overlap(&ours, &index, params.threshold)?);
    Ok(out)
}

pub fn run(p: &Pipeline, checkpoint: &mut StageCheckpoint, options: &RunOptions) -> Result<StageSummary> {
    let records: Vec<DatasetRecord> = read_records(&p.shard_dir())?
        .into_iter()
        .filter(|r| r.split == SplitLabel::Final)
        .collect();
    let inputs = Inputs { records };
    let lexicon = DescriptorLexicon::load(&p.path(&p.config.audit.lexicon))?;
    let analyses = if options.analyses.is_empty() {
        Analysis::ALL.to_vec()
    } else {
        options.analyses.clone()
    };

    let mut summary = StageSummary::new(Stage::Audit);
    for analysis in analyses {
        let path = output_path(p, analysis);
        match analysis {
            Analysis::Pronouns => {
                let r = pronoun_prevalence(inputs.filings());
                summary.count("pronoun_filings", r.total_filings);
                crate::io::write_json(&path, &r)?;
            }
            Analysis::Descriptors => {
                let mut r = descriptor_prevalence(inputs.filings(), &lexicon);
                let scored = scored_corpus_hits(p, &inputs, &lexicon)?;
                attach_toxicity(&mut r, &scored);
                summary.count("descriptor_sentences", scored.hits.len());
                crate::io::write_json(&path, &r)?;
            }
            Analysis::Toxicity => {
                let r = run_toxicity(p, &inputs, &lexicon)?;
                summary.count("toxicity_rows", r.report.rows.len());
                summary.count("unscored", r.unscored + r.comparison_unscored);
                crate::io::write_json(&path, &r)?;
            }
            Analysis::Volume => {
                let registry = p.tokenizers()?;
                let tokenizer = registry.get(&p.config.audit.tokenizer)?;
                let industries = IndustryMap::load(&p.path(&p.config.audit.ff48))?;
                let rows: Vec<VolumeRecord> = inputs
                    .records
                    .par_iter()
                    .map(|r| VolumeRecord::from_record(r, tokenizer))
                    .collect();
                let r = volume_stats(&rows, &industries);
                summary.count("tokens", r.total_tokens);
                crate::io::write_json(&path, &r)?;
            }
            Analysis::Overlap => {
                let r = run_overlap(p, &inputs)?;
                if let Some(o) = &r.overlap {
                    summary.count("overlap_fraction", o.fraction);
                }
                crate::io::write_json(&path, &r)?;
            }
        }
        checkpoint.processed.insert(analysis.as_str().to_string());
    }
    summary.count("final_documents", inputs.records.len());
    summary.complete = Analysis::ALL.iter().all(|a| checkpoint.processed.contains(a.as_str()));
    Ok(summary)
}
