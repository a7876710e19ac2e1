use std::collections::BTreeMap;

use anyhow::Result;
use filing_corpus::audit::report::{
    attachment_table, descriptor_table, duplicate_share_table, pronoun_table, split_sizes_table, toxicity_table,
    volume_by_firm_table, volume_by_form_table, volume_by_industry_table, volume_by_year_table, write_tables,
    FormDuplicates, Table,
};
use filing_corpus::audit::{PrevalenceReport, PronounReport, VolumeStats};
use filing_corpus::corpus_model::read_manifest;

use super::audit::{output_path, ToxicityOutput};
use crate::checkpoint::Stage;
use crate::pipeline::{Analysis, Pipeline, StageSummary};

const TOP_FORMS_BY_YEAR: usize = 5;

pub fn run(p: &Pipeline) -> Result<StageSummary> {
    let top_k = p.config.audit.top_k;
    let manifest = read_manifest(&p.shard_dir())?;
    let forms: BTreeMap<String, FormDuplicates> = crate::io::read_json(&super::dedup::form_duplicates_path(p))?;
    let pronouns: PronounReport = crate::io::read_json(&output_path(p, Analysis::Pronouns))?;
    let descriptors: PrevalenceReport = crate::io::read_json(&output_path(p, Analysis::Descriptors))?;
    let toxicity: ToxicityOutput = crate::io::read_json(&output_path(p, Analysis::Toxicity))?;
    let volume: VolumeStats = crate::io::read_json(&output_path(p, Analysis::Volume))?;

    let tables: Vec<Table> = vec![
        split_sizes_table(&manifest, &p.config.audit.tokenizer),
        duplicate_share_table(&forms),
        pronoun_table(&pronouns),
        descriptor_table(&descriptors, top_k),
        toxicity_table(&toxicity.report),
        volume_by_year_table(&volume, TOP_FORMS_BY_YEAR),
        volume_by_form_table(&volume, top_k),
        volume_by_firm_table(&volume, top_k),
        volume_by_industry_table(&volume, top_k),
        attachment_table(&volume),
    ];
    write_tables(&p.report_dir(), &tables)?;

    let mut summary = StageSummary::new(Stage::Report);
    summary.count("tables", tables.len());
    summary.count("report_dir", p.report_dir().display().to_string());
    Ok(summary)
}
