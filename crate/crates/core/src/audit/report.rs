//! Tabular renderings of audit results as CSV and aligned text.

use std::collections::BTreeMap;
use std::path::Path;

use super::{AuditError, PrevalenceReport, PronounReport, ToxicityReport, VolumeStats};
use crate::corpus_model::{Manifest, SplitLabel};

/// Significance level used to flag toxicity differences.
pub const SIGNIFICANCE_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    /// File stem, e.g. `split_sizes`.
    pub name: String,
    pub title: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, title: &str, headers: &[&str]) -> Self {
        Self {
            name: name.into(),
            title: title.into(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory csv write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is utf-8")
    }

    /// Left-aligned text columns, numeric-looking cells right-aligned.
    pub fn to_text(&self) -> String {
        let cols = self.headers.len();
        let mut width: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate().take(cols) {
                width[i] = width[i].max(cell.chars().count());
            }
        }
        let line = |cells: &[String], out: &mut String| {
            let parts: Vec<String> = cells
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    if looks_numeric(c) {
                        format!("{c:>w$}", w = width[i])
                    } else {
                        format!("{c:<w$}", w = width[i])
                    }
                })
                .collect();
            out.push_str(parts.join("  ").trim_end());
            out.push('\n');
        };
        let mut out = format!("{}\n", self.title);
        line(&self.headers, &mut out);
        let rule: Vec<String> = width.iter().map(|w| "-".repeat(*w)).collect();
        out.push_str(&rule.join("  "));
        out.push('\n');
        for row in &self.rows {
            line(row, &mut out);
        }
        out
    }
}

fn looks_numeric(s: &str) -> bool {
    !s.is_empty() && s.parse::<f64>().is_ok()
}

fn pct(x: f64) -> String {
    format!("{x:.2}")
}

fn opt(x: Option<f64>, digits: usize) -> String {
    x.map_or_else(String::new, |v| format!("{v:.digits$}"))
}

/// Documents and tokens per split.
pub fn split_sizes_table(manifest: &Manifest, tokenizer_id: &str) -> Table {
    let header = format!("Tokens ({tokenizer_id})");
    let mut t = Table::new("split_sizes", "Split sizes", &["Split", "Documents", &header]);
    for split in SplitLabel::ALL {
        let docs = manifest.split_counts.get(split.as_str()).copied().unwrap_or(0);
        let tokens: u64 = manifest
            .shards
            .iter()
            .filter(|s| s.split == split)
            .filter_map(|s| s.token_counts.get(tokenizer_id))
            .sum();
        t.push(vec![split.to_string(), docs.to_string(), tokens.to_string()]);
    }
    t
}

/// Token totals and duplicate-removed tokens per form type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct FormDuplicates {
    pub total_tokens: u64,
    pub duplicate_tokens: u64,
}

pub fn duplicate_share_table(forms: &BTreeMap<String, FormDuplicates>) -> Table {
    let mut t = Table::new(
        "duplicate_shares",
        "Duplicate tokens by form type",
        &["Form type", "Tokens", "Duplicate tokens", "Duplicate %"],
    );
    let mut rows: Vec<(&String, &FormDuplicates)> = forms.iter().collect();
    rows.sort_by(|a, b| b.1.total_tokens.cmp(&a.1.total_tokens).then(a.0.cmp(b.0)));
    for (form, d) in rows {
        let share = if d.total_tokens == 0 {
            0.0
        } else {
            100.0 * d.duplicate_tokens as f64 / d.total_tokens as f64
        };
        t.push(vec![form.clone(), d.total_tokens.to_string(), d.duplicate_tokens.to_string(), pct(share)]);
    }
    t
}

pub fn pronoun_table(report: &PronounReport) -> Table {
    let mut t = Table::new("pronouns", "Pronoun prevalence", &["Group", "Pronoun", "Filings", "% of group"]);
    t.push(vec![
        "Gender".into(),
        "(any)".into(),
        report.gender_filings.to_string(),
        pct(report.gender_percent),
    ]);
    for s in &report.gender {
        t.push(vec!["Gender".into(), s.class.label().into(), s.filings.to_string(), pct(s.percent)]);
    }
    t.push(vec![
        "Grammatical".into(),
        "(any)".into(),
        report.grammatical_filings.to_string(),
        pct(report.grammatical_percent),
    ]);
    for s in &report.grammatical {
        t.push(vec!["Grammatical".into(), s.class.label().into(), s.filings.to_string(), pct(s.percent)]);
    }
    t
}

/// One row per axis followed by its top `top_k` descriptors.
pub fn descriptor_table(report: &PrevalenceReport, top_k: usize) -> Table {
    let mut t = Table::new(
        "descriptors",
        "Demographic descriptor prevalence",
        &["Axis", "Descriptor", "Filings", "%", "Mentions", "Sentences", "Mean toxicity"],
    );
    for axis in &report.axes {
        t.push(vec![
            axis.axis.title().into(),
            "(any)".into(),
            axis.filings.to_string(),
            pct(axis.percent),
            String::new(),
            String::new(),
            String::new(),
        ]);
        for d in axis.descriptors.iter().take(top_k) {
            t.push(vec![
                axis.axis.title().into(),
                d.descriptor.clone(),
                d.filings.to_string(),
                pct(d.percent),
                d.mentions.to_string(),
                d.sentence_count.to_string(),
                opt(d.mean_toxicity, 4),
            ]);
        }
    }
    t
}

pub fn toxicity_table(report: &ToxicityReport) -> Table {
    let mut t = Table::new(
        "toxicity",
        "Toxicity compared with the reference corpus",
        &["Descriptor", "n", "n (ref)", "Mean", "Mean (ref)", "Change %", "p-value", "Significant"],
    );
    for r in &report.rows {
        t.push(vec![
            r.descriptor.clone(),
            r.n_a.to_string(),
            r.n_b.to_string(),
            format!("{:.4}", r.mean_a),
            format!("{:.4}", r.mean_b),
            pct(r.reduction_percent),
            format!("{:.3e}", r.p_value),
            if r.p_value < SIGNIFICANCE_LEVEL { "yes" } else { "no" }.into(),
        ]);
    }
    for s in &report.skipped {
        let mut row = vec![s.descriptor.clone()];
        row.extend(std::iter::repeat_n(String::new(), 6));
        row.push(format!("skipped: {}", s.reason));
        t.push(row);
    }
    t
}

/// Year-by-form token matrix over the `top_forms` largest forms, with the
/// remainder in an "Other" column.
pub fn volume_by_year_table(stats: &VolumeStats, top_forms: usize) -> Table {
    let forms: Vec<String> = VolumeStats::top(&stats.by_form, top_forms).into_iter().map(|(f, _)| f).collect();
    let mut headers = vec!["Year"];
    headers.extend(forms.iter().map(String::as_str));
    headers.extend(["Other", "Total"]);
    let mut t = Table::new("volume_by_year", "Tokens by year and form type", &headers);
    for (year, row) in &stats.by_year_form {
        let mut cells = vec![year.to_string()];
        let mut listed = 0;
        for f in &forms {
            let n = row.get(f).copied().unwrap_or(0);
            listed += n;
            cells.push(n.to_string());
        }
        let total: u64 = row.values().sum();
        cells.push((total - listed).to_string());
        cells.push(total.to_string());
        t.push(cells);
    }
    t
}

fn share(part: u64, total: u64) -> String {
    pct(if total == 0 { 0.0 } else { 100.0 * part as f64 / total as f64 })
}

pub fn volume_by_form_table(stats: &VolumeStats, top_k: usize) -> Table {
    let mut t = Table::new("volume_by_form", "Tokens by form type", &["Form type", "Tokens", "%"]);
    for (form, n) in VolumeStats::top(&stats.by_form, top_k) {
        t.push(vec![form, n.to_string(), share(n, stats.total_tokens)]);
    }
    t
}

pub fn volume_by_firm_table(stats: &VolumeStats, top_k: usize) -> Table {
    let mut t = Table::new("volume_by_firm", "Tokens by firm", &["CIK", "Company", "Tokens", "%"]);
    for f in stats.top_firms(top_k) {
        t.push(vec![f.cik.to_string(), f.company_name, f.tokens.to_string(), share(f.tokens, stats.total_tokens)]);
    }
    t
}

pub fn volume_by_industry_table(stats: &VolumeStats, top_k: usize) -> Table {
    let mut t = Table::new("volume_by_industry", "Tokens by industry", &["Industry", "Tokens", "%"]);
    for (industry, n) in VolumeStats::top(&stats.by_industry, top_k) {
        t.push(vec![industry, n.to_string(), share(n, stats.total_tokens)]);
    }
    t
}

pub fn attachment_table(stats: &VolumeStats) -> Table {
    let mut t = Table::new("attachments", "Main documents and attachments", &["Part", "Tokens", "%"]);
    let main = stats.total_tokens - stats.attachment_tokens;
    t.push(vec!["Main document".into(), main.to_string(), share(main, stats.total_tokens)]);
    t.push(vec![
        "Attachments".into(),
        stats.attachment_tokens.to_string(),
        share(stats.attachment_tokens, stats.total_tokens),
    ]);
    t
}

/// Writes `<name>.csv` and `<name>.txt` for every table.
pub fn write_tables(dir: &Path, tables: &[Table]) -> Result<(), AuditError> {
    std::fs::create_dir_all(dir).map_err(|e| AuditError::io(dir, e))?;
    for t in tables {
        for (ext, body) in [("csv", t.to_csv()), ("txt", t.to_text())] {
            let path = dir.join(format!("{}.{ext}", t.name));
            std::fs::write(&path, body).map_err(|e| AuditError::io(&path, e))?;
        }
    }
    Ok(())
}
