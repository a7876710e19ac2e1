//! Narrative text extraction from filing documents.
//!
//! Text filings have their `<TABLE>` regions dropped, their `<PAGE>`
//! markers resolved and hard-wrapped paragraphs unwrapped. HTML filings
//! are parsed leniently, numeric tables (low characters-per-tag) removed,
//! and the remainder rendered with indentation and list structure intact.
//! Both paths strip running page headers, join sentences split across pages
//! and collapse newline runs to at most two.

pub mod html;
pub mod pages;
pub mod render;
pub mod tables;
mod text;

use serde::{Deserialize, Serialize};

use crate::edgar_client::ContentKind;

pub use html::HtmlDocument;
pub use pages::{paginate, strip_page_headers, unbreak_pages, PageSegment};
pub use render::{render, PageBreakRules, PAGE_BREAK};
pub use tables::{compute_cpt, remove_numeric_tables, TableCounts, DEFAULT_CPT_MIN};
pub use text::unwrap_paragraphs;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionStats {
    pub tables_removed: usize,
    pub tables_kept: usize,
    pub pages_unbroken: usize,
    pub header_lines_removed: usize,
    pub input_bytes: usize,
    pub output_chars: usize,
    /// The HTML needed error recovery to parse.
    pub malformed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedDocument {
    pub text: String,
    pub stats: ExtractionStats,
    pub source_kind: ContentKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionConfig {
    pub cpt_min: f64,
    pub page_breaks: PageBreakRules,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            cpt_min: DEFAULT_CPT_MIN,
            page_breaks: PageBreakRules::default(),
        }
    }
}

/// Replaces every run of three or more newlines with exactly two.
pub fn collapse_newlines(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut run = 0;
    for c in text.chars() {
        if c == '\n' {
            run += 1;
            if run <= 2 {
                out.push(c);
            }
        } else {
            run = 0;
            out.push(c);
        }
    }
    out
}

/// Trims line ends and surrounding blank lines; non-empty output ends in
/// one newline.
fn finalize(text: &str) -> String {
    let lines: Vec<&str> = text.split('\n').map(str::trim_end).collect();
    let Some(first) = lines.iter().position(|l| !l.is_empty()) else {
        return String::new();
    };
    let last = lines.iter().rposition(|l| !l.is_empty()).unwrap_or(first);
    let mut out = collapse_newlines(&lines[first..=last].join("\n"));
    out.push('\n');
    out
}

pub fn extract_text_filing(raw: &str) -> ExtractedDocument {
    let mut stats = ExtractionStats {
        input_bytes: raw.len(),
        ..Default::default()
    };
    let text = text::extract(raw, &mut stats);
    stats.output_chars = text.chars().count();
    ExtractedDocument {
        text,
        stats,
        source_kind: ContentKind::FixedWidthText,
    }
}

pub fn extract_html_filing(raw: &str) -> ExtractedDocument {
    extract_html_filing_with(raw, &ExtractionConfig::default())
}

pub fn extract_html_filing_with(raw: &str, config: &ExtractionConfig) -> ExtractedDocument {
    let mut stats = ExtractionStats {
        input_bytes: raw.len(),
        ..Default::default()
    };
    let mut doc = HtmlDocument::parse(raw);
    stats.malformed = doc.malformed();
    let counts = remove_numeric_tables(&mut doc, config.cpt_min);
    stats.tables_removed = counts.removed;
    stats.tables_kept = counts.kept;

    let pages = paginate(render(&doc, config.page_breaks), |l| l == PAGE_BREAK);
    let (pages, header_lines) = strip_page_headers(&pages);
    stats.header_lines_removed = header_lines;
    let (joined, joins) = unbreak_pages(&pages);
    stats.pages_unbroken = joins;

    let text = finalize(&joined);
    stats.output_chars = text.chars().count();
    ExtractedDocument {
        text,
        stats,
        source_kind: ContentKind::Html,
    }
}

/// Dispatches on content kind; binary documents yield `None`.
pub fn extract_document(raw: &str, kind: ContentKind, config: &ExtractionConfig) -> Option<ExtractedDocument> {
    match kind {
        ContentKind::FixedWidthText => Some(extract_text_filing(raw)),
        ContentKind::Html => Some(extract_html_filing_with(raw, config)),
        ContentKind::BinaryOrOther => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn collapses_long_newline_runs() {
        let doc = extract_text_filing("line one\n\n\n\n\nline two");
        assert_eq!(doc.text, "line one\n\nline two\n");
    }

    #[test]
    fn numeric_text_table_removed() {
        let raw = "Results follow.\n\n<TABLE>\n<CAPTION>\n        2019   2018\n<S>     <C>    <C>\nSales   100    90\n</TABLE>\n\nEnd of section.";
        let doc = extract_text_filing(raw);
        assert_eq!(doc.text, "Results follow.\n\nEnd of section.\n");
        assert_eq!(doc.stats.tables_removed, 1);
    }

    #[test]
    fn eighty_column_paragraph_unwrapped() {
        let raw = "The Company designs, manufactures, markets and services a full line of Ford\n\
                   cars, trucks, SUVs, electrified vehicles and Lincoln luxury vehicles, provides\n\
                   financial services through Ford Motor Credit Company LLC, and is pursuing leadership.";
        let doc = extract_text_filing(raw);
        assert_eq!(doc.text.lines().count(), 1);
        let before: Vec<_> = raw.split_whitespace().collect();
        let after: Vec<_> = doc.text.split_whitespace().collect();
        assert_eq!(before, after);
    }

    #[test]
    fn text_pages_joined_and_markers_removed() {
        let raw = "In 2020 the Company expects to\n<PAGE>   7\ncontinue operations.";
        let doc = extract_text_filing(raw);
        assert_eq!(doc.text, "In 2020 the Company expects to continue operations.\n");
        assert_eq!(doc.stats.pages_unbroken, 1);
        assert!(!doc.text.contains("<PAGE>"));
    }

    #[test]
    fn empty_html_is_all_zero() {
        let doc = extract_html_filing("");
        assert_eq!(doc.text, "");
        assert_eq!(doc.stats, ExtractionStats::default());
    }

    #[test]
    fn narrative_table_kept() {
        let raw = "<html><body><table><tr><td>&#8226;</td><td>We rely on third-party suppliers for many components used in our vehicles.</td></tr></table></body></html>";
        let doc = extract_html_filing(raw);
        assert_eq!(doc.stats.tables_kept, 1);
        assert!(doc.text.contains("third-party suppliers"));
    }

    #[test]
    fn ford_style_continued_header() {
        let mut html = String::from("<html><body><p>ITEM 1. BUSINESS</p><p>Ford operates in these segments:</p>");
        html.push_str("<ul><li>Automotive</li><li>Mobility</li></ul>");
        for page in 2..=5 {
            html.push_str("<hr style=\"page-break-after:always\">");
            html.push_str("<p>Item 1. Business (Continued)</p>");
            html.push_str(&format!("<p style=\"margin-left:18pt\">Page {page} narrative.</p>"));
        }
        html.push_str("</body></html>");
        let doc = extract_html_filing(&html);
        assert!(!doc.text.contains("Continued"), "{}", doc.text);
        assert!(doc.text.contains("\n  \u{2022} Automotive\n  \u{2022} Mobility\n"));
        assert!(doc.text.contains("  Page 3 narrative."));
        assert_eq!(doc.stats.header_lines_removed, 4);
    }

    #[test]
    fn malformed_html_is_flagged_not_fatal() {
        let doc = extract_html_filing("<div><p>Open <b>bold</div></i>");
        assert!(doc.stats.malformed);
        assert_eq!(doc.text, "Open bold\n");
    }

    fn prose() -> impl Strategy<Value = String> {
        let word = "[a-zA-Z]{1,10}[.,]?";
        let line = proptest::collection::vec(word, 1..12).prop_map(|w| w.join(" "));
        proptest::collection::vec(proptest::option::of(line), 1..30).prop_map(|lines| {
            lines
                .into_iter()
                .map(|l| l.unwrap_or_default())
                .collect::<Vec<_>>()
                .join("\n")
        })
    }

    fn words(s: &str) -> Vec<String> {
        let mut w: Vec<String> = s.split_whitespace().map(str::to_string).collect();
        w.sort();
        w
    }

    proptest! {
        #[test]
        fn text_extraction_preserves_words(input in prose()) {
            let doc = extract_text_filing(&input);
            prop_assert_eq!(words(&doc.text), words(&input));
            prop_assert!(!doc.text.contains("\n\n\n"));
        }

        #[test]
        fn text_extraction_is_idempotent(input in prose()) {
            let once = extract_text_filing(&input).text;
            let twice = extract_text_filing(&once).text;
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn html_output_never_has_long_newline_runs(input in "(<p>|</p>|<br>|<hr>|<div>|</div>|\n| |[a-z]{1,5}){0,60}") {
            let doc = extract_html_filing(&input);
            prop_assert!(!doc.text.contains("\n\n\n"));
            prop_assert!(!doc.text.contains(PAGE_BREAK), "page break leaked");
        }
    }
}
