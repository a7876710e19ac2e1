//! Fixed-width text filings: `<TABLE>` regions, `<PAGE>` markers and
//! hard-wrapped paragraphs.

use std::sync::OnceLock;

use regex::Regex;

use super::pages::{paginate, strip_page_headers, unbreak_pages};
use super::{collapse_newlines, finalize, ExtractionStats};

fn table_region() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?is)<TABLE\b[^>]*>.*?(?:</TABLE\s*>|\z)").unwrap())
}

fn page_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^\s*</?PAGE>\s*\d*\s*$").unwrap())
}

fn page_tag() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)</?PAGE>").unwrap())
}

fn list_start() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^\s*(?:[\u{2022}\u{b7}*-]\s|\(?(?:[0-9]{1,3}|[a-zA-Z]|[ivxIVX]{1,4})[.)]\s)").unwrap()
    })
}

/// Removes `<TABLE>` regions; an unclosed table runs to the end of the text.
pub(crate) fn remove_table_regions(text: &str) -> (String, usize) {
    let mut removed = 0;
    let out = table_region().replace_all(text, |_: &regex::Captures| {
        removed += 1;
        ""
    });
    (out.into_owned(), removed)
}

/// Joins hard-wrapped lines of a paragraph into one logical line.
///
/// Consecutive non-blank lines are joined with one space. The first line
/// keeps its indentation. A line that opens a list item starts a new line.
pub fn unwrap_paragraphs(text: &str) -> String {
    let mut out: Vec<String> = Vec::new();
    let mut open = false;
    for line in text.split('\n') {
        let line = line.trim_end();
        if line.trim().is_empty() {
            out.push(String::new());
            open = false;
        } else if open && !list_start().is_match(line) {
            let last = out.last_mut().expect("open paragraph has a line");
            last.push(' ');
            last.push_str(line.trim_start());
        } else {
            out.push(line.to_string());
            open = true;
        }
    }
    out.join("\n")
}

pub(crate) fn extract(raw: &str, stats: &mut ExtractionStats) -> String {
    let text = raw.replace("\r\n", "\n").replace('\r', "\n");
    let (text, removed) = remove_table_regions(&text);
    stats.tables_removed = removed;

    let lines = text
        .split('\n')
        .map(|l| page_tag().replace_all(l, "").into_owned());
    let raw_lines: Vec<String> = text.split('\n').map(str::to_string).collect();
    let pages = paginate(
        raw_lines.iter().zip(lines).map(|(raw, cleaned)| {
            if page_line().is_match(raw) {
                "\u{c}".to_string()
            } else {
                cleaned
            }
        }),
        |l| l == "\u{c}",
    );
    let (pages, header_lines) = strip_page_headers(&pages);
    stats.header_lines_removed = header_lines;
    let (joined, joins) = unbreak_pages(&pages);
    stats.pages_unbroken = joins;

    finalize(&collapse_newlines(&unwrap_paragraphs(&joined)))
}
