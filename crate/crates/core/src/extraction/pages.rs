//! Page-level cleanup shared by both extractors: removing running
//! headers/footers and re-joining sentences split by a page break.

use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;

/// Non-blank lines at each end of a page examined as running headers/footers.
pub const HEADER_SCAN_LINES: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageSegment {
    pub page_index: usize,
    pub lines: Vec<String>,
    pub header_candidates: Vec<String>,
}

impl PageSegment {
    pub fn new(page_index: usize, lines: Vec<String>) -> Self {
        let header_candidates = lines
            .iter()
            .filter(|l| !l.trim().is_empty())
            .take(HEADER_SCAN_LINES)
            .cloned()
            .collect();
        Self {
            page_index,
            lines,
            header_candidates,
        }
    }

    fn footer_candidates(&self) -> Vec<String> {
        self.lines
            .iter()
            .rev()
            .filter(|l| !l.trim().is_empty())
            .take(HEADER_SCAN_LINES)
            .cloned()
            .collect()
    }
}

/// Splits `lines` into pages wherever `is_break` matches; break lines are dropped.
pub fn paginate<I, F>(lines: I, is_break: F) -> Vec<PageSegment>
where
    I: IntoIterator<Item = String>,
    F: Fn(&str) -> bool,
{
    let mut pages = Vec::new();
    let mut current = Vec::new();
    for line in lines {
        if is_break(&line) {
            pages.push(PageSegment::new(pages.len(), std::mem::take(&mut current)));
        } else {
            current.push(line);
        }
    }
    pages.push(PageSegment::new(pages.len(), current));
    pages
}

fn normalize(line: &str) -> String {
    line.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn continued_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)[(\[]\s*continued\s*[)\]]\s*$").unwrap())
}

fn page_number_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)^(page\s+)?[-\u{2013}\u{2014}]?\s*([0-9]{1,4}|[ivxlc]{1,7}|[a-z]-[0-9]{1,3})\s*[-\u{2013}\u{2014}]?$")
            .unwrap()
    })
}

/// Removes running page apparatus.
///
/// A leading line is a header when its whitespace-normalized text is also
/// among the leading lines of the previous or next page, or when it ends in
/// "(Continued)". Trailing lines are treated symmetrically as footers, and
/// a bare page number closing a page is a footer when the document has more
/// than one page. Removal stops at the first line that is not apparatus.
/// Returns the cleaned pages and the number of lines removed.
pub fn strip_page_headers(segments: &[PageSegment]) -> (Vec<PageSegment>, usize) {
    let heads: Vec<HashSet<String>> = segments
        .iter()
        .map(|s| s.header_candidates.iter().map(|l| normalize(l)).collect())
        .collect();
    let feet: Vec<HashSet<String>> = segments
        .iter()
        .map(|s| s.footer_candidates().iter().map(|l| normalize(l)).collect())
        .collect();
    let multi_page = segments.len() > 1;
    let adjacent = |sets: &[HashSet<String>], i: usize, line: &str| {
        (i > 0 && sets[i - 1].contains(line)) || sets.get(i + 1).is_some_and(|s| s.contains(line))
    };

    let mut removed = 0;
    let mut out = Vec::with_capacity(segments.len());
    for (i, segment) in segments.iter().enumerate() {
        let mut keep = vec![true; segment.lines.len()];

        let mut seen = 0;
        for (j, line) in segment.lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            if seen == HEADER_SCAN_LINES {
                break;
            }
            seen += 1;
            let norm = normalize(line);
            if continued_pattern().is_match(&norm) || adjacent(&heads, i, &norm) {
                keep[j] = false;
            } else {
                break;
            }
        }

        let mut seen = 0;
        for (j, line) in segment.lines.iter().enumerate().rev() {
            if line.trim().is_empty() || !keep[j] {
                continue;
            }
            if seen == HEADER_SCAN_LINES {
                break;
            }
            seen += 1;
            let norm = normalize(line);
            let page_number = multi_page && page_number_pattern().is_match(&norm);
            if page_number || adjacent(&feet, i, &norm) {
                keep[j] = false;
            } else {
                break;
            }
        }

        removed += keep.iter().filter(|k| !**k).count();
        let lines = segment
            .lines
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(l, _)| l.clone())
            .collect();
        out.push(PageSegment::new(segment.page_index, lines));
    }
    (out, removed)
}

const TERMINAL: &[char] = &['.', '!', '?', ':', ';'];
const CLOSERS: &[char] = &['"', '\'', ')', ']', '\u{201d}', '\u{2019}'];
const CONJUNCTIONS: &[&str] = &["and", "or", "but", "nor", "yet", "so", "&"];

fn ends_sentence(line: &str) -> bool {
    line.trim_end()
        .trim_end_matches(CLOSERS)
        .ends_with(TERMINAL)
}

fn continues_sentence(line: &str) -> bool {
    let line = line.trim_start();
    let Some(first) = line.chars().next() else {
        return false;
    };
    if first.is_lowercase() || first.is_ascii_digit() {
        return true;
    }
    let word = line.split_whitespace().next().unwrap_or_default();
    CONJUNCTIONS.iter().any(|c| word.eq_ignore_ascii_case(c))
}

/// Concatenates pages, joining a sentence that runs across a break.
///
/// Pages are joined with a single space when the last non-blank line of
/// one page lacks terminal punctuation and the first non-blank line of the
/// next starts with a lowercase letter, a digit or a conjunction. Other
/// page boundaries become paragraph breaks. Returns the text and the
/// number of joins.
pub fn unbreak_pages(segments: &[PageSegment]) -> (String, usize) {
    let mut lines: Vec<String> = Vec::new();
    let mut joins = 0;
    for (n, segment) in segments.iter().enumerate() {
        let mut page = segment.lines.iter().map(String::as_str);
        if n > 0 {
            let last_content = lines.iter().rposition(|l| !l.trim().is_empty());
            let first_content = segment.lines.iter().position(|l| !l.trim().is_empty());
            match (last_content, first_content) {
                (Some(a), Some(b))
                    if !ends_sentence(&lines[a]) && continues_sentence(&segment.lines[b]) =>
                {
                    lines.truncate(a + 1);
                    let joined = format!(
                        "{} {}",
                        lines[a].trim_end(),
                        segment.lines[b].trim_start()
                    );
                    lines[a] = joined;
                    joins += 1;
                    page = segment.lines[b + 1..].iter().map(String::as_str);
                }
                _ => {
                    lines.push(String::new());
                }
            }
        }
        lines.extend(page.map(str::to_string));
    }
    (lines.join("\n"), joins)
}
