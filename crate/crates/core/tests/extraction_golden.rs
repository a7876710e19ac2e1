//! Input/expected pairs under `tests/fixtures/extraction`. Each
//! `NAME.input.html` or `NAME.input.txt` must extract to exactly
//! `NAME.expected.txt`.

use std::fs;
use std::path::{Path, PathBuf};

use filing_corpus::edgar_client::ContentKind;
use filing_corpus::extraction::{extract_document, ExtractedDocument, ExtractionConfig};

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/extraction")
}

fn cases() -> Vec<(String, PathBuf)> {
    let mut out: Vec<(String, PathBuf)> = fs::read_dir(fixture_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter_map(|p| {
            let name = p.file_name()?.to_str()?.to_string();
            let stem = name.strip_suffix(".input.html").or_else(|| name.strip_suffix(".input.txt"))?;
            Some((stem.to_string(), p))
        })
        .collect();
    out.sort();
    out
}

fn extract(path: &Path) -> ExtractedDocument {
    let raw = fs::read_to_string(path).unwrap();
    let kind = if path.extension().is_some_and(|e| e == "html") {
        ContentKind::Html
    } else {
        ContentKind::FixedWidthText
    };
    extract_document(&raw, kind, &ExtractionConfig::default()).unwrap()
}

fn run(name: &str) -> ExtractedDocument {
    let (_, path) = cases().into_iter().find(|(n, _)| n == name).unwrap();
    extract(&path)
}

#[test]
fn every_case_matches_expected() {
    let cases = cases();
    assert!(cases.len() >= 15, "only {} cases", cases.len());
    let mut failures = Vec::new();
    for (name, input) in &cases {
        let expected = fs::read_to_string(fixture_dir().join(format!("{name}.expected.txt"))).unwrap();
        let got = extract(input).text;
        if got != expected {
            failures.push(format!("--- {name}\nexpected:\n{expected:?}\ngot:\n{got:?}"));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn threshold_table_is_kept_and_one_letter_less_is_removed() {
    let at = run("04-cpt-at-threshold").stats;
    assert_eq!((at.tables_kept, at.tables_removed), (1, 0));
    let below = run("05-cpt-below-threshold").stats;
    assert_eq!((below.tables_kept, below.tables_removed), (0, 1));
}

#[test]
fn nested_numeric_table_goes_and_layout_table_stays() {
    let s = run("16-nested-tables").stats;
    assert_eq!((s.tables_kept, s.tables_removed), (1, 1));
}

#[test]
fn running_header_lines_are_counted() {
    let s = run("06-running-header").stats;
    // Three copies of the company line, one "(Continued)" line, three page numbers.
    assert_eq!(s.header_lines_removed, 7);
    assert_eq!(s.pages_unbroken, 0);
}

#[test]
fn page_join_is_counted() {
    assert_eq!(run("07-sentence-across-pages").stats.pages_unbroken, 1);
    assert_eq!(run("08-page-end-at-sentence").stats.pages_unbroken, 0);
    assert_eq!(run("13-text-filing").stats.pages_unbroken, 1);
}

#[test]
fn output_is_normalized() {
    for (name, input) in cases() {
        let text = extract(&input).text;
        assert!(!text.contains("\n\n\n"), "{name}: newline run");
        assert!(text.is_empty() || text.ends_with('\n') && !text.ends_with("\n\n"), "{name}: ending");
        assert!(text.lines().all(|l| l == l.trim_end()), "{name}: trailing space");
    }
}
