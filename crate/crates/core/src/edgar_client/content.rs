use std::sync::OnceLock;

use regex::bytes::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContentKind {
    FixedWidthText,
    Html,
    BinaryOrOther,
}

impl ContentKind {
    pub fn is_extractable(self) -> bool {
        !matches!(self, ContentKind::BinaryOrOther)
    }
}

/// Bytes inspected when sniffing markup.
const SNIFF_LEN: usize = 64 * 1024;
/// HTML-only tags needed before a body without an `<html>` root counts as markup.
const MIN_HTML_TAGS: usize = 3;

fn uuencode_begin() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?m)^begin [0-7]{3,4} \S").unwrap())
}

fn html_root() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)<(html|!doctype\s+html)[\s>]").unwrap())
}

/// Tags that never appear in the SGML of fixed-width filings.
fn html_only_tag() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)</?(p|div|br|font|td|tr|span|center|b|i|u|body|li|ul|ol|h[1-6])[\s>/]")
            .unwrap()
    })
}

fn non_text_wrapper() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^\s*<(pdf|xbrl|xml|json|zip)>").unwrap())
}

/// Decides how (and whether) a document body should be extracted.
///
/// Uuencoded payloads are detected by their `begin` line and never decoded.
pub fn classify_content(raw: &[u8]) -> ContentKind {
    let head = &raw[..raw.len().min(SNIFF_LEN)];
    if raw.is_empty() {
        return ContentKind::FixedWidthText;
    }
    if uuencode_begin().is_match(head) || non_text_wrapper().is_match(head) {
        return ContentKind::BinaryOrOther;
    }
    if looks_binary(head) {
        return ContentKind::BinaryOrOther;
    }
    if html_root().is_match(head) || html_only_tag().find_iter(head).take(MIN_HTML_TAGS).count() >= MIN_HTML_TAGS {
        return ContentKind::Html;
    }
    ContentKind::FixedWidthText
}

fn looks_binary(head: &[u8]) -> bool {
    if head.contains(&0) {
        return true;
    }
    let control = head
        .iter()
        .filter(|b| **b < 0x20 && !matches!(**b, b'\n' | b'\r' | b'\t' | 0x0c))
        .count();
    control * 20 > head.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn html_signature() {
        assert_eq!(classify_content(b"<html><body>Hi</body></html>"), ContentKind::Html);
        assert_eq!(
            classify_content(b"\n<!DOCTYPE html PUBLIC \"-//W3C\">\n<HTML>"),
            ContentKind::Html
        );
    }

    #[test]
    fn rootless_markup_is_html() {
        let body = b"<DIV><FONT size=2>Annual report</FONT></DIV><P>More</P>";
        assert_eq!(classify_content(body), ContentKind::Html);
    }

    #[test]
    fn wrapped_text_with_page_markers() {
        let mut body = String::new();
        for i in 0..20 {
            body.push_str(&format!(
                "{:<79}\n",
                format!("The Company designs and manufactures products, line {i}, and other.")
            ));
            if i == 10 {
                body.push_str("<PAGE>\n");
            }
        }
        body.push_str("<TABLE>\n<CAPTION>\n<S>   <C>\n</TABLE>\n");
        assert_eq!(classify_content(body.as_bytes()), ContentKind::FixedWidthText);
    }

    #[test]
    fn uuencoded_gif_is_binary() {
        let body = b"begin 644 logo.gif\nM1TE&.#EA>0!D`/<``/___P``,P``9@``F0``S```_P`S```S,P`S9@`SF0`S\n`\nend\n";
        assert_eq!(classify_content(body), ContentKind::BinaryOrOther);
    }

    #[test]
    fn wrapped_pdf_and_raw_binary() {
        assert_eq!(classify_content(b"<PDF>\nbegin 644 x.pdf\n"), ContentKind::BinaryOrOther);
        assert_eq!(classify_content(b"GIF89a\x00\x01\x02"), ContentKind::BinaryOrOther);
    }
}
