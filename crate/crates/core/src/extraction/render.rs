//! Renders a parsed HTML document to text, following the whitespace the
//! markup asks for: block elements start new lines, paragraphs are
//! separated by blank lines, list items and CSS margins indent by two
//! spaces per level, and non-breaking spaces survive as ordinary spaces.

use serde::{Deserialize, Serialize};

use super::html::{HtmlDocument, NodeId, NodeKind};

/// Line emitted between pages; never produced by content (form feeds in
/// text are replaced during parsing).
pub const PAGE_BREAK: &str = "\u{c}";

const INDENT: &str = "  ";
/// Points of CSS indentation per indentation level.
const POINTS_PER_LEVEL: f64 = 18.0;

/// Which markup is treated as a page break. The conventions differ by
/// filing era: older HTML filings separate pages with `<hr>`, newer ones
/// use CSS `page-break-before/after`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PageBreakRules {
    pub horizontal_rule: bool,
    pub css_page_break: bool,
}

impl Default for PageBreakRules {
    fn default() -> Self {
        Self {
            horizontal_rule: true,
            css_page_break: true,
        }
    }
}

const SKIPPED: &[&str] = &[
    "head", "script", "style", "title", "noscript", "template", "ix:header", "xml",
];

/// Blocks separated from their neighbours by a blank line.
const PARAGRAPH: &[&str] = &[
    "p", "h1", "h2", "h3", "h4", "h5", "h6", "table", "blockquote", "pre", "dl", "address",
];

/// Blocks that only force a line break.
const LINE: &[&str] = &[
    "div", "center", "section", "article", "header", "footer", "main", "nav", "aside", "form",
    "fieldset", "figure", "tr", "dt", "dd", "caption", "body", "html", "tbody", "thead", "tfoot",
];

struct Writer {
    lines: Vec<String>,
    current: String,
    has_content: bool,
    indent: usize,
    first_line_extra: usize,
    pre_depth: usize,
    /// The current line holds only a list marker.
    marker_only: bool,
}

impl Writer {
    fn new() -> Self {
        Self {
            lines: Vec::new(),
            current: String::new(),
            has_content: false,
            indent: 0,
            first_line_extra: 0,
            pre_depth: 0,
            marker_only: false,
        }
    }

    fn newline(&mut self) {
        self.lines.push(std::mem::take(&mut self.current));
        self.has_content = false;
        self.marker_only = false;
    }

    /// `blank` requests an empty line before whatever comes next.
    fn ensure_break(&mut self, blank: bool) {
        if self.marker_only {
            return;
        }
        if self.has_content {
            self.newline();
        }
        if blank && self.lines.last().is_some_and(|l| !l.is_empty()) {
            self.lines.push(String::new());
        }
    }

    fn start_line(&mut self) {
        if !self.has_content {
            let levels = self.indent + std::mem::take(&mut self.first_line_extra);
            self.current = INDENT.repeat(levels);
            self.has_content = true;
        }
    }

    fn text(&mut self, text: &str) {
        if self.pre_depth > 0 {
            for (i, part) in text.split('\n').enumerate() {
                if i > 0 {
                    if !self.has_content {
                        self.start_line();
                    }
                    self.newline();
                }
                if !part.is_empty() {
                    self.start_line();
                    self.marker_only = false;
                    self.current.push_str(part.trim_end_matches('\r'));
                }
            }
            return;
        }
        for c in text.chars() {
            if matches!(c, ' ' | '\t' | '\n' | '\r') {
                if self.has_content && !self.current.ends_with(' ') {
                    self.current.push(' ');
                }
            } else {
                self.start_line();
                self.marker_only = false;
                self.current.push(c);
            }
        }
    }

    fn page_break(&mut self) {
        self.ensure_break(false);
        self.lines.push(PAGE_BREAK.to_string());
    }

    fn finish(mut self) -> Vec<String> {
        if self.has_content {
            self.newline();
        }
        self.lines
            .into_iter()
            .map(|l| {
                if l == PAGE_BREAK {
                    l
                } else {
                    l.replace('\u{a0}', " ").trim_end().to_string()
                }
            })
            .collect()
    }
}

#[derive(Default)]
struct Style {
    margin_levels: usize,
    text_indent_levels: usize,
    hidden: bool,
    break_before: bool,
    break_after: bool,
}

fn parse_style(style: &str) -> Style {
    let mut out = Style::default();
    for decl in style.split(';') {
        let Some((prop, value)) = decl.split_once(':') else {
            continue;
        };
        let prop = prop.trim().to_ascii_lowercase();
        let value = value.trim().to_ascii_lowercase();
        match prop.as_str() {
            "margin-left" | "padding-left" => out.margin_levels += levels(&value),
            "text-indent" => out.text_indent_levels += levels(&value),
            "display" if value.starts_with("none") => out.hidden = true,
            "page-break-before" | "break-before" if matches!(value.as_str(), "always" | "page") => {
                out.break_before = true
            }
            "page-break-after" | "break-after" if matches!(value.as_str(), "always" | "page") => {
                out.break_after = true
            }
            _ => {}
        }
    }
    out
}

/// Indentation levels for a CSS length; non-positive or relative-to-parent
/// lengths yield zero.
fn levels(value: &str) -> usize {
    let value = value.trim_end_matches("!important").trim();
    let split = value
        .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-' || c == '+'))
        .unwrap_or(value.len());
    let Ok(number) = value[..split].parse::<f64>() else {
        return 0;
    };
    let points = match value[split..].trim() {
        "pt" => number,
        "px" | "" => number * 0.75,
        "in" => number * 72.0,
        "em" | "rem" => number * 12.0,
        "cm" => number * 72.0 / 2.54,
        "mm" => number * 72.0 / 25.4,
        "pc" => number * 12.0,
        _ => 0.0,
    };
    if points <= 0.0 {
        0
    } else {
        ((points / POINTS_PER_LEVEL).round() as usize).max(1)
    }
}

/// Renders the attached tree under the root into lines. Page breaks appear
/// as [`PAGE_BREAK`] lines.
pub fn render(doc: &HtmlDocument, rules: PageBreakRules) -> Vec<String> {
    let mut writer = Writer::new();
    for &child in &doc.node(HtmlDocument::ROOT).children {
        render_node(doc, child, rules, &mut writer, &mut ListState::default());
    }
    writer.finish()
}

#[derive(Default)]
struct ListState {
    ordered: bool,
    counter: i64,
}

fn render_node(
    doc: &HtmlDocument,
    id: NodeId,
    rules: PageBreakRules,
    w: &mut Writer,
    list: &mut ListState,
) {
    let (name, attrs) = match &doc.node(id).kind {
        NodeKind::Text(t) => {
            w.text(t);
            return;
        }
        NodeKind::Root => return,
        NodeKind::Element { name, attrs } => (name.as_str(), attrs),
    };
    if SKIPPED.contains(&name) {
        return;
    }
    let style = attrs
        .iter()
        .find(|(k, _)| k == "style")
        .map(|(_, v)| parse_style(v))
        .unwrap_or_default();
    if style.hidden {
        return;
    }
    if rules.css_page_break && style.break_before {
        w.page_break();
    }

    match name {
        "br" => {
            if !w.has_content {
                w.start_line();
            }
            w.newline();
        }
        "hr" => {
            if rules.horizontal_rule {
                w.page_break();
            } else {
                w.ensure_break(false);
            }
        }
        "td" | "th" => {
            w.text(" ");
            render_children(doc, id, rules, w, list);
            w.text(" ");
        }
        "ul" | "ol" => {
            let nested = w.indent > 0 && list.counter > 0;
            w.ensure_break(!nested);
            let start = attrs
                .iter()
                .find(|(k, _)| k == "start")
                .and_then(|(_, v)| v.trim().parse().ok())
                .unwrap_or(1);
            let mut inner = ListState {
                ordered: name == "ol",
                counter: start - 1,
            };
            w.indent += 1 + style.margin_levels;
            for &child in &doc.node(id).children {
                render_node(doc, child, rules, w, &mut inner);
            }
            w.indent -= 1 + style.margin_levels;
            w.ensure_break(!nested);
        }
        "li" => {
            w.ensure_break(false);
            list.counter += 1;
            w.indent += style.margin_levels;
            w.start_line();
            if list.ordered {
                w.current.push_str(&format!("{}. ", list.counter));
            } else {
                w.current.push_str("\u{2022} ");
            }
            w.marker_only = true;
            let mut nested = ListState {
                ordered: list.ordered,
                counter: list.counter,
            };
            render_children(doc, id, rules, w, &mut nested);
            w.indent -= style.margin_levels;
            w.ensure_break(false);
        }
        _ => {
            let paragraph = PARAGRAPH.contains(&name);
            let block = paragraph || LINE.contains(&name);
            let extra = usize::from(name == "blockquote") + style.margin_levels;
            if block {
                w.ensure_break(paragraph);
                w.first_line_extra = style.text_indent_levels;
            }
            if name == "pre" {
                w.pre_depth += 1;
            }
            w.indent += extra;
            render_children(doc, id, rules, w, list);
            w.indent -= extra;
            if name == "pre" {
                w.pre_depth -= 1;
            }
            if block {
                w.ensure_break(paragraph);
                w.first_line_extra = 0;
            }
        }
    }

    if rules.css_page_break && style.break_after {
        w.page_break();
    }
}

fn render_children(
    doc: &HtmlDocument,
    id: NodeId,
    rules: PageBreakRules,
    w: &mut Writer,
    list: &mut ListState,
) {
    for &child in &doc.node(id).children {
        render_node(doc, child, rules, w, list);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn show(html: &str) -> String {
        render(&HtmlDocument::parse(html), PageBreakRules::default()).join("\n")
    }

    #[test]
    fn paragraphs_and_inline_whitespace() {
        assert_eq!(
            show("<p>Net   income\n rose <b>sharply</b>.</p><p>Second</p>"),
            "Net income rose sharply.\n\nSecond\n"
        );
    }

    #[test]
    fn divs_break_lines_without_blank_lines() {
        assert_eq!(show("<div>one</div><div>two</div>"), "one\ntwo");
    }

    #[test]
    fn nbsp_indentation_survives() {
        assert_eq!(show("<div>&nbsp;&nbsp;&nbsp;&nbsp;Indented</div>"), "    Indented");
        assert_eq!(show("<p>&nbsp;</p><p>x</p>"), "\n\nx\n");
    }

    #[test]
    fn css_margin_indents() {
        assert_eq!(
            show(r#"<div>Top</div><div style="margin-left:36pt">Deeper</div><div style="padding-left: 0.25in">One</div>"#),
            "Top\n    Deeper\n  One"
        );
    }

    #[test]
    fn text_indent_first_line_only() {
        assert_eq!(
            show(r#"<div style="text-indent:18pt">first<br>second</div>"#),
            "  first\nsecond"
        );
    }

    #[test]
    fn lists_are_structured() {
        assert_eq!(
            show("<ul><li>Cars</li><li>Trucks<ul><li>Pickup</li></ul></li></ul><ol start=3><li>c</li><li>d</li></ol>"),
            "  \u{2022} Cars\n  \u{2022} Trucks\n    \u{2022} Pickup\n\n  3. c\n  4. d\n"
        );
    }

    #[test]
    fn list_item_with_block_content_keeps_marker() {
        assert_eq!(show("<ul><li><p>Cars</p></li></ul>"), "  \u{2022} Cars\n");
    }

    #[test]
    fn table_rows_are_lines() {
        assert_eq!(
            show("<table><tr><td>&#8226;</td><td>Risk one</td></tr><tr><td>&#8226;</td><td>Risk two</td></tr></table>"),
            "\u{2022} Risk one\n\u{2022} Risk two\n"
        );
    }

    #[test]
    fn page_breaks() {
        let lines = render(
            &HtmlDocument::parse(r#"<p>a</p><hr><p>b</p><div style="page-break-before: always">c</div>"#),
            PageBreakRules::default(),
        );
        assert_eq!(lines.iter().filter(|l| *l == PAGE_BREAK).count(), 2);
        let lines = render(
            &HtmlDocument::parse("<p>a</p><hr><p>b</p>"),
            PageBreakRules { horizontal_rule: false, css_page_break: true },
        );
        assert!(!lines.iter().any(|l| l == PAGE_BREAK));
    }

    #[test]
    fn hidden_and_head_content_skipped() {
        assert_eq!(
            show(r#"<html><head><title>T</title><style>p{}</style></head><body><div style="display:none">secret</div><p>shown</p></body></html>"#),
            "shown\n"
        );
    }

    #[test]
    fn pre_is_verbatim() {
        assert_eq!(show("<pre>  a   b\n    c</pre>"), "  a   b\n    c\n");
    }

    #[test]
    fn css_lengths() {
        assert_eq!(levels("18pt"), 1);
        assert_eq!(levels("0.5in"), 2);
        assert_eq!(levels("24px"), 1);
        assert_eq!(levels("0"), 0);
        assert_eq!(levels("-10pt"), 0);
        assert_eq!(levels("2pt"), 1);
        assert_eq!(levels("auto"), 0);
    }
}
