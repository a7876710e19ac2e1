//! Lenient HTML tree builder.
//!
//! Filings span two decades of hand-written and generated markup, so the
//! builder never fails: unknown constructs become text, unmatched end tags
//! are ignored and missing end tags are implied. Unlike a browser it never
//! inserts elements that are absent from the source (no implied `<tbody>`),
//! which keeps tag counts faithful to the document.

use std::ops::Range;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    /// Synthetic root; not an element and not counted as a tag.
    Root,
    Element {
        name: String,
        attrs: Vec<(String, String)>,
    },
    Text(String),
}

#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
}

#[derive(Debug, Clone)]
pub struct HtmlDocument {
    nodes: Vec<Node>,
    malformed: bool,
}

const VOID: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param",
    "source", "track", "wbr",
];

const RAW_TEXT: &[&str] = &["script", "style", "xmp", "textarea"];

/// Elements whose end tag may be omitted without the markup being malformed.
const OPTIONAL_END: &[&str] = &[
    "p", "li", "dt", "dd", "tr", "td", "th", "tbody", "thead", "tfoot", "option", "colgroup",
    "html", "body", "head", "caption",
];

/// Starting one of these closes an open `<p>`.
const CLOSES_P: &[&str] = &[
    "address", "article", "aside", "blockquote", "center", "div", "dl", "fieldset", "footer",
    "form", "h1", "h2", "h3", "h4", "h5", "h6", "header", "hr", "ol", "p", "pre", "section",
    "table", "ul",
];

impl HtmlDocument {
    pub const ROOT: NodeId = 0;

    pub fn parse(input: &str) -> Self {
        let mut builder = Builder::new();
        Tokenizer::new(input).run(&mut builder);
        builder.finish()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn malformed(&self) -> bool {
        self.malformed
    }

    pub fn element_name(&self, id: NodeId) -> Option<&str> {
        match &self.nodes[id].kind {
            NodeKind::Element { name, .. } => Some(name),
            _ => None,
        }
    }

    pub fn attr(&self, id: NodeId, key: &str) -> Option<&str> {
        match &self.nodes[id].kind {
            NodeKind::Element { attrs, .. } => attrs
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str()),
            _ => None,
        }
    }

    /// Detaches `id` (and its subtree) from its parent.
    pub fn detach(&mut self, id: NodeId) {
        if let Some(parent) = self.nodes[id].parent.take() {
            self.nodes[parent].children.retain(|c| *c != id);
        }
    }

    /// Pre-order traversal of the attached subtree rooted at `id`.
    pub fn descendants(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().rev().copied());
        }
        out
    }

    /// Concatenated text of the subtree.
    pub fn text_content(&self, id: NodeId) -> String {
        self.descendants(id)
            .into_iter()
            .filter_map(|n| match &self.nodes[n].kind {
                NodeKind::Text(t) => Some(t.as_str()),
                _ => None,
            })
            .collect()
    }
}

struct Builder {
    nodes: Vec<Node>,
    stack: Vec<NodeId>,
    malformed: bool,
}

impl Builder {
    fn new() -> Self {
        Self {
            nodes: vec![Node {
                kind: NodeKind::Root,
                parent: None,
                children: Vec::new(),
            }],
            stack: vec![HtmlDocument::ROOT],
            malformed: false,
        }
    }

    fn current(&self) -> NodeId {
        *self.stack.last().expect("root never popped")
    }

    fn name(&self, id: NodeId) -> &str {
        match &self.nodes[id].kind {
            NodeKind::Element { name, .. } => name,
            _ => "",
        }
    }

    fn append(&mut self, kind: NodeKind) -> NodeId {
        let parent = self.current();
        let id = self.nodes.len();
        self.nodes.push(Node {
            kind,
            parent: Some(parent),
            children: Vec::new(),
        });
        self.nodes[parent].children.push(id);
        id
    }

    fn text(&mut self, text: String) {
        if text.is_empty() {
            return;
        }
        let current = self.current();
        if let Some(&last) = self.nodes[current].children.last() {
            if let NodeKind::Text(existing) = &mut self.nodes[last].kind {
                existing.push_str(&text);
                return;
            }
        }
        self.append(NodeKind::Text(text));
    }

    /// Pops up to and including the nearest open `target` found before any
    /// of `boundary`. Returns whether it was found.
    fn close_nearest(&mut self, targets: &[&str], boundary: &[&str]) -> bool {
        for depth in (1..self.stack.len()).rev() {
            let name = self.name(self.stack[depth]);
            if targets.contains(&name) {
                self.pop_to(depth);
                return true;
            }
            if boundary.contains(&name) {
                return false;
            }
        }
        false
    }

    fn pop_to(&mut self, depth: usize) {
        for &id in &self.stack[depth + 1..] {
            if !OPTIONAL_END.contains(&self.name(id)) {
                self.malformed = true;
            }
        }
        self.stack.truncate(depth);
    }

    fn start(&mut self, name: String, attrs: Vec<(String, String)>, self_closing: bool) {
        let n = name.as_str();
        if CLOSES_P.contains(&n) {
            self.close_nearest(
                &["p"],
                &["table", "td", "th", "li", "div", "blockquote", "body", "html", "center"],
            );
        }
        match n {
            "li" => {
                self.close_nearest(&["li"], &["ul", "ol", "table", "td", "th"]);
            }
            "dt" | "dd" => {
                self.close_nearest(&["dt", "dd"], &["dl", "table", "td", "th"]);
            }
            "tr" => {
                self.close_nearest(&["tr"], &["table", "tbody", "thead", "tfoot"]);
            }
            "td" | "th" => {
                self.close_nearest(&["td", "th"], &["tr", "table"]);
            }
            "tbody" | "thead" | "tfoot" => {
                self.close_nearest(&["tbody", "thead", "tfoot"], &["table"]);
            }
            _ => {}
        }
        let void = VOID.contains(&n);
        let id = self.append(NodeKind::Element { name, attrs });
        if !void && !self_closing {
            self.stack.push(id);
        }
    }

    fn end(&mut self, name: &str) {
        if VOID.contains(&name) {
            return;
        }
        let boundary: &[&str] = match name {
            "table" => &[],
            "td" | "th" | "tr" | "tbody" | "thead" | "tfoot" | "caption" => &["table"],
            _ => &["table", "td", "th"],
        };
        for depth in (1..self.stack.len()).rev() {
            let open = self.name(self.stack[depth]);
            if open == name {
                self.pop_to(depth);
                return;
            }
            if boundary.contains(&open) {
                break;
            }
        }
        // Stray `</p>` is common and harmless; anything else is noted.
        if name != "p" {
            self.malformed = true;
        }
    }

    fn finish(mut self) -> HtmlDocument {
        self.pop_to(0);
        HtmlDocument {
            nodes: self.nodes,
            malformed: self.malformed,
        }
    }
}

struct Tokenizer<'a> {
    src: &'a str,
    pos: usize,
    text_start: usize,
}

impl<'a> Tokenizer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            pos: 0,
            text_start: 0,
        }
    }

    fn bytes(&self) -> &'a [u8] {
        self.src.as_bytes()
    }

    fn flush_text(&mut self, builder: &mut Builder, end: usize) {
        if end > self.text_start {
            builder.text(decode(&self.src[self.text_start..end]));
        }
    }

    fn run(mut self, builder: &mut Builder) {
        let bytes = self.bytes();
        while let Some(offset) = bytes[self.pos..].iter().position(|b| *b == b'<') {
            let lt = self.pos + offset;
            let after = &bytes[lt + 1..];
            let consumed = if after.starts_with(b"!--") {
                let body = lt + 4;
                let end = find(&bytes[body..], b"-->")
                    .map(|i| body + i + 3)
                    .unwrap_or(bytes.len());
                Some((end, None))
            } else if after.first().is_some_and(|b| *b == b'!' || *b == b'?') {
                let end = bytes[lt..]
                    .iter()
                    .position(|b| *b == b'>')
                    .map(|i| lt + i + 1)
                    .unwrap_or(bytes.len());
                Some((end, None))
            } else if after.first() == Some(&b'/')
                && after.get(1).is_some_and(|b| b.is_ascii_alphabetic())
            {
                self.parse_tag(lt + 2).map(|(end, tag)| (end, Some((true, tag))))
            } else if after.first().is_some_and(|b| b.is_ascii_alphabetic()) {
                self.parse_tag(lt + 1).map(|(end, tag)| (end, Some((false, tag))))
            } else {
                None
            };

            match consumed {
                None => {
                    self.pos = lt + 1;
                }
                Some((end, tag)) => {
                    self.flush_text(builder, lt);
                    self.pos = end;
                    self.text_start = end;
                    if let Some((is_end, tag)) = tag {
                        if is_end {
                            builder.end(&tag.name);
                        } else {
                            let raw = RAW_TEXT.contains(&tag.name.as_str()) && !tag.self_closing;
                            let name = tag.name.clone();
                            builder.start(tag.name, tag.attrs, tag.self_closing);
                            if raw {
                                self.skip_raw_text(builder, &name);
                            }
                        }
                    }
                }
            }
        }
        self.flush_text(builder, bytes.len());
    }

    /// Raw-text elements (`<script>`, `<style>`) keep their content
    /// verbatim up to the matching end tag.
    fn skip_raw_text(&mut self, builder: &mut Builder, name: &str) {
        let closing = format!("</{name}");
        let rest = &self.src[self.pos..];
        let lower = rest.to_ascii_lowercase();
        let end = lower.find(&closing).unwrap_or(rest.len());
        builder.text(rest[..end].to_string());
        self.pos += end;
        self.text_start = self.pos;
        if end < rest.len() {
            let after = self.pos + closing.len();
            let close = self.bytes()[after..]
                .iter()
                .position(|b| *b == b'>')
                .map(|i| after + i + 1)
                .unwrap_or(self.bytes().len());
            builder.end(name);
            self.pos = close;
            self.text_start = close;
        }
    }

    /// Parses a tag starting at its name; returns the offset after `>`.
    fn parse_tag(&self, start: usize) -> Option<(usize, Tag)> {
        let bytes = self.bytes();
        let name_end = start
            + bytes[start..]
                .iter()
                .position(|b| b.is_ascii_whitespace() || *b == b'>' || *b == b'/')
                .unwrap_or(bytes.len() - start);
        let name = self.src[start..name_end].to_ascii_lowercase();
        let mut attrs = Vec::new();
        let mut i = name_end;
        let mut self_closing = false;
        loop {
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            match bytes.get(i) {
                None => return None,
                Some(b'>') => return Some((i + 1, Tag { name, attrs, self_closing })),
                Some(b'/') => {
                    self_closing = bytes.get(i + 1) == Some(&b'>');
                    i += 1;
                    continue;
                }
                _ => {}
            }
            let key_start = i;
            while i < bytes.len()
                && !bytes[i].is_ascii_whitespace()
                && !matches!(bytes[i], b'=' | b'>' | b'/')
            {
                i += 1;
            }
            let key = self.src[key_start..i].to_ascii_lowercase();
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            let mut value = String::new();
            if bytes.get(i) == Some(&b'=') {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                    i += 1;
                }
                let range: Range<usize> = match bytes.get(i) {
                    Some(q @ (b'"' | b'\'')) => {
                        let open = i + 1;
                        let close = bytes[open..].iter().position(|b| b == q)? + open;
                        i = close + 1;
                        open..close
                    }
                    _ => {
                        let open = i;
                        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'>' {
                            i += 1;
                        }
                        open..i
                    }
                };
                value = decode(&self.src[range]);
            }
            if !key.is_empty() {
                attrs.push((key, value));
            } else {
                i += 1;
            }
        }
    }
}

struct Tag {
    name: String,
    attrs: Vec<(String, String)>,
    self_closing: bool,
}

fn decode(s: &str) -> String {
    let decoded = html_escape::decode_html_entities(s);
    // Form feeds are reserved as page markers downstream.
    decoded.replace('\u{c}', " ")
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}
