use super::html::{HtmlDocument, NodeId, NodeKind};

/// Tables with fewer alphabetic characters per tag than this are numeric.
pub const DEFAULT_CPT_MIN: f64 = 10.0;

/// Characters per tag of a table subtree.
///
/// Numerator: alphabetic characters in the subtree's text content.
/// Denominator: element tags in the subtree, the table element included.
/// Attribute values and alt text do not count.
pub fn compute_cpt(doc: &HtmlDocument, table: NodeId) -> f64 {
    let mut alpha = 0usize;
    let mut tags = 0usize;
    for id in doc.descendants(table) {
        match &doc.node(id).kind {
            NodeKind::Element { .. } => tags += 1,
            NodeKind::Text(t) => alpha += t.chars().filter(|c| c.is_alphabetic()).count(),
            NodeKind::Root => {}
        }
    }
    if tags == 0 {
        return 0.0;
    }
    alpha as f64 / tags as f64
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TableCounts {
    pub removed: usize,
    pub kept: usize,
}

/// Detaches every table whose CPT is below `cpt_min`.
///
/// Tables are visited outermost first. A removed table takes its nested
/// tables with it and they are not counted; tables nested in a kept table
/// are evaluated on their own.
pub fn remove_numeric_tables(doc: &mut HtmlDocument, cpt_min: f64) -> TableCounts {
    let mut counts = TableCounts::default();
    let mut stack = vec![HtmlDocument::ROOT];
    while let Some(id) = stack.pop() {
        if doc.element_name(id) == Some("table") {
            if compute_cpt(doc, id) < cpt_min {
                doc.detach(id);
                counts.removed += 1;
                continue;
            }
            counts.kept += 1;
        }
        stack.extend(doc.node(id).children.iter().rev().copied());
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_table(doc: &HtmlDocument) -> NodeId {
        doc.descendants(HtmlDocument::ROOT)
            .into_iter()
            .find(|n| doc.element_name(*n) == Some("table"))
            .unwrap()
    }

    fn cpt(html: &str) -> f64 {
        let doc = HtmlDocument::parse(html);
        compute_cpt(&doc, first_table(&doc))
    }

    #[test]
    fn hand_counted_revenue_table() {
        // "Totalrevenue" = 12 letters; table, tr, td, td = 4 tags.
        assert_eq!(cpt("<table><tr><td>Total revenue</td><td>1,234</td></tr></table>"), 3.0);
    }

    #[test]
    fn empty_table_is_zero() {
        assert_eq!(cpt("<table><tr><td></td></tr></table>"), 0.0);
        assert_eq!(cpt("<table></table>"), 0.0);
    }

    #[test]
    fn attributes_do_not_count() {
        assert_eq!(
            cpt(r#"<table summary="lots of words here"><tr><td><img alt="Logo words">ab</td></tr></table>"#),
            0.5
        );
    }

    #[test]
    fn boundary_cpt_is_kept() {
        // 40 letters over 4 tags = exactly 10.0.
        let html = format!("<table><tr><td>{}</td><td>{}</td></tr></table>", "a".repeat(20), "b".repeat(20));
        assert_eq!(cpt(&html), 10.0);
        let mut doc = HtmlDocument::parse(&html);
        let counts = remove_numeric_tables(&mut doc, DEFAULT_CPT_MIN);
        assert_eq!(counts, TableCounts { removed: 0, kept: 1 });
        // One letter fewer tips it under.
        let html = format!("<table><tr><td>{}</td><td>{}</td></tr></table>", "a".repeat(20), "b".repeat(19));
        let mut doc = HtmlDocument::parse(&html);
        assert_eq!(remove_numeric_tables(&mut doc, DEFAULT_CPT_MIN).removed, 1);
    }

    #[test]
    fn mixed_tables() {
        let numeric = "<table><tr><td>2019</td><td>$ 1,234</td></tr><tr><td>Net</td><td>5</td></tr></table>";
        let narrative = "<table><tr><td>&#8226;</td><td>We depend on a limited number of suppliers for components of our products.</td></tr></table>";
        let html = format!("<p>Intro</p>{numeric}{narrative}{numeric}");
        let mut doc = HtmlDocument::parse(&html);
        let counts = remove_numeric_tables(&mut doc, DEFAULT_CPT_MIN);
        assert_eq!(counts, TableCounts { removed: 2, kept: 1 });
        let text = doc.text_content(HtmlDocument::ROOT);
        assert!(text.contains("suppliers"));
        assert!(!text.contains("1,234"));
    }

    #[test]
    fn no_tables_is_identity() {
        let mut doc = HtmlDocument::parse("<p>Only prose.</p>");
        assert_eq!(remove_numeric_tables(&mut doc, DEFAULT_CPT_MIN), TableCounts::default());
        assert_eq!(doc.text_content(HtmlDocument::ROOT), "Only prose.");
    }

    #[test]
    fn nested_numeric_counts_outermost_only() {
        let html = "<table><tr><td>1</td><td><table><tr><td>2</td></tr></table></td></tr></table>";
        let mut doc = HtmlDocument::parse(html);
        assert_eq!(remove_numeric_tables(&mut doc, DEFAULT_CPT_MIN), TableCounts { removed: 1, kept: 0 });
    }

    #[test]
    fn numeric_table_inside_narrative_layout_table() {
        let inner = "<table><tr><td>1</td><td>2</td></tr></table>";
        let prose = "This layout table wraps a long narrative passage about the business and its operations in several markets.";
        let html = format!("<table><tr><td>{prose}</td><td>{inner}</td></tr></table>");
        let mut doc = HtmlDocument::parse(&html);
        assert_eq!(remove_numeric_tables(&mut doc, DEFAULT_CPT_MIN), TableCounts { removed: 1, kept: 1 });
        assert!(doc.text_content(HtmlDocument::ROOT).contains("narrative"));
    }

    proptest::proptest! {
        /// When every tag owns the same number of letters, duplicating the
        /// row block leaves CPT unchanged.
        #[test]
        fn uniform_tables_are_scale_consistent(per_tag in 1usize..30, rows in 1usize..12, factor in 2usize..5) {
            let word = "x".repeat(per_tag);
            let row = format!("<tr>{word}<td>{word}</td></tr>");
            let original = format!("<table>{word}{}</table>", row.repeat(rows));
            let duplicated = format!("<table>{word}{}</table>", row.repeat(rows * factor));
            proptest::prop_assert_eq!(cpt(&original), per_tag as f64);
            proptest::prop_assert_eq!(cpt(&duplicated), cpt(&original));
        }
    }
}
