//! Rule-based sentence splitting for filing text.

/// Tokens ending in a period that do not end a sentence.
const ABBREVIATIONS: &[&str] = &[
    "Inc.", "Corp.", "Co.", "Ltd.", "L.P.", "LLC.", "No.", "Nos.", "Mr.", "Mrs.", "Ms.", "Dr.", "Jr.",
    "Sr.", "St.", "Ave.", "vs.", "v.", "e.g.", "i.e.", "cf.", "approx.", "Jan.", "Feb.", "Mar.",
    "Apr.", "Jun.", "Jul.", "Aug.", "Sep.", "Sept.", "Oct.", "Nov.", "Dec.", "Fig.", "Sec.", "Art.",
    "Rev.", "Dept.", "Bros.", "Mt.", "Ft.", "Gov.", "Gen.", "Hon.", "Prof.",
];

fn is_abbreviation(token: &str) -> bool {
    let token = token.trim_start_matches(['(', '"', '\'', '\u{201c}']);
    if ABBREVIATIONS.contains(&token) {
        return true;
    }
    // Initials and dotted acronyms: "J.", "U.S.", "N.A.".
    let letters: Vec<&str> = token.split_terminator('.').collect();
    !letters.is_empty()
        && token.ends_with('.')
        && letters.iter().all(|l| l.chars().count() == 1 && l.chars().all(|c| c.is_alphabetic()))
        && letters.iter().any(|l| l.chars().all(char::is_uppercase))
}

fn opens_sentence(c: char) -> bool {
    c.is_uppercase() || c.is_ascii_digit() || matches!(c, '"' | '\'' | '\u{201c}' | '\u{2018}' | '(' | '[')
}

/// Splits text into trimmed, non-empty sentences.
///
/// Every line is split separately, so list items and headings without
/// terminal punctuation stand alone. Within a line a sentence ends at `.`,
/// `!` or `?` (plus closing quotes or brackets) followed by whitespace and
/// an uppercase letter, digit or opening quote, unless the token is a known
/// abbreviation.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        split_line(line, &mut out);
    }
    out
}

fn split_line(line: &str, out: &mut Vec<String>) {
    let chars: Vec<(usize, char)> = line.char_indices().collect();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (_, c) = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let mut end = i + 1;
            while end < chars.len() && matches!(chars[end].1, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}' | '.' | '!' | '?') {
                end += 1;
            }
            let mut next = end;
            while next < chars.len() && chars[next].1.is_whitespace() {
                next += 1;
            }
            if next > end && next < chars.len() && opens_sentence(chars[next].1) {
                let byte_end = chars.get(end).map_or(line.len(), |(b, _)| *b);
                let token_start = line[..byte_end]
                    .rfind(char::is_whitespace)
                    .map_or(0, |p| p + 1);
                let token = &line[token_start..byte_end];
                if c != '.' || !is_abbreviation(token) {
                    push(&line[start..byte_end], out);
                    start = chars[next].0;
                    i = next;
                    continue;
                }
            }
            i = end;
            continue;
        }
        i += 1;
    }
    push(&line[start..], out);
}

fn push(s: &str, out: &mut Vec<String>) {
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}
