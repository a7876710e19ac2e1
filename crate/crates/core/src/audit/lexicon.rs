//! Demographic descriptor lexicon and matching.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AuditError;

/// Terms dropped because they are mostly used in non-demographic senses.
pub const DEFAULT_EXCLUSIONS: &[&str] = &["straight", "white", "Black", "bi", "pan", "ace", "poly"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    GenderSex,
    SexualOrientation,
    Nationality,
    RaceEthnicity,
    Religion,
}

impl Axis {
    pub const ALL: [Axis; 5] = [
        Axis::GenderSex,
        Axis::SexualOrientation,
        Axis::Nationality,
        Axis::RaceEthnicity,
        Axis::Religion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::GenderSex => "gender-sex",
            Axis::SexualOrientation => "sexual-orientation",
            Axis::Nationality => "nationality",
            Axis::RaceEthnicity => "race-ethnicity",
            Axis::Religion => "religion",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Axis::GenderSex => "Gender and Sex",
            Axis::SexualOrientation => "Sexual Orientation",
            Axis::Nationality => "Nationality",
            Axis::RaceEthnicity => "Race and Ethnicity",
            Axis::Religion => "Religion",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Axis::ALL
            .into_iter()
            .find(|a| a.as_str() == s.trim())
            .ok_or_else(|| format!("unknown axis {s:?}"))
    }
}

/// One matchable surface form.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Variant {
    surface: String,
    canonical: String,
    axis: Axis,
    /// Forms containing an uppercase letter match case-sensitively.
    case_sensitive: bool,
}

#[derive(Debug, Clone, Default)]
pub struct DescriptorLexicon {
    /// Canonical descriptor to axis.
    entries: BTreeMap<String, Axis>,
    exclusions: BTreeSet<String>,
    /// Surface form to canonical descriptor, for every non-canonical form.
    expansions: BTreeMap<String, String>,
    /// Variants keyed by their lowercased first word.
    by_first_word: HashMap<String, Vec<Variant>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptorMatch {
    pub canonical: String,
    pub axis: Axis,
    /// Character offsets into the searched text, end exclusive.
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptorHit {
    pub document_id: String,
    pub sentence: String,
    pub descriptor: String,
    pub axis: Axis,
    pub span: (usize, usize),
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn first_word(s: &str) -> String {
    s.split(|c: char| !is_word_char(c))
        .find(|w| !w.is_empty())
        .unwrap_or_default()
        .to_lowercase()
}

fn chars_eq(a: char, b: char, case_sensitive: bool) -> bool {
    a == b || (!case_sensitive && a.to_lowercase().eq(b.to_lowercase()))
}

impl DescriptorLexicon {
    /// Builds a lexicon from `(surface, axis, canonical)` rows. Multi-word
    /// forms also match hyphenated and vice versa. Excluded terms are
    /// dropped, whether as canonical descriptors or as variants.
    pub fn from_rows<I>(rows: I, exclusions: &[&str]) -> Result<Self, String>
    where
        I: IntoIterator<Item = (String, Axis, Option<String>)>,
    {
        let excluded: BTreeSet<String> = exclusions.iter().map(|e| e.to_lowercase()).collect();
        let is_excluded = |s: &str| excluded.contains(&s.to_lowercase());
        let mut lex = DescriptorLexicon {
            exclusions: exclusions.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        };
        let mut variants: BTreeMap<String, (String, Axis)> = BTreeMap::new();
        for (surface, axis, canonical) in rows {
            let surface = surface.trim().to_string();
            let canonical = canonical
                .map(|c| c.trim().to_string())
                .filter(|c| !c.is_empty())
                .unwrap_or_else(|| surface.clone());
            if surface.is_empty() {
                return Err("empty descriptor".into());
            }
            if is_excluded(&surface) || is_excluded(&canonical) {
                continue;
            }
            if let Some(existing) = lex.entries.get(&canonical) {
                if *existing != axis {
                    return Err(format!("{canonical:?} listed under {existing} and {axis}"));
                }
            }
            lex.entries.insert(canonical.clone(), axis);
            let mut forms = vec![surface.clone(), canonical.clone()];
            for f in [&surface, &canonical] {
                if f.contains(' ') {
                    forms.push(f.replace(' ', "-"));
                }
                if f.contains('-') {
                    forms.push(f.replace('-', " "));
                }
            }
            for form in forms {
                if let Some((prev, _)) = variants.get(&form) {
                    if *prev != canonical {
                        return Err(format!("{form:?} maps to both {prev:?} and {canonical:?}"));
                    }
                }
                variants.insert(form, (canonical.clone(), axis));
            }
        }
        for (surface, (canonical, axis)) in variants {
            if surface != canonical {
                lex.expansions.insert(surface.clone(), canonical.clone());
            }
            let key = first_word(&surface);
            if key.is_empty() {
                continue;
            }
            lex.by_first_word.entry(key).or_default().push(Variant {
                case_sensitive: surface.chars().any(char::is_uppercase),
                surface,
                canonical,
                axis,
            });
        }
        Ok(lex)
    }

    /// Parses CSV `descriptor,axis,canonical` (canonical may be empty).
    pub fn from_csv(input: &str) -> Result<Self, AuditError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .flexible(true)
            .from_reader(input.as_bytes());
        let malformed = |line: u64, reason: String| AuditError::Malformed {
            source_name: "lexicon".into(),
            line,
            reason,
        };
        let headers = reader.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
        if !headers.is_empty() && headers.iter().take(2).collect::<Vec<_>>() != ["descriptor", "axis"] {
            return Err(malformed(1, "expected header descriptor,axis,canonical".into()));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| malformed(e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() < 2 || record.len() > 3 {
                return Err(malformed(line, format!("expected 2 or 3 fields, got {}", record.len())));
            }
            let axis: Axis = record[1].parse().map_err(|e| malformed(line, e))?;
            rows.push((record[0].to_string(), axis, record.get(2).map(str::to_string)));
        }
        if rows.is_empty() {
            tracing::warn!("descriptor lexicon is empty");
        }
        Self::from_rows(rows, DEFAULT_EXCLUSIONS).map_err(|e| malformed(0, e))
    }

    pub fn load(path: &Path) -> Result<Self, AuditError> {
        let text = std::fs::read_to_string(path).map_err(|e| AuditError::io(path, e))?;
        Self::from_csv(&text).map_err(|e| match e {
            AuditError::Malformed { line, reason, .. } => AuditError::Malformed {
                source_name: path.display().to_string(),
                line,
                reason,
            },
            other => other,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &BTreeMap<String, Axis> {
        &self.entries
    }

    pub fn exclusions(&self) -> &BTreeSet<String> {
        &self.exclusions
    }

    pub fn expansions(&self) -> &BTreeMap<String, String> {
        &self.expansions
    }

    pub fn axis_of(&self, canonical: &str) -> Option<Axis> {
        self.entries.get(canonical).copied()
    }

    /// Every word-boundary occurrence of every form, including overlapping
    /// ones, ordered by start then by descending length.
    pub fn find_all(&self, text: &str) -> Vec<DescriptorMatch> {
        let chars: Vec<char> = text.chars().collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            if !is_word_char(chars[i]) || (i > 0 && is_word_char(chars[i - 1])) {
                i += 1;
                continue;
            }
            let mut j = i;
            while j < chars.len() && is_word_char(chars[j]) {
                j += 1;
            }
            let word: String = chars[i..j].iter().collect::<String>().to_lowercase();
            if let Some(variants) = self.by_first_word.get(&word) {
                for v in variants {
                    if let Some(end) = match_at(&chars, i, v) {
                        out.push(DescriptorMatch {
                            canonical: v.canonical.clone(),
                            axis: v.axis,
                            start: i,
                            end,
                        });
                    }
                }
            }
            i = j;
        }
        out.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)).then(a.canonical.cmp(&b.canonical)));
        out.dedup();
        out
    }

    /// Matches not strictly contained in a longer match. "Latin American"
    /// yields one match, not three.
    pub fn maximal_matches(&self, text: &str) -> Vec<DescriptorMatch> {
        let all = self.find_all(text);
        all.iter()
            .filter(|m| {
                !all.iter().any(|o| {
                    o.start <= m.start && o.end >= m.end && (o.end - o.start) > (m.end - m.start)
                })
            })
            .cloned()
            .collect()
    }

    /// The descriptor a sentence is attributed to: the match whose
    /// canonical form is longest, leftmost on ties.
    pub fn assign(&self, sentence: &str) -> Option<DescriptorMatch> {
        let mut best: Option<DescriptorMatch> = None;
        for m in self.find_all(sentence) {
            let better = match &best {
                None => true,
                Some(b) => {
                    let (ml, bl) = (m.canonical.chars().count(), b.canonical.chars().count());
                    ml > bl || (ml == bl && (m.start, &m.canonical) < (b.start, &b.canonical))
                }
            };
            if better {
                best = Some(m);
            }
        }
        best
    }
}

fn match_at(chars: &[char], start: usize, v: &Variant) -> Option<usize> {
    let mut k = start;
    for sc in v.surface.chars() {
        let c = *chars.get(k)?;
        if !chars_eq(c, sc, v.case_sensitive) {
            return None;
        }
        k += 1;
    }
    if k < chars.len() && is_word_char(chars[k]) {
        return None;
    }
    Some(k)
}

pub fn assign_descriptor(document_id: &str, sentence: &str, lexicon: &DescriptorLexicon) -> Option<DescriptorHit> {
    lexicon.assign(sentence).map(|m| DescriptorHit {
        document_id: document_id.to_string(),
        sentence: sentence.to_string(),
        descriptor: m.canonical,
        axis: m.axis,
        span: (m.start, m.end),
    })
}

/// One hit per sentence of `text` that mentions a descriptor.
pub fn extract_hits(document_id: &str, text: &str, lexicon: &DescriptorLexicon) -> Vec<DescriptorHit> {
    super::split_sentences(text)
        .into_iter()
        .filter_map(|s| assign_descriptor(document_id, &s, lexicon))
        .collect()
}
