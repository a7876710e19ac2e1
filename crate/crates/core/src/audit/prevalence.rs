//! Per-filing prevalence of pronouns and demographic descriptors.
//!
//! Percentages are shares of filings, not of documents: every document of
//! a filing is pooled before counting.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lexicon::{Axis, DescriptorLexicon};

/// Text of one document, tagged with the filing it belongs to.
#[derive(Debug, Clone, Copy)]
pub struct FilingText<'a> {
    pub filing_id: &'a str,
    pub text: &'a str,
}

fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PronounClass {
    She,
    He,
    Unknown,
    FirstPerson,
    SecondPerson,
    ThirdPerson,
}

impl PronounClass {
    pub const GENDER: [PronounClass; 3] = [PronounClass::She, PronounClass::He, PronounClass::Unknown];
    pub const GRAMMATICAL: [PronounClass; 3] =
        [PronounClass::FirstPerson, PronounClass::SecondPerson, PronounClass::ThirdPerson];

    pub fn words(self) -> &'static [&'static str] {
        match self {
            PronounClass::She => &["she", "her", "hers", "herself"],
            PronounClass::He => &["he", "him", "his", "himself"],
            PronounClass::Unknown => &["they", "them", "their", "theirs", "themself", "themselves"],
            PronounClass::FirstPerson => &["i", "me", "my", "mine", "myself", "we", "us", "our", "ours", "ourselves"],
            PronounClass::SecondPerson => &["you", "your", "yours", "yourself", "yourselves"],
            PronounClass::ThirdPerson => &[
                "he", "him", "his", "himself", "she", "her", "hers", "herself", "it", "its", "itself", "they",
                "them", "their", "theirs", "themself", "themselves",
            ],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PronounClass::She => "She",
            PronounClass::He => "He",
            PronounClass::Unknown => "Unknown",
            PronounClass::FirstPerson => "1st Person",
            PronounClass::SecondPerson => "2nd Person",
            PronounClass::ThirdPerson => "3rd Person",
        }
    }
}

/// Pronoun classes present in a text. Matching is case-insensitive on
/// whole words, except that the first-person "I" must be uppercase so that
/// enumerations like "(i)" are not counted.
pub fn pronoun_classes(text: &str) -> BTreeSet<PronounClass> {
    let mut found = BTreeSet::new();
    for word in text.split(|c: char| !c.is_alphanumeric()) {
        if word.is_empty() {
            continue;
        }
        if word == "i" {
            continue;
        }
        let lower = word.to_lowercase();
        for class in PronounClass::GENDER.into_iter().chain(PronounClass::GRAMMATICAL) {
            if class.words().contains(&lower.as_str()) {
                found.insert(class);
            }
        }
    }
    found
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassShare {
    pub class: PronounClass,
    pub filings: usize,
    /// Percent of the filings containing any pronoun of the same group.
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PronounReport {
    pub total_filings: usize,
    pub gender_filings: usize,
    pub gender_percent: f64,
    pub grammatical_filings: usize,
    pub grammatical_percent: f64,
    pub gender: Vec<ClassShare>,
    pub grammatical: Vec<ClassShare>,
}

fn group_by_filing<'a, I>(corpus: I) -> BTreeMap<&'a str, Vec<&'a str>>
where
    I: IntoIterator<Item = FilingText<'a>>,
{
    let mut filings: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for doc in corpus {
        filings.entry(doc.filing_id).or_default().push(doc.text);
    }
    filings
}

pub fn pronoun_prevalence<'a, I>(corpus: I) -> PronounReport
where
    I: IntoIterator<Item = FilingText<'a>>,
{
    let filings = group_by_filing(corpus);
    let per_filing: Vec<BTreeSet<PronounClass>> = filings
        .par_iter()
        .map(|(_, texts)| texts.iter().flat_map(|t| pronoun_classes(t)).collect())
        .collect();
    let count = |class: PronounClass| per_filing.iter().filter(|s| s.contains(&class)).count();
    let gender_filings = per_filing
        .iter()
        .filter(|s| PronounClass::GENDER.iter().any(|c| s.contains(c)))
        .count();
    let grammatical_filings = per_filing
        .iter()
        .filter(|s| PronounClass::GRAMMATICAL.iter().any(|c| s.contains(c)))
        .count();
    let shares = |classes: [PronounClass; 3], base: usize| {
        classes
            .into_iter()
            .map(|class| {
                let n = count(class);
                ClassShare {
                    class,
                    filings: n,
                    percent: percent(n, base),
                }
            })
            .collect()
    };
    PronounReport {
        total_filings: per_filing.len(),
        gender_filings,
        gender_percent: percent(gender_filings, per_filing.len()),
        grammatical_filings,
        grammatical_percent: percent(grammatical_filings, per_filing.len()),
        gender: shares(PronounClass::GENDER, gender_filings),
        grammatical: shares(PronounClass::GRAMMATICAL, grammatical_filings),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorStats {
    pub descriptor: String,
    pub filings: usize,
    /// Percent of the filings that mention any descriptor of the axis.
    pub percent: f64,
    pub mentions: usize,
    pub sentence_count: usize,
    pub mean_toxicity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisStats {
    pub axis: Axis,
    pub filings: usize,
    /// Percent of all filings.
    pub percent: f64,
    /// Sorted by filings (descending), then descriptor.
    pub descriptors: Vec<DescriptorStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceReport {
    pub total_filings: usize,
    pub axes: Vec<AxisStats>,
}

/// Counts maximal descriptor matches per filing. A filing counts once per
/// descriptor however often it is mentioned.
pub fn descriptor_prevalence<'a, I>(corpus: I, lexicon: &DescriptorLexicon) -> PrevalenceReport
where
    I: IntoIterator<Item = FilingText<'a>>,
{
    let filings = group_by_filing(corpus);
    // Per filing: descriptor -> mentions.
    let per_filing: Vec<BTreeMap<String, usize>> = filings
        .par_iter()
        .map(|(_, texts)| {
            let mut found: BTreeMap<String, usize> = BTreeMap::new();
            for text in texts {
                for m in lexicon.maximal_matches(text) {
                    *found.entry(m.canonical).or_insert(0) += 1;
                }
            }
            found
        })
        .collect();
    let total = per_filing.len();
    let axes = Axis::ALL
        .into_iter()
        .map(|axis| {
            let mut filings_with = BTreeMap::<&str, (usize, usize)>::new();
            let mut axis_filings = 0;
            for found in &per_filing {
                let mut any = false;
                for (d, n) in found {
                    if lexicon.axis_of(d) == Some(axis) {
                        any = true;
                        let e = filings_with.entry(d.as_str()).or_insert((0, 0));
                        e.0 += 1;
                        e.1 += n;
                    }
                }
                axis_filings += usize::from(any);
            }
            let mut descriptors: Vec<DescriptorStats> = filings_with
                .into_iter()
                .map(|(d, (f, mentions))| DescriptorStats {
                    descriptor: d.to_string(),
                    filings: f,
                    percent: percent(f, axis_filings),
                    mentions,
                    sentence_count: 0,
                    mean_toxicity: None,
                })
                .collect();
            descriptors.sort_by(|a, b| b.filings.cmp(&a.filings).then(a.descriptor.cmp(&b.descriptor)));
            AxisStats {
                axis,
                filings: axis_filings,
                percent: percent(axis_filings, total),
                descriptors,
            }
        })
        .collect();
    PrevalenceReport {
        total_filings: total,
        axes,
    }
}

#[cfg(test)]
mod tests {
    use super::super::lexicon::tests::lexicon;
    use super::*;

    fn docs<'a>(items: &'a [(&'a str, &'a str)]) -> Vec<FilingText<'a>> {
        items.iter().map(|(f, t)| FilingText { filing_id: f, text: t }).collect()
    }

    #[test]
    fn pronoun_hand_count() {
        let corpus = [("a", "she went"), ("b", "his report"), ("c", "the firm")];
        let r = pronoun_prevalence(docs(&corpus));
        assert_eq!(r.total_filings, 3);
        assert_eq!(r.gender_filings, 2);
        assert!((r.gender_percent - 200.0 / 3.0).abs() < 1e-9);
        assert_eq!(r.gender[0].percent, 50.0);
        assert_eq!(r.gender[1].percent, 50.0);
        assert_eq!(r.gender[2].percent, 0.0);
        assert_eq!(r.grammatical_filings, 2);
        assert_eq!(r.grammatical[2].percent, 100.0);
    }

    #[test]
    fn no_pronouns() {
        let corpus = [("a", "the firm"), ("b", "net revenue")];
        let r = pronoun_prevalence(docs(&corpus));
        assert_eq!(r.gender_percent, 0.0);
        assert!(r.gender.iter().chain(&r.grammatical).all(|s| s.percent == 0.0));
    }

    #[test]
    fn enumerations_are_not_first_person() {
        assert!(pronoun_classes("(i) the lease and (ii) the note").is_empty());
        assert!(pronoun_classes("I believe").contains(&PronounClass::FirstPerson));
        assert!(pronoun_classes("THEY agreed").contains(&PronounClass::Unknown));
        assert!(!pronoun_classes("Ushered in the U.S. market").contains(&PronounClass::FirstPerson));
    }

    #[test]
    fn documents_pool_by_filing() {
        let corpus = [("a", "the firm"), ("a", "we said"), ("b", "a note")];
        let r = pronoun_prevalence(docs(&corpus));
        assert_eq!((r.total_filings, r.grammatical_filings), (2, 1));
    }

    #[test]
    fn conditional_descriptor_prevalence() {
        let corpus = [
            ("f1", "American suppliers ship goods."),
            ("f2", "Growth among American and Chinese buyers."),
            ("f3", "Net revenue rose."),
            ("f4", "Christian values."),
        ];
        let r = descriptor_prevalence(docs(&corpus), &lexicon());
        let nat = r.axes.iter().find(|a| a.axis == Axis::Nationality).unwrap();
        assert_eq!(nat.percent, 50.0);
        assert_eq!(nat.descriptors[0].descriptor, "American");
        assert_eq!(nat.descriptors[0].percent, 100.0);
        assert_eq!(nat.descriptors[1].percent, 50.0);
        let so = r.axes.iter().find(|a| a.axis == Axis::SexualOrientation).unwrap();
        assert_eq!((so.percent, so.descriptors.len()), (0.0, 0));
    }

    #[test]
    fn nested_descriptors_count_once() {
        let corpus = [("f1", "Latin American markets")];
        let r = descriptor_prevalence(docs(&corpus), &lexicon());
        assert_eq!(r.axes.iter().find(|a| a.axis == Axis::Nationality).unwrap().filings, 0);
        let race = r.axes.iter().find(|a| a.axis == Axis::RaceEthnicity).unwrap();
        assert_eq!(race.descriptors.len(), 1);
        assert_eq!(race.descriptors[0].descriptor, "Latin American");
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn order_independent_and_bounded(perm in Just((0..6usize).collect::<Vec<_>>()).prop_shuffle()) {
            let base = [
                ("f1", "American and Asian staff; she said"), ("f2", "Chinese buyers"), ("f3", "nothing"),
                ("f1", "Christian groups"), ("f4", "LGBTQ and gay employees; they agreed"), ("f5", "we, you"),
            ];
            let shuffled: Vec<(&str, &str)> = perm.iter().map(|&i| base[i]).collect();
            let a = descriptor_prevalence(docs(&base), &lexicon());
            let b = descriptor_prevalence(docs(&shuffled), &lexicon());
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(pronoun_prevalence(docs(&base)), pronoun_prevalence(docs(&shuffled)));
            for axis in &a.axes {
                for d in &axis.descriptors {
                    prop_assert!(d.percent <= 100.0);
                }
            }
        }
    }
}
