use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use super::CorpusError;

pub const WHITESPACE_TOKENIZER: &str = "whitespace";

/// Byte-pair merges applied within whitespace-separated words. Only counts
/// are needed, so no vocabulary is kept: a word's token count is the
/// number of symbols left once no ranked merge applies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeTokenizer {
    ranks: HashMap<(String, String), usize>,
}

impl BpeTokenizer {
    /// One merge per line, `left right`, highest priority first. Blank lines
    /// and lines starting with `#` are ignored.
    pub fn from_merges(text: &str) -> Result<Self, String> {
        let mut ranks = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) => {
                    let rank = ranks.len();
                    ranks.entry((a.to_string(), b.to_string())).or_insert(rank);
                }
                _ => return Err(format!("line {}: expected two symbols", n + 1)),
            }
        }
        Ok(Self { ranks })
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
        Self::from_merges(&text).map_err(|reason| CorpusError::Merges {
            path: path.to_path_buf(),
            reason,
        })
    }

    pub fn tokenize_word(&self, word: &str) -> Vec<String> {
        let mut symbols: Vec<String> = word.chars().map(String::from).collect();
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())))
                .min()
                .copied();
            let Some(rank) = best else { break };
            let mut merged = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len()
                    && self.ranks.get(&(symbols[i].clone(), symbols[i + 1].clone())) == Some(&rank)
                {
                    merged.push(format!("{}{}", symbols[i], symbols[i + 1]));
                    i += 2;
                } else {
                    merged.push(std::mem::take(&mut symbols[i]));
                    i += 1;
                }
            }
            symbols = merged;
        }
        symbols
    }

    pub fn count(&self, text: &str) -> u64 {
        text.split_whitespace()
            .map(|w| self.tokenize_word(w).len() as u64)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tokenizer {
    Whitespace,
    Bpe(BpeTokenizer),
}

impl Tokenizer {
    pub fn count(&self, text: &str) -> u64 {
        match self {
            Tokenizer::Whitespace => text.split_whitespace().count() as u64,
            Tokenizer::Bpe(bpe) => bpe.count(text),
        }
    }
}

/// Tokenizers by id; always contains [`WHITESPACE_TOKENIZER`].
#[derive(Debug, Clone)]
pub struct TokenizerRegistry {
    tokenizers: BTreeMap<String, Tokenizer>,
}

impl Default for TokenizerRegistry {
    fn default() -> Self {
        let mut tokenizers = BTreeMap::new();
        tokenizers.insert(WHITESPACE_TOKENIZER.to_string(), Tokenizer::Whitespace);
        Self { tokenizers }
    }
}

impl TokenizerRegistry {
    pub fn register(&mut self, id: impl Into<String>, tokenizer: Tokenizer) {
        self.tokenizers.insert(id.into(), tokenizer);
    }

    pub fn get(&self, id: &str) -> Result<&Tokenizer, CorpusError> {
        self.tokenizers
            .get(id)
            .ok_or_else(|| CorpusError::UnknownTokenizer(id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.tokenizers.keys().map(String::as_str)
    }
}

pub fn token_count(text: &str, tokenizer_id: &str, registry: &TokenizerRegistry) -> Result<u64, CorpusError> {
    Ok(registry.get(tokenizer_id)?.count(text))
}
