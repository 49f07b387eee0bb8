//! Refined representations of textual documents: token normalization,
//! bag-of-words vectors, hashed embeddings and cosine similarity.

mod embed;
mod stem;
mod stopwords;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{LakeError, Result};

pub use embed::{
    build_embedding_model, build_similarity_links, embed, Embedder, EmbeddingModel, EmbeddingVector, DEFAULT_DIMS,
    DEFAULT_SIMILARITY_K,
};
pub use stem::stem;

/// Languages with bundled stopword lists and stemming rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    #[serde(alias = "en")]
    English,
    #[serde(alias = "fr")]
    French,
    /// Resolved per text by [`detect_language`].
    Auto,
}

impl Language {
    pub fn code(self) -> &'static str {
        match self {
            Language::English => "en",
            Language::French => "fr",
            Language::Auto => "auto",
        }
    }

    fn stopwords(self) -> &'static HashSet<&'static str> {
        static EN: OnceLock<HashSet<&'static str>> = OnceLock::new();
        static FR: OnceLock<HashSet<&'static str>> = OnceLock::new();
        match self {
            Language::French => FR.get_or_init(|| stopwords::FRENCH.iter().copied().collect()),
            _ => EN.get_or_init(|| stopwords::ENGLISH.iter().copied().collect()),
        }
    }

    pub fn is_stopword(self, word: &str) -> bool {
        self.stopwords().contains(word)
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Language {
    type Err = LakeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "en" | "eng" | "english" => Ok(Language::English),
            "fr" | "fra" | "fre" | "french" | "français" | "francais" => Ok(Language::French),
            "auto" => Ok(Language::Auto),
            other => Err(LakeError::invalid(format!("unsupported language '{other}'"))),
        }
    }
}

/// A token of the original text, before any normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawToken<'a> {
    pub text: &'a str,
    /// Byte offsets into the source text.
    pub start: usize,
    pub end: usize,
}

/// A normalized term together with its position in the raw token stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub term: String,
    pub position: u32,
}

/// Splits text into maximal runs of alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<RawToken<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            out.push(RawToken {
                text: &text[s..i],
                start: s,
                end: i,
            });
        }
    }
    if let Some(s) = start {
        out.push(RawToken {
            text: &text[s..],
            start: s,
            end: text.len(),
        });
    }
    out
}

/// Picks English or French by stopword hit rate; ties go to English.
pub fn detect_language(text: &str) -> Language {
    let (mut en, mut fr) = (0usize, 0usize);
    for tok in tokenize(text) {
        let w = tok.text.to_lowercase();
        if Language::English.is_stopword(&w) {
            en += 1;
        }
        if Language::French.is_stopword(&w) {
            fr += 1;
        }
    }
    if fr > en {
        Language::French
    } else {
        Language::English
    }
}

fn resolve(text: &str, language: Language) -> Language {
    match language {
        Language::Auto => detect_language(text),
        other => other,
    }
}

/// Normalizes a single word: lowercase, stopword check, stem, stopword
/// check on the stem. Returns `None` when the word is filtered out.
pub fn normalize_word(word: &str, language: Language) -> Option<String> {
    let language = resolve(word, language);
    let lower = word.to_lowercase();
    if lower.is_empty() || language.is_stopword(&lower) {
        return None;
    }
    let stemmed = stem(&lower, language);
    if language.is_stopword(&stemmed) {
        return None;
    }
    Some(stemmed)
}

/// Tokenizes, lowercases, drops stopwords and stems. Positions refer to the
/// raw token stream so that snippets can be cut from the original text.
pub fn normalize(text: &str, language: Language) -> Vec<Token> {
    let language = resolve(text, language);
    tokenize(text)
        .into_iter()
        .enumerate()
        .filter_map(|(i, tok)| {
            normalize_word(tok.text, language).map(|term| Token {
                term,
                position: i as u32,
            })
        })
        .collect()
}

/// Normalizes each query term, dropping the ones that vanish. A term that
/// tokenizes into several words contributes all of them.
pub fn normalize_terms<S: AsRef<str>>(terms: &[S], language: Language) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for t in terms {
        for tok in tokenize(t.as_ref()) {
            if let Some(n) = normalize_word(tok.text, language) {
                if seen.insert(n.clone()) {
                    out.push(n);
                }
            }
        }
    }
    out
}

/// Term counts of one document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BowVector {
    pub counts: BTreeMap<String, u32>,
    /// Normalized token count before any vocabulary filter.
    pub total_tokens: u32,
}

impl BowVector {
    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn count(&self, term: &str) -> u32 {
        self.counts.get(term).copied().unwrap_or(0)
    }

    /// Keeps only the terms accepted by `keep`.
    pub fn restricted<F: Fn(&str) -> bool>(&self, keep: F) -> BowVector {
        BowVector {
            counts: self
                .counts
                .iter()
                .filter(|(t, _)| keep(t))
                .map(|(t, c)| (t.clone(), *c))
                .collect(),
            total_tokens: self.total_tokens,
        }
    }
}

/// Counts normalized tokens, optionally restricted to a vocabulary.
pub fn bag_of_words<S: AsRef<str>>(tokens: &[S], vocabulary: Option<&BTreeSet<String>>) -> BowVector {
    let mut counts: BTreeMap<String, u32> = BTreeMap::new();
    for t in tokens {
        let t = t.as_ref();
        if vocabulary.is_some_and(|v| !v.contains(t)) {
            continue;
        }
        *counts.entry(t.to_string()).or_default() += 1;
    }
    BowVector {
        counts,
        total_tokens: tokens.len() as u32,
    }
}

/// Cosine similarity; zero vectors compare as 0.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(LakeError::invalid(format!(
            "dimension mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}
