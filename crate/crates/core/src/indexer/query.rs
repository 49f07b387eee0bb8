use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{IndexName, PostingIndex};
use crate::catalog::ObjectId;
use crate::error::{LakeError, Result};
use crate::textproc::{normalize_terms, Language};

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;
pub const DEFAULT_MAX_EDITS: u8 = 1;
/// Cap on fuzzy expansions per query term.
pub const MAX_FUZZY_EXPANSIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    #[default]
    All,
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Documents,
    Tables,
    #[default]
    Both,
}

/// Synonym lookup over normalized terms.
pub trait SynonymSource {
    fn synonyms(&self, term: &str) -> BTreeSet<String>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TermQuery {
    pub terms: Vec<String>,
    pub mode: MatchMode,
    pub fuzzy: bool,
    pub max_edits: u8,
    pub expand_synonyms: bool,
    /// Thesaurus to expand with; all thesauri when unset.
    pub thesaurus: Option<String>,
    pub target: Target,
    pub language: Language,
}

impl Default for TermQuery {
    fn default() -> Self {
        TermQuery {
            terms: Vec::new(),
            mode: MatchMode::All,
            fuzzy: false,
            max_edits: DEFAULT_MAX_EDITS,
            expand_synonyms: false,
            thesaurus: None,
            target: Target::Both,
            language: Language::English,
        }
    }
}

impl TermQuery {
    pub fn all<S: AsRef<str>>(terms: &[S]) -> Self {
        TermQuery {
            terms: terms.iter().map(|t| t.as_ref().to_string()).collect(),
            ..TermQuery::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredObject {
    pub object: ObjectId,
    pub score: f64,
    pub index: IndexName,
}

/// Indexed terms within `max_edits` Levenshtein edits of `term`, plus `term`
/// itself. At most [`MAX_FUZZY_EXPANSIONS`] neighbours are kept, closest
/// first, then lexical.
pub fn fuzzy_expand<'a, I>(term: &str, max_edits: u8, vocabulary: I) -> BTreeSet<String>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut out = BTreeSet::from([term.to_string()]);
    if max_edits == 0 {
        return out;
    }
    let len = term.chars().count();
    let mut near: Vec<(usize, &str)> = vocabulary
        .into_iter()
        .filter(|v| *v != term && v.chars().count().abs_diff(len) <= max_edits as usize)
        .filter_map(|v| {
            let d = strsim::levenshtein(term, v);
            (d <= max_edits as usize).then_some((d, v))
        })
        .collect();
    near.sort();
    out.extend(near.into_iter().take(MAX_FUZZY_EXPANSIONS).map(|(_, v)| v.to_string()));
    out
}

fn idf(n: usize, df: usize) -> f64 {
    ((n as f64 - df as f64 + 0.5) / (df as f64 + 0.5) + 1.0).ln()
}

/// BM25 score of every object containing at least one of `terms`.
pub fn bm25_scores(index: &PostingIndex, terms: &BTreeSet<String>) -> BTreeMap<ObjectId, f64> {
    let n = index.n();
    let avgdl = index.avgdl();
    let mut scores: BTreeMap<ObjectId, f64> = BTreeMap::new();
    for term in terms {
        let Some(list) = index.postings(term) else { continue };
        let w = idf(n, list.len());
        for (id, p) in list {
            let dl = index.doc_length(*id).unwrap_or(0) as f64;
            let norm = if avgdl > 0.0 { dl / avgdl } else { 0.0 };
            let tf = p.tf as f64;
            *scores.entry(*id).or_default() +=
                w * tf * (BM25_K1 + 1.0) / (tf + BM25_K1 * (1.0 - BM25_B + BM25_B * norm));
        }
    }
    scores
}

/// One normalized query term with its synonym and fuzzy alternatives.
fn expand(term: &str, q: &TermQuery, synonyms: Option<&dyn SynonymSource>, index: &PostingIndex) -> BTreeSet<String> {
    let mut group = BTreeSet::from([term.to_string()]);
    if q.expand_synonyms {
        if let Some(s) = synonyms {
            group.extend(s.synonyms(term));
        }
    }
    if q.fuzzy {
        let max_edits = q.max_edits.min(2);
        let base: Vec<String> = group.iter().cloned().collect();
        for t in base {
            group.extend(fuzzy_expand(&t, max_edits, index.vocabulary()));
        }
    }
    group
}

fn query_index(
    index: &PostingIndex,
    terms: &[String],
    q: &TermQuery,
    synonyms: Option<&dyn SynonymSource>,
) -> Vec<ScoredObject> {
    let groups: Vec<BTreeSet<String>> = terms.iter().map(|t| expand(t, q, synonyms, index)).collect();
    let matches = |group: &BTreeSet<String>| -> BTreeSet<ObjectId> {
        group
            .iter()
            .filter_map(|t| index.postings(t))
            .flat_map(|l| l.keys().copied())
            .collect()
    };
    let mut candidates: Option<BTreeSet<ObjectId>> = None;
    for g in &groups {
        let m = matches(g);
        candidates = Some(match (candidates, q.mode) {
            (None, _) => m,
            (Some(c), MatchMode::All) => &c & &m,
            (Some(c), MatchMode::Any) => &c | &m,
        });
    }
    let candidates = candidates.unwrap_or_default();
    let all_terms: BTreeSet<String> = groups.into_iter().flatten().collect();
    let scores = bm25_scores(index, &all_terms);
    candidates
        .into_iter()
        .map(|id| ScoredObject {
            object: id,
            score: scores.get(&id).copied().unwrap_or(0.0),
            index: index.name(),
        })
        .collect()
}

/// Runs a term query against the selected indexes. Results are ranked by
/// score descending, object id ascending. With [`Target::Both`] the
/// per-index results are merged.
pub fn term_query(
    q: &TermQuery,
    documents: &PostingIndex,
    tables: &PostingIndex,
    synonyms: Option<&dyn SynonymSource>,
) -> Result<Vec<ScoredObject>> {
    if q.terms.iter().all(|t| t.trim().is_empty()) {
        return Err(LakeError::invalid("term query needs at least one term"));
    }
    if q.max_edits > 2 {
        return Err(LakeError::invalid("max_edits must be 0, 1 or 2"));
    }
    let terms = normalize_terms(&q.terms, q.language);
    if terms.is_empty() {
        // only stopwords: nothing can match
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    if q.target != Target::Tables {
        out.extend(query_index(documents, &terms, q, synonyms));
    }
    if q.target != Target::Documents {
        out.extend(query_index(tables, &terms, q, synonyms));
    }
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.object.cmp(&b.object)));
    Ok(out)
}

/// Mean BM25 score per group over the members that match at least one term;
/// groups without such members score 0.
pub fn group_scores<'a, I>(
    index: &PostingIndex,
    terms: &[String],
    language: Language,
    groups: I,
) -> BTreeMap<String, f64>
where
    I: IntoIterator<Item = (&'a str, &'a BTreeSet<ObjectId>)>,
{
    let normalized: BTreeSet<String> = normalize_terms(terms, language).into_iter().collect();
    let scores = bm25_scores(index, &normalized);
    groups
        .into_iter()
        .map(|(label, members)| {
            let hits: Vec<f64> = members.iter().filter_map(|m| scores.get(m).copied()).collect();
            let mean = if hits.is_empty() {
                0.0
            } else {
                hits.iter().sum::<f64>() / hits.len() as f64
            };
            (label.to_string(), mean)
        })
        .collect()
}
