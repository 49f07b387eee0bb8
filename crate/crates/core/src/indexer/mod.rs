//! Inverted indexes over document text and table string values, BM25
//! retrieval and concordance snippets.

mod highlight;
mod query;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use highlight::{highlight_text, Snippet, DEFAULT_MAX_SNIPPETS, DEFAULT_WINDOW};
pub use query::{
    bm25_scores, fuzzy_expand, group_scores, term_query, MatchMode, ScoredObject, SynonymSource, Target, TermQuery,
    BM25_B, BM25_K1, DEFAULT_MAX_EDITS, MAX_FUZZY_EXPANSIONS,
};

use crate::catalog::ObjectId;
use crate::error::{IoContext, LakeError, Result};
use crate::tablestore::{DataType, RelTable};
use crate::textproc::{normalize, Language, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexName {
    DocumentIndex,
    TableIndex,
}

impl IndexName {
    pub fn as_str(self) -> &'static str {
        match self {
            IndexName::DocumentIndex => "document_index",
            IndexName::TableIndex => "table_index",
        }
    }

    pub fn dir_name(self) -> &'static str {
        match self {
            IndexName::DocumentIndex => "documents",
            IndexName::TableIndex => "tables",
        }
    }
}

/// Occurrences of one term in one object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub tf: u32,
    /// Strictly increasing token positions.
    pub positions: Vec<u32>,
    /// Schema indices of the columns the term was found in (tables only).
    pub columns: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostingIndex {
    name: IndexName,
    postings: BTreeMap<String, BTreeMap<ObjectId, Posting>>,
    terms_of: BTreeMap<ObjectId, Vec<String>>,
    doc_lengths: BTreeMap<ObjectId, u32>,
}

const INDEX_FORMAT: &str = "lake-postings/1";
const SEGMENT_FILE: &str = "segment.txt";

impl PostingIndex {
    pub fn new(name: IndexName) -> Self {
        PostingIndex {
            name,
            postings: BTreeMap::new(),
            terms_of: BTreeMap::new(),
            doc_lengths: BTreeMap::new(),
        }
    }

    pub fn name(&self) -> IndexName {
        self.name
    }

    /// Number of indexed objects, including ones with no terms.
    pub fn n(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn avgdl(&self) -> f64 {
        if self.doc_lengths.is_empty() {
            return 0.0;
        }
        self.doc_lengths.values().map(|l| *l as f64).sum::<f64>() / self.doc_lengths.len() as f64
    }

    pub fn doc_length(&self, id: ObjectId) -> Option<u32> {
        self.doc_lengths.get(&id).copied()
    }

    pub fn contains_object(&self, id: ObjectId) -> bool {
        self.doc_lengths.contains_key(&id)
    }

    pub fn objects(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.doc_lengths.keys().copied()
    }

    pub fn postings(&self, term: &str) -> Option<&BTreeMap<ObjectId, Posting>> {
        self.postings.get(term)
    }

    /// Indexed terms in lexical order.
    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    /// Document frequency of a term.
    pub fn df(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, BTreeMap::len)
    }

    /// Terms of one object with their frequency.
    pub fn object_terms(&self, id: ObjectId) -> impl Iterator<Item = (&str, u32)> {
        self.terms_of
            .get(&id)
            .into_iter()
            .flatten()
            .map(move |t| (t.as_str(), self.postings[t][&id].tf))
    }

    pub fn remove(&mut self, id: ObjectId) {
        for term in self.terms_of.remove(&id).unwrap_or_default() {
            if let Some(p) = self.postings.get_mut(&term) {
                p.remove(&id);
                if p.is_empty() {
                    self.postings.remove(&term);
                }
            }
        }
        self.doc_lengths.remove(&id);
    }

    fn insert(&mut self, id: ObjectId, length: u32, per_term: BTreeMap<String, Posting>) {
        self.remove(id);
        if !per_term.is_empty() {
            self.terms_of.insert(id, per_term.keys().cloned().collect());
        }
        for (term, p) in per_term {
            self.postings.entry(term).or_default().insert(id, p);
        }
        self.doc_lengths.insert(id, length);
    }

    /// (Re)indexes a document from its normalized token stream.
    pub fn index_tokens(&mut self, id: ObjectId, tokens: &[Token]) {
        let mut per_term: BTreeMap<String, Posting> = BTreeMap::new();
        for t in tokens {
            let p = per_term.entry(t.term.clone()).or_insert_with(|| Posting {
                tf: 0,
                positions: Vec::new(),
                columns: Vec::new(),
            });
            p.tf += 1;
            if p.positions.last().is_none_or(|last| *last < t.position) {
                p.positions.push(t.position);
            }
        }
        self.insert(id, tokens.len() as u32, per_term);
    }

    pub fn index_document(&mut self, id: ObjectId, text: &str, language: Language) {
        self.index_tokens(id, &normalize(text, language));
    }

    /// Indexes every text-typed cell of a table. Positions run over the
    /// cells in row-major order; each posting records the columns it came
    /// from.
    pub fn index_table_strings(&mut self, id: ObjectId, table: &RelTable, language: Language) {
        let text_cols: Vec<usize> = table
            .schema
            .iter()
            .enumerate()
            .filter(|(_, f)| f.dtype == DataType::Text)
            .map(|(i, _)| i)
            .collect();
        let mut per_term: BTreeMap<String, Posting> = BTreeMap::new();
        let mut position = 0u32;
        for row in &table.rows {
            for &c in &text_cols {
                let crate::tablestore::Value::Text(cell) = &row[c] else {
                    continue;
                };
                for tok in normalize(cell, language) {
                    let p = per_term.entry(tok.term).or_insert_with(|| Posting {
                        tf: 0,
                        positions: Vec::new(),
                        columns: Vec::new(),
                    });
                    p.tf += 1;
                    p.positions.push(position);
                    if !p.columns.contains(&(c as u32)) {
                        p.columns.push(c as u32);
                    }
                    position += 1;
                }
            }
        }
        for p in per_term.values_mut() {
            p.columns.sort_unstable();
        }
        self.insert(id, position, per_term);
    }

    /// Checks the structural invariants; returns the violations found.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut seen = BTreeSet::new();
        for (term, list) in &self.postings {
            for (id, p) in list {
                seen.insert(*id);
                if p.positions.windows(2).any(|w| w[0] >= w[1]) {
                    problems.push(format!("{term}/{id}: positions not strictly increasing"));
                }
                if !self.doc_lengths.contains_key(id) {
                    problems.push(format!("{term}/{id}: object without length"));
                }
            }
        }
        if !seen.iter().all(|id| self.doc_lengths.contains_key(id)) {
            problems.push("posting objects missing from doc_lengths".into());
        }
        problems
    }

    /// Serializes to the line-oriented segment format:
    ///
    /// ```text
    /// lake-postings/1 document_index
    /// L <object> <length>            one per indexed object
    /// T <term>\t<object>:<tf>:<positions>[:<columns>] ...
    /// ```
    ///
    /// Positions are delta-encoded and comma-separated; postings of a term
    /// are separated by spaces.
    pub fn to_segment(&self) -> String {
        let mut out = format!("{INDEX_FORMAT} {}\n", self.name.as_str());
        for (id, len) in &self.doc_lengths {
            let _ = writeln!(out, "L {id} {len}");
        }
        for (term, list) in &self.postings {
            let _ = write!(out, "T {term}\t");
            for (i, (id, p)) in list.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{id}:{}:", p.tf);
                let mut prev = 0;
                for (j, pos) in p.positions.iter().enumerate() {
                    if j > 0 {
                        out.push(',');
                    }
                    let _ = write!(out, "{}", pos - prev);
                    prev = *pos;
                }
                if !p.columns.is_empty() {
                    out.push(':');
                    let cols: Vec<String> = p.columns.iter().map(u32::to_string).collect();
                    out.push_str(&cols.join(","));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_segment(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| LakeError::invalid(format!("index segment line {}: {msg}", line + 1));
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| bad(0, "empty"))?;
        let name = match header.split_once(' ') {
            Some((INDEX_FORMAT, "document_index")) => IndexName::DocumentIndex,
            Some((INDEX_FORMAT, "table_index")) => IndexName::TableIndex,
            _ => return Err(bad(0, "bad header")),
        };
        let mut index = PostingIndex::new(name);
        let num = |s: &str, line: usize| s.parse::<u64>().map_err(|_| bad(line, "bad number"));
        for (ln, line) in lines {
            if let Some(rest) = line.strip_prefix("L ") {
                let (id, len) = rest.split_once(' ').ok_or_else(|| bad(ln, "bad length line"))?;
                index.doc_lengths.insert(ObjectId(num(id, ln)?), num(len, ln)? as u32);
            } else if let Some(rest) = line.strip_prefix("T ") {
                let (term, body) = rest.split_once('\t').ok_or_else(|| bad(ln, "bad term line"))?;
                let mut list = BTreeMap::new();
                for entry in body.split(' ') {
                    let mut parts = entry.split(':');
                    let id = ObjectId(num(parts.next().unwrap_or(""), ln)?);
                    let tf = num(parts.next().ok_or_else(|| bad(ln, "missing tf"))?, ln)? as u32;
                    let mut positions = Vec::new();
                    let mut acc = 0u32;
                    for d in parts.next().unwrap_or("").split(',').filter(|s| !s.is_empty()) {
                        acc += num(d, ln)? as u32;
                        positions.push(acc);
                    }
                    let columns = parts
                        .next()
                        .unwrap_or("")
                        .split(',')
                        .filter(|s| !s.is_empty())
                        .map(|c| num(c, ln).map(|c| c as u32))
                        .collect::<Result<Vec<_>>>()?;
                    index.terms_of.entry(id).or_default().push(term.to_string());
                    list.insert(id, Posting { tf, positions, columns });
                }
                index.postings.insert(term.to_string(), list);
            } else if !line.is_empty() {
                return Err(bad(ln, "unknown record"));
            }
        }
        Ok(index)
    }

    /// Loads `<dir>/segment.txt`, or returns an empty index if absent.
    pub fn load(dir: &Path, name: IndexName) -> Result<Self> {
        let path = dir.join(SEGMENT_FILE);
        if !path.exists() {
            return Ok(PostingIndex::new(name));
        }
        let text = fs::read_to_string(&path).at(&path)?;
        let index = PostingIndex::from_segment(&text).map_err(|e| LakeError::corrupt(&path, e.to_string()))?;
        if index.name != name {
            return Err(LakeError::corrupt(&path, "index name mismatch"));
        }
        Ok(index)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).at(dir)?;
        let path = dir.join(SEGMENT_FILE);
        let tmp = dir.join("segment.txt.tmp");
        fs::write(&tmp, self.to_segment()).at(&tmp)?;
        fs::rename(&tmp, &path).at(&path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tablestore::ingest_table;
    use proptest::prelude::*;

    #[test]
    fn single_document_postings() {
        let mut idx = PostingIndex::new(IndexName::DocumentIndex);
        idx.index_document(ObjectId(7), "data lake", Language::English);
        let data = &idx.postings("data").unwrap()[&ObjectId(7)];
        assert_eq!((data.tf, data.positions.clone()), (1, vec![0]));
        let lake = &idx.postings("lake").unwrap()[&ObjectId(7)];
        assert_eq!((lake.tf, lake.positions.clone()), (1, vec![1]));
        assert_eq!((idx.n(), idx.avgdl()), (1, 2.0));
    }

    #[test]
    fn reindex_replaces_postings() {
        let mut idx = PostingIndex::new(IndexName::DocumentIndex);
        idx.index_document(ObjectId(1), "data lake", Language::English);
        idx.index_document(ObjectId(1), "river", Language::English);
        assert!(idx.postings("data").is_none());
        assert!(idx.postings("river").is_some());
        assert_eq!(idx.n(), 1);
    }

    #[test]
    fn table_strings_keep_columns() {
        let t = ingest_table("t", b"id,name,city\n1,Big Data Inc,Lyon\n2,Acme,Big Sur\n").unwrap();
        let mut idx = PostingIndex::new(IndexName::TableIndex);
        idx.index_table_strings(ObjectId(3), &t, Language::English);
        let big = &idx.postings("big").unwrap()[&ObjectId(3)];
        assert_eq!(big.tf, 2);
        assert_eq!(big.columns, vec![1, 2]);
        assert!(idx.postings("inc").is_some());
        assert!(idx.postings("1").is_none());

        let numeric = ingest_table("n", b"a,b\n1,2.5\n").unwrap();
        let mut idx = PostingIndex::new(IndexName::TableIndex);
        idx.index_table_strings(ObjectId(4), &numeric, Language::English);
        assert_eq!(idx.vocabulary().count(), 0);
        assert_eq!(idx.n(), 1);
    }

    #[test]
    fn segment_round_trip() {
        let mut idx = PostingIndex::new(IndexName::TableIndex);
        let t = ingest_table("t", b"name,city\nBig Data Inc,Lyon\nAcme,Big Sur\n").unwrap();
        idx.index_table_strings(ObjectId(3), &t, Language::English);
        idx.index_table_strings(ObjectId(9), &ingest_table("n", b"a\n1\n").unwrap(), Language::English);
        let back = PostingIndex::from_segment(&idx.to_segment()).unwrap();
        assert_eq!(back, idx);
        let dir = tempfile::tempdir().unwrap();
        idx.save(dir.path()).unwrap();
        assert_eq!(PostingIndex::load(dir.path(), IndexName::TableIndex).unwrap(), idx);
        assert!(PostingIndex::load(dir.path(), IndexName::DocumentIndex).is_err());
    }

    fn word() -> impl Strategy<Value = String> {
        prop::sample::select(vec![
            "data", "lake", "river", "big", "model", "the", "cloud", "storage", "query",
        ])
        .prop_map(str::to_string)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn postings_equal_scan_oracle(docs in prop::collection::vec(prop::collection::vec(word(), 0..30), 1..50)) {
            let mut idx = PostingIndex::new(IndexName::DocumentIndex);
            let texts: Vec<String> = docs.iter().map(|d| d.join(" ")).collect();
            for (i, t) in texts.iter().enumerate() {
                idx.index_document(ObjectId(i as u64), t, Language::English);
            }
            prop_assert!(idx.check_invariants().is_empty());
            // oracle: scan the normalized token stream of every text
            let mut oracle: BTreeMap<String, BTreeMap<ObjectId, u32>> = BTreeMap::new();
            for (i, t) in texts.iter().enumerate() {
                for tok in normalize(t, Language::English) {
                    *oracle.entry(tok.term).or_default().entry(ObjectId(i as u64)).or_default() += 1;
                }
            }
            let got: BTreeMap<String, BTreeMap<ObjectId, u32>> = idx
                .postings
                .iter()
                .map(|(t, l)| (t.clone(), l.iter().map(|(id, p)| (*id, p.tf)).collect()))
                .collect();
            prop_assert_eq!(got, oracle);
            prop_assert_eq!(PostingIndex::from_segment(&idx.to_segment()).unwrap(), idx);
        }
    }
}
