//! An on-disk lake: the catalog plus every store, behind one handle.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytics::{self, GroupComparison, KeywordRanking, Method, TupleComparison};
use crate::catalog::{Catalog, GroupExpr, JoinCandidate, ObjectId, ObjectKind, ObjectNode, PropValue};
use crate::docstore::DocStore;
use crate::error::{IoContext, LakeError, Result};
use crate::indexer::{self, IndexName, PostingIndex, ScoredObject, Snippet, TermQuery};
use crate::semantics::SemanticStore;
use crate::stats::LakeStats;
use crate::tablestore::{self, column_correlation, CorrelationResult, RelTable, TableStore};
use crate::textproc::{detect_language, Language};

pub const RAW_DIR: &str = "raw";
pub const CATALOG_DIR: &str = "_catalog";
pub const REFINED_DIR: &str = "_refined";
pub const INDEX_DIR: &str = "_index";
pub const SEMANTICS_DIR: &str = "_semantics";
pub const GROUPINGS_FILE: &str = "groupings.conf";
pub const LOCK_FILE: &str = "ingest.lock";
pub(crate) const GENERATION_FILE: &str = "generation";

pub(crate) const DEFAULT_GROUPINGS: &str = "\
# One grouping per line: [name =] property [month | year | width=N]
language = language
author = author
month = created month
year = created year
";

/// Handle on a lake directory. Reads go straight to the in-memory stores;
/// [`Lake::ingest`](crate::ingest) is the only writer of catalog content.
pub struct Lake {
    pub(crate) root: PathBuf,
    pub(crate) catalog: Catalog,
    pub(crate) tables: TableStore,
    pub(crate) docs: DocStore,
    pub(crate) doc_index: PostingIndex,
    pub(crate) table_index: PostingIndex,
    pub(crate) semantics: SemanticStore,
}

impl std::fmt::Debug for Lake {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Lake").field("root", &self.root).finish_non_exhaustive()
    }
}

impl Lake {
    /// Creates the directory layout (keeping anything already there) and
    /// opens the lake.
    pub fn init(root: impl AsRef<Path>) -> Result<Lake> {
        let root = root.as_ref();
        for d in [RAW_DIR, CATALOG_DIR, REFINED_DIR, INDEX_DIR, SEMANTICS_DIR] {
            let p = root.join(d);
            fs::create_dir_all(&p).at(&p)?;
        }
        let conf = root.join(GROUPINGS_FILE);
        if !conf.exists() {
            fs::write(&conf, DEFAULT_GROUPINGS).at(&conf)?;
        }
        Lake::open(root)
    }

    pub fn open(root: impl AsRef<Path>) -> Result<Lake> {
        let root = root.as_ref().to_path_buf();
        if !root.join(CATALOG_DIR).is_dir() {
            return Err(LakeError::not_found("lake", root.display()));
        }
        let catalog = Catalog::open(&root)?;
        let refined = root.join(REFINED_DIR);
        let mut tables = TableStore::open(refined.join(TableStore::SUBDIR))?;
        let docs = DocStore::open(refined.join(DocStore::SUBDIR))?;
        let index = root.join(INDEX_DIR);
        let doc_index = PostingIndex::load(
            &index.join(IndexName::DocumentIndex.dir_name()),
            IndexName::DocumentIndex,
        )?;
        let table_index = PostingIndex::load(&index.join(IndexName::TableIndex.dir_name()), IndexName::TableIndex)?;
        let semantics = SemanticStore::open(root.join(SEMANTICS_DIR))?;
        tables.set_aliases(table_aliases(&catalog));
        Ok(Lake {
            root,
            catalog,
            tables,
            docs,
            doc_index,
            table_index,
            semantics,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn tables(&self) -> &TableStore {
        &self.tables
    }

    pub fn docs(&self) -> &DocStore {
        &self.docs
    }

    pub fn posting_index(&self, name: IndexName) -> &PostingIndex {
        match name {
            IndexName::DocumentIndex => &self.doc_index,
            IndexName::TableIndex => &self.table_index,
        }
    }

    pub fn semantics(&self) -> &SemanticStore {
        &self.semantics
    }

    pub fn semantics_mut(&mut self) -> &mut SemanticStore {
        &mut self.semantics
    }

    /// Counter bumped by every ingest that changed the lake.
    pub fn generation(&self) -> u64 {
        read_generation(&self.root)
    }

    // ----- retrieval -----------------------------------------------------

    pub fn object(&self, id: ObjectId) -> Result<&ObjectNode> {
        self.catalog.object(id)
    }

    pub fn raw(&self, id: ObjectId) -> Result<Vec<u8>> {
        let path = self.root.join(&self.catalog.object(id)?.path);
        fs::read(&path).at(&path)
    }

    /// Language a document was indexed with.
    pub fn language_of(&self, id: ObjectId) -> Result<Language> {
        let o = self.catalog.object(id)?;
        Ok(o.properties
            .get("language")
            .and_then(PropValue::as_text)
            .and_then(|l| l.parse().ok())
            .filter(|l| *l != Language::Auto)
            .unwrap_or(Language::English))
    }

    pub fn search(&self, q: &TermQuery) -> Result<Vec<ScoredObject>> {
        let synonyms = self.semantics.synonym_source(q.thesaurus.as_deref())?;
        indexer::term_query(q, &self.doc_index, &self.table_index, Some(&synonyms))
    }

    pub fn navigate(&self, expr: &GroupExpr) -> Result<Vec<ObjectId>> {
        self.catalog.navigate(expr)
    }

    pub fn related(&self, id: ObjectId, k: usize) -> Result<Vec<(ObjectId, f64)>> {
        self.catalog.related_documents(id, k)
    }

    pub fn joinable(&self, id: ObjectId) -> Result<Vec<JoinCandidate>> {
        self.catalog.joinable_tables(id)
    }

    pub fn sql(&self, text: &str) -> Result<RelTable> {
        self.tables.query(text)
    }

    /// Refined table of a tabular object.
    pub fn table(&self, id: ObjectId) -> Result<&RelTable> {
        self.catalog.expect_kind(id, ObjectKind::Tabular, "table")?;
        self.tables
            .get(&tablestore::table_name(id))
            .ok_or_else(|| LakeError::not_found("refined table", id))
    }

    pub fn column_correlation(
        &self,
        a: crate::catalog::ColumnId,
        b: crate::catalog::ColumnId,
    ) -> Result<CorrelationResult> {
        let ca = self.catalog.column(a)?;
        let cb = self.catalog.column(b)?;
        let ta = self.table(ca.object_id)?;
        let tb = self.table(cb.object_id)?;
        let va: Vec<_> = ta.column_values(col_index(ta, &ca.name)?).cloned().collect();
        let vb: Vec<_> = tb.column_values(col_index(tb, &cb.name)?).cloned().collect();
        column_correlation((a, ca.dtype, &va), (b, cb.dtype, &vb))
    }

    // ----- textual analytics ---------------------------------------------

    fn documents_in(&self, scope: Option<&BTreeSet<ObjectId>>) -> Result<Vec<ObjectId>> {
        match scope {
            None => Ok(self
                .catalog
                .objects_of_kind(ObjectKind::Textual)
                .map(|o| o.id)
                .collect()),
            Some(ids) => {
                for id in ids {
                    self.catalog
                        .expect_kind(*id, ObjectKind::Textual, "document analysis")?;
                }
                Ok(ids.iter().copied().collect())
            }
        }
    }

    /// Most frequent terms over the documents in `scope` (all documents
    /// when `None`), optionally restricted to a dictionary.
    pub fn top_keywords(
        &self,
        scope: Option<&BTreeSet<ObjectId>>,
        k: usize,
        dictionary: Option<&str>,
    ) -> Result<KeywordRanking> {
        let dict = dictionary.map(|d| self.semantics.dictionary(d)).transpose()?;
        let ids = self.documents_in(scope)?;
        let bows = ids
            .iter()
            .map(|id| {
                self.docs
                    .bow(*id)
                    .ok_or_else(|| LakeError::not_found("bag of words", id))
            })
            .collect::<Result<Vec<_>>>()?;
        analytics::top_keywords(bows, k, dict)
    }

    /// Mean BM25 score of each group of a grouping for the given terms.
    pub fn score_by_group<S: AsRef<str>>(
        &self,
        grouping: &str,
        terms: &[S],
        language: Language,
    ) -> Result<BTreeMap<String, f64>> {
        if terms.iter().all(|t| t.as_ref().trim().is_empty()) {
            return Err(LakeError::invalid("score_by_group needs at least one term"));
        }
        let g = self.catalog.resolve_grouping(grouping)?;
        let terms: Vec<String> = terms.iter().map(|t| t.as_ref().to_string()).collect();
        let groups = self
            .catalog
            .groups(g.id)
            .map(|grp| Ok((grp.label.as_str(), self.catalog.members(grp.id)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(indexer::group_scores(&self.doc_index, &terms, language, groups))
    }

    /// Concordance snippets. Without a scope, every document containing at
    /// least one of the terms is scanned.
    pub fn highlights<S: AsRef<str>>(
        &self,
        scope: Option<&BTreeSet<ObjectId>>,
        terms: &[S],
        window: usize,
        max_snippets: usize,
    ) -> Result<Vec<Snippet>> {
        let terms: Vec<String> = terms.iter().map(|t| t.as_ref().to_string()).collect();
        if terms.iter().all(|t| t.trim().is_empty()) {
            return Err(LakeError::invalid("highlights need at least one term"));
        }
        let ids: Vec<ObjectId> = match scope {
            Some(_) => self.documents_in(scope)?,
            None => {
                let q = TermQuery {
                    mode: indexer::MatchMode::Any,
                    target: indexer::Target::Documents,
                    ..TermQuery::all(&terms)
                };
                let mut ids: Vec<ObjectId> = indexer::term_query(&q, &self.doc_index, &self.table_index, None)?
                    .into_iter()
                    .map(|s| s.object)
                    .collect();
                ids.sort();
                ids
            }
        };
        let mut out = Vec::new();
        for id in ids {
            let text = String::from_utf8_lossy(&self.raw(id)?).into_owned();
            out.extend(indexer::highlight_text(
                id,
                &text,
                self.language_of(id)?,
                &terms,
                window,
                max_snippets,
            ));
        }
        Ok(out)
    }

    /// Mean document embedding of every group of a grouping that has at
    /// least one embedded member.
    pub fn group_means(&self, grouping: &str) -> Result<BTreeMap<String, Vec<f64>>> {
        let g = self.catalog.resolve_grouping(grouping)?;
        let mut groups = Vec::new();
        for grp in self.catalog.groups(g.id) {
            let members = self.catalog.members(grp.id)?;
            groups.push((
                grp.label.clone(),
                members
                    .iter()
                    .filter_map(|m| self.docs.embedding(*m))
                    .collect::<Vec<_>>(),
            ));
        }
        analytics::group_mean_embeddings(groups)
    }

    pub fn compare_groups(&self, grouping: &str, method: Method) -> Result<GroupComparison> {
        analytics::compare_groups(&self.group_means(grouping)?, method)
    }

    pub fn tuple_comparison(&self, sql: &str, method: Method) -> Result<TupleComparison> {
        analytics::tuple_comparison(&self.sql(sql)?, method)
    }

    // ----- administration ------------------------------------------------

    pub fn stats(&self) -> Result<LakeStats> {
        LakeStats::measure(&self.root)
    }

    /// Catalog and index invariant violations, plus refined references that
    /// do not resolve to a stored representation.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut problems = self.catalog.check_invariants();
        problems.extend(self.doc_index.check_invariants());
        problems.extend(self.table_index.check_invariants());
        for r in self.catalog.all_refined() {
            let ok = match r.rep_kind {
                crate::catalog::RepKind::BagOfWords => self.docs.bow(r.object_id).is_some(),
                crate::catalog::RepKind::Embedding => self.docs.embedding(r.object_id).is_some(),
                crate::catalog::RepKind::RelationalTable => {
                    self.tables.get(&tablestore::table_name(r.object_id)).is_some()
                }
            };
            if !ok {
                problems.push(format!("refined {}: nothing stored for object {}", r.id, r.object_id));
            }
        }
        for o in self.catalog.objects_of_kind(ObjectKind::Textual) {
            if !self.doc_index.contains_object(o.id) && self.docs.bow(o.id).is_some_and(|b| !b.is_empty()) {
                problems.push(format!("document {} missing from the document index", o.id));
            }
        }
        problems
    }
}

fn col_index(t: &RelTable, name: &str) -> Result<usize> {
    t.column_index(name)
        .ok_or_else(|| LakeError::not_found("column", format!("{}.{name}", t.name)))
}

/// `(file stem, canonical table name)` for every tabular object.
pub(crate) fn table_aliases(catalog: &Catalog) -> Vec<(String, String)> {
    catalog
        .objects_of_kind(ObjectKind::Tabular)
        .filter_map(|o| {
            let stem = Path::new(&o.path).file_stem()?.to_str()?;
            let alias: String = stem
                .chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() {
                        c.to_ascii_lowercase()
                    } else {
                        '_'
                    }
                })
                .collect();
            let valid = alias
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
            valid.then(|| (alias, tablestore::table_name(o.id)))
        })
        .collect()
}

/// Generation recorded on disk, 0 before the first ingest.
pub fn read_generation(root: &Path) -> u64 {
    fs::read_to_string(root.join(CATALOG_DIR).join(GENERATION_FILE))
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(0)
}

/// Language for a text: an explicit `language` property if it names a
/// supported language, else detection.
pub(crate) fn text_language(declared: Option<&PropValue>, text: &str) -> Language {
    declared
        .and_then(PropValue::as_text)
        .and_then(|l| l.parse::<Language>().ok())
        .filter(|l| *l != Language::Auto)
        .unwrap_or_else(|| detect_language(text))
}

/// One entry of `groupings.conf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupingSpec {
    pub name: String,
    pub property: String,
    pub binning: Option<crate::catalog::Binning>,
}

/// Parses `groupings.conf`: blank lines and `#` comments are ignored, every
/// other line reads `[name =] property [binning]`. Without a name, the
/// grouping is named after the property.
pub fn parse_groupings(text: &str) -> Result<Vec<GroupingSpec>> {
    let mut out: Vec<GroupingSpec> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let (name, rest) = match line.split_once('=') {
            Some((n, r)) if !n.trim().contains(char::is_whitespace) => (Some(n.trim()), r.trim()),
            _ => (None, line),
        };
        let mut words = rest.split_whitespace();
        let property = words
            .next()
            .ok_or_else(|| LakeError::invalid(format!("{GROUPINGS_FILE} line {}: missing property", i + 1)))?;
        let binning = words.next().map(str::parse).transpose()?;
        if words.next().is_some() {
            return Err(LakeError::invalid(format!(
                "{GROUPINGS_FILE} line {}: trailing words",
                i + 1
            )));
        }
        let name = name.unwrap_or(property);
        if name.is_empty() || out.iter().any(|g| g.name == name) {
            return Err(LakeError::invalid(format!(
                "{GROUPINGS_FILE} line {}: empty or repeated grouping name",
                i + 1
            )));
        }
        out.push(GroupingSpec {
            name: name.to_string(),
            property: property.to_string(),
            binning,
        });
    }
    Ok(out)
}
