//! The ingest pipeline: per-file extraction, refinement and indexing,
//! followed by corpus-level passes.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::catalog::{ObjectDescriptor, ObjectId, ObjectKind, PropValue, Properties, RepKind};
use crate::docstore::DocStore;
use crate::error::{IoContext, LakeError, Result};
use crate::indexer::IndexName;
use crate::lake::{
    parse_groupings, read_generation, table_aliases, text_language, Lake, CATALOG_DIR, GENERATION_FILE, GROUPINGS_FILE,
    INDEX_DIR, LOCK_FILE, RAW_DIR,
};
use crate::tablestore::{
    detect_joinability, ingest_table, table_name, RelTable, TableColumns, TableStore, DEFAULT_JOIN_THRESHOLD,
};
use crate::textproc::{
    bag_of_words, build_embedding_model, build_similarity_links, embed, normalize, Language, DEFAULT_DIMS,
    DEFAULT_SIMILARITY_K,
};

pub const SIDECAR_SUFFIX: &str = ".meta.json";
/// Corpus growth (relative to the last build) that triggers a model rebuild.
pub const MODEL_REBUILD_GROWTH: f64 = 0.10;
pub const EMBEDDING_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SidecarPolicy {
    /// Merge `<file>.meta.json` over the filesystem properties.
    #[default]
    Merge,
    Ignore,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestFailure {
    pub path: String,
    pub stage: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub files_walked: usize,
    pub objects_added: usize,
    pub objects_updated: usize,
    pub objects_unchanged: usize,
    /// Milliseconds per stage.
    pub timings: BTreeMap<String, f64>,
    pub failures: Vec<IngestFailure>,
    pub warnings: Vec<String>,
}

impl IngestReport {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        *self.timings.entry(stage.to_string()).or_default() += start.elapsed().as_secs_f64() * 1e3;
        out
    }

    fn fail(&mut self, path: &str, stage: &str, reason: impl ToString) {
        self.failures.push(IngestFailure {
            path: path.to_string(),
            stage: stage.to_string(),
            reason: reason.to_string(),
        });
    }
}

/// Held for the duration of an ingest; readers treat its presence as the
/// exclusive barrier.
struct LockGuard(PathBuf);

impl LockGuard {
    fn acquire(root: &Path) -> Result<LockGuard> {
        let path = root.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => {
                let _ = fs::write(&path, std::process::id().to_string());
                Ok(LockGuard(path))
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(LakeError::Busy(format!(
                "another ingest holds {} (remove it if no ingest is running)",
                path.display()
            ))),
            Err(e) => Err(LakeError::io(path, e)),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// True while an ingest holds the lake.
pub fn ingest_in_progress(root: &Path) -> bool {
    root.join(LOCK_FILE).exists()
}

/// Filesystem facts, detected language and sidecar properties of one file.
/// Returns the properties and any warning about the sidecar.
pub fn extract_properties(
    path: &Path,
    text: Option<&str>,
    policy: SidecarPolicy,
) -> Result<(Properties, Option<String>)> {
    let meta = fs::metadata(path).at(path)?;
    let mut props = Properties::new();
    props.insert("size".into(), PropValue::Int(meta.len() as i64));
    if let Ok(modified) = meta.modified() {
        let t: chrono::DateTime<chrono::Utc> = modified.into();
        props.insert("modified".into(), t.format("%Y-%m-%dT%H:%M:%SZ").to_string().into());
    }
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let mime = match ext.as_str() {
        "md" => "text/markdown",
        "csv" => "text/csv",
        _ => "text/plain",
    };
    props.insert("mime_type".into(), mime.into());
    if let Some(text) = text {
        props.insert("language".into(), text_language(None, text).code().into());
    }
    if policy == SidecarPolicy::Ignore {
        return Ok((props, None));
    }
    let sidecar = sidecar_path(path);
    if !sidecar.exists() {
        return Ok((props, None));
    }
    let warn = |msg: String| Ok((props.clone(), Some(format!("{}: {msg}", sidecar.display()))));
    let bytes = fs::read(&sidecar).at(&sidecar)?;
    let value: serde_json::Value = match serde_json::from_slice(&bytes) {
        Ok(v) => v,
        Err(e) => return warn(format!("malformed sidecar ignored ({e})")),
    };
    let Some(map) = value.as_object() else {
        return warn("sidecar is not a JSON object, ignored".into());
    };
    let mut merged = props.clone();
    let mut skipped = Vec::new();
    for (k, v) in map {
        let pv = match v {
            serde_json::Value::String(s) => PropValue::Text(s.clone()),
            serde_json::Value::Bool(b) => PropValue::Bool(*b),
            serde_json::Value::Number(n) => match n.as_i64() {
                Some(i) => PropValue::Int(i),
                None => PropValue::Real(n.as_f64().unwrap_or(f64::NAN)),
            },
            _ => {
                skipped.push(k.as_str());
                continue;
            }
        };
        merged.insert(k.clone(), pv);
    }
    let warning = (!skipped.is_empty()).then(|| {
        format!(
            "{}: non-scalar properties ignored: {}",
            sidecar.display(),
            skipped.join(", ")
        )
    });
    Ok((merged, warning))
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(SIDECAR_SUFFIX);
    PathBuf::from(s)
}

fn is_sidecar(path: &Path) -> bool {
    path.file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| n.ends_with(SIDECAR_SUFFIX))
}

/// A walked file and where it lives inside `raw/`.
struct Source {
    src: PathBuf,
    rel: String,
}

enum Parsed {
    Text { text: String },
    Table(RelTable),
}

struct Prepared {
    rel: String,
    kind: ObjectKind,
    hash: String,
    parsed: std::result::Result<Parsed, (&'static str, String)>,
}

fn content_hash(file: &[u8], sidecar: Option<&[u8]>) -> String {
    let mut h = Sha256::new();
    h.update((file.len() as u64).to_le_bytes());
    h.update(file);
    if let Some(s) = sidecar {
        h.update(s);
    }
    format!("sha256:{}", hex::encode(h.finalize()))
}

fn prepare(lake_root: &Path, s: &Source, kind: ObjectKind, policy: SidecarPolicy) -> Result<Prepared> {
    let dest = lake_root.join(&s.rel);
    let bytes = fs::read(&s.src).at(&s.src)?;
    let side_src = sidecar_path(&s.src);
    let sidecar = if policy == SidecarPolicy::Merge && side_src.exists() {
        Some(fs::read(&side_src).at(&side_src)?)
    } else {
        None
    };
    if dest != s.src {
        if let Some(dir) = dest.parent() {
            fs::create_dir_all(dir).at(dir)?;
        }
        if fs::read(&dest).ok().as_deref() != Some(&bytes[..]) {
            fs::write(&dest, &bytes).at(&dest)?;
        }
        let side_dest = sidecar_path(&dest);
        match &sidecar {
            Some(sc) => {
                if fs::read(&side_dest).ok().as_deref() != Some(&sc[..]) {
                    fs::write(&side_dest, sc).at(&side_dest)?;
                }
            }
            None if side_dest.exists() => fs::remove_file(&side_dest).at(&side_dest)?,
            None => {}
        }
    }
    let hash = content_hash(&bytes, sidecar.as_deref());
    let parsed = match kind {
        ObjectKind::Textual => match String::from_utf8(bytes) {
            Ok(text) => Ok(Parsed::Text { text }),
            Err(e) => Err(("extract_text", format!("not valid UTF-8: {e}"))),
        },
        ObjectKind::Tabular => match ingest_table("pending", &bytes) {
            Ok(t) => Ok(Parsed::Table(t)),
            Err(e) => Err(("ingest_table", e.to_string())),
        },
    };
    Ok(Prepared {
        rel: s.rel.clone(),
        kind,
        hash,
        parsed,
    })
}

fn rel_string(p: &Path) -> Option<String> {
    let parts: Option<Vec<&str>> = p.components().map(|c| c.as_os_str().to_str()).collect();
    parts.map(|v| v.join("/"))
}

impl Lake {
    /// Ingests a file or a directory tree. Files outside `<lake>/raw/` are
    /// copied under it first (a directory's contents keep their relative
    /// paths, a single file lands at the top). Per-file problems are
    /// reported, not raised.
    pub fn ingest(&mut self, path: impl AsRef<Path>, policy: SidecarPolicy) -> Result<IngestReport> {
        let _lock = LockGuard::acquire(&self.root)?;
        let path = path.as_ref();
        if !path.exists() {
            return Err(LakeError::not_found("ingest path", path.display()));
        }
        let mut report = IngestReport::default();

        let sources = report.time("walk", || self.walk(path))?;
        let mut walkable = Vec::new();
        for s in sources {
            report.files_walked += 1;
            let kind = s
                .src
                .extension()
                .and_then(|e| e.to_str())
                .and_then(ObjectKind::from_extension);
            match kind {
                Some(k) => walkable.push((s, k)),
                None => report.fail(&s.rel, "walk", "unsupported file extension"),
            }
        }

        let root = self.root.clone();
        let prepared: Vec<(String, Result<Prepared>)> = report.time("read_parse", || {
            walkable
                .par_iter()
                .map(|(s, k)| (s.rel.clone(), prepare(&root, s, *k, policy)))
                .collect()
        });

        let mut changed_docs = BTreeSet::new();
        let mut changed_tables = false;
        for (rel, p) in prepared {
            let p = match p {
                Ok(p) => p,
                Err(e) => {
                    report.fail(&rel, "read", e);
                    continue;
                }
            };
            let existing = self
                .catalog
                .object_by_path(&p.rel)
                .map(|o| (o.id, o.properties.clone()));
            if let Some((_, props)) = &existing {
                if props.get("content_hash").and_then(PropValue::as_text) == Some(p.hash.as_str()) {
                    report.objects_unchanged += 1;
                    continue;
                }
            }
            let parsed = match p.parsed {
                Ok(parsed) => parsed,
                Err((stage, reason)) => {
                    report.fail(&p.rel, stage, reason);
                    continue;
                }
            };
            let full = self.root.join(&p.rel);
            let text = match &parsed {
                Parsed::Text { text } => Some(text.as_str()),
                Parsed::Table(_) => None,
            };
            let (mut props, warning) =
                match report.time("extract_properties", || extract_properties(&full, text, policy)) {
                    Ok(v) => v,
                    Err(e) => {
                        report.fail(&p.rel, "extract_properties", e);
                        continue;
                    }
                };
            report.warnings.extend(warning);
            props.insert("content_hash".into(), p.hash.clone().into());

            let registered = report.time("register", || match &existing {
                Some((id, _)) => self.catalog.update_properties(*id, props.clone()).map(|_| *id),
                None => self.catalog.register_object(ObjectDescriptor {
                    kind: p.kind,
                    path: p.rel.clone(),
                    properties: props.clone(),
                }),
            });
            let id = match registered {
                Ok(id) => id,
                Err(e) => {
                    report.fail(&p.rel, "register", e);
                    continue;
                }
            };
            let refined = match parsed {
                Parsed::Text { text } => {
                    let language = text_language(props.get("language"), &text);
                    report.time("refine_index", || self.refine_document(id, &text, language))
                }
                Parsed::Table(table) => report.time("refine_index", || self.refine_table(id, table)),
            };
            if let Err(e) = refined {
                report.fail(&p.rel, "refine", e);
                continue;
            }
            match p.kind {
                ObjectKind::Textual => {
                    changed_docs.insert(id);
                }
                ObjectKind::Tabular => changed_tables = true,
            }
            if existing.is_some() {
                report.objects_updated += 1;
            } else {
                report.objects_added += 1;
            }
        }

        let changed = !changed_docs.is_empty() || changed_tables;
        if !changed_docs.is_empty() || self.docs.model().is_none() && !self.docs.bows().is_empty() {
            let rebuilt = report.time("embedding_model", || self.refresh_model())?;
            report.time("embed", || self.embed_documents(rebuilt, &changed_docs))?;
            report.time("similarity_links", || -> Result<()> {
                let edges = build_similarity_links(self.docs.embeddings(), DEFAULT_SIMILARITY_K)?;
                self.catalog.set_similarity(edges)
            })?;
        }
        if changed_tables {
            report.time("joinability", || self.refresh_joinability())?;
            self.tables.set_aliases(table_aliases(&self.catalog));
        }
        let warnings = report.time("groupings", || self.refresh_groupings())?;
        report.warnings.extend(warnings);

        if changed {
            report.time("persist", || self.persist())?;
        } else if !self.root.join(CATALOG_DIR).join("snapshot.jsonl").exists() {
            self.catalog.checkpoint()?;
        }
        Ok(report)
    }

    fn walk(&self, path: &Path) -> Result<Vec<Source>> {
        let raw = self.root.join(RAW_DIR);
        let canon_raw = raw.canonicalize().at(&raw)?;
        let canon = path.canonicalize().at(path)?;
        let canon_root = self.root.canonicalize().at(&self.root)?;
        let (walk_root, inside) = if canon == canon_root {
            (canon_raw.clone(), true)
        } else {
            (canon.clone(), canon.starts_with(&canon_raw))
        };
        if !inside && canon_root.starts_with(&canon) {
            return Err(LakeError::invalid("cannot ingest a directory containing the lake"));
        }
        let single_file = walk_root.is_file();
        let mut out = Vec::new();
        let walker = WalkDir::new(&walk_root).follow_links(false).sort_by_file_name();
        for entry in walker {
            let entry = entry.map_err(|e| LakeError::invalid(format!("walking {}: {e}", walk_root.display())))?;
            if !entry.file_type().is_file() || is_sidecar(entry.path()) {
                continue;
            }
            let hidden = entry
                .path()
                .strip_prefix(&walk_root)
                .ok()
                .is_some_and(|r| r.components().any(|c| c.as_os_str().to_string_lossy().starts_with('.')));
            if hidden {
                continue;
            }
            let src = entry.path().to_path_buf();
            let rel_in_raw = if inside {
                src.strip_prefix(&canon_raw).expect("walked under raw").to_path_buf()
            } else if single_file {
                PathBuf::from(src.file_name().expect("file has a name"))
            } else {
                src.strip_prefix(&walk_root).expect("walked under root").to_path_buf()
            };
            let rel = rel_string(&Path::new(RAW_DIR).join(&rel_in_raw))
                .ok_or_else(|| LakeError::invalid(format!("non UTF-8 path {}", src.display())))?;
            out.push(Source { src, rel });
        }
        Ok(out)
    }

    fn refine_document(&mut self, id: ObjectId, text: &str, language: Language) -> Result<()> {
        let tokens = normalize(text, language);
        let terms: Vec<&str> = tokens.iter().map(|t| t.term.as_str()).collect();
        self.docs.put_bow(id, bag_of_words(&terms, None));
        self.catalog
            .set_refined(id, RepKind::BagOfWords, DocStore::bow_locator(id))?;
        self.doc_index.remove(id);
        self.doc_index.index_tokens(id, &tokens);
        Ok(())
    }

    fn refine_table(&mut self, id: ObjectId, mut table: RelTable) -> Result<()> {
        table.name = table_name(id);
        self.catalog.attach_columns(id, table.column_stats())?;
        let language = self.language_of(id)?;
        self.table_index.remove(id);
        self.table_index.index_table_strings(id, &table, language);
        let locator = TableStore::locator(&table.name);
        self.tables.put(table)?;
        self.catalog.set_refined(id, RepKind::RelationalTable, locator)?;
        Ok(())
    }

    /// Rebuilds the embedding model when none exists or the corpus grew by
    /// at least [`MODEL_REBUILD_GROWTH`]. Returns whether it was rebuilt.
    fn refresh_model(&mut self) -> Result<bool> {
        let n = self.docs.bows().len();
        let stale = match self.docs.model() {
            None => true,
            Some(m) => n as f64 >= m.doc_count as f64 * (1.0 + MODEL_REBUILD_GROWTH),
        };
        if stale && n > 0 {
            let corpus: Vec<_> = self.docs.bows().values().collect();
            let model = build_embedding_model(&corpus, DEFAULT_DIMS, EMBEDDING_SEED)?;
            self.docs.set_model(model);
        }
        Ok(stale && n > 0)
    }

    fn embed_documents(&mut self, all: bool, changed: &BTreeSet<ObjectId>) -> Result<()> {
        let Some(model) = self.docs.model().cloned() else {
            return Ok(());
        };
        let targets: Vec<ObjectId> = self
            .docs
            .bows()
            .keys()
            .copied()
            .filter(|id| all || changed.contains(id) || self.docs.embedding(*id).is_none())
            .collect();
        let vectors: Vec<_> = targets
            .par_iter()
            .map(|id| {
                (
                    *id,
                    embed(self.docs.bow(*id).expect("target has a bag of words"), &model),
                )
            })
            .collect();
        for (id, v) in vectors {
            self.docs.put_embedding(id, v);
            self.catalog
                .set_refined(id, RepKind::Embedding, DocStore::embedding_locator(id))?;
        }
        Ok(())
    }

    fn refresh_joinability(&mut self) -> Result<()> {
        let mut inputs: Vec<(ObjectId, &RelTable, Vec<crate::catalog::ColumnId>)> = Vec::new();
        for o in self.catalog.objects_of_kind(ObjectKind::Tabular) {
            let Some(t) = self.tables.get(&table_name(o.id)) else {
                continue;
            };
            let by_name: BTreeMap<&str, crate::catalog::ColumnId> =
                self.catalog.columns(o.id).map(|c| (c.name.as_str(), c.id)).collect();
            let ids = t
                .schema
                .iter()
                .map(|f| {
                    by_name
                        .get(f.name.as_str())
                        .copied()
                        .ok_or_else(|| LakeError::not_found("column", format!("{}.{}", t.name, f.name)))
                })
                .collect::<Result<Vec<_>>>()?;
            inputs.push((o.id, t, ids));
        }
        let cols: Vec<TableColumns<'_>> = inputs
            .iter()
            .map(|(object, table, ids)| TableColumns {
                object: *object,
                table,
                column_ids: ids,
            })
            .collect();
        let edges = detect_joinability(&cols, DEFAULT_JOIN_THRESHOLD);
        self.catalog.set_joinability(edges)
    }

    /// Applies `groupings.conf`. Groupings whose property no object has yet
    /// are skipped with a warning.
    fn refresh_groupings(&mut self) -> Result<Vec<String>> {
        let conf = self.root.join(GROUPINGS_FILE);
        let text = match fs::read_to_string(&conf) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(LakeError::io(conf, e)),
        };
        let mut warnings = Vec::new();
        if self.catalog.objects().next().is_none() {
            return Ok(warnings);
        }
        for spec in parse_groupings(&text)? {
            match self.catalog.create_grouping(&spec.name, &spec.property, spec.binning) {
                Ok(_) => {}
                Err(LakeError::Precondition(msg)) => warnings.push(format!("grouping {}: {msg}", spec.name)),
                Err(e) => return Err(e),
            }
        }
        Ok(warnings)
    }

    fn persist(&mut self) -> Result<()> {
        let index = self.root.join(INDEX_DIR);
        self.doc_index.save(&index.join(IndexName::DocumentIndex.dir_name()))?;
        self.table_index.save(&index.join(IndexName::TableIndex.dir_name()))?;
        self.docs.save()?;
        self.catalog.checkpoint()?;
        let generation = read_generation(&self.root) + 1;
        let path = self.root.join(CATALOG_DIR).join(GENERATION_FILE);
        fs::write(&path, generation.to_string()).at(&path)
    }
}
