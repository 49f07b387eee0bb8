//! The metadata graph: objects, columns, refined-representation references,
//! groupings and inter-object edges.
//!
//! State lives in memory and is persisted under `<lake>/_catalog/` as
//!
//! * `snapshot.jsonl` – one [`Mutation`] per line that rebuilds the full
//!   state from scratch, preceded by a header line;
//! * `journal.jsonl` – mutations applied since the snapshot, one per line.
//!
//! Opening replays the snapshot and then the journal. A torn final journal
//! line (crash mid-write) is dropped with a warning.

mod model;
mod navigate;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{IoContext, LakeError, Result};

pub use model::*;
pub use navigate::GroupExpr;

const SNAPSHOT_FILE: &str = "snapshot.jsonl";
const JOURNAL_FILE: &str = "journal.jsonl";
const SNAPSHOT_FORMAT: &str = "lake-catalog";
const SNAPSHOT_VERSION: u32 = 1;
/// Journal length that triggers an automatic snapshot.
const COMPACT_AFTER: usize = 2000;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub object: u64,
    pub column: u64,
    pub refined: u64,
    pub grouping: u64,
    pub group: u64,
}

/// One journaled change to the graph. Every variant has replace semantics
/// so replaying a mutation twice is harmless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    Header {
        format: String,
        version: u32,
    },
    Counters(Counters),
    PutObject(ObjectNode),
    SetColumns {
        object_id: ObjectId,
        columns: Vec<ColumnNode>,
    },
    SetRefined(RefinedRef),
    PutGrouping {
        grouping: Grouping,
        groups: Vec<(Group, Vec<ObjectId>)>,
    },
    SetSimilarity(Vec<SimilarityEdge>),
    SetJoinability(Vec<JoinabilityEdge>),
}

#[derive(Debug, Clone, Default)]
struct State {
    counters: Counters,
    objects: BTreeMap<ObjectId, ObjectNode>,
    by_path: HashMap<String, ObjectId>,
    columns: BTreeMap<ColumnId, ColumnNode>,
    columns_of: BTreeMap<ObjectId, Vec<ColumnId>>,
    refined: BTreeMap<RefinedId, RefinedRef>,
    groupings: BTreeMap<GroupingId, Grouping>,
    groups: BTreeMap<GroupId, Group>,
    groups_of: BTreeMap<GroupingId, Vec<GroupId>>,
    members: BTreeMap<GroupId, BTreeSet<ObjectId>>,
    /// Outgoing similarity edges per source, in rank order.
    similarity: BTreeMap<ObjectId, Vec<SimilarityEdge>>,
    joinability: Vec<JoinabilityEdge>,
}

impl State {
    fn bump(counter: &mut u64, id: u64) {
        if *counter <= id {
            *counter = id + 1;
        }
    }

    fn apply(&mut self, m: Mutation) {
        match m {
            Mutation::Header { .. } => {}
            Mutation::Counters(c) => {
                let cur = &mut self.counters;
                cur.object = cur.object.max(c.object);
                cur.column = cur.column.max(c.column);
                cur.refined = cur.refined.max(c.refined);
                cur.grouping = cur.grouping.max(c.grouping);
                cur.group = cur.group.max(c.group);
            }
            Mutation::PutObject(node) => {
                Self::bump(&mut self.counters.object, node.id.0);
                if let Some(old) = self.objects.get(&node.id) {
                    self.by_path.remove(&old.path);
                }
                self.by_path.insert(node.path.clone(), node.id);
                self.objects.insert(node.id, node);
            }
            Mutation::SetColumns { object_id, columns } => {
                for old in self.columns_of.remove(&object_id).unwrap_or_default() {
                    self.columns.remove(&old);
                }
                let ids = columns.iter().map(|c| c.id).collect();
                for c in columns {
                    Self::bump(&mut self.counters.column, c.id.0);
                    self.columns.insert(c.id, c);
                }
                self.columns_of.insert(object_id, ids);
            }
            Mutation::SetRefined(r) => {
                Self::bump(&mut self.counters.refined, r.id.0);
                self.refined
                    .retain(|_, x| !(x.object_id == r.object_id && x.rep_kind == r.rep_kind));
                self.refined.insert(r.id, r);
            }
            Mutation::PutGrouping { grouping, groups } => {
                Self::bump(&mut self.counters.grouping, grouping.id.0);
                for old in self.groups_of.remove(&grouping.id).unwrap_or_default() {
                    self.groups.remove(&old);
                    self.members.remove(&old);
                }
                let mut ids = Vec::with_capacity(groups.len());
                for (g, members) in groups {
                    Self::bump(&mut self.counters.group, g.id.0);
                    ids.push(g.id);
                    self.members.insert(g.id, members.into_iter().collect());
                    self.groups.insert(g.id, g);
                }
                self.groups_of.insert(grouping.id, ids);
                self.groupings.insert(grouping.id, grouping);
            }
            Mutation::SetSimilarity(edges) => {
                self.similarity.clear();
                for e in edges {
                    self.similarity.entry(e.src).or_default().push(e);
                }
                for list in self.similarity.values_mut() {
                    list.sort_by_key(|e| e.rank);
                }
            }
            Mutation::SetJoinability(edges) => self.joinability = edges,
        }
    }

    /// The mutation sequence that rebuilds this state.
    fn records(&self) -> Vec<Mutation> {
        let mut out = vec![
            Mutation::Header {
                format: SNAPSHOT_FORMAT.into(),
                version: SNAPSHOT_VERSION,
            },
            Mutation::Counters(self.counters.clone()),
        ];
        out.extend(self.objects.values().cloned().map(Mutation::PutObject));
        for (object_id, ids) in &self.columns_of {
            out.push(Mutation::SetColumns {
                object_id: *object_id,
                columns: ids.iter().map(|c| self.columns[c].clone()).collect(),
            });
        }
        out.extend(self.refined.values().cloned().map(Mutation::SetRefined));
        for (gid, grouping) in &self.groupings {
            let groups = self.groups_of[gid]
                .iter()
                .map(|g| (self.groups[g].clone(), self.members[g].iter().copied().collect()))
                .collect();
            out.push(Mutation::PutGrouping {
                grouping: grouping.clone(),
                groups,
            });
        }
        out.push(Mutation::SetSimilarity(
            self.similarity.values().flatten().cloned().collect(),
        ));
        out.push(Mutation::SetJoinability(self.joinability.clone()));
        out
    }
}

/// One joinability relation seen from a given table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinCandidate {
    pub own_column: String,
    pub own_column_id: ColumnId,
    pub foreign_object: ObjectId,
    pub foreign_column: String,
    pub foreign_column_id: ColumnId,
    /// True when the own column is the foreign-key side.
    pub own_is_fk: bool,
    pub inclusion: f64,
}

pub struct Catalog {
    lake_root: PathBuf,
    dir: PathBuf,
    state: State,
    journal: Option<BufWriter<File>>,
    journal_len: usize,
}

impl Catalog {
    /// Opens (creating if needed) the catalog stored under `<lake_root>/_catalog`.
    pub fn open(lake_root: impl AsRef<Path>) -> Result<Self> {
        let lake_root = lake_root.as_ref().to_path_buf();
        let dir = lake_root.join("_catalog");
        fs::create_dir_all(&dir).at(&dir)?;
        let mut state = State::default();
        let snapshot = dir.join(SNAPSHOT_FILE);
        if snapshot.exists() {
            for m in read_records(&snapshot, false)? {
                state.apply(m);
            }
        }
        let journal_path = dir.join(JOURNAL_FILE);
        let mut journal_len = 0;
        if journal_path.exists() {
            for m in read_records(&journal_path, true)? {
                state.apply(m);
                journal_len += 1;
            }
        }
        Ok(Catalog {
            lake_root,
            dir,
            state,
            journal: None,
            journal_len,
        })
    }

    pub fn lake_root(&self) -> &Path {
        &self.lake_root
    }

    fn commit(&mut self, m: Mutation) -> Result<()> {
        let path = self.dir.join(JOURNAL_FILE);
        if self.journal.is_none() {
            let f = OpenOptions::new().create(true).append(true).open(&path).at(&path)?;
            self.journal = Some(BufWriter::new(f));
        }
        let w = self.journal.as_mut().expect("journal opened above");
        serde_json::to_writer(&mut *w, &m)?;
        w.write_all(b"\n").at(&path)?;
        w.flush().at(&path)?;
        self.state.apply(m);
        self.journal_len += 1;
        if self.journal_len >= COMPACT_AFTER {
            self.checkpoint()?;
        }
        Ok(())
    }

    /// Writes a fresh snapshot and truncates the journal.
    pub fn checkpoint(&mut self) -> Result<()> {
        let tmp = self.dir.join("snapshot.jsonl.tmp");
        fs::write(&tmp, self.dump()).at(&tmp)?;
        let snapshot = self.dir.join(SNAPSHOT_FILE);
        fs::rename(&tmp, &snapshot).at(&snapshot)?;
        self.journal = None;
        let journal = self.dir.join(JOURNAL_FILE);
        if journal.exists() {
            fs::remove_file(&journal).at(&journal)?;
        }
        self.journal_len = 0;
        Ok(())
    }

    /// Full deterministic dump of the graph in snapshot format.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for r in self.state.records() {
            out.push_str(&serde_json::to_string(&r).expect("catalog records serialize"));
            out.push('\n');
        }
        out
    }

    // ----- objects -------------------------------------------------------

    /// Registers a raw file. The path is relative to the lake root and must
    /// exist; its extension must agree with `kind`.
    pub fn register_object(&mut self, desc: ObjectDescriptor) -> Result<ObjectId> {
        let path = clean_relative(&desc.path)?;
        if self.state.by_path.contains_key(&path) {
            return Err(LakeError::Duplicate {
                what: "object path",
                id: path,
            });
        }
        let full = self.lake_root.join(&path);
        if !full.is_file() {
            return Err(LakeError::not_found("raw file", full.display()));
        }
        let ext_kind = Path::new(&path)
            .extension()
            .and_then(|e| e.to_str())
            .and_then(ObjectKind::from_extension);
        if ext_kind != Some(desc.kind) {
            return Err(LakeError::invalid(format!(
                "file {path} does not match kind {}",
                desc.kind.as_str()
            )));
        }
        let id = ObjectId(self.state.counters.object);
        self.commit(Mutation::PutObject(ObjectNode {
            id,
            kind: desc.kind,
            path,
            properties: desc.properties,
        }))?;
        Ok(id)
    }

    /// Replaces the property map of an existing object.
    pub fn update_properties(&mut self, id: ObjectId, properties: Properties) -> Result<()> {
        let mut node = self.object(id)?.clone();
        node.properties = properties;
        self.commit(Mutation::PutObject(node))
    }

    pub fn object(&self, id: ObjectId) -> Result<&ObjectNode> {
        self.state
            .objects
            .get(&id)
            .ok_or_else(|| LakeError::not_found("object", id))
    }

    pub fn object_by_path(&self, path: &str) -> Option<&ObjectNode> {
        let path = clean_relative(path).ok()?;
        self.state.by_path.get(&path).map(|id| &self.state.objects[id])
    }

    pub fn objects(&self) -> impl Iterator<Item = &ObjectNode> {
        self.state.objects.values()
    }

    pub fn objects_of_kind(&self, kind: ObjectKind) -> impl Iterator<Item = &ObjectNode> {
        self.objects().filter(move |o| o.kind == kind)
    }

    pub fn expect_kind(&self, id: ObjectId, kind: ObjectKind, op: &'static str) -> Result<&ObjectNode> {
        let node = self.object(id)?;
        if node.kind != kind {
            return Err(LakeError::Kind {
                op,
                expected: kind.as_str(),
                found: node.kind.as_str(),
            });
        }
        Ok(node)
    }

    // ----- columns -------------------------------------------------------

    /// Attaches column descriptions to a tabular object, replacing any
    /// previous ones. Column ids are reused by name.
    pub fn attach_columns(&mut self, object_id: ObjectId, descriptors: Vec<ColumnDescriptor>) -> Result<Vec<ColumnId>> {
        self.expect_kind(object_id, ObjectKind::Tabular, "attach_columns")?;
        let mut names = BTreeSet::new();
        for d in &descriptors {
            if !names.insert(d.name.as_str()) {
                return Err(LakeError::Duplicate {
                    what: "column",
                    id: d.name.clone(),
                });
            }
            if d.distinct_count > d.row_count || d.null_count > d.row_count {
                return Err(LakeError::invalid(format!(
                    "column {}: counts exceed row count",
                    d.name
                )));
            }
        }
        let existing: HashMap<&str, ColumnId> = self.columns(object_id).map(|c| (c.name.as_str(), c.id)).collect();
        let mut next = self.state.counters.column;
        let columns: Vec<ColumnNode> = descriptors
            .into_iter()
            .map(|d| {
                let id = existing.get(d.name.as_str()).copied().unwrap_or_else(|| {
                    next += 1;
                    ColumnId(next - 1)
                });
                ColumnNode {
                    id,
                    object_id,
                    name: d.name,
                    dtype: d.dtype,
                    distinct_count: d.distinct_count,
                    null_count: d.null_count,
                    row_count: d.row_count,
                }
            })
            .collect();
        let ids = columns.iter().map(|c| c.id).collect();
        self.commit(Mutation::SetColumns { object_id, columns })?;
        Ok(ids)
    }

    pub fn columns(&self, object_id: ObjectId) -> impl Iterator<Item = &ColumnNode> {
        self.state
            .columns_of
            .get(&object_id)
            .into_iter()
            .flatten()
            .map(|id| &self.state.columns[id])
    }

    pub fn column(&self, id: ColumnId) -> Result<&ColumnNode> {
        self.state
            .columns
            .get(&id)
            .ok_or_else(|| LakeError::not_found("column", id))
    }

    pub fn all_columns(&self) -> impl Iterator<Item = &ColumnNode> {
        self.state.columns.values()
    }

    // ----- refined representations ----------------------------------------

    /// Records where a refined representation is stored; replaces a previous
    /// reference of the same kind.
    pub fn set_refined(&mut self, object_id: ObjectId, rep_kind: RepKind, locator: String) -> Result<RefinedId> {
        self.object(object_id)?;
        let id = self
            .refined_for(object_id, rep_kind)
            .map(|r| r.id)
            .unwrap_or(RefinedId(self.state.counters.refined));
        let r = RefinedRef {
            id,
            object_id,
            rep_kind,
            locator,
        };
        if self.state.refined.get(&id) != Some(&r) {
            self.commit(Mutation::SetRefined(r))?;
        }
        Ok(id)
    }

    pub fn refined(&self, object_id: ObjectId) -> impl Iterator<Item = &RefinedRef> {
        self.state.refined.values().filter(move |r| r.object_id == object_id)
    }

    pub fn refined_for(&self, object_id: ObjectId, rep_kind: RepKind) -> Option<&RefinedRef> {
        self.refined(object_id).find(|r| r.rep_kind == rep_kind)
    }

    pub fn all_refined(&self) -> impl Iterator<Item = &RefinedRef> {
        self.state.refined.values()
    }

    // ----- groupings -----------------------------------------------------

    /// Partitions objects by a property. Objects lacking the property land
    /// in the [`UNASSIGNED`] group. Re-creating a grouping with the same
    /// name replaces it, keeping group ids stable per label.
    pub fn create_grouping(
        &mut self,
        name: &str,
        source_property: &str,
        binning: Option<Binning>,
    ) -> Result<GroupingId> {
        let mut by_label: BTreeMap<String, Vec<ObjectId>> = BTreeMap::new();
        let mut seen_property = false;
        for o in self.state.objects.values() {
            let label = match o.properties.get(source_property) {
                Some(v) => {
                    seen_property = true;
                    bin_label(v, binning).unwrap_or_else(|| UNASSIGNED.to_string())
                }
                None => UNASSIGNED.to_string(),
            };
            by_label.entry(label).or_default().push(o.id);
        }
        if !seen_property {
            return Err(LakeError::precondition(format!(
                "no object has property '{source_property}'"
            )));
        }

        let previous = self.grouping_by_name(name).cloned();
        let grouping_id = previous
            .as_ref()
            .map(|g| g.id)
            .unwrap_or(GroupingId(self.state.counters.grouping));
        let old_ids: HashMap<String, GroupId> = previous
            .iter()
            .flat_map(|g| self.groups(g.id))
            .map(|g| (g.label.clone(), g.id))
            .collect();
        let mut next = self.state.counters.group;
        let groups = by_label
            .into_iter()
            .map(|(label, members)| {
                let id = old_ids.get(&label).copied().unwrap_or_else(|| {
                    next += 1;
                    GroupId(next - 1)
                });
                (Group { id, grouping_id, label }, members)
            })
            .collect();
        let m = Mutation::PutGrouping {
            grouping: Grouping {
                id: grouping_id,
                name: name.to_string(),
                source_property: source_property.to_string(),
                binning,
            },
            groups,
        };
        if !self.grouping_unchanged(&m) {
            self.commit(m)?;
        }
        Ok(grouping_id)
    }

    fn grouping_unchanged(&self, m: &Mutation) -> bool {
        let Mutation::PutGrouping { grouping, groups } = m else {
            return false;
        };
        if self.state.groupings.get(&grouping.id) != Some(grouping) {
            return false;
        }
        let current = &self.state.groups_of[&grouping.id];
        current.len() == groups.len()
            && groups.iter().zip(current).all(|((g, members), cur)| {
                g.id == *cur && self.state.groups[cur] == *g && self.state.members[cur].iter().eq(members.iter())
            })
    }

    pub fn groupings(&self) -> impl Iterator<Item = &Grouping> {
        self.state.groupings.values()
    }

    pub fn grouping(&self, id: GroupingId) -> Result<&Grouping> {
        self.state
            .groupings
            .get(&id)
            .ok_or_else(|| LakeError::not_found("grouping", id))
    }

    pub fn grouping_by_name(&self, name: &str) -> Option<&Grouping> {
        self.state.groupings.values().find(|g| g.name == name)
    }

    /// Looks a grouping up by numeric id or by name.
    pub fn resolve_grouping(&self, key: &str) -> Result<&Grouping> {
        if let Some(g) = self.grouping_by_name(key) {
            return Ok(g);
        }
        let id: GroupingId = key.parse().map_err(|_| LakeError::not_found("grouping", key))?;
        self.grouping(id)
    }

    pub fn groups(&self, grouping: GroupingId) -> impl Iterator<Item = &Group> {
        self.state
            .groups_of
            .get(&grouping)
            .into_iter()
            .flatten()
            .map(|id| &self.state.groups[id])
    }

    pub fn group(&self, id: GroupId) -> Result<&Group> {
        self.state
            .groups
            .get(&id)
            .ok_or_else(|| LakeError::not_found("group", id))
    }

    pub fn members(&self, group: GroupId) -> Result<&BTreeSet<ObjectId>> {
        self.state
            .members
            .get(&group)
            .ok_or_else(|| LakeError::not_found("group", group))
    }

    pub fn resolve_group(&self, grouping: &str, label: &str) -> Result<GroupId> {
        let g = self.resolve_grouping(grouping)?;
        self.groups(g.id)
            .find(|x| x.label == label)
            .map(|x| x.id)
            .ok_or_else(|| LakeError::not_found("group", format!("{grouping}={label}")))
    }

    // ----- similarity ----------------------------------------------------

    pub fn set_similarity(&mut self, edges: Vec<SimilarityEdge>) -> Result<()> {
        let current: Vec<&SimilarityEdge> = self.state.similarity.values().flatten().collect();
        if current.len() == edges.len() && current.iter().zip(&edges).all(|(a, b)| *a == b) {
            return Ok(());
        }
        self.commit(Mutation::SetSimilarity(edges))
    }

    pub fn similarity_edges(&self) -> impl Iterator<Item = &SimilarityEdge> {
        self.state.similarity.values().flatten()
    }

    pub fn outgoing_similarity(&self, id: ObjectId) -> &[SimilarityEdge] {
        self.state.similarity.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Top-`k` closest documents by outgoing similarity edges.
    pub fn related_documents(&self, id: ObjectId, k: usize) -> Result<Vec<(ObjectId, f64)>> {
        self.expect_kind(id, ObjectKind::Textual, "related_documents")?;
        let mut edges: Vec<&SimilarityEdge> = self.outgoing_similarity(id).iter().collect();
        edges.sort_by(|a, b| b.weight.total_cmp(&a.weight).then(a.dst.cmp(&b.dst)));
        Ok(edges.into_iter().take(k).map(|e| (e.dst, e.weight)).collect())
    }

    // ----- joinability ---------------------------------------------------

    pub fn set_joinability(&mut self, edges: Vec<JoinabilityEdge>) -> Result<()> {
        if self.state.joinability == edges {
            return Ok(());
        }
        self.commit(Mutation::SetJoinability(edges))
    }

    pub fn joinability_edges(&self) -> &[JoinabilityEdge] {
        &self.state.joinability
    }

    /// Joinability edges touching any column of a table, in both directions,
    /// ordered by inclusion descending.
    pub fn joinable_tables(&self, id: ObjectId) -> Result<Vec<JoinCandidate>> {
        self.expect_kind(id, ObjectKind::Tabular, "joinable_tables")?;
        let mut out = Vec::new();
        for e in &self.state.joinability {
            let fk = self.column(e.fk_column)?;
            let pk = self.column(e.pk_column)?;
            let (own, foreign, own_is_fk) = if fk.object_id == id {
                (fk, pk, true)
            } else if pk.object_id == id {
                (pk, fk, false)
            } else {
                continue;
            };
            out.push(JoinCandidate {
                own_column: own.name.clone(),
                own_column_id: own.id,
                foreign_object: foreign.object_id,
                foreign_column: foreign.name.clone(),
                foreign_column_id: foreign.id,
                own_is_fk,
                inclusion: e.inclusion,
            });
        }
        out.sort_by(|a, b| {
            b.inclusion
                .total_cmp(&a.inclusion)
                .then(a.own_column_id.cmp(&b.own_column_id))
                .then(a.foreign_column_id.cmp(&b.foreign_column_id))
        });
        Ok(out)
    }

    /// Tables taking part in at least one joinability edge, ranked by their
    /// best edge's inclusion (ties by object id), truncated to `n`.
    pub fn top_joinable_tables(&self, n: usize) -> Result<Vec<(ObjectId, f64)>> {
        let mut best: BTreeMap<ObjectId, f64> = BTreeMap::new();
        for e in &self.state.joinability {
            for col in [e.fk_column, e.pk_column] {
                let obj = self.column(col)?.object_id;
                let entry = best.entry(obj).or_insert(f64::NEG_INFINITY);
                *entry = entry.max(e.inclusion);
            }
        }
        let mut ranked: Vec<(ObjectId, f64)> = best.into_iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(n);
        Ok(ranked)
    }

    // ----- invariants ----------------------------------------------------

    /// Checks the graph invariants and returns a description of every
    /// violation found (empty when the catalog is consistent).
    pub fn check_invariants(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for (gid, grouping) in &self.state.groupings {
            let mut seen: HashMap<ObjectId, GroupId> = HashMap::new();
            let mut labels = BTreeSet::new();
            for g in self.groups(*gid) {
                if !labels.insert(&g.label) {
                    problems.push(format!("grouping {}: duplicate label {}", grouping.name, g.label));
                }
                for o in &self.state.members[&g.id] {
                    if let Some(prev) = seen.insert(*o, g.id) {
                        problems.push(format!(
                            "grouping {}: object {o} in groups {prev} and {}",
                            grouping.name, g.id
                        ));
                    }
                }
            }
            for o in self.state.objects.values() {
                if !seen.contains_key(&o.id) {
                    problems.push(format!("grouping {}: object {} has no group", grouping.name, o.id));
                }
            }
        }
        for (src, edges) in &self.state.similarity {
            if edges.len() > crate::textproc::DEFAULT_SIMILARITY_K {
                problems.push(format!("object {src}: similarity out-degree {}", edges.len()));
            }
            for w in edges.windows(2) {
                if w[1].weight > w[0].weight {
                    problems.push(format!("object {src}: similarity weights increase with rank"));
                }
            }
            for e in edges {
                if e.src == e.dst {
                    problems.push(format!("object {src}: similarity self-loop"));
                }
                let kinds = [e.src, e.dst].map(|id| self.state.objects.get(&id).map(|o| o.kind));
                if kinds != [Some(ObjectKind::Textual); 2] {
                    problems.push(format!("similarity edge {}->{} not between documents", e.src, e.dst));
                }
            }
        }
        for c in self.state.columns.values() {
            match self.state.objects.get(&c.object_id) {
                Some(o) if o.kind == ObjectKind::Tabular => {}
                _ => problems.push(format!("column {} attached to a non-tabular object", c.id)),
            }
            if c.distinct_count > c.row_count {
                problems.push(format!("column {}: distinct_count > row_count", c.id));
            }
        }
        let refined_root = self.lake_root.join("_refined");
        for r in self.state.refined.values() {
            let file = r.locator.split('#').next().unwrap_or_default();
            if !refined_root.join(file).exists() {
                problems.push(format!("refined {}: locator {} does not resolve", r.id, r.locator));
            }
        }
        for o in self.state.objects.values() {
            if !self.lake_root.join(&o.path).is_file() {
                problems.push(format!("object {}: raw file {} missing", o.id, o.path));
            }
        }
        problems
    }
}

/// Maps a property value onto a group label under a binning.
pub fn bin_label(value: &PropValue, binning: Option<Binning>) -> Option<String> {
    match binning {
        None => Some(value.to_string()),
        Some(Binning::Month) => {
            let text = value.as_text()?;
            let month: u32 = text.get(5..7)?.parse().ok()?;
            (text.get(4..5) == Some("-") && (1..=12).contains(&month)).then(|| format!("{month:02}"))
        }
        Some(Binning::Year) => {
            let text = value.to_string();
            let year = text.get(0..4)?;
            year.chars().all(|c| c.is_ascii_digit()).then(|| year.to_string())
        }
        Some(Binning::Width(w)) => {
            let v = value.as_f64()?;
            let lo = (v / w).floor() * w;
            Some(format!("[{lo},{})", lo + w))
        }
    }
}

fn clean_relative(path: &str) -> Result<String> {
    let p = Path::new(path);
    let mut parts = Vec::new();
    for c in p.components() {
        match c {
            Component::Normal(s) => parts.push(
                s.to_str()
                    .ok_or_else(|| LakeError::invalid(format!("non UTF-8 path {path}")))?
                    .to_string(),
            ),
            Component::CurDir => {}
            _ => {
                return Err(LakeError::invalid(format!(
                    "path must be relative to the lake root: {path}"
                )))
            }
        }
    }
    if parts.is_empty() {
        return Err(LakeError::invalid("empty path"));
    }
    Ok(parts.join("/"))
}

fn read_records(path: &Path, tolerate_torn_tail: bool) -> Result<Vec<Mutation>> {
    let reader = BufReader::new(File::open(path).at(path)?);
    let lines: Vec<String> = reader.lines().collect::<std::io::Result<_>>().at(path)?;
    let mut out = Vec::with_capacity(lines.len());
    let last = lines.len().saturating_sub(1);
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(m) => out.push(m),
            Err(e) if tolerate_torn_tail && i == last => {
                tracing::warn!(path = %path.display(), "dropping torn journal tail: {e}");
            }
            Err(e) => return Err(LakeError::corrupt(path, format!("line {}: {e}", i + 1))),
        }
    }
    if let Some(Mutation::Header { format, version }) = out.first() {
        if format != SNAPSHOT_FORMAT || *version != SNAPSHOT_VERSION {
            return Err(LakeError::corrupt(
                path,
                format!("unsupported format {format} v{version}"),
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
