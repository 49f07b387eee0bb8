//! Relational refined representations: CSV ingestion, the SQL subset,
//! joinability detection and column statistics.

mod correlation;
mod exec;
mod joinability;
mod plan;
pub mod sql;
mod table;
mod value;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

pub use correlation::{column_correlation, jaccard, ks_statistic, CorrelationMeasure, CorrelationResult};
pub use exec::execute;
pub use joinability::{detect_joinability, TableColumns, DEFAULT_JOIN_THRESHOLD};
pub use plan::{parse_sql, plan_statement, AggregateExpr, PlanOperand, Predicate, QueryPlan, TableProvider};
pub use table::{infer_type, ingest_table, Field, RelTable, INFERENCE_THRESHOLD};
pub use value::{DataType, Value};

use crate::catalog::ObjectId;
use crate::error::{IoContext, LakeError, Result};

/// Canonical SQL name of the table refined from an object.
pub fn table_name(id: ObjectId) -> String {
    format!("t{id}")
}

/// Refined tables persisted as columnar JSON under `_refined/tables/`.
///
/// Tables are addressed by canonical name (`t<object id>`) or by an alias,
/// normally the source file stem. Aliases shared by two tables are dropped.
#[derive(Debug, Default)]
pub struct TableStore {
    dir: PathBuf,
    tables: BTreeMap<String, RelTable>,
    aliases: BTreeMap<String, String>,
}

impl TableStore {
    pub const SUBDIR: &'static str = "tables";

    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let mut tables = BTreeMap::new();
        if dir.exists() {
            for entry in fs::read_dir(&dir).at(&dir)? {
                let path = entry.at(&dir)?.path();
                if path.extension().and_then(|e| e.to_str()) != Some("json") {
                    continue;
                }
                let text = fs::read_to_string(&path).at(&path)?;
                let table =
                    RelTable::from_columnar_json(&text).map_err(|e| LakeError::corrupt(&path, e.to_string()))?;
                tables.insert(table.name.clone(), table);
            }
        }
        Ok(TableStore {
            dir,
            tables,
            aliases: BTreeMap::new(),
        })
    }

    pub fn locator(name: &str) -> String {
        format!("{}/{name}.json", Self::SUBDIR)
    }

    /// Writes the table under its own name and keeps it in memory.
    pub fn put(&mut self, table: RelTable) -> Result<()> {
        fs::create_dir_all(&self.dir).at(&self.dir)?;
        let path = self.dir.join(format!("{}.json", table.name));
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, table.to_columnar_json()).at(&tmp)?;
        fs::rename(&tmp, &path).at(&path)?;
        self.tables.insert(table.name.clone(), table);
        Ok(())
    }

    /// Replaces the alias map from `(alias, canonical)` pairs.
    pub fn set_aliases<I: IntoIterator<Item = (String, String)>>(&mut self, pairs: I) {
        let mut seen: BTreeMap<String, String> = BTreeMap::new();
        let mut clashes = BTreeSet::new();
        for (alias, canonical) in pairs {
            if self.tables.contains_key(&alias) {
                continue;
            }
            if let Some(prev) = seen.insert(alias.clone(), canonical.clone()) {
                if prev != canonical {
                    clashes.insert(alias);
                }
            }
        }
        for c in clashes {
            seen.remove(&c);
        }
        self.aliases = seen;
    }

    pub fn aliases(&self) -> &BTreeMap<String, String> {
        &self.aliases
    }

    pub fn get(&self, name: &str) -> Option<&RelTable> {
        self.tables
            .get(name)
            .or_else(|| self.aliases.get(name).and_then(|c| self.tables.get(c)))
    }

    pub fn tables(&self) -> impl Iterator<Item = &RelTable> {
        self.tables.values()
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// Plans and runs one SQL statement.
    pub fn query(&self, sql: &str) -> Result<RelTable> {
        execute(&parse_sql(sql, self)?, self)
    }
}

impl TableProvider for TableStore {
    fn get_table(&self, name: &str) -> Option<&RelTable> {
        self.get(name)
    }
}
