use std::collections::HashSet;

use super::table::RelTable;
use super::value::{DataType, Value};
use crate::catalog::{ColumnId, JoinabilityEdge, ObjectId};

pub const DEFAULT_JOIN_THRESHOLD: f64 = 0.95;

/// One table offered to joinability detection, with the catalog ids of its
/// columns in schema order.
#[derive(Debug, Clone, Copy)]
pub struct TableColumns<'a> {
    pub object: ObjectId,
    pub table: &'a RelTable,
    pub column_ids: &'a [ColumnId],
}

struct ColumnInfo {
    object: ObjectId,
    id: ColumnId,
    dtype: DataType,
    distinct: HashSet<Value>,
    is_key: bool,
}

fn widen(v: &Value) -> Value {
    match v {
        Value::Int(i) => Value::Real(*i as f64),
        other => other.clone(),
    }
}

/// Inclusion of `fk` in `pk`: share of the distinct non-null values of `fk`
/// that also occur in `pk`. `None` when `fk` has no values.
fn inclusion(fk: &ColumnInfo, pk: &ColumnInfo) -> Option<f64> {
    if fk.distinct.is_empty() {
        return None;
    }
    let hits = if fk.dtype == pk.dtype {
        fk.distinct.iter().filter(|v| pk.distinct.contains(*v)).count()
    } else {
        let pk_wide: HashSet<Value> = pk.distinct.iter().map(widen).collect();
        fk.distinct.iter().filter(|v| pk_wide.contains(&widen(v))).count()
    };
    Some(hits as f64 / fk.distinct.len() as f64)
}

/// Finds PK/FK pairs across tables. A candidate key has no nulls and one
/// distinct value per row; an edge `fk → pk` is emitted when the inclusion
/// of `fk` in `pk` reaches `theta`. Pairs inside one table are skipped.
/// Output is sorted by `(fk_column, pk_column)`.
pub fn detect_joinability(tables: &[TableColumns<'_>], theta: f64) -> Vec<JoinabilityEdge> {
    let mut cols = Vec::new();
    for t in tables {
        for (i, field) in t.table.schema.iter().enumerate() {
            let Some(&id) = t.column_ids.get(i) else { continue };
            let mut distinct = HashSet::new();
            let mut nulls = 0usize;
            for v in t.table.column_values(i) {
                if v.is_null() {
                    nulls += 1;
                } else {
                    distinct.insert(v.clone());
                }
            }
            let rows = t.table.rows.len();
            cols.push(ColumnInfo {
                object: t.object,
                id,
                dtype: field.dtype,
                is_key: rows > 0 && nulls == 0 && distinct.len() == rows,
                distinct,
            });
        }
    }
    let mut edges = Vec::new();
    for pk in cols.iter().filter(|c| c.is_key) {
        for fk in &cols {
            if fk.object == pk.object || !fk.dtype.compatible(pk.dtype) {
                continue;
            }
            if let Some(inc) = inclusion(fk, pk) {
                if inc >= theta {
                    edges.push(JoinabilityEdge {
                        fk_column: fk.id,
                        pk_column: pk.id,
                        inclusion: inc,
                    });
                }
            }
        }
    }
    edges.sort_by_key(|e| (e.fk_column, e.pk_column));
    edges
}
