use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::value::{DataType, Value};
use crate::catalog::ColumnDescriptor;
use crate::error::{LakeError, Result};

/// Share of non-null cells that must parse for a type to win the vote.
pub const INFERENCE_THRESHOLD: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Field {
    pub name: String,
    pub dtype: DataType,
}

impl Field {
    pub fn new(name: impl Into<String>, dtype: DataType) -> Self {
        Field {
            name: name.into(),
            dtype,
        }
    }
}

/// A typed relational table.
#[derive(Debug, Clone, PartialEq)]
pub struct RelTable {
    pub name: String,
    pub schema: Vec<Field>,
    pub rows: Vec<Vec<Value>>,
}

/// On-disk columnar layout of a [`RelTable`].
#[derive(Debug, Serialize, Deserialize)]
struct ColumnarFile {
    format: String,
    name: String,
    row_count: usize,
    columns: Vec<ColumnarColumn>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ColumnarColumn {
    name: String,
    dtype: DataType,
    values: Vec<serde_json::Value>,
}

const COLUMNAR_FORMAT: &str = "lake-columnar/1";

impl RelTable {
    pub fn empty(name: impl Into<String>, schema: Vec<Field>) -> Self {
        RelTable {
            name: name.into(),
            schema,
            rows: Vec::new(),
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|f| f.name == name)
    }

    pub fn column_values(&self, idx: usize) -> impl Iterator<Item = &Value> {
        self.rows.iter().map(move |r| &r[idx])
    }

    /// Distinct/null/row counts per column.
    pub fn column_stats(&self) -> Vec<ColumnDescriptor> {
        self.schema
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let mut distinct = HashSet::new();
                let mut nulls = 0u64;
                for v in self.column_values(i) {
                    if v.is_null() {
                        nulls += 1;
                    } else {
                        distinct.insert(v);
                    }
                }
                ColumnDescriptor {
                    name: f.name.clone(),
                    dtype: f.dtype,
                    distinct_count: distinct.len() as u64,
                    null_count: nulls,
                    row_count: self.rows.len() as u64,
                }
            })
            .collect()
    }

    /// Sorts rows by all columns, left to right.
    pub fn sort_rows(&mut self) {
        self.rows.sort();
    }

    pub fn to_columnar_json(&self) -> String {
        let file = ColumnarFile {
            format: COLUMNAR_FORMAT.into(),
            name: self.name.clone(),
            row_count: self.rows.len(),
            columns: self
                .schema
                .iter()
                .enumerate()
                .map(|(i, f)| ColumnarColumn {
                    name: f.name.clone(),
                    dtype: f.dtype,
                    values: self.column_values(i).map(Value::to_json).collect(),
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("columnar table serializes")
    }

    pub fn from_columnar_json(text: &str) -> Result<RelTable> {
        let file: ColumnarFile = serde_json::from_str(text)?;
        if file.format != COLUMNAR_FORMAT {
            return Err(LakeError::invalid(format!("unsupported table format {}", file.format)));
        }
        let mut rows = vec![Vec::with_capacity(file.columns.len()); file.row_count];
        let mut schema = Vec::with_capacity(file.columns.len());
        for col in file.columns {
            if col.values.len() != file.row_count {
                return Err(LakeError::invalid(format!("column {} has wrong length", col.name)));
            }
            for (row, v) in rows.iter_mut().zip(&col.values) {
                let value = Value::from_json(v, col.dtype)
                    .ok_or_else(|| LakeError::invalid(format!("column {}: bad {} value {v}", col.name, col.dtype)))?;
                row.push(value);
            }
            schema.push(Field::new(col.name, col.dtype));
        }
        Ok(RelTable {
            name: file.name,
            schema,
            rows,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.schema.iter().map(|f| f.name.as_str()))
            .expect("in-memory csv write");
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))
                .expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
    }

    /// Rows as JSON arrays, for API responses.
    pub fn rows_json(&self) -> Vec<Vec<serde_json::Value>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(Value::to_json).collect())
            .collect()
    }
}

/// Votes a column type: the first of integer, real, boolean, date whose
/// parse rate over non-empty cells reaches [`INFERENCE_THRESHOLD`]; text
/// otherwise.
pub fn infer_type<'a, I: IntoIterator<Item = &'a str>>(cells: I) -> DataType {
    let cells: Vec<&str> = cells.into_iter().filter(|c| !c.trim().is_empty()).collect();
    if cells.is_empty() {
        return DataType::Text;
    }
    for dtype in [DataType::Integer, DataType::Real, DataType::Boolean, DataType::Date] {
        let ok = cells.iter().filter(|c| Value::parse_as(c, dtype).is_some()).count();
        if ok as f64 >= INFERENCE_THRESHOLD * cells.len() as f64 {
            return dtype;
        }
    }
    DataType::Text
}

/// Parses CSV bytes (header row first) into a typed table. Cells that do not
/// parse under the inferred column type become null.
pub fn ingest_table(name: &str, csv_bytes: &[u8]) -> Result<RelTable> {
    if csv_bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Err(LakeError::Csv("empty file".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(csv_bytes);
    let mut records = Vec::new();
    let mut lines = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| LakeError::Csv(e.to_string()))?;
        lines.push(rec.position().map(|p| p.line()).unwrap_or(0));
        records.push(rec);
    }
    let Some(header) = records.first() else {
        return Err(LakeError::Csv("empty file".into()));
    };
    let width = header.len();
    let ragged: Vec<String> = records
        .iter()
        .zip(&lines)
        .skip(1)
        .filter(|(r, _)| r.len() != width)
        .map(|(_, l)| l.to_string())
        .collect();
    if !ragged.is_empty() {
        return Err(LakeError::Csv(format!(
            "ragged rows (expected {width} fields) at line(s) {}",
            ragged.join(", ")
        )));
    }

    let mut names: Vec<String> = Vec::with_capacity(width);
    for (i, raw) in header.iter().enumerate() {
        let base = match raw.trim() {
            "" => format!("column_{}", i + 1),
            s => s.to_string(),
        };
        let mut candidate = base.clone();
        let mut n = 2;
        while names.contains(&candidate) {
            candidate = format!("{base}_{n}");
            n += 1;
        }
        names.push(candidate);
    }

    let body = &records[1..];
    let schema: Vec<Field> = names
        .into_iter()
        .enumerate()
        .map(|(i, name)| Field::new(name, infer_type(body.iter().map(|r| &r[i]))))
        .collect();
    let rows = body
        .iter()
        .map(|r| {
            schema
                .iter()
                .enumerate()
                .map(|(i, f)| Value::parse_as(&r[i], f.dtype).unwrap_or(Value::Null))
                .collect()
        })
        .collect();
    Ok(RelTable {
        name: name.to_string(),
        schema,
        rows,
    })
}
