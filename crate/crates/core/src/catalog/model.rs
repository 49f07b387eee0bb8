use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::LakeError;
use crate::tablestore::DataType;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }

        impl FromStr for $name {
            type Err = LakeError;

            fn from_str(s: &str) -> Result<Self, LakeError> {
                let s = s.trim();
                let digits = s.strip_prefix($prefix).unwrap_or(s);
                digits
                    .parse()
                    .map($name)
                    .map_err(|_| LakeError::not_found(stringify!($name), s))
            }
        }
    };
}

id_type!(
    /// Identifier of a lake object (document or table).
    ObjectId,
    "o"
);
id_type!(ColumnId, "c");
id_type!(RefinedId, "r");
id_type!(GroupingId, "gg");
id_type!(GroupId, "g");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    Textual,
    Tabular,
}

impl ObjectKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectKind::Textual => "textual",
            ObjectKind::Tabular => "tabular",
        }
    }

    /// Kind implied by a file extension, if the extension is supported.
    pub fn from_extension(ext: &str) -> Option<ObjectKind> {
        match ext.to_ascii_lowercase().as_str() {
            "txt" | "md" => Some(ObjectKind::Textual),
            "csv" => Some(ObjectKind::Tabular),
            _ => None,
        }
    }
}

/// Scalar metadata property value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PropValue {
    Bool(bool),
    Int(i64),
    Real(f64),
    Text(String),
}

impl PropValue {
    pub fn as_text(&self) -> Option<&str> {
        match self {
            PropValue::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            PropValue::Int(i) => Some(*i as f64),
            PropValue::Real(r) => Some(*r),
            PropValue::Text(s) => s.trim().parse().ok(),
            PropValue::Bool(_) => None,
        }
    }
}

impl fmt::Display for PropValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropValue::Bool(b) => write!(f, "{b}"),
            PropValue::Int(i) => write!(f, "{i}"),
            PropValue::Real(r) => write!(f, "{r}"),
            PropValue::Text(s) => f.write_str(s),
        }
    }
}

impl From<&str> for PropValue {
    fn from(s: &str) -> Self {
        PropValue::Text(s.to_string())
    }
}

impl From<String> for PropValue {
    fn from(s: String) -> Self {
        PropValue::Text(s)
    }
}

impl From<i64> for PropValue {
    fn from(v: i64) -> Self {
        PropValue::Int(v)
    }
}

pub type Properties = BTreeMap<String, PropValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectNode {
    pub id: ObjectId,
    pub kind: ObjectKind,
    /// Path relative to the lake root, `/`-separated.
    pub path: String,
    pub properties: Properties,
}

/// Input to [`Catalog::register_object`](super::Catalog::register_object).
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectDescriptor {
    pub kind: ObjectKind,
    pub path: String,
    pub properties: Properties,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnNode {
    pub id: ColumnId,
    pub object_id: ObjectId,
    pub name: String,
    pub dtype: DataType,
    pub distinct_count: u64,
    pub null_count: u64,
    pub row_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDescriptor {
    pub name: String,
    pub dtype: DataType,
    pub distinct_count: u64,
    pub null_count: u64,
    pub row_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepKind {
    BagOfWords,
    Embedding,
    RelationalTable,
}

impl RepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RepKind::BagOfWords => "bag_of_words",
            RepKind::Embedding => "embedding",
            RepKind::RelationalTable => "relational_table",
        }
    }
}

/// Pointer from an object to one of its stored refined representations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinedRef {
    pub id: RefinedId,
    pub object_id: ObjectId,
    pub rep_kind: RepKind,
    /// `<store>/<key>`, relative to `<lake>/_refined/`.
    pub locator: String,
}

/// How property values are mapped onto group labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "width")]
pub enum Binning {
    /// Calendar month of a date/timestamp, labels `01`..`12`.
    Month,
    /// Calendar year, labels `YYYY`.
    Year,
    /// Fixed-width numeric bins `[lo,hi)`.
    Width(f64),
}

impl FromStr for Binning {
    type Err = LakeError;

    fn from_str(s: &str) -> Result<Self, LakeError> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "month" => Ok(Binning::Month),
            "year" => Ok(Binning::Year),
            other => {
                let width = other
                    .strip_prefix("width=")
                    .or_else(|| other.strip_prefix("width:"))
                    .and_then(|w| w.parse::<f64>().ok())
                    .filter(|w| *w > 0.0 && w.is_finite())
                    .ok_or_else(|| LakeError::invalid(format!("unknown binning '{s}'")))?;
                Ok(Binning::Width(width))
            }
        }
    }
}

/// Label reserved for objects lacking a grouping's source property.
pub const UNASSIGNED: &str = "_unassigned";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grouping {
    pub id: GroupingId,
    pub name: String,
    pub source_property: String,
    pub binning: Option<Binning>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub id: GroupId,
    pub grouping_id: GroupingId,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityEdge {
    pub src: ObjectId,
    pub dst: ObjectId,
    pub weight: f64,
    pub rank: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinabilityEdge {
    pub fk_column: ColumnId,
    pub pk_column: ColumnId,
    pub inclusion: f64,
}
