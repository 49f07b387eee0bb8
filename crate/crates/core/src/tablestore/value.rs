use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// Column types recognized by inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataType {
    Integer,
    Real,
    Text,
    Boolean,
    Date,
}

impl DataType {
    pub fn is_numeric(self) -> bool {
        matches!(self, DataType::Integer | DataType::Real)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DataType::Integer => "integer",
            DataType::Real => "real",
            DataType::Text => "text",
            DataType::Boolean => "boolean",
            DataType::Date => "date",
        }
    }

    /// Whether values of the two types can be compared for equality.
    pub fn compatible(self, other: DataType) -> bool {
        self == other || (self.is_numeric() && other.is_numeric())
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A typed cell.
#[derive(Debug, Clone)]
pub enum Value {
    Null,
    Int(i64),
    Real(f64),
    Bool(bool),
    Date(NaiveDate),
    Text(String),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    pub fn data_type(&self) -> Option<DataType> {
        Some(match self {
            Value::Null => return None,
            Value::Int(_) => DataType::Integer,
            Value::Real(_) => DataType::Real,
            Value::Bool(_) => DataType::Boolean,
            Value::Date(_) => DataType::Date,
            Value::Text(_) => DataType::Text,
        })
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Bool(_) => 1,
            Value::Int(_) | Value::Real(_) => 2,
            Value::Date(_) => 3,
            Value::Text(_) => 4,
        }
    }

    /// SQL comparison: `None` when either side is null or the types are not
    /// comparable.
    pub fn sql_cmp(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Null, _) | (_, Value::Null) => None,
            (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
            (a, b) if a.rank() == 2 && b.rank() == 2 => a.as_f64()?.partial_cmp(&b.as_f64()?),
            (Value::Bool(a), Value::Bool(b)) => Some(a.cmp(b)),
            (Value::Date(a), Value::Date(b)) => Some(a.cmp(b)),
            (Value::Text(a), Value::Text(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }

    /// Parses a cell as the given type. Empty cells are null.
    pub fn parse_as(cell: &str, dtype: DataType) -> Option<Value> {
        let s = cell.trim();
        if s.is_empty() {
            return Some(Value::Null);
        }
        match dtype {
            DataType::Integer => s.parse().ok().map(Value::Int),
            DataType::Real => s.parse::<f64>().ok().filter(|v| v.is_finite()).map(Value::Real),
            DataType::Boolean => match s.to_ascii_lowercase().as_str() {
                "true" => Some(Value::Bool(true)),
                "false" => Some(Value::Bool(false)),
                _ => None,
            },
            DataType::Date => NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().map(Value::Date),
            DataType::Text => Some(Value::Text(cell.to_string())),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Null => serde_json::Value::Null,
            Value::Int(i) => (*i).into(),
            Value::Real(r) => serde_json::Number::from_f64(*r)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            Value::Bool(b) => (*b).into(),
            Value::Date(d) => d.format("%Y-%m-%d").to_string().into(),
            Value::Text(s) => s.clone().into(),
        }
    }

    /// Inverse of [`Value::to_json`] under a known column type.
    pub fn from_json(v: &serde_json::Value, dtype: DataType) -> Option<Value> {
        use serde_json::Value as J;
        Some(match (v, dtype) {
            (J::Null, _) => Value::Null,
            (J::Number(n), DataType::Integer) => Value::Int(n.as_i64()?),
            (J::Number(n), DataType::Real) => Value::Real(n.as_f64()?),
            (J::Bool(b), DataType::Boolean) => Value::Bool(*b),
            (J::String(s), DataType::Date) => Value::Date(NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()?),
            (J::String(s), DataType::Text) => Value::Text(s.clone()),
            _ => return None,
        })
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => Ok(()),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
            Value::Text(s) => f.write_str(s),
        }
    }
}

/// Total order used for sorting result rows: nulls first, then booleans,
/// numbers, dates and text.
impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Real(a), Value::Real(b)) => a.total_cmp(b),
            (Value::Int(a), Value::Real(b)) => (*a as f64).total_cmp(b).then(Ordering::Less),
            (Value::Real(a), Value::Int(b)) => a.total_cmp(&(*b as f64)).then(Ordering::Greater),
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Date(a), Value::Date(b)) => a.cmp(b),
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Value::Null => 0u8.hash(state),
            Value::Int(i) => {
                1u8.hash(state);
                i.hash(state)
            }
            Value::Real(r) => {
                2u8.hash(state);
                r.to_bits().hash(state)
            }
            Value::Bool(b) => {
                3u8.hash(state);
                b.hash(state)
            }
            Value::Date(d) => {
                4u8.hash(state);
                d.hash(state)
            }
            Value::Text(s) => {
                5u8.hash(state);
                s.hash(state)
            }
        }
    }
}
