use std::collections::HashSet;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::value::{DataType, Value};
use crate::catalog::ColumnId;
use crate::error::{LakeError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMeasure {
    Jaccard,
    KolmogorovSmirnov,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub measure: CorrelationMeasure,
    pub value: f64,
    pub columns: (ColumnId, ColumnId),
}

/// |A ∩ B| / |A ∪ B| over distinct elements. Two empty sets count as
/// identical (1.0).
pub fn jaccard<T: Eq + Hash>(a: impl IntoIterator<Item = T>, b: impl IntoIterator<Item = T>) -> f64 {
    let a: HashSet<T> = a.into_iter().collect();
    let b: HashSet<T> = b.into_iter().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(&b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

/// Two-sample Kolmogorov–Smirnov statistic, sup |F_A − F_B| over the merged
/// sample points. The ECDF gap is tracked with integer counts so the result
/// is the exact ratio |i·m − j·n| / (n·m) rounded once.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(LakeError::invalid("ks_statistic needs two nonempty samples"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(LakeError::invalid("ks_statistic: NaN in sample"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as u128, b.len() as u128);
    let (mut i, mut j) = (0usize, 0usize);
    let mut best: u128 = 0;
    while i < a.len() && j < b.len() {
        let t = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        best = best.max((i as u128 * m).abs_diff(j as u128 * n));
    }
    Ok(best as f64 / (n * m) as f64)
}

/// Picks the measure from the column types: text pairs use Jaccard over
/// distinct values, numeric pairs use KS over non-null values.
pub fn column_correlation(
    a: (ColumnId, DataType, &[Value]),
    b: (ColumnId, DataType, &[Value]),
) -> Result<CorrelationResult> {
    let columns = (a.0, b.0);
    match (a.1, b.1) {
        (DataType::Text, DataType::Text) => {
            let nonnull = |vs: &[Value]| -> Vec<Value> { vs.iter().filter(|v| !v.is_null()).cloned().collect() };
            Ok(CorrelationResult {
                measure: CorrelationMeasure::Jaccard,
                value: jaccard(nonnull(a.2), nonnull(b.2)),
                columns,
            })
        }
        (x, y) if x.is_numeric() && y.is_numeric() => {
            let nums = |vs: &[Value]| -> Vec<f64> { vs.iter().filter_map(Value::as_f64).collect() };
            Ok(CorrelationResult {
                measure: CorrelationMeasure::KolmogorovSmirnov,
                value: ks_statistic(&nums(a.2), &nums(b.2))?,
                columns,
            })
        }
        (x, y) => Err(LakeError::invalid(format!(
            "no correlation measure for a {x} column against a {y} column"
        ))),
    }
}
