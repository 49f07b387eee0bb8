//! Content-analysis kernels: keyword rankings, group-mean embeddings,
//! KMeans, PCA and tuple comparison.

mod kmeans;
mod pca;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use kmeans::{kmeans, ClusterAssignment, DEFAULT_MAX_ITER, DEFAULT_TOL};
pub use pca::{pca2d, Projection2D, POWER_MAX_ITER, POWER_TOL};

use crate::error::{LakeError, Result};
use crate::semantics::Dictionary;
use crate::tablestore::{RelTable, Value};
use crate::textproc::{BowVector, EmbeddingVector};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordRanking {
    pub entries: Vec<(String, u64)>,
    /// Number of documents aggregated.
    pub documents: usize,
    pub vocabulary: Option<String>,
}

/// Sums bag-of-words vectors and keeps the `k` most frequent terms, ties
/// in lexical order.
pub fn top_keywords<'a, I>(bows: I, k: usize, vocabulary: Option<&Dictionary>) -> Result<KeywordRanking>
where
    I: IntoIterator<Item = &'a BowVector>,
{
    let mut totals: BTreeMap<&str, u64> = BTreeMap::new();
    let mut documents = 0;
    for bow in bows {
        documents += 1;
        for (t, c) in &bow.counts {
            if vocabulary.is_none_or(|d| d.terms.contains(t)) {
                *totals.entry(t.as_str()).or_default() += u64::from(*c);
            }
        }
    }
    if documents == 0 {
        return Err(LakeError::invalid("top_keywords needs at least one document"));
    }
    let mut entries: Vec<(String, u64)> = totals.into_iter().map(|(t, c)| (t.to_string(), c)).collect();
    // stable sort keeps lexical order among equal counts
    entries.sort_by_key(|e| std::cmp::Reverse(e.1));
    entries.truncate(k);
    Ok(KeywordRanking {
        entries,
        documents,
        vocabulary: vocabulary.map(|d| d.id.clone()),
    })
}

/// Component-wise mean embedding per group. Groups without embedded
/// members are left out.
pub fn group_mean_embeddings<'a, I, M>(groups: I) -> Result<BTreeMap<String, Vec<f64>>>
where
    I: IntoIterator<Item = (String, M)>,
    M: IntoIterator<Item = &'a EmbeddingVector>,
{
    let mut out = BTreeMap::new();
    for (label, members) in groups {
        let mut sum: Option<Vec<f64>> = None;
        let mut n = 0usize;
        for e in members {
            let s = sum.get_or_insert_with(|| vec![0.0; e.values.len()]);
            if s.len() != e.values.len() {
                return Err(LakeError::invalid("embeddings have different dimensions"));
            }
            s.iter_mut().zip(&e.values).for_each(|(a, v)| *a += v);
            n += 1;
        }
        if let Some(mut s) = sum {
            s.iter_mut().for_each(|v| *v /= n as f64);
            out.insert(label, s);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "method")]
pub enum Method {
    Kmeans { k: usize, seed: u64 },
    Pca,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "method", content = "result")]
pub enum Analysis {
    Kmeans(ClusterAssignment),
    Pca(Projection2D),
}

pub fn analyze(points: &[Vec<f64>], method: Method) -> Result<Analysis> {
    Ok(match method {
        Method::Kmeans { k, seed } => Analysis::Kmeans(kmeans(points, k, seed, DEFAULT_MAX_ITER, DEFAULT_TOL)?),
        Method::Pca => Analysis::Pca(pca2d(points)?),
    })
}

/// Group likeness: one point per group (its mean embedding).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison {
    pub labels: Vec<String>,
    pub analysis: Analysis,
}

pub fn compare_groups(means: &BTreeMap<String, Vec<f64>>, method: Method) -> Result<GroupComparison> {
    if means.len() < 2 {
        return Err(LakeError::precondition(format!(
            "group comparison needs at least 2 nonempty groups, found {}",
            means.len()
        )));
    }
    let labels: Vec<String> = means.keys().cloned().collect();
    let points: Vec<Vec<f64>> = means.values().cloned().collect();
    Ok(GroupComparison {
        labels,
        analysis: analyze(&points, method)?,
    })
}

/// Numeric tuples of a result table and the analysis run on them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleComparison {
    /// Numeric columns used as coordinates.
    pub columns: Vec<String>,
    /// Indices of the kept rows in the source table.
    pub rows: Vec<usize>,
    /// The kept tuples, all columns.
    pub tuples: Vec<Vec<serde_json::Value>>,
    pub analysis: Analysis,
}

/// Runs KMeans or PCA on the numeric columns of a table. Rows with a null
/// in any of those columns are dropped.
pub fn tuple_comparison(table: &RelTable, method: Method) -> Result<TupleComparison> {
    let numeric: Vec<usize> = table
        .schema
        .iter()
        .enumerate()
        .filter(|(_, f)| f.dtype.is_numeric())
        .map(|(i, _)| i)
        .collect();
    if numeric.is_empty() {
        return Err(LakeError::invalid("tuple comparison needs at least one numeric column"));
    }
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        let p: Option<Vec<f64>> = numeric.iter().map(|c| row[*c].as_f64()).collect();
        if let Some(p) = p {
            rows.push(i);
            points.push(p);
        }
    }
    if points.is_empty() {
        return Err(LakeError::invalid("no rows left after dropping nulls"));
    }
    let analysis = analyze(&points, method)?;
    Ok(TupleComparison {
        columns: numeric.iter().map(|c| table.schema[*c].name.clone()).collect(),
        tuples: rows
            .iter()
            .map(|r| table.rows[*r].iter().map(Value::to_json).collect())
            .collect(),
        rows,
        analysis,
    })
}
