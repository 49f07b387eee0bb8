//! The fifteen-query benchmark workload.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::Method;
use crate::catalog::{GroupExpr, ObjectKind};
use crate::error::{LakeError, Result};
use crate::indexer::{TermQuery, DEFAULT_MAX_SNIPPETS, DEFAULT_WINDOW};
use crate::lake::Lake;
use crate::tablestore::{table_name, DataType};
use crate::textproc::Language;

pub const MIN_RUNS: usize = 10;
pub const WORKLOAD_SEED: u64 = 7;
pub const LANGUAGE_GROUPING: &str = "language";
pub const MONTH_GROUPING: &str = "month";

/// One concrete workload query, with parameters resolved against a lake.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum WorkloadQuery {
    Navigate { expr: GroupExpr },
    Search { query: TermQuery },
    TopJoinable { n: usize },
    Related { document: u64, k: usize },
    ScoreByGroup { grouping: String, terms: Vec<String> },
    Highlights { terms: Vec<String> },
    TopKeywords { k: usize },
    CompareGroups { grouping: String, method: Method },
    Sql { sql: String },
    TupleComparison { sql: String, method: Method },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedQuery {
    pub id: u8,
    pub description: String,
    pub query: WorkloadQuery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadResult {
    pub id: u8,
    pub description: String,
    pub mean_ms: f64,
    pub runs: usize,
    /// Objects, rows, snippets or groups returned.
    pub count: usize,
    /// `<count>:<sha256 of the canonical JSON result>`.
    pub digest: String,
}

fn strs(terms: &[&str]) -> Vec<String> {
    terms.iter().map(|t| t.to_string()).collect()
}

/// Resolves the workload's parameters on `lake`: the groupings it needs,
/// the reference document and the table pair of the strongest
/// joinability edge.
pub fn plan_workload(lake: &Lake) -> Result<Vec<PlannedQuery>> {
    let catalog = lake.catalog();
    for g in [LANGUAGE_GROUPING, MONTH_GROUPING] {
        if catalog.grouping_by_name(g).is_none() {
            return Err(LakeError::precondition(format!("workload needs the '{g}' grouping")));
        }
    }
    let first_doc = catalog
        .objects_of_kind(ObjectKind::Textual)
        .next()
        .ok_or_else(|| LakeError::precondition("workload needs at least one document"))?
        .id;
    let edge = catalog
        .joinability_edges()
        .iter()
        .max_by(|a, b| {
            a.inclusion
                .total_cmp(&b.inclusion)
                .then(b.fk_column.cmp(&a.fk_column))
                .then(b.pk_column.cmp(&a.pk_column))
        })
        .ok_or_else(|| LakeError::precondition("workload needs at least one joinable table pair"))?;
    let fk = catalog.column(edge.fk_column)?;
    let pk = catalog.column(edge.pk_column)?;
    let join_sql = format!(
        "SELECT * FROM {} f JOIN {} p ON f.{} = p.{}",
        table_name(fk.object_id),
        table_name(pk.object_id),
        fk.name,
        pk.name
    );

    // query 13: a categorical column and the numeric columns of the pair
    let mut category = None;
    let mut averages = Vec::new();
    for (alias, object, key) in [("f", fk.object_id, &fk.name), ("p", pk.object_id, &pk.name)] {
        for c in catalog.columns(object) {
            if &c.name == key {
                continue;
            }
            if c.dtype.is_numeric() {
                averages.push(format!("AVG({alias}.{0}) AS avg_{alias}_{0}", c.name));
            } else if c.dtype == DataType::Text && category.is_none() && c.distinct_count < c.row_count {
                category = Some(format!("{alias}.{}", c.name));
            }
        }
    }
    let category = category.ok_or_else(|| LakeError::precondition("joined tables have no categorical column"))?;
    if averages.is_empty() {
        return Err(LakeError::precondition("joined tables have no numeric column"));
    }
    let aggregate_sql = format!(
        "SELECT {category}, {} FROM {} f JOIN {} p ON f.{} = p.{} GROUP BY {category}",
        averages.join(", "),
        table_name(fk.object_id),
        table_name(pk.object_id),
        fk.name,
        pk.name
    );

    let kmeans = Method::Kmeans {
        k: 3,
        seed: WORKLOAD_SEED,
    };
    let q = |id: u8, description: &str, query: WorkloadQuery| PlannedQuery {
        id,
        description: description.to_string(),
        query,
    };
    Ok(vec![
        q(
            1,
            "documents in English edited in December",
            WorkloadQuery::Navigate {
                expr: GroupExpr::and([
                    GroupExpr::label(LANGUAGE_GROUPING, "en"),
                    GroupExpr::label(MONTH_GROUPING, "12"),
                ]),
            },
        ),
        q(
            2,
            "objects containing big and data",
            WorkloadQuery::Search {
                query: TermQuery::all(&["big", "data"]),
            },
        ),
        q(
            3,
            "objects containing big, data, document and article",
            WorkloadQuery::Search {
                query: TermQuery::all(&["big", "data", "document", "article"]),
            },
        ),
        q(4, "3 tables joinable to any table", WorkloadQuery::TopJoinable { n: 3 }),
        q(
            5,
            "5 documents most similar to a document",
            WorkloadQuery::Related {
                document: first_doc.0,
                k: 5,
            },
        ),
        q(
            6,
            "group scores for big, data, article and document",
            WorkloadQuery::ScoreByGroup {
                grouping: MONTH_GROUPING.to_string(),
                terms: strs(&["big", "data", "article", "document"]),
            },
        ),
        q(
            7,
            "concordance for data and ai",
            WorkloadQuery::Highlights {
                terms: strs(&["data", "ai"]),
            },
        ),
        q(
            8,
            "concordance for data, ai, article and paper",
            WorkloadQuery::Highlights {
                terms: strs(&["data", "ai", "article", "paper"]),
            },
        ),
        q(
            9,
            "top 10 keywords of all documents",
            WorkloadQuery::TopKeywords { k: 10 },
        ),
        q(
            10,
            "3-cluster KMeans on documents grouped by month",
            WorkloadQuery::CompareGroups {
                grouping: MONTH_GROUPING.to_string(),
                method: kmeans,
            },
        ),
        q(
            11,
            "PCA on documents grouped by month",
            WorkloadQuery::CompareGroups {
                grouping: MONTH_GROUPING.to_string(),
                method: Method::Pca,
            },
        ),
        q(12, "join of two tables", WorkloadQuery::Sql { sql: join_sql.clone() }),
        q(
            13,
            "join averaging numeric columns by a categorical column",
            WorkloadQuery::Sql { sql: aggregate_sql },
        ),
        q(
            14,
            "3-cluster KMeans on the result of query 12",
            WorkloadQuery::TupleComparison {
                sql: join_sql.clone(),
                method: kmeans,
            },
        ),
        q(
            15,
            "PCA on the result of query 12",
            WorkloadQuery::TupleComparison {
                sql: join_sql,
                method: Method::Pca,
            },
        ),
    ])
}

/// Runs one query, returning its result size and JSON result.
pub fn execute_query(lake: &Lake, query: &WorkloadQuery) -> Result<(usize, serde_json::Value)> {
    use serde_json::to_value;
    Ok(match query {
        WorkloadQuery::Navigate { expr } => {
            let ids = lake.navigate(expr)?;
            (ids.len(), to_value(ids)?)
        }
        WorkloadQuery::Search { query } => {
            let hits = lake.search(query)?;
            (hits.len(), to_value(hits)?)
        }
        WorkloadQuery::TopJoinable { n } => {
            let top = lake.catalog().top_joinable_tables(*n)?;
            (top.len(), to_value(top)?)
        }
        WorkloadQuery::Related { document, k } => {
            let related = lake.related(crate::catalog::ObjectId(*document), *k)?;
            (related.len(), to_value(related)?)
        }
        WorkloadQuery::ScoreByGroup { grouping, terms } => {
            let scores = lake.score_by_group(grouping, terms, Language::English)?;
            (scores.len(), to_value(scores)?)
        }
        WorkloadQuery::Highlights { terms } => {
            let snippets = lake.highlights(None, terms, DEFAULT_WINDOW, DEFAULT_MAX_SNIPPETS)?;
            (snippets.len(), to_value(snippets)?)
        }
        WorkloadQuery::TopKeywords { k } => {
            let ranking = lake.top_keywords(None, *k, None)?;
            (ranking.entries.len(), to_value(ranking)?)
        }
        WorkloadQuery::CompareGroups { grouping, method } => {
            let cmp = lake.compare_groups(grouping, *method)?;
            (cmp.labels.len(), to_value(cmp)?)
        }
        WorkloadQuery::Sql { sql } => {
            let t = lake.sql(sql)?;
            let columns: Vec<&str> = t.schema.iter().map(|f| f.name.as_str()).collect();
            (
                t.rows.len(),
                serde_json::json!({ "columns": columns, "rows": t.rows_json() }),
            )
        }
        WorkloadQuery::TupleComparison { sql, method } => {
            let cmp = lake.tuple_comparison(sql, *method)?;
            (cmp.rows.len(), to_value(cmp)?)
        }
    })
}

pub fn digest(count: usize, value: &serde_json::Value) -> String {
    let hash = Sha256::digest(value.to_string().as_bytes());
    format!("{count}:{}", hex::encode(hash))
}

/// Runs every query `runs` times (at least [`MIN_RUNS`]) and reports mean
/// latency and the digest of the result. A digest that changes between
/// runs is an error.
pub fn run_workload(lake: &Lake, runs: usize) -> Result<Vec<WorkloadResult>> {
    if runs < MIN_RUNS {
        return Err(LakeError::invalid(format!("workload needs at least {MIN_RUNS} runs")));
    }
    let plan = plan_workload(lake)?;
    let mut out = Vec::with_capacity(plan.len());
    for p in plan {
        let mut total = 0.0;
        let mut first: Option<String> = None;
        let mut count = 0;
        for _ in 0..runs {
            let start = Instant::now();
            let (n, value) = execute_query(lake, &p.query)
                .map_err(|e| LakeError::precondition(format!("query {} failed: {e}", p.id)))?;
            total += start.elapsed().as_secs_f64() * 1e3;
            let d = digest(n, &value);
            match &first {
                None => first = Some(d),
                Some(f) if *f != d => {
                    return Err(LakeError::precondition(format!("query {} is not deterministic", p.id)))
                }
                Some(_) => {}
            }
            count = n;
        }
        out.push(WorkloadResult {
            id: p.id,
            description: p.description,
            mean_ms: total / runs as f64,
            runs,
            count,
            digest: first.expect("at least one run"),
        });
    }
    Ok(out)
}
