//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Run with `cargo test -p lake-core --test acceptance`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::time::Instant;

use lake_core::analytics::{kmeans, pca2d, DEFAULT_MAX_ITER, DEFAULT_TOL};
use lake_core::catalog::{Catalog, ColumnId, ObjectId, ObjectKind};
use lake_core::fixture::{self, FixtureSpec};
use lake_core::tablestore::sql::{AggFunc, CmpOp};
use lake_core::tablestore::{
    detect_joinability, execute, jaccard, ks_statistic, AggregateExpr, DataType, Field, PlanOperand, Predicate,
    QueryPlan, RelTable, TableColumns, Value,
};
use lake_core::textproc::{cosine, normalize_terms, normalize_word, tokenize, Language};
use lake_core::workload::{run_workload, MIN_RUNS};
use lake_core::{Lake, SidecarPolicy, TermQuery};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Wall-clock bound for retrieval and tabular queries (1-8, 12-15).
const FAST_QUERY_BOUND_MS: f64 = 1_000.0;
/// Wall-clock bound for heavy textual queries (9-11).
const HEAVY_QUERY_BOUND_MS: f64 = 30_000.0;
const MEASURE_TOL: f64 = 1e-9;
const ORTHONORMAL_TOL: f64 = 1e-9;
/// Relative slack when checking that inertia never increases.
const INERTIA_REL_TOL: f64 = 1e-12;
const MAX_METADATA_RATIO: f64 = 1.5;
/// Published ratios for two production lakes, printed for comparison only.
const REFERENCE_RATIOS: [f64; 2] = [0.45, 0.55];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(problems: Vec<String>, ok_detail: String) -> Outcome {
    if problems.is_empty() {
        Outcome {
            pass: true,
            detail: ok_detail,
        }
    } else {
        let shown: Vec<_> = problems.iter().take(5).cloned().collect();
        Outcome {
            pass: false,
            detail: format!("{} problem(s): {}", problems.len(), shown.join("; ")),
        }
    }
}

fn build_fixture_lake(dir: &Path) -> Lake {
    let src = dir.join("corpus");
    fixture::generate(&src, &FixtureSpec::default()).expect("fixture generation");
    let mut lake = Lake::init(dir.join("lake")).expect("lake init");
    let report = lake.ingest(&src, SidecarPolicy::Merge).expect("ingest");
    assert!(
        report.failures.is_empty(),
        "fixture ingest failures: {:?}",
        report.failures
    );
    lake
}

// ----- 1. workload ---------------------------------------------------------

fn workload(lake: &Lake) -> Outcome {
    let mut problems = Vec::new();
    let cat = lake.catalog();
    let docs = cat.objects_of_kind(ObjectKind::Textual).count();
    let tables = cat.objects_of_kind(ObjectKind::Tabular).count();
    if docs < 200 {
        problems.push(format!("only {docs} documents"));
    }
    if tables < 10 {
        problems.push(format!("only {tables} tables"));
    }
    for g in ["language", "month", "author"] {
        if cat.grouping_by_name(g).is_none() {
            problems.push(format!("missing grouping {g}"));
        }
    }
    if cat.joinability_edges().is_empty() {
        problems.push("no PK/FK pair detected".into());
    }
    let first = run_workload(lake, MIN_RUNS);
    let second = run_workload(lake, MIN_RUNS);
    let (first, second) = match (first, second) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            problems.push(format!("workload failed: {e}"));
            return outcome(problems, String::new());
        }
    };
    if first.len() != 15 {
        problems.push(format!("{} queries ran", first.len()));
    }
    let mut slowest = (0u8, 0.0f64);
    for (a, b) in first.iter().zip(&second) {
        if a.digest != b.digest {
            problems.push(format!("query {} digest changed between runs", a.id));
        }
        let bound = if (9..=11).contains(&a.id) {
            HEAVY_QUERY_BOUND_MS
        } else {
            FAST_QUERY_BOUND_MS
        };
        for r in [a, b] {
            if r.mean_ms >= bound {
                problems.push(format!("query {} took {:.1} ms (bound {bound} ms)", r.id, r.mean_ms));
            }
            if r.mean_ms > slowest.1 {
                slowest = (r.id, r.mean_ms);
            }
        }
    }
    if let Some(q1) = first.first() {
        if q1.count == 0 {
            problems.push("query 1 returned nothing on the fixture".into());
        }
    }
    outcome(
        problems,
        format!(
            "{docs} docs, {tables} tables, 15 queries x2 identical digests, slowest q{} {:.1} ms",
            slowest.0, slowest.1
        ),
    )
}

// ----- 2. term queries vs raw scan ---------------------------------------

fn object_terms_by_scan(lake: &Lake) -> BTreeMap<ObjectId, BTreeSet<String>> {
    let mut out = BTreeMap::new();
    for o in lake.catalog().objects() {
        let mut terms = BTreeSet::new();
        match o.kind {
            ObjectKind::Textual => {
                let text = String::from_utf8(lake.raw(o.id).unwrap()).unwrap();
                let lang = lake.language_of(o.id).unwrap();
                for tok in tokenize(&text) {
                    terms.extend(normalize_word(tok.text, lang));
                }
            }
            ObjectKind::Tabular => {
                let t = lake.table(o.id).unwrap();
                let lang = lake.language_of(o.id).unwrap();
                for (c, f) in t.schema.iter().enumerate() {
                    if f.dtype != DataType::Text {
                        continue;
                    }
                    for v in t.column_values(c) {
                        if let Value::Text(s) = v {
                            for tok in tokenize(s) {
                                terms.extend(normalize_word(tok.text, lang));
                            }
                        }
                    }
                }
            }
        }
        out.insert(o.id, terms);
    }
    out
}

fn term_queries(lake: &Lake) -> Outcome {
    let scan = object_terms_by_scan(lake);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ids: Vec<ObjectId> = scan.keys().copied().collect();
    let mut problems = Vec::new();
    let mut nonempty = 0;
    for q in 0..50 {
        let n_terms = rng.random_range(1..=3);
        let mut words = Vec::new();
        for _ in 0..n_terms {
            if rng.random_range(0..10) == 0 {
                words.push("zyxwvut".to_string());
                continue;
            }
            // a raw token from a random object keeps the queries realistic
            let id = *ids.choose(&mut rng).unwrap();
            let text = match lake.catalog().object(id).unwrap().kind {
                ObjectKind::Textual => String::from_utf8(lake.raw(id).unwrap()).unwrap(),
                ObjectKind::Tabular => lake.table(id).unwrap().to_csv(),
            };
            let toks: Vec<String> = tokenize(&text)
                .into_iter()
                .map(|t| t.text.to_string())
                .filter(|t| normalize_word(t, Language::English).is_some())
                .collect();
            if let Some(t) = toks.choose(&mut rng) {
                words.push(t.clone());
            }
        }
        let wanted = normalize_terms(&words, Language::English);
        if wanted.is_empty() {
            continue;
        }
        let expected: BTreeSet<ObjectId> = scan
            .iter()
            .filter(|(_, terms)| wanted.iter().all(|w| terms.contains(w)))
            .map(|(id, _)| *id)
            .collect();
        let got: BTreeSet<ObjectId> = match lake.search(&TermQuery::all(&words)) {
            Ok(hits) => hits.into_iter().map(|h| h.object).collect(),
            Err(e) => {
                problems.push(format!("query {q} {words:?}: {e}"));
                continue;
            }
        };
        if got != expected {
            problems.push(format!(
                "query {q} {words:?}: {} hits vs {} by scan",
                got.len(),
                expected.len()
            ));
        }
        nonempty += usize::from(!expected.is_empty());
    }
    outcome(
        problems,
        format!("50 queries, {nonempty} with matches, all equal to the scan"),
    )
}

// ----- 3. joinability ----------------------------------------------------

fn random_table(rng: &mut ChaCha8Rng, name: &str, pools: &[Vec<Value>]) -> RelTable {
    let rows = rng.random_range(0..25);
    let ncols = rng.random_range(1..=4);
    let mut schema = Vec::new();
    let mut columns: Vec<Vec<Value>> = Vec::new();
    for c in 0..ncols {
        let kind = rng.random_range(0..3);
        let dtype = [DataType::Integer, DataType::Real, DataType::Text][kind];
        let pool = &pools[kind];
        let mut col: Vec<Value> = if rng.random_bool(0.4) && rows <= pool.len() {
            // unique: a candidate key unless a null slips in
            let mut p = pool.clone();
            for i in (1..p.len()).rev() {
                p.swap(i, rng.random_range(0..=i));
            }
            p.truncate(rows);
            p
        } else {
            let width = rng.random_range(1..=pool.len());
            (0..rows).map(|_| pool[rng.random_range(0..width)].clone()).collect()
        };
        for v in col.iter_mut() {
            if rng.random_range(0..30) == 0 {
                *v = Value::Null;
            }
        }
        schema.push(Field::new(format!("c{c}"), dtype));
        columns.push(col);
    }
    let rows = (0..rows)
        .map(|r| columns.iter().map(|c| c[r].clone()).collect())
        .collect();
    RelTable {
        name: name.to_string(),
        schema,
        rows,
    }
}

fn value_key(v: &Value) -> Option<String> {
    match v {
        Value::Null => None,
        Value::Int(i) => Some(format!("n{}", *i as f64)),
        Value::Real(r) => Some(format!("n{r}")),
        Value::Text(s) => Some(format!("s{s}")),
        other => Some(format!("{other:?}")),
    }
}

type EdgeSet = BTreeSet<(ColumnId, ColumnId)>;

fn brute_force_edges(tables: &[(ObjectId, RelTable, Vec<ColumnId>)], theta: f64) -> EdgeSet {
    let mut out = BTreeSet::new();
    for (po, pt, pids) in tables {
        for (pc, pf) in pt.schema.iter().enumerate() {
            let pvals: Vec<&Value> = pt.column_values(pc).collect();
            let pset: BTreeSet<String> = pvals.iter().filter_map(|v| value_key(v)).collect();
            let is_key = !pvals.is_empty() && pvals.iter().all(|v| !v.is_null()) && pset.len() == pvals.len();
            if !is_key {
                continue;
            }
            for (fo, ft, fids) in tables {
                if fo == po {
                    continue;
                }
                for (fc, ff) in ft.schema.iter().enumerate() {
                    let numeric = |d: DataType| matches!(d, DataType::Integer | DataType::Real);
                    if !(ff.dtype == pf.dtype || numeric(ff.dtype) && numeric(pf.dtype)) {
                        continue;
                    }
                    let fset: BTreeSet<String> = ft.column_values(fc).filter_map(value_key).collect();
                    if fset.is_empty() {
                        continue;
                    }
                    let inc = fset.intersection(&pset).count() as f64 / fset.len() as f64;
                    if inc >= theta {
                        out.insert((fids[fc], pids[pc]));
                    }
                }
            }
        }
    }
    out
}

fn joinability() -> Outcome {
    let mut problems = Vec::new();
    let thetas = [0.5, 0.8, 0.95, 1.0];
    let mut total_edges = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let pools = vec![
            (0..30).map(Value::Int).collect::<Vec<_>>(),
            (0..30)
                .map(|i| Value::Real(i as f64 * if i % 3 == 0 { 1.0 } else { 0.5 }))
                .collect(),
            (0..30).map(|i| Value::Text(format!("k{i}"))).collect(),
        ];
        let mut next_col = 0;
        let tables: Vec<(ObjectId, RelTable, Vec<ColumnId>)> = (0..10)
            .map(|i| {
                let t = random_table(&mut rng, &format!("r{i}"), &pools);
                let ids = t
                    .schema
                    .iter()
                    .map(|_| {
                        next_col += 1;
                        ColumnId(next_col)
                    })
                    .collect();
                (ObjectId(i), t, ids)
            })
            .collect();
        let input: Vec<TableColumns> = tables
            .iter()
            .map(|(o, t, ids)| TableColumns {
                object: *o,
                table: t,
                column_ids: ids,
            })
            .collect();
        let mut previous: Option<EdgeSet> = None;
        for theta in thetas {
            let got: EdgeSet = detect_joinability(&input, theta)
                .into_iter()
                .map(|e| (e.fk_column, e.pk_column))
                .collect();
            let expected = brute_force_edges(&tables, theta);
            if got != expected {
                problems.push(format!(
                    "seed {seed} theta {theta}: {} edges vs {}",
                    got.len(),
                    expected.len()
                ));
            }
            if let Some(prev) = &previous {
                if !got.is_subset(prev) {
                    problems.push(format!(
                        "seed {seed}: edges at theta {theta} not a subset of the lower threshold"
                    ));
                }
            }
            total_edges += got.len();
            previous = Some(got);
        }
    }
    outcome(
        problems,
        format!("20 random 10-table lakes x 4 thresholds, {total_edges} edges, monotone in theta"),
    )
}

// ----- 4. similarity measures --------------------------------------------

fn jaccard_oracle(a: &[u8], b: &[u8]) -> f64 {
    let mut sa = a.to_vec();
    sa.sort();
    sa.dedup();
    let mut sb = b.to_vec();
    sb.sort();
    sb.dedup();
    if sa.is_empty() && sb.is_empty() {
        return 1.0;
    }
    let inter = sa.iter().filter(|x| sb.binary_search(x).is_ok()).count();
    inter as f64 / (sa.len() + sb.len() - inter) as f64
}

fn ks_oracle(a: &[f64], b: &[f64]) -> f64 {
    let ecdf = |s: &[f64], x: f64| s.iter().filter(|v| **v <= x).count() as f64 / s.len() as f64;
    a.iter()
        .chain(b)
        .map(|x| (ecdf(a, *x) - ecdf(b, *x)).abs())
        .fold(0.0, f64::max)
}

fn cosine_oracle(u: &[f64], v: &[f64]) -> f64 {
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    u.iter().zip(v).map(|(a, b)| (a / nu) * (b / nv)).sum()
}

fn measures() -> Outcome {
    let mut problems = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..100 {
        let a: Vec<u8> = (0..rng.random_range(0..20)).map(|_| rng.random_range(0..25)).collect();
        let b: Vec<u8> = (0..rng.random_range(0..20)).map(|_| rng.random_range(0..25)).collect();
        let got = jaccard(a.iter(), b.iter());
        if (got - jaccard_oracle(&a, &b)).abs() > MEASURE_TOL {
            problems.push(format!("jaccard input {i}"));
        }
    }
    for i in 0..100 {
        let gen = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..rng.random_range(1..30))
                .map(|_| (rng.random_range(0..40) as f64) / 4.0 - 3.0)
                .collect()
        };
        let (a, b) = (gen(&mut rng), gen(&mut rng));
        match ks_statistic(&a, &b) {
            Ok(got) if (got - ks_oracle(&a, &b)).abs() <= MEASURE_TOL => {}
            other => problems.push(format!("ks input {i}: {other:?}")),
        }
    }
    for i in 0..100 {
        let d = rng.random_range(1..50);
        let u: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = if i % 10 == 0 {
            vec![0.0; d]
        } else {
            (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()
        };
        match cosine(&u, &v) {
            Ok(got) if (got - cosine_oracle(&u, &v)).abs() <= MEASURE_TOL => {}
            other => problems.push(format!("cosine input {i}: {other:?}")),
        }
    }
    let pinned = ks_statistic(&[1.0, 2.0, 3.0, 4.0], &[2.0, 3.0, 4.0, 5.0]);
    if pinned.as_ref().ok() != Some(&0.25) {
        problems.push(format!("KS([1,2,3,4],[2,3,4,5]) = {pinned:?}, expected exactly 0.25"));
    }
    outcome(
        problems,
        "jaccard, KS, cosine: 100 inputs each within 1e-9; KS pinned value exact".into(),
    )
}

// ----- 5. SQL executor vs reference evaluator ----------------------------

fn sql_table(rng: &mut ChaCha8Rng, name: &str) -> RelTable {
    let rows = rng.random_range(0..12);
    let schema = vec![
        Field::new("i", DataType::Integer),
        Field::new("r", DataType::Real),
        Field::new("s", DataType::Text),
    ];
    let cell = |rng: &mut ChaCha8Rng, c: usize| -> Value {
        if rng.random_range(0..8) == 0 {
            return Value::Null;
        }
        match c {
            0 => Value::Int(rng.random_range(-3..6)),
            1 => Value::Real(rng.random_range(-6..12) as f64 / 2.0),
            _ => Value::Text(["a", "b", "c", "d"][rng.random_range(0..4)].to_string()),
        }
    };
    let rows = (0..rows).map(|_| (0..3).map(|c| cell(rng, c)).collect()).collect();
    RelTable {
        name: name.to_string(),
        schema,
        rows,
    }
}

fn scan(t: &RelTable, binding: &str) -> QueryPlan {
    QueryPlan::Scan {
        table: t.name.clone(),
        schema: t
            .schema
            .iter()
            .map(|f| Field::new(format!("{binding}.{}", f.name), f.dtype))
            .collect(),
    }
}

fn random_predicate(rng: &mut ChaCha8Rng, schema: &[Field], depth: usize) -> Predicate {
    let ops = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];
    let choice = if depth == 0 {
        rng.random_range(0..2)
    } else {
        rng.random_range(0..5)
    };
    match choice {
        0 => {
            let c = rng.random_range(0..schema.len());
            let right = match schema[c].dtype {
                DataType::Text => {
                    PlanOperand::Literal(Value::Text(["a", "b", "c", "e"][rng.random_range(0..4)].into()))
                }
                _ => {
                    let numeric: Vec<usize> = (0..schema.len()).filter(|i| schema[*i].dtype.is_numeric()).collect();
                    if rng.random_bool(0.5) {
                        PlanOperand::Column(*numeric.choose(rng).unwrap())
                    } else {
                        PlanOperand::Literal(Value::Real(rng.random_range(-4..8) as f64 / 2.0))
                    }
                }
            };
            Predicate::Compare {
                left: PlanOperand::Column(c),
                op: *ops.choose(rng).unwrap(),
                right,
            }
        }
        1 => Predicate::IsNull {
            operand: PlanOperand::Column(rng.random_range(0..schema.len())),
            negated: rng.random_bool(0.5),
        },
        2 => Predicate::And(
            Box::new(random_predicate(rng, schema, depth - 1)),
            Box::new(random_predicate(rng, schema, depth - 1)),
        ),
        3 => Predicate::Or(
            Box::new(random_predicate(rng, schema, depth - 1)),
            Box::new(random_predicate(rng, schema, depth - 1)),
        ),
        _ => Predicate::Not(Box::new(random_predicate(rng, schema, depth - 1))),
    }
}

fn random_plan(rng: &mut ChaCha8Rng, tables: &[RelTable]) -> QueryPlan {
    let a = &tables[rng.random_range(0..tables.len())];
    let mut plan = scan(a, "x");
    if rng.random_bool(0.6) {
        let b = &tables[rng.random_range(0..tables.len())];
        let on = match rng.random_range(0..3) {
            0 => vec![(0, 0)],
            1 => vec![(0, 1)],
            _ => vec![(2, 2), (0, 0)],
        };
        plan = QueryPlan::Join {
            left: Box::new(plan),
            right: Box::new(scan(b, "y")),
            on,
        };
    }
    if rng.random_bool(0.7) {
        let schema = plan.schema();
        plan = QueryPlan::Filter {
            predicate: random_predicate(rng, &schema, 2),
            input: Box::new(plan),
        };
    }
    let schema = plan.schema();
    if rng.random_bool(0.5) {
        let group_by: Vec<usize> = (0..schema.len())
            .filter(|_| rng.random_range(0..4) == 0)
            .take(2)
            .collect();
        let mut aggregates = Vec::new();
        for k in 0..rng.random_range(1..4) {
            let func = *[AggFunc::Count, AggFunc::Sum, AggFunc::Avg, AggFunc::Min, AggFunc::Max]
                .choose(rng)
                .unwrap();
            let column = match func {
                AggFunc::Count if rng.random_bool(0.5) => None,
                AggFunc::Sum | AggFunc::Avg => {
                    let numeric: Vec<usize> = (0..schema.len()).filter(|i| schema[*i].dtype.is_numeric()).collect();
                    Some(*numeric.choose(rng).unwrap())
                }
                _ => Some(rng.random_range(0..schema.len())),
            };
            aggregates.push(AggregateExpr {
                func,
                column,
                name: format!("a{k}"),
            });
        }
        QueryPlan::Aggregate {
            input: Box::new(plan),
            group_by,
            aggregates,
        }
    } else {
        let columns = (0..schema.len())
            .filter(|_| rng.random_bool(0.6))
            .map(|i| (i, format!("p{i}")))
            .collect::<Vec<_>>();
        let columns = if columns.is_empty() {
            vec![(0, "p0".to_string())]
        } else {
            columns
        };
        QueryPlan::Project {
            input: Box::new(plan),
            columns,
        }
    }
}

fn num(v: &Value) -> Option<f64> {
    match v {
        Value::Int(i) => Some(*i as f64),
        Value::Real(r) => Some(*r),
        _ => None,
    }
}

/// Three-way comparison for non-null values of compatible types.
fn ref_cmp(a: &Value, b: &Value) -> Option<std::cmp::Ordering> {
    match (a, b) {
        (Value::Text(x), Value::Text(y)) => Some(x.cmp(y)),
        _ => num(a)?.partial_cmp(&num(b)?),
    }
}

fn ref_pred(p: &Predicate, row: &[Value]) -> bool {
    let get = |o: &PlanOperand| match o {
        PlanOperand::Column(c) => row[*c].clone(),
        PlanOperand::Literal(v) => v.clone(),
    };
    match p {
        Predicate::Compare { left, op, right } => {
            let (a, b) = (get(left), get(right));
            if a.is_null() || b.is_null() {
                return false;
            }
            let o = ref_cmp(&a, &b).expect("comparable operands");
            use std::cmp::Ordering::*;
            match op {
                CmpOp::Eq => o == Equal,
                CmpOp::Ne => o != Equal,
                CmpOp::Lt => o == Less,
                CmpOp::Le => o != Greater,
                CmpOp::Gt => o == Greater,
                CmpOp::Ge => o != Less,
            }
        }
        Predicate::IsNull { operand, negated } => get(operand).is_null() != *negated,
        Predicate::And(a, b) => ref_pred(a, row) && ref_pred(b, row),
        Predicate::Or(a, b) => ref_pred(a, row) || ref_pred(b, row),
        Predicate::Not(a) => !ref_pred(a, row),
    }
}

fn ref_eval(plan: &QueryPlan, db: &BTreeMap<String, RelTable>) -> Vec<Vec<Value>> {
    match plan {
        QueryPlan::Scan { table, .. } => db[table].rows.clone(),
        QueryPlan::Filter { input, predicate } => ref_eval(input, db)
            .into_iter()
            .filter(|r| ref_pred(predicate, r))
            .collect(),
        QueryPlan::Join { left, right, on } => {
            let (l, r) = (ref_eval(left, db), ref_eval(right, db));
            let mut out = Vec::new();
            for a in &l {
                for b in &r {
                    let matches = on.iter().all(|(i, j)| {
                        !a[*i].is_null()
                            && !b[*j].is_null()
                            && ref_cmp(&a[*i], &b[*j]) == Some(std::cmp::Ordering::Equal)
                    });
                    if matches {
                        out.push(a.iter().chain(b).cloned().collect());
                    }
                }
            }
            out
        }
        QueryPlan::Aggregate {
            input,
            group_by,
            aggregates,
        } => {
            let in_schema = input.schema();
            let rows = ref_eval(input, db);
            let mut keys: Vec<Vec<Value>> = Vec::new();
            for r in &rows {
                let k: Vec<Value> = group_by.iter().map(|i| r[*i].clone()).collect();
                if !keys.contains(&k) {
                    keys.push(k);
                }
            }
            if group_by.is_empty() && keys.is_empty() {
                keys.push(Vec::new());
            }
            keys.into_iter()
                .map(|k| {
                    let members: Vec<&Vec<Value>> = rows
                        .iter()
                        .filter(|r| group_by.iter().map(|i| r[*i].clone()).collect::<Vec<_>>() == k)
                        .collect();
                    let mut out = k.clone();
                    for a in aggregates {
                        let vals: Vec<&Value> = match a.column {
                            Some(c) => members.iter().map(|r| &r[c]).filter(|v| !v.is_null()).collect(),
                            None => Vec::new(),
                        };
                        out.push(match (a.func, a.column) {
                            (AggFunc::Count, None) => Value::Int(members.len() as i64),
                            (AggFunc::Count, Some(_)) => Value::Int(vals.len() as i64),
                            _ if vals.is_empty() => Value::Null,
                            (AggFunc::Sum, Some(c)) => {
                                if in_schema[c].dtype == DataType::Integer {
                                    Value::Int(vals.iter().map(|v| num(v).unwrap() as i64).sum())
                                } else {
                                    Value::Real(vals.iter().map(|v| num(v).unwrap()).sum())
                                }
                            }
                            (AggFunc::Avg, _) => {
                                Value::Real(vals.iter().map(|v| num(v).unwrap()).sum::<f64>() / vals.len() as f64)
                            }
                            (AggFunc::Min, _) => (*vals.iter().min_by(|x, y| ref_cmp(x, y).unwrap()).unwrap()).clone(),
                            (AggFunc::Max, _) => (*vals.iter().max_by(|x, y| ref_cmp(x, y).unwrap()).unwrap()).clone(),
                            _ => unreachable!(),
                        });
                    }
                    out
                })
                .collect()
        }
        QueryPlan::Project { input, columns } => ref_eval(input, db)
            .into_iter()
            .map(|r| columns.iter().map(|(i, _)| r[*i].clone()).collect())
            .collect(),
    }
}

fn rows_equal(a: &[Vec<Value>], b: &[Vec<Value>]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.len() == y.len()
                && x.iter().zip(y).all(|(u, v)| match (u, v) {
                    (Value::Real(p), Value::Real(q)) => (p - q).abs() <= 1e-9 * (1.0 + p.abs().max(q.abs())),
                    _ => u == v,
                })
        })
}

fn sql_executor() -> Outcome {
    let mut problems = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut nonempty = 0;
    for i in 0..200 {
        let tables: Vec<RelTable> = (0..3).map(|k| sql_table(&mut rng, &format!("q{k}"))).collect();
        let db: BTreeMap<String, RelTable> = tables.iter().map(|t| (t.name.clone(), t.clone())).collect();
        let plan = random_plan(&mut rng, &tables);
        let mut expected = ref_eval(&plan, &db);
        expected.sort();
        match execute(&plan, &db) {
            Ok(got) => {
                if !rows_equal(&got.rows, &expected) {
                    problems.push(format!(
                        "plan {i}: {} rows vs {} expected",
                        got.rows.len(),
                        expected.len()
                    ));
                }
                if got.schema != plan.schema() {
                    problems.push(format!("plan {i}: schema differs from the plan's"));
                }
                nonempty += usize::from(!expected.is_empty());
            }
            Err(e) => problems.push(format!("plan {i}: {e}")),
        }
    }
    outcome(
        problems,
        format!("200 random plans ({nonempty} nonempty) equal the nested-loop evaluator"),
    )
}

// ----- 6. KMeans / PCA -----------------------------------------------------

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn clustering() -> Outcome {
    let mut problems = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for inst in 0..100u64 {
        let n = rng.random_range(3..60);
        let d = rng.random_range(2..6);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-10.0..10.0)).collect())
            .collect();
        let k = rng.random_range(1..=n.min(6));
        match kmeans(&pts, k, inst, DEFAULT_MAX_ITER, DEFAULT_TOL) {
            Ok(c) => {
                for w in c.inertia_history.windows(2) {
                    if w[1] > w[0] * (1.0 + INERTIA_REL_TOL) {
                        problems.push(format!("kmeans instance {inst}: inertia rose {} -> {}", w[0], w[1]));
                    }
                }
                for (p, l) in pts.iter().zip(&c.labels) {
                    let own = sq(p, &c.centroids[*l]);
                    if c.centroids.iter().any(|m| sq(p, m) < own * (1.0 - 1e-12) - 1e-12) {
                        problems.push(format!("kmeans instance {inst}: point not at its nearest centroid"));
                        break;
                    }
                }
            }
            Err(e) => problems.push(format!("kmeans instance {inst}: {e}")),
        }
        match pca2d(&pts) {
            Ok(p) => {
                let [a, b] = &p.components;
                let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| u * v).sum::<f64>();
                if (dot(a, a) - 1.0).abs() > ORTHONORMAL_TOL
                    || (dot(b, b) - 1.0).abs() > ORTHONORMAL_TOL
                    || dot(a, b).abs() > ORTHONORMAL_TOL
                {
                    problems.push(format!("pca instance {inst}: components not orthonormal"));
                }
                if p.explained_variance[1] > p.explained_variance[0] {
                    problems.push(format!("pca instance {inst}: variance increases"));
                }
            }
            Err(e) => problems.push(format!("pca instance {inst}: {e}")),
        }
    }
    let mut recovered = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for bundle in 0..2 {
            let centre = if bundle == 0 { -10.0 } else { 10.0 };
            for _ in 0..rng.random_range(5..40) {
                pts.push(vec![
                    centre + rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ]);
                truth.push(bundle);
            }
        }
        let km_ok = kmeans(&pts, 2, seed, DEFAULT_MAX_ITER, DEFAULT_TOL).is_ok_and(|c| {
            let flip = c.labels[0] != truth[0];
            c.labels.iter().zip(&truth).all(|(l, t)| (*l == *t) != flip)
        });
        let pca_ok = pca2d(&pts).is_ok_and(|p| {
            let first = p.coordinates[0][0].signum();
            p.coordinates
                .iter()
                .zip(&truth)
                .all(|(c, t)| (c[0].signum() == first) == (*t == truth[0]))
        });
        if km_ok && pca_ok {
            recovered += 1;
        }
    }
    if recovered != 100 {
        problems.push(format!("two bundles recovered for {recovered}/100 seeds"));
    }
    outcome(
        problems,
        "100 instances: monotone inertia, nearest-centroid labels, orthonormal PCA; bundles 100/100".into(),
    )
}

// ----- 7. catalog --------------------------------------------------------

fn catalog(lake: &Lake) -> Outcome {
    let mut problems = lake.check_invariants();
    let cat = lake.catalog();
    let objects: BTreeSet<ObjectId> = cat.objects().map(|o| o.id).collect();
    for g in cat.groupings() {
        let mut seen: HashMap<ObjectId, usize> = HashMap::new();
        for grp in cat.groups(g.id) {
            for m in cat.members(grp.id).unwrap() {
                *seen.entry(*m).or_default() += 1;
            }
        }
        let covered: BTreeSet<ObjectId> = seen.keys().copied().collect();
        if covered != objects || seen.values().any(|c| *c != 1) {
            problems.push(format!("grouping {} is not a partition", g.name));
        }
    }
    let mut max_degree = 0;
    for o in cat.objects_of_kind(ObjectKind::Textual) {
        max_degree = max_degree.max(cat.outgoing_similarity(o.id).len());
    }
    if max_degree > 10 {
        problems.push(format!("similarity out-degree {max_degree}"));
    }
    let before = cat.dump();
    let reopened = Catalog::open(lake.root()).map(|c| c.dump());
    match reopened {
        Ok(after) if after == before => {}
        Ok(_) => problems.push("dump differs after restart".into()),
        Err(e) => problems.push(format!("reopen failed: {e}")),
    }
    outcome(
        problems,
        format!(
            "{} groupings partition {} objects, max out-degree {max_degree}, restart dump identical",
            cat.groupings().count(),
            objects.len()
        ),
    )
}

// ----- 8. metadata size --------------------------------------------------

fn walk_bytes(p: &Path) -> u64 {
    let meta = std::fs::symlink_metadata(p).unwrap();
    if meta.is_dir() {
        std::fs::read_dir(p)
            .unwrap()
            .map(|e| walk_bytes(&e.unwrap().path()))
            .sum()
    } else {
        meta.len()
    }
}

fn stats(lake: &Lake) -> Outcome {
    let mut problems = Vec::new();
    let s = match lake.stats() {
        Ok(s) => s,
        Err(e) => return outcome(vec![e.to_string()], String::new()),
    };
    if !(s.ratio > 0.0 && s.ratio <= MAX_METADATA_RATIO) {
        problems.push(format!("ratio {:.3} outside (0, {MAX_METADATA_RATIO}]", s.ratio));
    }
    if s.metadata_bytes != s.metadata.total() {
        problems.push("total is not the sum of the stores".into());
    }
    let on_disk = walk_bytes(lake.root());
    if on_disk != s.raw_bytes + s.metadata_bytes {
        problems.push(format!(
            "independent walk finds {on_disk} bytes, stats account for {}",
            s.raw_bytes + s.metadata_bytes
        ));
    }
    let reference: Vec<String> = REFERENCE_RATIOS.iter().map(|r| format!("~{r}")).collect();
    outcome(
        problems,
        format!(
            "ratio {:.3} ({} / {} bytes); reference lakes: {}",
            s.ratio,
            s.metadata_bytes,
            s.raw_bytes,
            reference.join(", ")
        ),
    )
}

fn main() {
    // `cargo test` passes harness flags; a name filter that excludes this
    // suite skips it.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if args.iter().any(|a| !"acceptance".contains(a.as_str())) {
        return;
    }
    let dir = tempfile::tempdir().expect("temp dir");
    let started = Instant::now();
    let lake = build_fixture_lake(dir.path());
    println!("fixture lake built in {:.1} s", started.elapsed().as_secs_f64());

    type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let checks: Vec<(&str, Check)> = vec![
        ("workload completeness", Box::new(|| workload(&lake))),
        ("term queries vs raw scan", Box::new(|| term_queries(&lake))),
        ("joinability vs brute force", Box::new(joinability)),
        ("jaccard / KS / cosine", Box::new(measures)),
        ("SQL executor vs reference", Box::new(sql_executor)),
        ("KMeans / PCA", Box::new(clustering)),
        ("catalog invariants", Box::new(|| catalog(&lake))),
        ("metadata size ratio", Box::new(|| stats(&lake))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!(
            "{} [{}] {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criterion(s) failed");
        std::process::exit(1);
    }
}
