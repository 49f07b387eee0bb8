use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use super::plan::{aggregate_type, AggregateExpr, PlanOperand, Predicate, QueryPlan, TableProvider};
use super::sql::{AggFunc, CmpOp};
use super::table::RelTable;
use super::value::{DataType, Value};
use crate::error::{LakeError, Result};

type Row = Vec<Value>;

/// Runs a plan with bag semantics. The result rows are sorted by all output
/// columns so results are reproducible.
pub fn execute(plan: &QueryPlan, tables: &dyn TableProvider) -> Result<RelTable> {
    let mut rows = run(plan, tables)?;
    rows.sort();
    Ok(RelTable {
        name: "result".into(),
        schema: plan.schema(),
        rows,
    })
}

fn run(plan: &QueryPlan, tables: &dyn TableProvider) -> Result<Vec<Row>> {
    match plan {
        QueryPlan::Scan { table, schema } => {
            let t = tables
                .get_table(table)
                .ok_or_else(|| LakeError::not_found("table", table))?;
            if t.schema.len() != schema.len() {
                return Err(LakeError::SqlValidation(format!(
                    "table {table} changed shape since planning"
                )));
            }
            Ok(t.rows.clone())
        }
        QueryPlan::Filter { input, predicate } => {
            let mut out = Vec::new();
            for row in run(input, tables)? {
                if eval(predicate, &row)? {
                    out.push(row);
                }
            }
            Ok(out)
        }
        QueryPlan::Join { left, right, on } => {
            let l = run(left, tables)?;
            let r = run(right, tables)?;
            hash_join(l, r, on, &left.schema(), &right.schema())
        }
        QueryPlan::Aggregate {
            input,
            group_by,
            aggregates,
        } => aggregate(run(input, tables)?, &input.schema(), group_by, aggregates),
        QueryPlan::Project { input, columns } => Ok(run(input, tables)?
            .into_iter()
            .map(|row| columns.iter().map(|(i, _)| row[*i].clone()).collect())
            .collect()),
    }
}

fn operand<'a>(op: &'a PlanOperand, row: &'a [Value]) -> &'a Value {
    match op {
        PlanOperand::Column(i) => &row[*i],
        PlanOperand::Literal(v) => v,
    }
}

pub(crate) fn compare(op: CmpOp, a: &Value, b: &Value) -> Result<bool> {
    if a.is_null() || b.is_null() {
        return Ok(false);
    }
    let ord = a.sql_cmp(b).ok_or_else(|| {
        LakeError::Type(format!(
            "cannot compare {} with {}",
            a.data_type().map(|t| t.as_str()).unwrap_or("null"),
            b.data_type().map(|t| t.as_str()).unwrap_or("null")
        ))
    })?;
    Ok(match op {
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::Ne => ord != Ordering::Equal,
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Le => ord != Ordering::Greater,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Ge => ord != Ordering::Less,
    })
}

fn eval(p: &Predicate, row: &[Value]) -> Result<bool> {
    Ok(match p {
        Predicate::Compare { left, op, right } => compare(*op, operand(left, row), operand(right, row))?,
        Predicate::IsNull { operand: o, negated } => operand(o, row).is_null() != *negated,
        Predicate::And(a, b) => eval(a, row)? && eval(b, row)?,
        Predicate::Or(a, b) => eval(a, row)? || eval(b, row)?,
        Predicate::Not(a) => !eval(a, row)?,
    })
}

/// Join key for one side; numbers are widened to real when the paired
/// columns mix integer and real. `None` when any key part is null.
fn join_key(row: &[Value], cols: &[usize], widen: &[bool]) -> Option<Vec<Value>> {
    cols.iter()
        .zip(widen)
        .map(|(c, w)| match &row[*c] {
            Value::Null => None,
            Value::Int(i) if *w => Some(Value::Real(*i as f64)),
            v => Some(v.clone()),
        })
        .collect()
}

fn hash_join(
    left: Vec<Row>,
    right: Vec<Row>,
    on: &[(usize, usize)],
    left_schema: &[super::Field],
    right_schema: &[super::Field],
) -> Result<Vec<Row>> {
    let lcols: Vec<usize> = on.iter().map(|p| p.0).collect();
    let rcols: Vec<usize> = on.iter().map(|p| p.1).collect();
    let widen: Vec<bool> = on
        .iter()
        .map(|(l, r)| left_schema[*l].dtype != right_schema[*r].dtype)
        .collect();
    let mut out = Vec::new();
    // the smaller input builds the hash table
    if left.len() <= right.len() {
        let mut table: HashMap<Vec<Value>, Vec<usize>> = HashMap::new();
        for (i, row) in left.iter().enumerate() {
            if let Some(k) = join_key(row, &lcols, &widen) {
                table.entry(k).or_default().push(i);
            }
        }
        for r in &right {
            let Some(k) = join_key(r, &rcols, &widen) else { continue };
            for &i in table.get(&k).into_iter().flatten() {
                let mut row = left[i].clone();
                row.extend(r.iter().cloned());
                out.push(row);
            }
        }
    } else {
        let mut table: HashMap<Vec<Value>, Vec<usize>> = HashMap::new();
        for (i, row) in right.iter().enumerate() {
            if let Some(k) = join_key(row, &rcols, &widen) {
                table.entry(k).or_default().push(i);
            }
        }
        for l in &left {
            let Some(k) = join_key(l, &lcols, &widen) else { continue };
            for &i in table.get(&k).into_iter().flatten() {
                let mut row = l.clone();
                row.extend(right[i].iter().cloned());
                out.push(row);
            }
        }
    }
    Ok(out)
}

/// Per-group accumulator. Sums are order-independent: integers add up
/// exactly in i128 and reals are summed in sorted order.
#[derive(Debug, Clone)]
enum Acc {
    CountStar(i64),
    Count(i64),
    Sum { ints: i128, reals: Vec<f64>, any: bool },
    Avg { ints: i128, reals: Vec<f64>, n: u64 },
    Min(Option<Value>),
    Max(Option<Value>),
}

fn sorted_sum(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.into_iter().sum()
}

impl Acc {
    fn new(a: &AggregateExpr) -> Acc {
        match (a.func, a.column) {
            (AggFunc::Count, None) => Acc::CountStar(0),
            (AggFunc::Count, Some(_)) => Acc::Count(0),
            (AggFunc::Sum, _) => Acc::Sum {
                ints: 0,
                reals: Vec::new(),
                any: false,
            },
            (AggFunc::Avg, _) => Acc::Avg {
                ints: 0,
                reals: Vec::new(),
                n: 0,
            },
            (AggFunc::Min, _) => Acc::Min(None),
            (AggFunc::Max, _) => Acc::Max(None),
        }
    }

    fn update(&mut self, v: Option<&Value>) -> Result<()> {
        if let Acc::CountStar(n) = self {
            *n += 1;
            return Ok(());
        }
        let Some(v) = v.filter(|v| !v.is_null()) else {
            return Ok(());
        };
        match self {
            Acc::CountStar(_) => {}
            Acc::Count(n) => *n += 1,
            Acc::Sum { ints, reals, any } => {
                *any = true;
                match v {
                    Value::Int(i) => *ints += i128::from(*i),
                    Value::Real(r) => reals.push(*r),
                    other => return Err(LakeError::Type(format!("cannot sum {other:?}"))),
                }
            }
            Acc::Avg { ints, reals, n } => {
                *n += 1;
                match v {
                    Value::Int(i) => *ints += i128::from(*i),
                    Value::Real(r) => reals.push(*r),
                    other => return Err(LakeError::Type(format!("cannot average {other:?}"))),
                }
            }
            Acc::Min(cur) => {
                if cur.as_ref().is_none_or(|c| v.sql_cmp(c) == Some(Ordering::Less)) {
                    *cur = Some(v.clone());
                }
            }
            Acc::Max(cur) => {
                if cur.as_ref().is_none_or(|c| v.sql_cmp(c) == Some(Ordering::Greater)) {
                    *cur = Some(v.clone());
                }
            }
        }
        Ok(())
    }

    fn finish(self, dtype: DataType) -> Result<Value> {
        Ok(match self {
            Acc::CountStar(n) | Acc::Count(n) => Value::Int(n),
            Acc::Sum { any: false, .. } => Value::Null,
            Acc::Sum { ints, reals, .. } => {
                if dtype == DataType::Real {
                    let mut all = reals;
                    if ints != 0 {
                        all.push(ints as f64);
                    }
                    Value::Real(sorted_sum(all))
                } else {
                    Value::Int(i64::try_from(ints).map_err(|_| LakeError::Type("integer overflow in SUM".into()))?)
                }
            }
            Acc::Avg { n: 0, .. } => Value::Null,
            Acc::Avg { ints, reals, n } => {
                let total = if reals.is_empty() {
                    ints as f64
                } else {
                    let mut all = reals;
                    all.push(ints as f64);
                    sorted_sum(all)
                };
                Value::Real(total / n as f64)
            }
            Acc::Min(v) | Acc::Max(v) => v.unwrap_or(Value::Null),
        })
    }
}

fn aggregate(
    rows: Vec<Row>,
    input_schema: &[super::Field],
    group_by: &[usize],
    aggregates: &[AggregateExpr],
) -> Result<Vec<Row>> {
    let mut groups: BTreeMap<Vec<Value>, Vec<Acc>> = BTreeMap::new();
    if group_by.is_empty() {
        groups.insert(Vec::new(), aggregates.iter().map(Acc::new).collect());
    }
    for row in &rows {
        let key: Vec<Value> = group_by.iter().map(|i| row[*i].clone()).collect();
        let accs = groups
            .entry(key)
            .or_insert_with(|| aggregates.iter().map(Acc::new).collect());
        for (acc, a) in accs.iter_mut().zip(aggregates) {
            acc.update(a.column.map(|c| &row[c]))?;
        }
    }
    let types: Vec<DataType> = aggregates
        .iter()
        .map(|a| aggregate_type(a.func, a.column.map(|c| input_schema[c].dtype)))
        .collect();
    groups
        .into_iter()
        .map(|(mut key, accs)| {
            for (acc, t) in accs.into_iter().zip(&types) {
                key.push(acc.finish(*t)?);
            }
            Ok(key)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::plan::parse_sql;
    use super::super::{ingest_table, Field};
    use super::*;

    fn db(tables: &[(&str, &str)]) -> BTreeMap<String, RelTable> {
        tables
            .iter()
            .map(|(n, csv)| (n.to_string(), ingest_table(n, csv.as_bytes()).unwrap()))
            .collect()
    }

    fn run_sql(sql: &str, db: &BTreeMap<String, RelTable>) -> RelTable {
        execute(&parse_sql(sql, db).unwrap(), db).unwrap()
    }

    #[test]
    fn join_matches_nested_loop_count() {
        let db = db(&[("a", "id\n1\n2\n"), ("b", "a_id\n1\n1\n3\n")]);
        let r = run_sql("SELECT * FROM a JOIN b ON a.id = b.a_id", &db);
        // nested loop: pairs (1,1) twice
        assert_eq!(r.rows.len(), 2);
        assert!(r.rows.iter().all(|row| row == &vec![Value::Int(1), Value::Int(1)]));
    }

    #[test]
    fn filter_on_empty_table_keeps_schema() {
        let db = db(&[("e", "x,y\n")]);
        let r = run_sql("SELECT * FROM e WHERE x = 'a'", &db);
        assert!(r.rows.is_empty());
        assert_eq!(
            r.schema,
            vec![Field::new("x", DataType::Text), Field::new("y", DataType::Text)]
        );
    }

    #[test]
    fn avg_ignores_nulls() {
        let db = db(&[("t", "k,v\na,2\nb,4\nc,\n")]);
        let r = run_sql("SELECT AVG(v) FROM t", &db);
        assert_eq!(r.rows, vec![vec![Value::Real(3.0)]]);
        let r = run_sql("SELECT COUNT(*), COUNT(v), SUM(v), MIN(v), MAX(v) FROM t", &db);
        assert_eq!(
            r.rows,
            vec![vec![
                Value::Int(3),
                Value::Int(2),
                Value::Int(6),
                Value::Int(2),
                Value::Int(4)
            ]]
        );
    }

    #[test]
    fn global_aggregate_over_empty_input() {
        let db = db(&[("t", "v\n1\n")]);
        let r = run_sql("SELECT COUNT(*), AVG(v) FROM t WHERE v > 5", &db);
        assert_eq!(r.rows, vec![vec![Value::Int(0), Value::Null]]);
        let r = run_sql("SELECT v, COUNT(*) FROM t WHERE v > 5 GROUP BY v", &db);
        assert!(r.rows.is_empty());
    }

    #[test]
    fn null_predicates_are_false() {
        let db = db(&[("t", "k,v\na,1\nb,\nc,3\n")]);
        assert_eq!(run_sql("SELECT v FROM t WHERE v <> 1", &db).rows.len(), 1);
        assert_eq!(run_sql("SELECT v FROM t WHERE NOT v = 1", &db).rows.len(), 2);
        assert_eq!(run_sql("SELECT v FROM t WHERE v IS NULL", &db).rows.len(), 1);
    }

    #[test]
    fn group_by_output_sorted() {
        let db = db(&[("t", "c,p\nb,1\na,2\nb,3\n")]);
        let r = run_sql("SELECT c, SUM(p) AS s FROM t GROUP BY c", &db);
        assert_eq!(
            r.rows,
            vec![
                vec![Value::Text("a".into()), Value::Int(2)],
                vec![Value::Text("b".into()), Value::Int(4)]
            ]
        );
        assert_eq!(r.schema[1].name, "s");
    }

    #[test]
    fn mixed_numeric_join_keys() {
        let db = db(&[("a", "k\n1\n2\n"), ("b", "k\n1.0\n2.5\n")]);
        let r = run_sql("SELECT * FROM a JOIN b ON a.k = b.k", &db);
        assert_eq!(r.rows.len(), 1);
    }

    #[test]
    fn runtime_type_error() {
        let db = db(&[("t", "v\n1\n")]);
        let plan = QueryPlan::Filter {
            input: Box::new(parse_sql("SELECT * FROM t", &db).unwrap()),
            predicate: Predicate::Compare {
                left: PlanOperand::Column(0),
                op: CmpOp::Eq,
                right: PlanOperand::Literal(Value::Text("x".into())),
            },
        };
        assert!(matches!(execute(&plan, &db), Err(LakeError::Type(_))));
    }

    #[test]
    fn join_is_commutative() {
        let db = db(&[("a", "id,x\n1,p\n2,q\n2,r\n"), ("b", "a_id,y\n2,u\n1,v\n2,w\n")]);
        let ab = run_sql("SELECT a.id, a.x, b.y FROM a JOIN b ON a.id = b.a_id", &db);
        let ba = run_sql("SELECT a.id, a.x, b.y FROM b JOIN a ON a.id = b.a_id", &db);
        assert_eq!(ab.rows, ba.rows);
        assert_eq!(ab.rows.len(), 5);
    }
}
