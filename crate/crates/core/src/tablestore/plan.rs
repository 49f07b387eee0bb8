use std::collections::BTreeSet;

use chrono::NaiveDate;

use super::sql::{self, AggFunc, CmpOp, ColRef, Expr, Literal, Operand, SelectItem, SelectStmt};
use super::table::{Field, RelTable};
use super::value::{DataType, Value};
use crate::error::{LakeError, Result};

/// Source of base tables for planning and execution.
pub trait TableProvider {
    fn get_table(&self, name: &str) -> Option<&RelTable>;
}

impl TableProvider for std::collections::BTreeMap<String, RelTable> {
    fn get_table(&self, name: &str) -> Option<&RelTable> {
        self.get(name)
    }
}

impl TableProvider for std::collections::HashMap<String, RelTable> {
    fn get_table(&self, name: &str) -> Option<&RelTable> {
        self.get(name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanOperand {
    Column(usize),
    Literal(Value),
}

/// A resolved predicate. Comparisons involving null are false; `Not`
/// simply negates its operand.
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    Compare {
        left: PlanOperand,
        op: CmpOp,
        right: PlanOperand,
    },
    IsNull {
        operand: PlanOperand,
        negated: bool,
    },
    And(Box<Predicate>, Box<Predicate>),
    Or(Box<Predicate>, Box<Predicate>),
    Not(Box<Predicate>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateExpr {
    pub func: AggFunc,
    /// Input column; `None` means `COUNT(*)`.
    pub column: Option<usize>,
    pub name: String,
}

/// Operator tree. Column references are indices into the child's output
/// schema; for joins the output is the left schema followed by the right.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryPlan {
    Scan {
        table: String,
        /// Fields are named `<binding>.<column>`.
        schema: Vec<Field>,
    },
    Filter {
        input: Box<QueryPlan>,
        predicate: Predicate,
    },
    Join {
        left: Box<QueryPlan>,
        right: Box<QueryPlan>,
        on: Vec<(usize, usize)>,
    },
    /// Output: group-by columns, then one column per aggregate.
    Aggregate {
        input: Box<QueryPlan>,
        group_by: Vec<usize>,
        aggregates: Vec<AggregateExpr>,
    },
    Project {
        input: Box<QueryPlan>,
        columns: Vec<(usize, String)>,
    },
}

pub(crate) fn aggregate_type(func: AggFunc, input: Option<DataType>) -> DataType {
    match func {
        AggFunc::Count => DataType::Integer,
        AggFunc::Avg => DataType::Real,
        AggFunc::Sum | AggFunc::Min | AggFunc::Max => input.unwrap_or(DataType::Integer),
    }
}

impl QueryPlan {
    pub fn schema(&self) -> Vec<Field> {
        match self {
            QueryPlan::Scan { schema, .. } => schema.clone(),
            QueryPlan::Filter { input, .. } => input.schema(),
            QueryPlan::Join { left, right, .. } => {
                let mut s = left.schema();
                s.extend(right.schema());
                s
            }
            QueryPlan::Aggregate {
                input,
                group_by,
                aggregates,
            } => {
                let inner = input.schema();
                let mut s: Vec<Field> = group_by.iter().map(|i| inner[*i].clone()).collect();
                s.extend(
                    aggregates
                        .iter()
                        .map(|a| Field::new(a.name.clone(), aggregate_type(a.func, a.column.map(|c| inner[c].dtype)))),
                );
                s
            }
            QueryPlan::Project { input, columns } => {
                let inner = input.schema();
                columns
                    .iter()
                    .map(|(i, name)| Field::new(name.clone(), inner[*i].dtype))
                    .collect()
            }
        }
    }

    /// Names of the base tables read by the plan.
    pub fn tables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_tables(&mut out);
        out
    }

    fn collect_tables(&self, out: &mut BTreeSet<String>) {
        match self {
            QueryPlan::Scan { table, .. } => {
                out.insert(table.clone());
            }
            QueryPlan::Filter { input, .. } | QueryPlan::Aggregate { input, .. } | QueryPlan::Project { input, .. } => {
                input.collect_tables(out)
            }
            QueryPlan::Join { left, right, .. } => {
                left.collect_tables(out);
                right.collect_tables(out);
            }
        }
    }
}

fn validation(msg: impl Into<String>) -> LakeError {
    LakeError::SqlValidation(msg.into())
}

fn resolve(schema: &[Field], col: &ColRef) -> Result<usize> {
    let matches: Vec<usize> = schema
        .iter()
        .enumerate()
        .filter(|(_, f)| {
            let (binding, name) = f.name.split_once('.').unwrap_or(("", &f.name));
            name == col.name && col.qualifier.as_deref().is_none_or(|q| q == binding)
        })
        .map(|(i, _)| i)
        .collect();
    match matches.as_slice() {
        [i] => Ok(*i),
        [] => Err(validation(format!("unknown column {col} (position {})", col.pos))),
        _ => Err(validation(format!("ambiguous column {col} (position {})", col.pos))),
    }
}

fn bare(name: &str) -> &str {
    name.split_once('.').map(|(_, n)| n).unwrap_or(name)
}

fn literal_value(lit: &Literal, against: Option<DataType>) -> Result<Value> {
    Ok(match lit {
        Literal::Int(i) => Value::Int(*i),
        Literal::Real(r) => Value::Real(*r),
        Literal::Bool(b) => Value::Bool(*b),
        Literal::Null => Value::Null,
        Literal::Date(s) => Value::Date(
            NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| validation(format!("bad date literal '{s}'")))?,
        ),
        Literal::Str(s) if against == Some(DataType::Date) => Value::Date(
            NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| LakeError::Type(format!("'{s}' is not a date")))?,
        ),
        Literal::Str(s) => Value::Text(s.clone()),
    })
}

fn operand_type(op: &PlanOperand, schema: &[Field]) -> Option<DataType> {
    match op {
        PlanOperand::Column(i) => Some(schema[*i].dtype),
        PlanOperand::Literal(v) => v.data_type(),
    }
}

fn resolve_predicate(expr: &Expr, schema: &[Field]) -> Result<Predicate> {
    Ok(match expr {
        Expr::Cmp(l, op, r) => {
            let col_type = |o: &Operand| -> Result<Option<DataType>> {
                Ok(match o {
                    Operand::Column(c) => Some(schema[resolve(schema, c)?].dtype),
                    Operand::Literal(_) => None,
                })
            };
            let (lt, rt) = (col_type(l)?, col_type(r)?);
            let conv = |o: &Operand, other: Option<DataType>| -> Result<PlanOperand> {
                Ok(match o {
                    Operand::Column(c) => PlanOperand::Column(resolve(schema, c)?),
                    Operand::Literal(lit) => PlanOperand::Literal(literal_value(lit, other)?),
                })
            };
            let left = conv(l, rt)?;
            let right = conv(r, lt)?;
            if let (Some(a), Some(b)) = (operand_type(&left, schema), operand_type(&right, schema)) {
                if !a.compatible(b) {
                    return Err(LakeError::Type(format!("cannot compare {a} with {b}")));
                }
            }
            Predicate::Compare { left, op: *op, right }
        }
        Expr::IsNull { operand, negated } => Predicate::IsNull {
            operand: match operand {
                Operand::Column(c) => PlanOperand::Column(resolve(schema, c)?),
                Operand::Literal(lit) => PlanOperand::Literal(literal_value(lit, None)?),
            },
            negated: *negated,
        },
        Expr::And(a, b) => Predicate::And(
            Box::new(resolve_predicate(a, schema)?),
            Box::new(resolve_predicate(b, schema)?),
        ),
        Expr::Or(a, b) => Predicate::Or(
            Box::new(resolve_predicate(a, schema)?),
            Box::new(resolve_predicate(b, schema)?),
        ),
        Expr::Not(a) => Predicate::Not(Box::new(resolve_predicate(a, schema)?)),
    })
}

fn scan(tables: &dyn TableProvider, name: &str, binding: &str, pos: usize) -> Result<QueryPlan> {
    let table = tables
        .get_table(name)
        .ok_or_else(|| validation(format!("unknown table {name} (position {pos})")))?;
    Ok(QueryPlan::Scan {
        table: name.to_string(),
        schema: table
            .schema
            .iter()
            .map(|f| Field::new(format!("{binding}.{}", f.name), f.dtype))
            .collect(),
    })
}

/// Builds a validated plan from a parsed statement.
pub fn plan_statement(stmt: &SelectStmt, tables: &dyn TableProvider) -> Result<QueryPlan> {
    let mut bindings = BTreeSet::new();
    bindings.insert(stmt.from.binding().to_string());
    let mut plan = scan(tables, &stmt.from.name, stmt.from.binding(), stmt.from.pos)?;

    for join in &stmt.joins {
        let binding = join.table.binding();
        if !bindings.insert(binding.to_string()) {
            return Err(validation(format!("duplicate table binding {binding}")));
        }
        let right = scan(tables, &join.table.name, binding, join.table.pos)?;
        let ls = plan.schema();
        let rs = right.schema();
        let mut on = Vec::new();
        for (a, b) in &join.on {
            let pair = match (resolve(&ls, a), resolve(&rs, b)) {
                (Ok(l), Ok(r)) => (l, r),
                _ => match (resolve(&ls, b), resolve(&rs, a)) {
                    (Ok(l), Ok(r)) => (l, r),
                    _ => {
                        return Err(validation(format!(
                            "join condition {a} = {b} must reference both sides"
                        )))
                    }
                },
            };
            if !ls[pair.0].dtype.compatible(rs[pair.1].dtype) {
                return Err(validation(format!(
                    "join columns {a} ({}) and {b} ({}) are not type-compatible",
                    ls[pair.0].dtype, rs[pair.1].dtype
                )));
            }
            on.push(pair);
        }
        plan = QueryPlan::Join {
            left: Box::new(plan),
            right: Box::new(right),
            on,
        };
    }

    let schema = plan.schema();
    if let Some(filter) = &stmt.filter {
        plan = QueryPlan::Filter {
            predicate: resolve_predicate(filter, &schema)?,
            input: Box::new(plan),
        };
    }

    let has_agg = stmt.items.iter().any(|i| matches!(i, SelectItem::Aggregate { .. }));
    if has_agg || !stmt.group_by.is_empty() {
        let group_by = stmt
            .group_by
            .iter()
            .map(|c| resolve(&schema, c))
            .collect::<Result<Vec<_>>>()?;
        let mut aggregates = Vec::new();
        let mut columns = Vec::new();
        for item in &stmt.items {
            match item {
                SelectItem::Star => return Err(validation("SELECT * cannot be combined with aggregation")),
                SelectItem::Column { col, alias } => {
                    let idx = resolve(&schema, col)?;
                    let pos = group_by.iter().position(|g| *g == idx).ok_or_else(|| {
                        validation(format!("column {col} must appear in GROUP BY or inside an aggregate"))
                    })?;
                    columns.push((pos, alias.clone().unwrap_or_else(|| col.to_string())));
                }
                SelectItem::Aggregate { func, arg, alias } => {
                    let column = arg.as_ref().map(|c| resolve(&schema, c)).transpose()?;
                    if let Some(c) = column {
                        let dtype = schema[c].dtype;
                        if matches!(func, AggFunc::Sum | AggFunc::Avg) && !dtype.is_numeric() {
                            return Err(validation(format!(
                                "{}() needs a numeric column, {} is {dtype}",
                                func.as_str().to_uppercase(),
                                arg.as_ref().expect("column implies arg")
                            )));
                        }
                    }
                    let name = alias.clone().unwrap_or_else(|| {
                        format!(
                            "{}({})",
                            func.as_str(),
                            arg.as_ref().map(ToString::to_string).unwrap_or_else(|| "*".into())
                        )
                    });
                    columns.push((group_by.len() + aggregates.len(), name.clone()));
                    aggregates.push(AggregateExpr {
                        func: *func,
                        column,
                        name,
                    });
                }
            }
        }
        plan = QueryPlan::Aggregate {
            input: Box::new(plan),
            group_by,
            aggregates,
        };
        return Ok(QueryPlan::Project {
            input: Box::new(plan),
            columns,
        });
    }

    let mut columns = Vec::new();
    for item in &stmt.items {
        match item {
            SelectItem::Star => {
                for (i, f) in schema.iter().enumerate() {
                    let short = bare(&f.name);
                    let unique = schema.iter().filter(|g| bare(&g.name) == short).count() == 1;
                    columns.push((i, if unique { short.to_string() } else { f.name.clone() }));
                }
            }
            SelectItem::Column { col, alias } => {
                columns.push((resolve(&schema, col)?, alias.clone().unwrap_or_else(|| col.to_string())));
            }
            SelectItem::Aggregate { .. } => unreachable!("handled by the aggregate branch"),
        }
    }
    Ok(QueryPlan::Project {
        input: Box::new(plan),
        columns,
    })
}

/// Parses and validates SQL text against the available tables.
pub fn parse_sql(text: &str, tables: &dyn TableProvider) -> Result<QueryPlan> {
    plan_statement(&sql::parse_statement(text)?, tables)
}
