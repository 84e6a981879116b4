use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::store::{Filter, RowSource, Value};

use super::{BqlError, BqlProgram, GetCall, Operand, StepBody};

type Row = BTreeMap<String, Value>;

/// Answer of a program: distinct rows in sorted order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultTable {
    pub schema: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl ResultTable {
    pub fn new(schema: Vec<String>) -> Self {
        ResultTable {
            schema,
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Values of one column, in row order.
    pub fn column(&self, name: &str) -> Option<Vec<&Value>> {
        let i = self.schema.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result table serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, BqlError> {
        serde_json::from_str(text).map_err(|e| BqlError::SchemaMismatch(format!("malformed result table: {e}")))
    }

    fn normalize(&mut self) {
        self.rows.sort();
        self.rows.dedup();
    }
}

/// Runs the steps in order and returns the answer relation. Intermediate
/// relations keep duplicates; the answer does not. List values left in the
/// answer are unnested into one row per element.
pub fn execute<R: RowSource + ?Sized>(p: &BqlProgram, source: &R) -> Result<ResultTable, BqlError> {
    p.validate()?;
    let mut relations: BTreeMap<&str, Vec<Row>> = BTreeMap::new();
    for step in &p.steps {
        let rows = match &step.body {
            StepBody::Get(g) => run_get(source, g, None)?,
            StepBody::ForEachGet {
                loop_var,
                input,
                attribute,
                carry,
                get,
            } => {
                let mut out = Vec::new();
                for row in &relations[input.as_str()] {
                    for item in row.get(attribute).map(elements).unwrap_or_default() {
                        for got in run_get(source, get, Some((loop_var, item)))? {
                            let mut joined: Row = carry.iter().filter_map(|c| Some((c.clone(), row.get(c)?.clone()))).collect();
                            joined.extend(got);
                            out.push(joined);
                        }
                    }
                }
                out
            }
            StepBody::Project { input, attributes } => relations[input.as_str()]
                .iter()
                .map(|row| {
                    attributes
                        .iter()
                        .filter_map(|a| Some((a.clone(), row.get(a)?.clone())))
                        .collect()
                })
                .collect(),
        };
        relations.insert(&step.name, rows);
    }
    let schema = p.answer_schema().to_vec();
    let mut table = ResultTable::new(schema.clone());
    for row in &relations[p.answer_relation.as_str()] {
        let columns: Vec<Vec<Value>> = schema
            .iter()
            .map(|c| row.get(c).map(|v| elements(v).into_iter().cloned().collect()).unwrap_or_default())
            .collect();
        table.rows.extend(product(&columns));
    }
    table.normalize();
    Ok(table)
}

/// Union of the answers of several programs over the same select list.
pub fn execute_all<R: RowSource + ?Sized>(programs: &[BqlProgram], source: &R) -> Result<ResultTable, BqlError> {
    let mut table = ResultTable::default();
    for (i, p) in programs.iter().enumerate() {
        let part = execute(p, source)?;
        if i == 0 {
            table.schema = part.schema;
        } else if part.schema != table.schema {
            return Err(BqlError::SchemaMismatch(format!(
                "programs answer ({}) and ({})",
                table.schema.join(", "),
                part.schema.join(", ")
            )));
        }
        table.rows.extend(part.rows);
    }
    table.normalize();
    Ok(table)
}

fn elements(v: &Value) -> Vec<&Value> {
    match v {
        Value::List(items) => items.iter().filter(|v| !matches!(v, Value::Null)).collect(),
        Value::Null => Vec::new(),
        other => vec![other],
    }
}

fn product(columns: &[Vec<Value>]) -> Vec<Vec<Value>> {
    columns.iter().fold(vec![Vec::new()], |acc, col| {
        acc.iter()
            .flat_map(|prefix| {
                col.iter().map(move |v| {
                    let mut row = prefix.clone();
                    row.push(v.clone());
                    row
                })
            })
            .collect()
    })
}

fn run_get<R: RowSource + ?Sized>(
    source: &R,
    g: &GetCall,
    binding: Option<(&String, &Value)>,
) -> Result<Vec<Row>, BqlError> {
    let container = source.resolve(&g.container.database, &g.container.container)?;
    let filters = g
        .filters
        .iter()
        .map(|f| {
            let value = match &f.operand {
                Operand::Value(v) => v.clone(),
                Operand::LoopVar(x) => match binding {
                    Some((name, v)) if name == x => v.clone(),
                    _ => return Err(BqlError::SchemaMismatch(format!("loop variable `{x}` is unbound"))),
                },
            };
            Ok(Filter::new(f.attribute.clone(), f.comparator, value))
        })
        .collect::<Result<Vec<_>, BqlError>>()?;
    let attributes: BTreeSet<String> = g.projections.iter().map(|p| p.attribute.clone()).collect();
    let rows = source.get(&container, &filters, &attributes)?;
    Ok(rows
        .rows
        .into_iter()
        .filter_map(|r| {
            g.projections
                .iter()
                .map(|p| {
                    let v = r.get(&p.attribute).filter(|v| !elements(v).is_empty())?;
                    Some((p.alias.clone(), v.clone()))
                })
                .collect::<Option<Row>>()
        })
        .collect())
}
