use std::fmt::Write;

use crate::store::{Comparator, KEY_ATTR};

use super::{BqlFilter, BqlProgram, GetCall, Projection, StepBody};

/// Target API vocabulary for [`emit_plan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dialect {
    /// `find(collection, filterDoc, projectionDoc)`
    DocApi,
    /// `getSlice(family, rowKey, columns)`
    ColumnApi,
}

impl Dialect {
    fn label(self) -> &'static str {
        match self {
            Dialect::DocApi => "document API",
            Dialect::ColumnApi => "column API",
        }
    }
}

/// Procedural pseudo-program for a BQL program: one numbered block per
/// step, loops for `foreach` steps.
pub fn emit_plan(p: &BqlProgram, dialect: Dialect) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# plan for {} ({})", p.source, dialect.label());
    for (i, step) in p.steps.iter().enumerate() {
        let n = i + 1;
        let _ = match &step.body {
            StepBody::Get(g) => writeln!(out, "{n}. {} = {}", step.name, call(g, dialect)),
            StepBody::ForEachGet {
                loop_var,
                input,
                attribute,
                carry,
                get,
            } => {
                let keep = if carry.is_empty() {
                    String::new()
                } else {
                    format!("row[{}] + ", carry.join(", "))
                };
                writeln!(out, "{n}. {} = []", step.name)
                    .and_then(|_| writeln!(out, "   for row in {input}:"))
                    .and_then(|_| writeln!(out, "     for {loop_var} in row.{attribute}:"))
                    .and_then(|_| writeln!(out, "       {} += {keep}{}", step.name, call(get, dialect)))
            }
            StepBody::Project { input, attributes } => {
                writeln!(out, "{n}. {} = [row[{}] for row in {input}]", step.name, attributes.join(", "))
            }
        };
    }
    if !p.steps.is_empty() {
        let _ = writeln!(out, "return distinct({})", p.answer_relation);
    }
    out
}

fn call(g: &GetCall, dialect: Dialect) -> String {
    match dialect {
        Dialect::DocApi => {
            let filters: Vec<String> = g.filters.iter().map(doc_filter).collect();
            let fields: Vec<String> = g.projections.iter().map(doc_projection).collect();
            format!(
                "find(\"{}\", {{{}}}, {{{}}})",
                g.container.container,
                filters.join(", "),
                fields.join(", ")
            )
        }
        Dialect::ColumnApi => {
            let row_key = g
                .filters
                .iter()
                .find(|f| f.attribute == KEY_ATTR && f.comparator == Comparator::Eq)
                .map_or_else(|| "*".to_owned(), |f| f.operand.to_string());
            let rest: Vec<String> = g
                .filters
                .iter()
                .filter(|f| !(f.attribute == KEY_ATTR && f.comparator == Comparator::Eq && f.operand.to_string() == row_key))
                .map(ToString::to_string)
                .collect();
            let mut columns: Vec<String> = Vec::new();
            for name in rest_attributes(g).chain(g.projections.iter().filter(|p| p.attribute != KEY_ATTR).map(|p| p.attribute.clone())) {
                if !columns.contains(&name) {
                    columns.push(name);
                }
            }
            let renames: Vec<String> = g
                .projections
                .iter()
                .filter(|p| p.attribute != p.alias)
                .map(|p| format!("{} as {}", column_name(&p.attribute), p.alias))
                .collect();
            let mut s = format!("getSlice(\"{}\", {row_key}, [{}])", g.container.container, columns.join(", "));
            if !rest.is_empty() {
                let _ = write!(s, " where {}", rest.join(" and "));
            }
            if !renames.is_empty() {
                let _ = write!(s, " rename {}", renames.join(", "));
            }
            s
        }
    }
}

fn rest_attributes(g: &GetCall) -> impl Iterator<Item = String> + '_ {
    g.filters.iter().filter(|f| f.attribute != KEY_ATTR).map(|f| f.attribute.clone())
}

fn column_name(attribute: &str) -> &str {
    if attribute == KEY_ATTR {
        "rowKey"
    } else {
        attribute
    }
}

fn doc_field(attribute: &str) -> &str {
    if attribute == KEY_ATTR {
        "_id"
    } else {
        attribute
    }
}

fn doc_filter(f: &BqlFilter) -> String {
    let op = match f.comparator {
        Comparator::Eq => return format!("{}: {}", doc_field(&f.attribute), f.operand),
        Comparator::Lt => "$lt",
        Comparator::Le => "$lte",
        Comparator::Gt => "$gt",
        Comparator::Ge => "$gte",
        Comparator::Ne => "$ne",
    };
    format!("{}: {{{op}: {}}}", doc_field(&f.attribute), f.operand)
}

fn doc_projection(p: &Projection) -> String {
    let field = doc_field(&p.attribute);
    if field == p.alias {
        field.to_owned()
    } else {
        format!("{field} as {}", p.alias)
    }
}
