//! Bridge Query Language: per-source programs of `get` and `foreach` steps.
//!
//! [`translate`] compiles a SPARQL query over the global ontology into one
//! program per database that can answer it, [`execute`] runs a program
//! against a [`RowSource`], and [`emit_plan`] renders a program as
//! procedural pseudo-code for a document or column API.
//!
//! Text form, one step per line:
//!
//! ```text
//! temp(writeReview) = docDB.Person.get({lastName='Doe'},{writeReview})
//! ans(title) = foreach r in temp.writeReview : docDB.Document.get({Key=r},{title})
//! ```

mod exec;
mod plan;
mod translate;


use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::induction::Target;
use crate::store::{Comparator, StoreError, Value};

pub use exec::{execute, execute_all, ResultTable};
pub use plan::{emit_plan, Dialect};
pub use translate::translate;

/// Name of the relation holding a program's answer.
pub const ANSWER: &str = "ans";

#[derive(Debug, Error)]
pub enum BqlError {
    #[error("no source can bind {0}")]
    UnresolvableType(String),
    #[error("predicate `{0}` is not mapped by any source")]
    UnmappedPredicate(String),
    #[error("the query joins data held by different databases: {0}")]
    CrossSourceJoin(String),
    #[error("query shape not supported: {0}")]
    Unsupported(String),
    #[error("unknown container `{0}`")]
    UnknownContainer(String),
    #[error("malformed program: {0}")]
    SchemaMismatch(String),
    #[error(transparent)]
    Store(StoreError),
}

impl From<StoreError> for BqlError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::UnknownContainer(c) | StoreError::UnknownDatabase(c) => BqlError::UnknownContainer(c),
            other => BqlError::Store(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Operand {
    Value(Value),
    LoopVar(String),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Value(v) => write!(f, "{v}"),
            Operand::LoopVar(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct BqlFilter {
    pub attribute: String,
    pub comparator: Comparator,
    pub operand: Operand,
}

impl BqlFilter {
    pub fn eq(attribute: impl Into<String>, operand: Operand) -> Self {
        BqlFilter {
            attribute: attribute.into(),
            comparator: Comparator::Eq,
            operand,
        }
    }
}

impl fmt::Display for BqlFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.attribute, self.comparator.symbol(), self.operand)
    }
}

/// A stored attribute read into a relation column, possibly renamed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Projection {
    pub attribute: String,
    pub alias: String,
}

impl Projection {
    pub fn new(attribute: impl Into<String>, alias: impl Into<String>) -> Self {
        Projection {
            attribute: attribute.into(),
            alias: alias.into(),
        }
    }
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.attribute == self.alias {
            write!(f, "{}", self.attribute)
        } else {
            write!(f, "{} as {}", self.attribute, self.alias)
        }
    }
}

/// `db.Container.get({filters},{projections})`. Rows lacking any projected
/// attribute are dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GetCall {
    pub container: Target,
    pub filters: Vec<BqlFilter>,
    pub projections: Vec<Projection>,
}

impl fmt::Display for GetCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let filters: Vec<String> = self.filters.iter().map(ToString::to_string).collect();
        let projections: Vec<String> = self.projections.iter().map(ToString::to_string).collect();
        write!(
            f,
            "{}.{}.get({{{}}},{{{}}})",
            self.container.database,
            self.container.container,
            filters.join(", "),
            projections.join(", ")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepBody {
    Get(GetCall),
    /// For every element of `input.attribute` (lists are iterated), runs the
    /// get with `loop_var` bound to it. Each result row keeps the `carry`
    /// columns of the input row it came from.
    ForEachGet {
        loop_var: String,
        input: String,
        attribute: String,
        carry: Vec<String>,
        get: GetCall,
    },
    /// Keeps the listed columns of `input`.
    Project { input: String, attributes: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub name: String,
    pub schema: Vec<String>,
    pub body: StepBody,
}

impl Step {
    fn input(&self) -> Option<&str> {
        match &self.body {
            StepBody::Get(_) => None,
            StepBody::ForEachGet { input, .. } | StepBody::Project { input, .. } => Some(input),
        }
    }

    fn get_call(&self) -> Option<&GetCall> {
        match &self.body {
            StepBody::Get(g) | StepBody::ForEachGet { get: g, .. } => Some(g),
            StepBody::Project { .. } => None,
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}) = ", self.name, self.schema.join(", "))?;
        match &self.body {
            StepBody::Get(g) => write!(f, "{g}"),
            StepBody::ForEachGet {
                loop_var,
                input,
                attribute,
                get,
                ..
            } => write!(f, "foreach {loop_var} in {input}.{attribute} : {get}"),
            StepBody::Project { input, attributes } => write!(f, "project {input}({})", attributes.join(", ")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BqlProgram {
    pub source: String,
    pub steps: Vec<Step>,
    pub answer_relation: String,
}

impl BqlProgram {
    pub fn answer_schema(&self) -> &[String] {
        self.step(&self.answer_relation).map_or(&[], |s| &s.schema)
    }

    pub fn step(&self, name: &str) -> Option<&Step> {
        self.steps.iter().find(|s| s.name == name)
    }

    /// Checks that steps only read relations defined before them and that
    /// every schema agrees with the step computing it.
    pub fn validate(&self) -> Result<(), BqlError> {
        let bad = |m: String| Err(BqlError::SchemaMismatch(m));
        let mut defined: Vec<&Step> = Vec::new();
        for step in &self.steps {
            if defined.iter().any(|s| s.name == step.name) {
                return bad(format!("relation `{}` is defined twice", step.name));
            }
            let unique: BTreeSet<&String> = step.schema.iter().collect();
            if unique.len() != step.schema.len() {
                return bad(format!("relation `{}` repeats a column", step.name));
            }
            let input = match step.input() {
                Some(name) => match defined.iter().find(|s| s.name == name) {
                    Some(s) => Some(*s),
                    None => return bad(format!("`{}` reads `{name}` before it is defined", step.name)),
                },
                None => None,
            };
            let loop_var = match &step.body {
                StepBody::ForEachGet { loop_var, .. } => Some(loop_var.as_str()),
                _ => None,
            };
            if let Some(g) = step.get_call() {
                for f in &g.filters {
                    if let Operand::LoopVar(x) = &f.operand {
                        if Some(x.as_str()) != loop_var {
                            return bad(format!("`{}` uses `{x}` outside its loop", step.name));
                        }
                    }
                }
            }
            let expected: Vec<String> = match &step.body {
                StepBody::Get(g) => g.projections.iter().map(|p| p.alias.clone()).collect(),
                StepBody::ForEachGet {
                    attribute, carry, get, ..
                } => {
                    let input = input.expect("checked above");
                    if !input.schema.contains(attribute) {
                        return bad(format!("`{}` has no column `{attribute}`", input.name));
                    }
                    if let Some(c) = carry.iter().find(|c| !input.schema.contains(c)) {
                        return bad(format!("`{}` has no column `{c}`", input.name));
                    }
                    carry.iter().cloned().chain(get.projections.iter().map(|p| p.alias.clone())).collect()
                }
                StepBody::Project { attributes, .. } => {
                    let input = input.expect("checked above");
                    if let Some(c) = attributes.iter().find(|c| !input.schema.contains(c)) {
                        return bad(format!("`{}` has no column `{c}`", input.name));
                    }
                    attributes.clone()
                }
            };
            if expected != step.schema {
                return bad(format!("schema of `{}` does not match its body", step.name));
            }
            defined.push(step);
        }
        if self.step(&self.answer_relation).is_none() {
            return bad(format!("answer relation `{}` is not defined", self.answer_relation));
        }
        Ok(())
    }
}

/// Text of several programs, each under a `-- database` header line.
pub fn explain(programs: &[BqlProgram]) -> String {
    programs
        .iter()
        .map(|p| format!("-- {}\n{p}", p.source))
        .collect::<Vec<_>>()
        .join("\n")
}

impl fmt::Display for BqlProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for step in &self.steps {
            writeln!(f, "{step}")?;
        }
        Ok(())
    }
}
