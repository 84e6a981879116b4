//! Ontology alignment: simple (name-to-name) and complex (formula)
//! correspondences between two local ontologies, plus a JSON rendering of
//! alignments in the spirit of EDOAL.
//!
//! [`align_simple`] combines a lexical, a structural and an annotation
//! matcher. [`align_complex`] compares the subgraphs around concepts to
//! relate formulas, and relates concepts to role restrictions whose labels
//! resemble them.

mod complex;
mod similarity;
mod simple;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::dlcore::{ConceptExpr, Ontology, Reasoner};

pub use complex::{align_complex, extract_subgraph, subgraph_subsumes, SubGraph, SubGraphProperty};
pub use similarity::{
    concept_role_similarity, name_similarity, normalize, stem, tokens, MatcherConfig, SynonymTable,
};
pub use simple::{align_simple, saturate};

#[derive(Debug, Error, PartialEq)]
pub enum AlignmentError {
    #[error("both ontologies are `{0}`")]
    SameOntology(String),
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("malformed alignment: {0}")]
    Parse(String),
    #[error("invalid matcher configuration: {0}")]
    InvalidConfig(String),
    #[error("synonym table line {line}: {message}")]
    Synonyms { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Relation {
    Equiv,
    /// Left is subsumed by right.
    SubsumedBy,
    /// Left subsumes right.
    Subsumes,
    Disjoint,
}

impl Relation {
    pub fn tag(self) -> &'static str {
        match self {
            Relation::Equiv => "=",
            Relation::SubsumedBy => "<",
            Relation::Subsumes => ">",
            Relation::Disjoint => "%",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "=" => Some(Relation::Equiv),
            "<" => Some(Relation::SubsumedBy),
            ">" => Some(Relation::Subsumes),
            "%" => Some(Relation::Disjoint),
            _ => None,
        }
    }

    /// The relation seen from the other side.
    pub fn inverse(self) -> Self {
        match self {
            Relation::SubsumedBy => Relation::Subsumes,
            Relation::Subsumes => Relation::SubsumedBy,
            r => r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Provenance {
    Lexical,
    Structural,
    Annotation,
    Prop1,
    Prop2,
}

/// One side of a correspondence. Names are local to the side's ontology.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Entity {
    Concept(ConceptExpr),
    Role(String),
}

impl Entity {
    pub fn concept(name: &str) -> Self {
        Entity::Concept(ConceptExpr::atomic(name))
    }

    pub fn role(name: &str) -> Self {
        Entity::Role(name.to_owned())
    }

    /// The name of an atomic concept or a role.
    pub fn as_name(&self) -> Option<&str> {
        match self {
            Entity::Concept(c) => c.as_atomic(),
            Entity::Role(r) => Some(r),
        }
    }

    pub fn is_role(&self) -> bool {
        matches!(self, Entity::Role(_))
    }

    fn to_json(&self, id: &str) -> Json {
        let q = |n: &str| format!("{id}#{n}");
        match self {
            Entity::Role(r) => json!({ "property": q(r) }),
            Entity::Concept(c) => serde_json::to_value(c.rename(&q, &q)).expect("expressions serialize"),
        }
    }

    fn from_json(value: &Json, id: &str) -> Result<Self, AlignmentError> {
        let prefix = format!("{id}#");
        let local = |n: &str| -> Result<String, AlignmentError> {
            n.strip_prefix(&prefix)
                .filter(|rest| !rest.is_empty())
                .map(str::to_owned)
                .ok_or_else(|| AlignmentError::Parse(format!("`{n}` is not qualified by `{id}`")))
        };
        if let Some(p) = value.get("property") {
            let name = p
                .as_str()
                .ok_or_else(|| AlignmentError::Parse("property must be a string".into()))?;
            return Ok(Entity::Role(local(name)?));
        }
        let expr: ConceptExpr =
            serde_json::from_value(value.clone()).map_err(|e| AlignmentError::Parse(e.to_string()))?;
        let renamed = unqualify(&expr, &local)?;
        Ok(Entity::Concept(renamed))
    }
}

fn unqualify(
    expr: &ConceptExpr,
    local: &impl Fn(&str) -> Result<String, AlignmentError>,
) -> Result<ConceptExpr, AlignmentError> {
    Ok(match expr {
        ConceptExpr::Top => ConceptExpr::Top,
        ConceptExpr::Atomic(a) => ConceptExpr::Atomic(local(a)?),
        ConceptExpr::And(parts) => {
            ConceptExpr::and(parts.iter().map(|p| unqualify(p, local)).collect::<Result<Vec<_>, _>>()?)
        }
        ConceptExpr::Exists { role, filler } => ConceptExpr::exists(local(role)?, unqualify(filler, local)?),
        ConceptExpr::MinCard { n, role, filler } => ConceptExpr::min_card(*n, local(role)?, unqualify(filler, local)?),
    })
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entity::Concept(c) => write!(f, "{c}"),
            Entity::Role(r) => write!(f, "{r}"),
        }
    }
}

/// `left relation right`, left in the alignment's left ontology.
#[derive(Debug, Clone, PartialEq)]
pub struct Correspondence {
    pub left: Entity,
    pub right: Entity,
    pub relation: Relation,
    pub confidence: f64,
    pub provenance: Provenance,
}

impl Correspondence {
    fn swapped(&self) -> Self {
        Correspondence {
            left: self.right.clone(),
            right: self.left.clone(),
            relation: self.relation.inverse(),
            confidence: self.confidence,
            provenance: self.provenance,
        }
    }

    /// Both sides are atomic concepts or both are roles.
    pub fn is_simple(&self) -> bool {
        match (&self.left, &self.right) {
            (Entity::Concept(a), Entity::Concept(b)) => a.is_atomic() && b.is_atomic(),
            (Entity::Role(_), Entity::Role(_)) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub left_ontology: String,
    pub right_ontology: String,
    pub cells: Vec<Correspondence>,
}

#[derive(Serialize, Deserialize)]
struct CellJson {
    entity1: Json,
    entity2: Json,
    relation: String,
    measure: f64,
    method: Provenance,
}

#[derive(Serialize, Deserialize)]
struct AlignmentJson {
    onto1: String,
    onto2: String,
    cells: Vec<CellJson>,
}

impl Alignment {
    pub fn new(left: &str, right: &str) -> Self {
        Alignment {
            left_ontology: left.to_owned(),
            right_ontology: right.to_owned(),
            cells: Vec::new(),
        }
    }

    /// Adds the cell unless the same `(left, right, relation)` is present.
    pub fn push(&mut self, cell: Correspondence) -> bool {
        let dup = self
            .cells
            .iter()
            .any(|c| c.left == cell.left && c.right == cell.right && c.relation == cell.relation);
        if !dup {
            self.cells.push(cell);
        }
        !dup
    }

    pub fn swapped(&self) -> Self {
        Alignment {
            left_ontology: self.right_ontology.clone(),
            right_ontology: self.left_ontology.clone(),
            cells: self.cells.iter().map(Correspondence::swapped).collect(),
        }
    }

    /// Simple equivalence cells as `(left name, right name)` pairs.
    pub fn equiv_pairs(&self) -> BTreeSet<(String, String)> {
        self.cells
            .iter()
            .filter(|c| c.relation == Relation::Equiv)
            .filter_map(|c| Some((c.left.as_name()?.to_owned(), c.right.as_name()?.to_owned())))
            .collect()
    }

    pub fn find(&self, left: &Entity, right: &Entity) -> Option<&Correspondence> {
        self.cells.iter().find(|c| &c.left == left && &c.right == right)
    }

    pub fn to_json(&self) -> String {
        let doc = AlignmentJson {
            onto1: self.left_ontology.clone(),
            onto2: self.right_ontology.clone(),
            cells: self
                .cells
                .iter()
                .map(|c| CellJson {
                    entity1: c.left.to_json(&self.left_ontology),
                    entity2: c.right.to_json(&self.right_ontology),
                    relation: c.relation.tag().to_owned(),
                    measure: c.confidence,
                    method: c.provenance,
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("alignments serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, AlignmentError> {
        let doc: AlignmentJson = serde_json::from_str(text).map_err(|e| AlignmentError::Parse(e.to_string()))?;
        if doc.onto1 == doc.onto2 {
            return Err(AlignmentError::SameOntology(doc.onto1));
        }
        let mut out = Alignment::new(&doc.onto1, &doc.onto2);
        for cell in doc.cells {
            let relation = Relation::from_tag(&cell.relation)
                .ok_or_else(|| AlignmentError::Parse(format!("unknown relation `{}`", cell.relation)))?;
            if !(0.0..=1.0).contains(&cell.measure) {
                return Err(AlignmentError::Parse(format!("measure {} outside [0, 1]", cell.measure)));
            }
            let c = Correspondence {
                left: Entity::from_json(&cell.entity1, &doc.onto1)?,
                right: Entity::from_json(&cell.entity2, &doc.onto2)?,
                relation,
                confidence: cell.measure,
                provenance: cell.method,
            };
            if !out.push(c) {
                return Err(AlignmentError::Parse("duplicate cell".into()));
            }
        }
        Ok(out)
    }
}

/// Name hierarchy of one ontology with strict and direct neighbours.
#[derive(Debug, Clone)]
pub(crate) struct Hierarchy {
    strict: BTreeMap<String, BTreeSet<String>>,
    direct_supers: BTreeMap<String, BTreeSet<String>>,
    direct_subs: BTreeMap<String, BTreeSet<String>>,
}

impl Hierarchy {
    pub(crate) fn new(onto: &Ontology) -> Self {
        let cls = Reasoner::new(onto).classify();
        let above = |a: &str, b: &str| cls.get(a).is_some_and(|s| s.contains(b));
        let strict: BTreeMap<String, BTreeSet<String>> = onto
            .concepts
            .iter()
            .map(|c| {
                let sups = cls
                    .get(c)
                    .into_iter()
                    .flatten()
                    .filter(|s| *s != c && !above(s, c) && onto.concepts.contains(*s))
                    .cloned()
                    .collect();
                (c.clone(), sups)
            })
            .collect();
        let mut direct_supers = BTreeMap::new();
        let mut direct_subs: BTreeMap<String, BTreeSet<String>> =
            onto.concepts.iter().map(|c| (c.clone(), BTreeSet::new())).collect();
        for (c, sups) in &strict {
            let direct: BTreeSet<String> = sups
                .iter()
                .filter(|s| !sups.iter().any(|t| strict[t].contains(*s)))
                .cloned()
                .collect();
            for s in &direct {
                direct_subs.entry(s.clone()).or_default().insert(c.clone());
            }
            direct_supers.insert(c.clone(), direct);
        }
        Hierarchy {
            strict,
            direct_supers,
            direct_subs,
        }
    }

    pub(crate) fn ancestors(&self, c: &str) -> BTreeSet<String> {
        self.strict.get(c).cloned().unwrap_or_default()
    }

    pub(crate) fn direct_supers(&self, c: &str) -> BTreeSet<String> {
        self.direct_supers.get(c).cloned().unwrap_or_default()
    }

    pub(crate) fn direct_subs(&self, c: &str) -> BTreeSet<String> {
        self.direct_subs.get(c).cloned().unwrap_or_default()
    }
}

#[cfg(test)]
pub(crate) mod tests;
