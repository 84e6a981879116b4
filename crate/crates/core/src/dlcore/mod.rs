//! Description-logic core: concept expressions, ontologies, and the
//! reasoning services used by induction and alignment.
//!
//! Subsumption is structural and complete only with respect to told axioms
//! (see [`Reasoner`]). On top of it sit the non-standard services: the
//! depth-bounded most specific concept of an individual ([`msc`]), the least
//! common subsumer ([`lcs`]) and the good common subsumer ([`gcs`]).

mod expr;
mod reasoner;
pub(crate) mod services;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::Value;

pub use expr::ConceptExpr;
pub use reasoner::Reasoner;
pub use services::{gcs, lcs, msc, DEFAULT_MSC_DEPTH};

#[derive(Debug, Error, PartialEq)]
pub enum DlError {
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("unknown individual `{0}`")]
    UnknownIndividual(String),
    #[error("empty input")]
    EmptyInput,
    #[error("cyclic concept definitions involving `{0}`")]
    CyclicDefinitions(String),
    #[error("malformed ontology: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RoleKind {
    Datatype,
    Object,
}

/// Datatype ranges a datatype role may carry.
pub const DATATYPES: [&str; 3] = ["Text", "Number", "Bool"];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Role {
    pub name: String,
    pub kind: RoleKind,
    pub domain: String,
    /// A concept name for object roles, one of [`DATATYPES`] otherwise.
    pub range: String,
}

impl Role {
    pub fn object(name: impl Into<String>, domain: impl Into<String>, range: impl Into<String>) -> Self {
        Role {
            name: name.into(),
            kind: RoleKind::Object,
            domain: domain.into(),
            range: range.into(),
        }
    }

    pub fn datatype(name: impl Into<String>, domain: impl Into<String>, range: impl Into<String>) -> Self {
        Role {
            name: name.into(),
            kind: RoleKind::Datatype,
            domain: domain.into(),
            range: range.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum Axiom {
    SubClassOf { sub: ConceptExpr, sup: ConceptExpr },
    EquivalentTo { left: ConceptExpr, right: ConceptExpr },
    DisjointWith { left: String, right: String },
}

impl Axiom {
    pub fn sub_class(sub: impl Into<String>, sup: impl Into<String>) -> Self {
        Axiom::SubClassOf {
            sub: ConceptExpr::atomic(sub),
            sup: ConceptExpr::atomic(sup),
        }
    }

    /// The inclusions this axiom states, `(lhs, rhs)` meaning `lhs ⊑ rhs`.
    /// Equivalences yield both directions.
    pub fn inclusions(&self) -> Vec<(&ConceptExpr, &ConceptExpr)> {
        match self {
            Axiom::SubClassOf { sub, sup } => vec![(sub, sup)],
            Axiom::EquivalentTo { left, right } => vec![(left, right), (right, left)],
            Axiom::DisjointWith { .. } => Vec::new(),
        }
    }

    fn canonical(&self) -> Axiom {
        match self {
            Axiom::SubClassOf { sub, sup } => Axiom::SubClassOf {
                sub: sub.canonical(),
                sup: sup.canonical(),
            },
            Axiom::EquivalentTo { left, right } => Axiom::EquivalentTo {
                left: left.canonical(),
                right: right.canonical(),
            },
            Axiom::DisjointWith { .. } => self.clone(),
        }
    }

    fn concept_names(&self) -> BTreeSet<String> {
        match self {
            Axiom::SubClassOf { sub: a, sup: b } | Axiom::EquivalentTo { left: a, right: b } => {
                let mut out = a.concept_names();
                out.extend(b.concept_names());
                out
            }
            Axiom::DisjointWith { left, right } => [left.clone(), right.clone()].into(),
        }
    }

    fn role_names(&self) -> BTreeSet<String> {
        match self {
            Axiom::SubClassOf { sub: a, sup: b } | Axiom::EquivalentTo { left: a, right: b } => {
                let mut out = a.role_names();
                out.extend(b.role_names());
                out
            }
            Axiom::DisjointWith { .. } => BTreeSet::new(),
        }
    }
}

/// Concepts, roles and axioms of one (local) ontology.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Ontology {
    pub id: String,
    pub concepts: BTreeSet<String>,
    #[serde(with = "roles_as_list")]
    pub roles: BTreeMap<String, Role>,
    #[serde(default)]
    pub axioms: Vec<Axiom>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub annotations: BTreeMap<String, Vec<String>>,
}

mod roles_as_list {
    use super::Role;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(roles: &BTreeMap<String, Role>, s: S) -> Result<S::Ok, S::Error> {
        roles.values().collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, Role>, D::Error> {
        let list = Vec::<Role>::deserialize(d)?;
        let mut out = BTreeMap::new();
        for r in list {
            if out.contains_key(&r.name) {
                return Err(serde::de::Error::custom(format!("role `{}` declared twice", r.name)));
            }
            out.insert(r.name.clone(), r);
        }
        Ok(out)
    }
}

impl Ontology {
    pub fn new(id: impl Into<String>) -> Self {
        Ontology {
            id: id.into(),
            ..Default::default()
        }
    }

    pub fn add_concept(&mut self, name: impl Into<String>) {
        self.concepts.insert(name.into());
    }

    pub fn add_role(&mut self, role: Role) {
        self.roles.insert(role.name.clone(), role);
    }

    /// Appends the axiom in canonical form unless it is already present.
    pub fn add_axiom(&mut self, axiom: Axiom) {
        let axiom = axiom.canonical();
        if !self.axioms.contains(&axiom) {
            self.axioms.push(axiom);
        }
    }

    pub fn has_concept(&self, name: &str) -> bool {
        self.concepts.contains(name)
    }

    /// Checks that every name used by an axiom or role is declared.
    pub fn validate(&self) -> Result<(), DlError> {
        for role in self.roles.values() {
            if !self.concepts.contains(&role.domain) {
                return Err(DlError::UnknownName(role.domain.clone()));
            }
            let range_ok = match role.kind {
                RoleKind::Object => self.concepts.contains(&role.range),
                RoleKind::Datatype => DATATYPES.contains(&role.range.as_str()),
            };
            if !range_ok {
                return Err(DlError::UnknownName(role.range.clone()));
            }
        }
        for ax in &self.axioms {
            self.check_names(&ax.concept_names(), &ax.role_names())?;
        }
        Ok(())
    }

    /// Checks that every name in `expr` is declared.
    pub fn check_expr(&self, expr: &ConceptExpr) -> Result<(), DlError> {
        self.check_names(&expr.concept_names(), &expr.role_names())
    }

    fn check_names(&self, concepts: &BTreeSet<String>, roles: &BTreeSet<String>) -> Result<(), DlError> {
        if let Some(c) = concepts.iter().find(|c| !self.concepts.contains(*c)) {
            return Err(DlError::UnknownName(c.clone()));
        }
        if let Some(r) = roles.iter().find(|r| !self.roles.contains_key(*r)) {
            return Err(DlError::UnknownName(r.clone()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, DlError> {
        let mut onto: Ontology = serde_json::from_str(text).map_err(|e| DlError::Parse(e.to_string()))?;
        onto.axioms = onto.axioms.iter().map(Axiom::canonical).collect();
        onto.validate()?;
        Ok(onto)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ontology serializes")
    }
}

/// Value or individual a role assertion points to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Filler {
    Individual(String),
    Literal(Value),
}

/// Assertions about individuals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ABox {
    pub types: BTreeMap<String, BTreeSet<String>>,
    pub relations: BTreeMap<String, Vec<(String, Filler)>>,
}

impl ABox {
    pub fn assert_type(&mut self, individual: &str, concept: &str) {
        self.types
            .entry(individual.to_owned())
            .or_default()
            .insert(concept.to_owned());
    }

    pub fn assert_role(&mut self, individual: &str, role: &str, filler: Filler) {
        self.types.entry(individual.to_owned()).or_default();
        self.relations
            .entry(individual.to_owned())
            .or_default()
            .push((role.to_owned(), filler));
    }

    pub fn contains(&self, individual: &str) -> bool {
        self.types.contains_key(individual) || self.relations.contains_key(individual)
    }

    pub fn validate(&self, onto: &Ontology) -> Result<(), DlError> {
        for c in self.types.values().flatten() {
            if !onto.concepts.contains(c) {
                return Err(DlError::UnknownName(c.clone()));
            }
        }
        for (r, _) in self.relations.values().flatten() {
            if !onto.roles.contains_key(r) {
                return Err(DlError::UnknownName(r.clone()));
            }
        }
        Ok(())
    }
}

/// `sup ⊒ sub` with respect to the told axioms of `onto`.
pub fn subsumes(onto: &Ontology, sup: &ConceptExpr, sub: &ConceptExpr) -> Result<bool, DlError> {
    onto.check_expr(sup)?;
    onto.check_expr(sub)?;
    Ok(Reasoner::new(onto).subsumes(sup, sub))
}

/// Every concept name mapped to all its atomic subsumers, itself included.
pub fn classify(onto: &Ontology) -> BTreeMap<String, BTreeSet<String>> {
    Reasoner::new(onto).classify()
}
