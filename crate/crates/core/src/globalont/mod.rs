//! The networked global ontology: local ontologies, the alignments between
//! them and the mappings of each to its store.
//!
//! Simple equivalence cells merge entities into global classes; the global
//! name of a class is its lexicographically least local name. Simple
//! subsumption cells become cross-ontology edges between classes. Formula
//! cells are kept with their alignment but create no classes.

mod file;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{Alignment, AlignmentError, Entity, Relation};
use crate::dlcore::{ConceptExpr, DlError, Ontology, Reasoner};
use crate::induction::{InductionError, Mapping, MappingSet};

pub use file::{load_global, GlobalFile, SourceFiles};

#[derive(Debug, Error)]
pub enum GlobalError {
    #[error("alignment merges {first} and {second} of the same ontology")]
    Conflict { first: String, second: String },
    #[error("unknown ontology id `{0}`")]
    UnknownOntologyId(String),
    #[error("ontology id `{0}` is listed twice")]
    DuplicateOntologyId(String),
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("cross-ontology subsumptions form a cycle through `{0}`")]
    Cycle(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed global ontology file: {0}")]
    Parse(String),
    #[error(transparent)]
    Ontology(#[from] DlError),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error(transparent)]
    Mapping(#[from] InductionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum EntityKind {
    Concept,
    Role,
}

/// A local entity, written `ontology#entity`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Member {
    pub ontology: String,
    pub entity: String,
}

impl Member {
    pub fn new(ontology: &str, entity: &str) -> Self {
        Member {
            ontology: ontology.to_owned(),
            entity: entity.to_owned(),
        }
    }

    pub fn parse(qualified: &str) -> Option<Self> {
        let (o, e) = qualified.split_once('#')?;
        (!o.is_empty() && !e.is_empty()).then(|| Member::new(o, e))
    }
}

impl fmt::Display for Member {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.ontology, self.entity)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalClass {
    pub name: String,
    pub kind: EntityKind,
    pub members: BTreeSet<Member>,
}

/// One local entity standing for a global one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    pub ontology: String,
    pub entity: String,
    /// The global class the binding was reached through.
    pub class: String,
    pub mapping: Option<Mapping>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityBinding {
    pub global_name: String,
    pub kind: EntityKind,
    pub bindings: Vec<Binding>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalOntology {
    pub ontologies: Vec<Ontology>,
    pub alignments: Vec<Alignment>,
    pub mappings: BTreeMap<String, MappingSet>,
    classes: Vec<GlobalClass>,
    index: BTreeMap<(EntityKind, Member), usize>,
    /// `(sub, sup)` pairs of class indices.
    cross_edges: BTreeSet<(usize, usize)>,
}

type Node = (EntityKind, Member);

/// Merges local ontologies along the simple cells of their alignments.
///
/// Ontologies without a mapping set get an empty one. The result does not
/// depend on the order of the inputs.
pub fn build_global(
    ontologies: Vec<Ontology>,
    alignments: Vec<Alignment>,
    mappings: BTreeMap<String, MappingSet>,
) -> Result<GlobalOntology, GlobalError> {
    let mut ontologies = ontologies;
    ontologies.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = ontologies.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(GlobalError::DuplicateOntologyId(w[0].id.clone()));
    }
    let ids: BTreeSet<&str> = ontologies.iter().map(|o| o.id.as_str()).collect();
    for a in &alignments {
        for id in [&a.left_ontology, &a.right_ontology] {
            if !ids.contains(id.as_str()) {
                return Err(GlobalError::UnknownOntologyId(id.clone()));
            }
        }
    }
    if let Some(id) = mappings.keys().find(|id| !ids.contains(id.as_str())) {
        return Err(GlobalError::UnknownOntologyId(id.clone()));
    }
    let mut mappings = mappings;
    for o in &ontologies {
        mappings.entry(o.id.clone()).or_default();
    }
    let mut alignments = alignments;
    for a in &mut alignments {
        a.cells.sort_by(|x, y| {
            (&x.left, &x.right, x.relation)
                .cmp(&(&y.left, &y.right, y.relation))
                .then(x.confidence.total_cmp(&y.confidence))
        });
    }
    alignments.sort_by(|a, b| {
        (&a.left_ontology, &a.right_ontology)
            .cmp(&(&b.left_ontology, &b.right_ontology))
            .then_with(|| a.to_json().cmp(&b.to_json()))
    });

    let mut nodes: BTreeSet<Node> = BTreeSet::new();
    for o in &ontologies {
        nodes.extend(o.concepts.iter().map(|c| (EntityKind::Concept, Member::new(&o.id, c))));
        nodes.extend(o.roles.keys().map(|r| (EntityKind::Role, Member::new(&o.id, r))));
    }
    let mut links: BTreeMap<Node, BTreeSet<Node>> = BTreeMap::new();
    for a in &alignments {
        for c in a.cells.iter().filter(|c| c.relation == Relation::Equiv) {
            let Some((l, r)) = simple_nodes(a, &c.left, &c.right) else { continue };
            for n in [&l, &r] {
                if !nodes.contains(n) {
                    return Err(GlobalError::UnknownEntity(n.1.to_string()));
                }
            }
            links.entry(l.clone()).or_default().insert(r.clone());
            links.entry(r).or_default().insert(l);
        }
    }

    let mut components: Vec<BTreeSet<Node>> = Vec::new();
    let mut seen: BTreeSet<&Node> = BTreeSet::new();
    for n in &nodes {
        if !seen.insert(n) {
            continue;
        }
        let mut comp = BTreeSet::from([n.clone()]);
        let mut queue = VecDeque::from([n]);
        while let Some(x) = queue.pop_front() {
            for y in links.get(x).into_iter().flatten() {
                if let Some(y) = nodes.get(y) {
                    if seen.insert(y) {
                        comp.insert(y.clone());
                        queue.push_back(y);
                    }
                }
            }
        }
        components.push(comp);
    }

    let reasoners: BTreeMap<&str, Reasoner> = ontologies.iter().map(|o| (o.id.as_str(), Reasoner::new(o))).collect();
    for comp in &components {
        check_conflicts(comp, &reasoners)?;
    }

    let classes = name_classes(components);
    let index: BTreeMap<Node, usize> = classes
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.members.iter().map(move |m| ((c.kind, m.clone()), i)))
        .collect();

    let mut cross_edges = BTreeSet::new();
    for a in &alignments {
        for c in &a.cells {
            let (sub, sup) = match c.relation {
                Relation::SubsumedBy => (&c.left, &c.right),
                Relation::Subsumes => (&c.right, &c.left),
                _ => continue,
            };
            let (l_id, r_id) = if c.relation == Relation::SubsumedBy {
                (&a.left_ontology, &a.right_ontology)
            } else {
                (&a.right_ontology, &a.left_ontology)
            };
            let (Entity::Concept(sub), Entity::Concept(sup)) = (sub, sup) else { continue };
            let (Some(sub), Some(sup)) = (sub.as_atomic(), sup.as_atomic()) else { continue };
            let key = |id: &str, n: &str| (EntityKind::Concept, Member::new(id, n));
            let (Some(&i), Some(&j)) = (index.get(&key(l_id, sub)), index.get(&key(r_id, sup))) else {
                return Err(GlobalError::UnknownEntity(format!("{l_id}#{sub} or {r_id}#{sup}")));
            };
            if i != j {
                cross_edges.insert((i, j));
            }
        }
    }

    let go = GlobalOntology {
        ontologies,
        alignments,
        mappings,
        classes,
        index,
        cross_edges,
    };
    go.check_acyclic()?;
    Ok(go)
}

fn simple_nodes(a: &Alignment, left: &Entity, right: &Entity) -> Option<(Node, Node)> {
    let kind = match (left, right) {
        (Entity::Role(_), Entity::Role(_)) => EntityKind::Role,
        (Entity::Concept(l), Entity::Concept(r)) if l.is_atomic() && r.is_atomic() => EntityKind::Concept,
        _ => return None,
    };
    Some((
        (kind, Member::new(&a.left_ontology, left.as_name()?)),
        (kind, Member::new(&a.right_ontology, right.as_name()?)),
    ))
}

fn check_conflicts(comp: &BTreeSet<Node>, reasoners: &BTreeMap<&str, Reasoner>) -> Result<(), GlobalError> {
    let mut by_onto: BTreeMap<&str, Vec<&Node>> = BTreeMap::new();
    for n in comp {
        by_onto.entry(&n.1.ontology).or_default().push(n);
    }
    for (onto, group) in by_onto {
        for pair in group.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let equivalent = a.0 == EntityKind::Concept
                && reasoners[onto].equivalent(&ConceptExpr::atomic(a.1.entity.as_str()), &ConceptExpr::atomic(b.1.entity.as_str()));
            if !equivalent {
                return Err(GlobalError::Conflict {
                    first: a.1.to_string(),
                    second: b.1.to_string(),
                });
            }
        }
    }
    Ok(())
}

/// Least local name per class; classes of one kind sharing that name are
/// told apart by the qualified name of their least member.
fn name_classes(components: Vec<BTreeSet<Node>>) -> Vec<GlobalClass> {
    let plain = |c: &BTreeSet<Node>| c.iter().map(|n| n.1.entity.clone()).min().unwrap_or_default();
    let mut count: BTreeMap<(EntityKind, String), usize> = BTreeMap::new();
    for c in &components {
        let kind = c.first().map(|n| n.0).unwrap_or(EntityKind::Concept);
        *count.entry((kind, plain(c))).or_default() += 1;
    }
    let mut classes: Vec<GlobalClass> = components
        .into_iter()
        .map(|c| {
            let kind = c.first().map(|n| n.0).unwrap_or(EntityKind::Concept);
            let name = plain(&c);
            let name = if count[&(kind, name.clone())] > 1 {
                c.iter()
                    .filter(|n| n.1.entity == name)
                    .map(|n| n.1.to_string())
                    .min()
                    .unwrap_or(name)
            } else {
                name
            };
            GlobalClass {
                name,
                kind,
                members: c.into_iter().map(|n| n.1).collect(),
            }
        })
        .collect();
    classes.sort_by(|a, b| (a.kind, &a.name).cmp(&(b.kind, &b.name)));
    classes
}

impl GlobalOntology {
    pub fn classes(&self) -> &[GlobalClass] {
        &self.classes
    }

    pub fn ontology(&self, id: &str) -> Option<&Ontology> {
        self.ontologies.iter().find(|o| o.id == id)
    }

    /// Cross-ontology subsumptions as `(sub, sup)` global names.
    pub fn cross_edges(&self) -> Vec<(&str, &str)> {
        self.cross_edges
            .iter()
            .map(|&(a, b)| (self.classes[a].name.as_str(), self.classes[b].name.as_str()))
            .collect()
    }

    pub fn class_of(&self, kind: EntityKind, member: &Member) -> Option<&GlobalClass> {
        self.index.get(&(kind, member.clone())).map(|&i| &self.classes[i])
    }

    /// The class with this global name, or the class of the qualified
    /// member `ontology#entity`; concepts are tried before roles unless a
    /// kind is given.
    pub fn find_class(&self, name: &str, kind: Option<EntityKind>) -> Option<&GlobalClass> {
        let kinds = match kind {
            Some(k) => vec![k],
            None => vec![EntityKind::Concept, EntityKind::Role],
        };
        kinds.into_iter().find_map(|k| {
            self.classes
                .iter()
                .find(|c| c.kind == k && c.name == name)
                .or_else(|| Member::parse(name).and_then(|m| self.class_of(k, &m)))
        })
    }

    pub fn mapping(&self, member: &Member) -> Option<&Mapping> {
        self.mappings.get(&member.ontology)?.get(&member.entity)
    }

    fn class_index(&self, class: &GlobalClass) -> usize {
        self.classes
            .iter()
            .position(|c| c.kind == class.kind && c.name == class.name)
            .expect("class belongs to this ontology")
    }

    /// Local name subsumptions lifted to classes, plus the cross edges.
    fn lifted_edges(&self) -> BTreeMap<usize, BTreeSet<usize>> {
        let mut out: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for o in &self.ontologies {
            for (c, sups) in Reasoner::new(o).classify() {
                let Some(&i) = self.index.get(&(EntityKind::Concept, Member::new(&o.id, &c))) else { continue };
                for s in sups {
                    if let Some(&j) = self.index.get(&(EntityKind::Concept, Member::new(&o.id, &s))) {
                        if i != j {
                            out.entry(i).or_default().insert(j);
                        }
                    }
                }
            }
        }
        for &(a, b) in &self.cross_edges {
            out.entry(a).or_default().insert(b);
        }
        out
    }

    fn check_acyclic(&self) -> Result<(), GlobalError> {
        let edges = self.lifted_edges();
        for &(a, b) in &self.cross_edges {
            let mut seen = BTreeSet::from([b]);
            let mut queue = VecDeque::from([b]);
            while let Some(x) = queue.pop_front() {
                if x == a {
                    return Err(GlobalError::Cycle(self.classes[a].name.clone()));
                }
                for &y in edges.get(&x).into_iter().flatten() {
                    if seen.insert(y) {
                        queue.push_back(y);
                    }
                }
            }
        }
        Ok(())
    }

    fn bindings_of(&self, class: &GlobalClass) -> Vec<Binding> {
        let mut per_onto: BTreeMap<&str, &Member> = BTreeMap::new();
        for m in &class.members {
            per_onto.entry(&m.ontology).or_insert(m);
        }
        per_onto
            .into_values()
            .map(|m| Binding {
                ontology: m.ontology.clone(),
                entity: m.entity.clone(),
                class: class.name.clone(),
                mapping: self.mapping(m).cloned(),
            })
            .collect()
    }
}

/// All local entities standing for `name` (a global name or a qualified
/// member), with their mappings. With `include_specializations`, classes
/// below it through cross-ontology subsumptions are included too.
pub fn resolve_entity(
    go: &GlobalOntology,
    name: &str,
    include_specializations: bool,
) -> Result<EntityBinding, GlobalError> {
    resolve_kind(go, name, None, include_specializations)
}

pub fn resolve_kind(
    go: &GlobalOntology,
    name: &str,
    kind: Option<EntityKind>,
    include_specializations: bool,
) -> Result<EntityBinding, GlobalError> {
    let class = go
        .find_class(name, kind)
        .ok_or_else(|| GlobalError::UnknownEntity(name.to_owned()))?;
    let mut bindings = go.bindings_of(class);
    if include_specializations && class.kind == EntityKind::Concept {
        let start = go.class_index(class);
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for &(sub, sup) in &go.cross_edges {
                if sup == x && seen.insert(sub) {
                    queue.push_back(sub);
                }
            }
        }
        for i in seen.into_iter().filter(|&i| i != start) {
            bindings.extend(go.bindings_of(&go.classes[i]));
        }
    }
    Ok(EntityBinding {
        global_name: class.name.clone(),
        kind: class.kind,
        bindings,
    })
}
