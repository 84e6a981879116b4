//! Random snapshots, random BGP queries over them, and a naive query
//! oracle that materializes the stores as triples.

#![allow(dead_code)]

pub mod dl;
pub mod fca;

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

use nosqint_core::alignment::{align_simple, saturate, MatcherConfig};
use nosqint_core::globalont::{build_global, EntityKind, GlobalOntology, Member};
use nosqint_core::induction::{induce_local, Mapping, MappingKind, SamplingStrategy};
use nosqint_core::queryfront::{SparqlQuery, Term, TriplePattern, RDF_TYPE};
use nosqint_core::store::{ColumnStore, DocumentDatabase, Record, SourceCatalog, Value};

const NAMES: [&str; 4] = ["ann", "bob", "cy", "dee"];
const TAGS: [&str; 3] = ["x", "y", "z"];
const KINDS: [&str; 3] = ["Alpha", "Beta", "Gamma"];

/// Up to three containers spread over a document database and a column
/// store, at most 45 entries in total.
pub fn random_catalog(rng: &mut StdRng) -> SourceCatalog {
    let containers = ["Person", "Item", "Note"];
    let count = rng.gen_range(1..=3);
    let mut placed: Vec<(&str, bool, usize)> = Vec::new();
    for (i, c) in containers.iter().take(count).enumerate() {
        let in_doc = i == 0 || rng.gen_bool(0.6);
        placed.push((c, in_doc, rng.gen_range(1..=15)));
    }
    let keys = |c: &str, n: usize| -> Vec<String> { (0..n).map(|i| format!("{}{i}", c.to_lowercase())).collect() };

    let mut doc = DocumentDatabase::new("docs");
    let mut col = ColumnStore::new("cols");
    for &(c, in_doc, n) in &placed {
        let peers: Vec<(&str, usize)> = placed
            .iter()
            .filter(|p| p.1 == in_doc && p.0 != c)
            .map(|p| (p.0, p.2))
            .collect();
        let link = peers.choose(rng).copied();
        for key in keys(c, n) {
            let mut r = Record::new();
            if rng.gen_bool(0.9) {
                r.insert("name".into(), Value::text(*NAMES.choose(rng).unwrap()));
            }
            if rng.gen_bool(0.7) {
                r.insert("score".into(), Value::Number(f64::from(rng.gen_range(1..=3))));
            }
            if rng.gen_bool(0.5) {
                let k = rng.gen_range(0..=3);
                let tags = TAGS.choose_multiple(rng, k).map(|t| Value::text(*t)).collect();
                r.insert("tags".into(), Value::List(tags));
            }
            if rng.gen_bool(0.8) {
                let k = rng.gen_range(1..=2);
                let kinds: Vec<Value> = KINDS.choose_multiple(rng, k).map(|t| Value::text(*t)).collect();
                r.insert("type".into(), Value::List(kinds));
            }
            if let Some((target, m)) = link {
                if rng.gen_bool(0.7) {
                    let targets = keys(target, m);
                    let k = rng.gen_range(0..=2);
                    let refs = targets.choose_multiple(rng, k).map(|t| Value::text(t.as_str())).collect();
                    r.insert(format!("{}Ref", target.to_lowercase()), Value::List(refs));
                }
            }
            if in_doc {
                doc.insert(c, &key, r);
            } else {
                col.insert(c, &key, r).expect("flat rows");
            }
        }
    }
    let cols = if placed.iter().any(|p| !p.1) { vec![col] } else { Vec::new() };
    SourceCatalog::new(vec![doc], cols).expect("distinct database names")
}

/// Induces every database, aligns them pairwise and merges.
pub fn global_for(catalog: &SourceCatalog) -> GlobalOntology {
    let mut ontos = Vec::new();
    let mut maps = BTreeMap::new();
    for b in catalog.backends() {
        let (o, m) = induce_local(catalog, b.name(), &SamplingStrategy::Full).expect("induction succeeds");
        maps.insert(o.id.clone(), m);
        ontos.push(o);
    }
    let mut alignments = Vec::new();
    for i in 0..ontos.len() {
        for j in i + 1..ontos.len() {
            let a = align_simple(&saturate(&ontos[i]), &saturate(&ontos[j]), &MatcherConfig::default())
                .expect("distinct ontologies");
            alignments.push(a);
        }
    }
    build_global(ontos, alignments, maps).expect("merge succeeds")
}

fn class_name(go: &GlobalOntology, kind: EntityKind, onto: &str, entity: &str) -> Option<String> {
    go.class_of(kind, &Member::new(onto, entity)).map(|c| c.name.clone())
}

fn elements(v: &Value) -> Vec<Value> {
    match v {
        Value::List(items) => items.iter().filter(|v| !matches!(v, Value::Null)).cloned().collect(),
        Value::Null => Vec::new(),
        other => vec![other.clone()],
    }
}

struct QueryBuilder<'a> {
    go: &'a GlobalOntology,
    catalog: &'a SourceCatalog,
    onto: String,
    maps: Vec<&'a Mapping>,
    patterns: Vec<TriplePattern>,
    vars: Vec<String>,
}

impl<'a> QueryBuilder<'a> {
    fn fresh(&mut self) -> String {
        let v = format!("v{}", self.vars.len());
        self.vars.push(v.clone());
        v
    }

    fn keys(&self, container: &str) -> Vec<String> {
        let c = self.catalog.resolve(&self.onto, container).expect("mapped container");
        self.catalog.entries(&c).expect("mapped container").keys().cloned().collect()
    }

    fn sample_value(&self, rng: &mut StdRng, container: &str, attr: &str) -> Value {
        let c = self.catalog.resolve(&self.onto, container).expect("mapped container");
        let values: Vec<Value> = self
            .catalog
            .entries(&c)
            .expect("mapped container")
            .values()
            .filter_map(|r| r.get(attr))
            .flat_map(elements)
            .collect();
        values
            .choose(rng)
            .cloned()
            .unwrap_or_else(|| Value::text(*NAMES.choose(rng).unwrap()))
    }

    fn roles(&self, kind: MappingKind, pick: impl Fn(&Mapping) -> bool) -> Vec<&'a Mapping> {
        self.maps
            .iter()
            .filter(|m| m.kind == kind && m.key_path.len() == 1 && pick(m))
            .copied()
            .collect()
    }

    fn grow(&mut self, rng: &mut StdRng, node: Term, container: String, depth: usize) {
        if rng.gen_bool(0.5) {
            let concepts: Vec<&'a Mapping> = self
                .maps
                .iter()
                .filter(|m| m.container == container)
                .filter(|m| {
                    m.kind == MappingKind::ConceptToContainer
                        || (m.kind == MappingKind::ConceptToTypeValue && m.key_path.len() == 1)
                })
                .copied()
                .collect();
            if let Some(m) = concepts.choose(rng) {
                if let Some(name) = class_name(self.go, EntityKind::Concept, &self.onto, &m.entity) {
                    self.patterns.push(TriplePattern {
                        subject: node.clone(),
                        predicate: RDF_TYPE.into(),
                        object: Term::Iri(name),
                    });
                }
            }
        }
        let datatype = self.roles(MappingKind::DatatypeRoleToKey, |m| m.container == container);
        for _ in 0..rng.gen_range(0..=2) {
            let Some(m) = datatype.choose(rng) else { break };
            let Some(pred) = class_name(self.go, EntityKind::Role, &self.onto, &m.entity) else { continue };
            let object = if rng.gen_bool(0.5) {
                Term::Var(self.fresh())
            } else {
                Term::Literal(self.sample_value(rng, &container, &m.key_path[0]))
            };
            self.patterns.push(TriplePattern {
                subject: node.clone(),
                predicate: pred,
                object,
            });
        }
        if depth >= 2 {
            return;
        }
        let outgoing = self.roles(MappingKind::ObjectRoleToKey, |m| m.container == container);
        if rng.gen_bool(0.6) {
            if let Some(m) = outgoing.choose(rng) {
                let target = m.target.as_ref().expect("object roles have targets").container.clone();
                if let Some(pred) = class_name(self.go, EntityKind::Role, &self.onto, &m.entity) {
                    if rng.gen_bool(0.15) {
                        if let Some(k) = self.keys(&target).choose(rng) {
                            self.patterns.push(TriplePattern {
                                subject: node.clone(),
                                predicate: pred,
                                object: Term::Iri(k.clone()),
                            });
                        }
                    } else {
                        let child = Term::Var(self.fresh());
                        self.patterns.push(TriplePattern {
                            subject: node.clone(),
                            predicate: pred,
                            object: child.clone(),
                        });
                        self.grow(rng, child, target, depth + 1);
                    }
                }
            }
        }
        if rng.gen_bool(0.3) && matches!(node, Term::Var(_)) {
            let incoming = self.roles(MappingKind::ObjectRoleToKey, |m| {
                m.target.as_ref().is_some_and(|t| t.container == container)
            });
            if let Some(m) = incoming.choose(rng) {
                if let Some(pred) = class_name(self.go, EntityKind::Role, &self.onto, &m.entity) {
                    let child = Term::Var(self.fresh());
                    self.patterns.push(TriplePattern {
                        subject: child.clone(),
                        predicate: pred,
                        object: node.clone(),
                    });
                    self.grow(rng, child, m.container.clone(), depth + 1);
                }
            }
        }
    }
}

/// A tree-shaped query built from the vocabulary of one randomly chosen
/// source, with constants sampled from its data. `None` when the draw
/// produced no variable to select.
pub fn random_query(rng: &mut StdRng, go: &GlobalOntology, catalog: &SourceCatalog) -> Option<SparqlQuery> {
    let onto = go.ontologies.choose(rng)?.id.clone();
    let maps: Vec<&Mapping> = go.mappings.get(&onto)?.entries.iter().collect();
    let containers: Vec<String> = maps
        .iter()
        .filter(|m| m.kind == MappingKind::ConceptToContainer)
        .map(|m| m.container.clone())
        .collect();
    let root_container = containers.choose(rng)?.clone();
    let mut b = QueryBuilder {
        go,
        catalog,
        onto,
        maps,
        patterns: Vec::new(),
        vars: Vec::new(),
    };
    let root = if rng.gen_bool(0.15) {
        Term::Iri(b.keys(&root_container).choose(rng)?.clone())
    } else {
        Term::Var(b.fresh())
    };
    b.grow(rng, root.clone(), root_container.clone(), 0);
    if b.patterns.is_empty() {
        let m = b
            .maps
            .iter()
            .find(|m| m.kind == MappingKind::ConceptToContainer && m.container == root_container)?;
        b.patterns.push(TriplePattern {
            subject: root,
            predicate: RDF_TYPE.into(),
            object: Term::Iri(class_name(go, EntityKind::Concept, &b.onto, &m.entity)?),
        });
    }
    let mut seen = BTreeSet::new();
    b.patterns.retain(|p| seen.insert(p.clone()));
    let used: BTreeSet<String> = b
        .patterns
        .iter()
        .flat_map(|p| [&p.subject, &p.object])
        .filter_map(|t| t.as_var().map(str::to_owned))
        .collect();
    let mut select: Vec<String> = used.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
    if select.is_empty() {
        select.push(used.iter().next()?.clone());
    }
    Some(SparqlQuery {
        select_vars: select,
        patterns: b.patterns,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Node {
    Entity { db: String, container: String, key: String },
    Literal(Value),
    Class(String),
}

impl Node {
    fn answer(&self) -> Value {
        match self {
            Node::Entity { key, .. } => Value::text(key.as_str()),
            Node::Literal(v) => v.clone(),
            Node::Class(c) => Value::text(c.as_str()),
        }
    }
}

/// Every store entry as triples named after the global classes its
/// mappings belong to. References to missing entries are not links.
pub struct TripleOracle {
    triples: Vec<(Node, String, Node)>,
}

impl TripleOracle {
    pub fn new(go: &GlobalOntology, catalog: &SourceCatalog) -> Self {
        let mut triples = BTreeSet::new();
        for (onto, set) in &go.mappings {
            for m in &set.entries {
                let kind = if m.kind.is_concept() { EntityKind::Concept } else { EntityKind::Role };
                let Some(name) = class_name(go, kind, onto, &m.entity) else { continue };
                let Ok(c) = catalog.resolve(&m.database, &m.container) else { continue };
                let entries = catalog.entries(&c).expect("resolved");
                let entity = |key: &str| Node::Entity {
                    db: m.database.clone(),
                    container: m.container.clone(),
                    key: key.to_owned(),
                };
                for (key, record) in entries {
                    let attr = m.key_path.first().and_then(|k| record.get(k));
                    match (m.kind, m.key_path.len()) {
                        (MappingKind::ConceptToContainer, _) => {
                            triples.insert((entity(key), RDF_TYPE.to_owned(), Node::Class(name.clone())));
                        }
                        (MappingKind::ConceptToTypeValue, 1) => {
                            let have = attr.map(elements).unwrap_or_default();
                            if m.values.iter().all(|v| have.contains(&Value::text(v.as_str()))) {
                                triples.insert((entity(key), RDF_TYPE.to_owned(), Node::Class(name.clone())));
                            }
                        }
                        (MappingKind::DatatypeRoleToKey, 1) => {
                            for v in attr.map(elements).unwrap_or_default() {
                                triples.insert((entity(key), name.clone(), Node::Literal(v)));
                            }
                        }
                        (MappingKind::ObjectRoleToKey, 1) => {
                            let target = m.target.as_ref().expect("object roles have targets");
                            let Ok(tc) = catalog.resolve(&target.database, &target.container) else { continue };
                            let targets = catalog.entries(&tc).expect("resolved");
                            for v in attr.map(elements).unwrap_or_default() {
                                if let Value::Text(k) = &v {
                                    if targets.contains_key(k) {
                                        triples.insert((
                                            entity(key),
                                            name.clone(),
                                            Node::Entity {
                                                db: target.database.clone(),
                                                container: target.container.clone(),
                                                key: k.clone(),
                                            },
                                        ));
                                    }
                                }
                            }
                        }
                        _ => {}
                    }
                }
            }
        }
        TripleOracle {
            triples: triples.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    /// Distinct answer rows of `q` by exhaustive join over all triples.
    pub fn answer(&self, q: &SparqlQuery) -> BTreeSet<Vec<Value>> {
        let mut out = BTreeSet::new();
        self.join(q, 0, &mut BTreeMap::new(), &mut out);
        out
    }

    fn join(&self, q: &SparqlQuery, i: usize, env: &mut BTreeMap<String, Node>, out: &mut BTreeSet<Vec<Value>>) {
        let Some(p) = q.patterns.get(i) else {
            out.insert(q.select_vars.iter().map(|v| env[v].answer()).collect());
            return;
        };
        for (s, pred, o) in &self.triples {
            if *pred != p.predicate {
                continue;
            }
            let mut bound = Vec::new();
            if unify(&p.subject, s, env, &mut bound) && unify(&p.object, o, env, &mut bound) {
                self.join(q, i + 1, env, out);
            }
            for v in bound {
                env.remove(&v);
            }
        }
    }
}

fn unify(t: &Term, n: &Node, env: &mut BTreeMap<String, Node>, bound: &mut Vec<String>) -> bool {
    match t {
        Term::Var(v) => match env.get(v) {
            Some(x) => x == n,
            None => {
                env.insert(v.clone(), n.clone());
                bound.push(v.clone());
                true
            }
        },
        Term::Iri(name) => match n {
            Node::Entity { key, .. } => key == name,
            Node::Literal(v) => *v == Value::text(name.as_str()),
            Node::Class(c) => c == name,
        },
        Term::Literal(lit) => match n {
            Node::Entity { key, .. } => *lit == Value::text(key.as_str()),
            Node::Literal(v) => v == lit,
            Node::Class(_) => false,
        },
    }
}
