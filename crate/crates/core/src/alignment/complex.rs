use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::dlcore::{ConceptExpr, Ontology, RoleKind};

use super::similarity::{concept_role_similarity, name_similarity, MatcherConfig};
use super::simple::saturate;
use super::{Alignment, AlignmentError, Correspondence, Entity, Hierarchy, Provenance, Relation};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct SubGraphProperty {
    pub role: String,
    /// Least number of fillers required by the definitions of the center.
    pub min: u32,
    pub domain: String,
    pub range: String,
    /// The range is a datatype rather than a concept.
    pub datatype: bool,
}

/// The concepts and roles directly around one concept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubGraph {
    pub ontology: String,
    pub center: String,
    pub direct_subs: BTreeSet<String>,
    pub disjoints: BTreeSet<String>,
    pub direct_supers: BTreeSet<String>,
    pub properties: Vec<SubGraphProperty>,
    /// Strict ancestors of the concepts mentioned above.
    pub generalizations: BTreeMap<String, BTreeSet<String>>,
}

impl SubGraph {
    /// `center ⊓ ≥n r.Range` over the object properties leaving the center
    /// with a positive lower bound.
    pub fn formula(&self) -> ConceptExpr {
        let restrictions = self
            .properties
            .iter()
            .filter(|p| !p.datatype && p.domain == self.center && p.min > 0)
            .map(|p| ConceptExpr::min_card(p.min, p.role.as_str(), ConceptExpr::atomic(p.range.as_str())));
        ConceptExpr::and(std::iter::once(ConceptExpr::atomic(self.center.as_str())).chain(restrictions))
    }

    fn generalized(&self, name: &str) -> BTreeSet<String> {
        let mut out = self.generalizations.get(name).cloned().unwrap_or_default();
        out.insert(name.to_owned());
        out
    }
}

/// The subgraph around `c` in a saturated ontology.
pub fn extract_subgraph(onto: &Ontology, c: &str) -> Result<SubGraph, AlignmentError> {
    if !onto.concepts.contains(c) {
        return Err(AlignmentError::UnknownName(c.to_owned()));
    }
    Ok(extract_with(onto, &Hierarchy::new(onto), c))
}

pub(crate) fn extract_with(onto: &Ontology, h: &Hierarchy, c: &str) -> SubGraph {
    let mut disjoints = BTreeSet::new();
    for ax in &onto.axioms {
        if let crate::dlcore::Axiom::DisjointWith { left, right } = ax {
            if left == c && right != c {
                disjoints.insert(right.clone());
            } else if right == c && left != c {
                disjoints.insert(left.clone());
            }
        }
    }
    let mut properties: Vec<SubGraphProperty> = onto
        .roles
        .values()
        .filter(|r| r.domain == c || (r.kind == RoleKind::Object && r.range == c))
        .map(|r| SubGraphProperty {
            role: r.name.clone(),
            min: lower_bound(onto, c, &r.name),
            domain: r.domain.clone(),
            range: r.range.clone(),
            datatype: r.kind == RoleKind::Datatype,
        })
        .collect();
    properties.sort();

    let direct_supers = h.direct_supers(c);
    let direct_subs = h.direct_subs(c);
    let mut mentioned: BTreeSet<&str> = BTreeSet::from([c]);
    mentioned.extend(direct_supers.iter().map(String::as_str));
    mentioned.extend(direct_subs.iter().map(String::as_str));
    mentioned.extend(disjoints.iter().map(String::as_str));
    for p in &properties {
        mentioned.insert(&p.domain);
        if !p.datatype {
            mentioned.insert(&p.range);
        }
    }
    let generalizations = mentioned
        .into_iter()
        .map(|n| (n.to_owned(), h.ancestors(n)))
        .filter(|(_, a)| !a.is_empty())
        .collect();
    SubGraph {
        ontology: onto.id.clone(),
        center: c.to_owned(),
        direct_subs,
        disjoints,
        direct_supers,
        properties,
        generalizations,
    }
}

/// Largest `n` such that a told definition of `c` states `≥n role._`.
fn lower_bound(onto: &Ontology, c: &str, role: &str) -> u32 {
    onto.axioms
        .iter()
        .flat_map(|ax| ax.inclusions())
        .filter(|(lhs, _)| lhs.as_atomic() == Some(c))
        .flat_map(|(_, rhs)| rhs.conjuncts())
        .filter_map(|conj| conj.restriction())
        .filter(|(_, r, _)| *r == role)
        .map(|(n, _, _)| n)
        .max()
        .unwrap_or(0)
}

/// Similarity of names across the two ontologies of an alignment.
struct Similar<'a> {
    left: &'a str,
    concepts: BTreeSet<(String, String)>,
    roles: BTreeSet<(String, String)>,
    cfg: &'a MatcherConfig,
}

impl<'a> Similar<'a> {
    fn new(simple: &'a Alignment, cfg: &'a MatcherConfig) -> Self {
        let mut concepts = BTreeSet::new();
        let mut roles = BTreeSet::new();
        for c in simple.cells.iter().filter(|c| c.relation == Relation::Equiv) {
            match (&c.left, &c.right) {
                (Entity::Role(a), Entity::Role(b)) => {
                    roles.insert((a.clone(), b.clone()));
                }
                (Entity::Concept(a), Entity::Concept(b)) => {
                    if let (Some(a), Some(b)) = (a.as_atomic(), b.as_atomic()) {
                        concepts.insert((a.to_owned(), b.to_owned()));
                    }
                }
                _ => {}
            }
        }
        Similar {
            left: &simple.left_ontology,
            concepts,
            roles,
            cfg,
        }
    }

    /// `a` lives in ontology `onto_a`, `b` in the other one.
    fn aligned(&self, onto_a: &str, a: &str, b: &str, role: bool) -> bool {
        let key = if onto_a == self.left {
            (a.to_owned(), b.to_owned())
        } else {
            (b.to_owned(), a.to_owned())
        };
        if role {
            self.roles.contains(&key)
        } else {
            self.concepts.contains(&key)
        }
    }

    fn similar(&self, onto_a: &str, a: &str, b: &str, role: bool) -> bool {
        self.aligned(onto_a, a, b, role) || name_similarity(a, b, self.cfg) >= self.cfg.threshold
    }

    fn any_similar(&self, onto_a: &str, xs: &BTreeSet<String>, ys: &BTreeSet<String>) -> bool {
        xs.iter().any(|x| ys.iter().any(|y| self.similar(onto_a, x, y, false)))
    }
}

/// Whether `sg1` subsumes `sg2`: subclasses, disjoint classes, superclasses
/// (up to generalization) and properties of `sg1` all have similar
/// counterparts in `sg2`, with `sg1`'s cardinality bounds at least those of
/// `sg2` and similar domains and ranges.
pub fn subgraph_subsumes(sg1: &SubGraph, sg2: &SubGraph, simple: &Alignment, cfg: &MatcherConfig) -> bool {
    subsumes_with(sg1, sg2, &Similar::new(simple, cfg))
}

fn subsumes_with(sg1: &SubGraph, sg2: &SubGraph, sim: &Similar) -> bool {
    let o1 = sg1.ontology.as_str();
    let all_similar = |xs: &BTreeSet<String>, ys: &BTreeSet<String>| {
        xs.iter().all(|x| ys.iter().any(|y| sim.similar(o1, x, y, false)))
    };
    if !all_similar(&sg1.direct_subs, &sg2.direct_subs) || !all_similar(&sg1.disjoints, &sg2.disjoints) {
        return false;
    }
    let supers_ok = sg1.direct_supers.iter().all(|x| {
        sg2.direct_supers
            .iter()
            .any(|y| sim.any_similar(o1, &sg1.generalized(x), &sg2.generalized(y)))
    });
    if !supers_ok {
        return false;
    }
    sg1.properties.iter().all(|p| {
        sg2.properties.iter().any(|q| {
            let ends = |a: &str, b: &str| sim.any_similar(o1, &BTreeSet::from([a.to_owned()]), &sg2.generalized(b));
            let range_ok = match (p.datatype, q.datatype) {
                (false, false) => ends(&p.range, &q.range),
                (true, true) => p.range == q.range,
                _ => false,
            };
            sim.similar(o1, &p.role, &q.role, true) && p.min >= q.min && ends(&p.domain, &q.domain) && range_ok
        })
    })
}

/// Complex correspondences between two ontologies given their simple
/// alignment.
///
/// Concept pairs whose centers are similar are related through their
/// subgraphs: an equivalence when each subsumes the other, a subsumption
/// when only one does, with both sides rendered by [`SubGraph::formula`].
/// A concept whose label resembles a role of the other ontology yields
/// `C ⊑ ∃r.Range` when one of its ancestors is aligned with the role's
/// domain or range, or an ancestor of those.
pub fn align_complex(
    o1: &Ontology,
    o2: &Ontology,
    simple: &Alignment,
    cfg: &MatcherConfig,
) -> Result<Alignment, AlignmentError> {
    if o1.id == o2.id {
        return Err(AlignmentError::SameOntology(o1.id.clone()));
    }
    cfg.validate()?;
    let simple = if simple.left_ontology == o1.id {
        simple.clone()
    } else {
        simple.swapped()
    };
    let sim = Similar::new(&simple, cfg);
    let (s1, s2) = (saturate(o1), saturate(o2));
    let (h1, h2) = (Hierarchy::new(&s1), Hierarchy::new(&s2));
    let sg1: Vec<SubGraph> = s1.concepts.iter().map(|c| extract_with(&s1, &h1, c)).collect();
    let sg2: Vec<SubGraph> = s2.concepts.iter().map(|c| extract_with(&s2, &h2, c)).collect();

    let mut out = Alignment::new(&o1.id, &o2.id);
    for a in &sg1 {
        for b in &sg2 {
            let confidence = match simple.find(&Entity::concept(&a.center), &Entity::concept(&b.center)) {
                Some(cell) if cell.relation == Relation::Equiv => cell.confidence,
                _ => name_similarity(&a.center, &b.center, cfg),
            };
            if confidence < cfg.threshold {
                continue;
            }
            let relation = match (subsumes_with(a, b, &sim), subsumes_with(b, a, &sim)) {
                (true, true) => Relation::Equiv,
                (true, false) => Relation::Subsumes,
                (false, true) => Relation::SubsumedBy,
                (false, false) => continue,
            };
            out.push(Correspondence {
                left: Entity::Concept(a.formula()),
                right: Entity::Concept(b.formula()),
                relation,
                confidence,
                provenance: Provenance::Prop1,
            });
        }
    }

    for cell in concept_to_formula(&s1, &h1, &s2, &h2, &sim, cfg) {
        out.push(cell);
    }
    let flipped = concept_to_formula(&s2, &h2, &s1, &h1, &sim, cfg);
    for cell in flipped.iter().map(Correspondence::swapped) {
        out.push(cell);
    }
    Ok(out)
}

/// Cells `c ⊑ ∃r.Range` with `c` from `oc` (left) and `r` from `or` (right).
fn concept_to_formula(
    oc: &Ontology,
    hc: &Hierarchy,
    or: &Ontology,
    hr: &Hierarchy,
    sim: &Similar,
    cfg: &MatcherConfig,
) -> Vec<Correspondence> {
    let mut out = Vec::new();
    for c in &oc.concepts {
        let ancestors = hc.ancestors(c);
        if ancestors.is_empty() {
            continue;
        }
        for r in or.roles.values().filter(|r| r.kind == RoleKind::Object) {
            let score = concept_role_similarity(c, &r.name, cfg);
            if score < cfg.threshold {
                continue;
            }
            let mut ends: BTreeSet<String> = [r.domain.clone(), r.range.clone()].into();
            ends.extend(hr.ancestors(&r.domain));
            ends.extend(hr.ancestors(&r.range));
            let anchored = ancestors
                .iter()
                .any(|s| ends.iter().any(|t| sim.aligned(&oc.id, s, t, false)));
            if anchored {
                out.push(Correspondence {
                    left: Entity::concept(c),
                    right: Entity::Concept(ConceptExpr::exists(r.name.as_str(), ConceptExpr::atomic(r.range.as_str()))),
                    relation: Relation::SubsumedBy,
                    confidence: score,
                    provenance: Provenance::Prop2,
                });
            }
        }
    }
    out
}
