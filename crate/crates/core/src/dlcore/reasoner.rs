use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{ConceptExpr, Ontology};

/// Structural subsumption w.r.t. the told axioms of one ontology.
///
/// An expression is first *expanded*: its top-level conjuncts are closed
/// under the name hierarchy and under every told inclusion `lhs ⊑ rhs` whose
/// left side already matches, until nothing changes. `sup ⊒ sub` then holds
/// iff every conjunct of `sup` is matched by a conjunct of the expansion of
/// `sub` (names by identity, restrictions by role, cardinality and a
/// recursive subsumption check on fillers). Sound for the fragment; complete
/// only for what the told axioms state.
#[derive(Debug, Clone)]
pub struct Reasoner {
    concepts: BTreeSet<String>,
    name_supers: BTreeMap<String, BTreeSet<String>>,
    rules: Vec<(ConceptExpr, ConceptExpr)>,
    cycle: Option<String>,
}

impl Reasoner {
    pub fn new(onto: &Ontology) -> Self {
        let mut concepts = onto.concepts.clone();
        let mut edges: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut rules = Vec::new();
        for ax in &onto.axioms {
            for (lhs, rhs) in ax.inclusions() {
                concepts.extend(lhs.concept_names());
                concepts.extend(rhs.concept_names());
                match (lhs, rhs) {
                    (ConceptExpr::Atomic(a), ConceptExpr::Atomic(b)) => {
                        edges.entry(a.clone()).or_default().insert(b.clone());
                    }
                    _ => rules.push((lhs.clone(), rhs.clone())),
                }
            }
        }
        let name_supers = concepts
            .iter()
            .map(|c| (c.clone(), reachable(&edges, c)))
            .collect();
        let cycle = definitional_cycle(&concepts, onto);
        Reasoner {
            concepts,
            name_supers,
            rules,
            cycle,
        }
    }

    /// Atomic subsumers of `name` through the name hierarchy, itself included.
    pub fn name_supers(&self, name: &str) -> BTreeSet<String> {
        self.name_supers
            .get(name)
            .cloned()
            .unwrap_or_else(|| BTreeSet::from([name.to_owned()]))
    }

    /// A concept name whose definition refers back to itself through a
    /// role filler, if any.
    pub fn definitional_cycle(&self) -> Option<&str> {
        self.cycle.as_deref()
    }

    /// Top-level conjuncts entailed by `expr`.
    pub fn expand(&self, expr: &ConceptExpr) -> BTreeSet<ConceptExpr> {
        let mut set = BTreeSet::new();
        self.add_conjuncts(expr, &mut set);
        let mut applied = vec![false; self.rules.len()];
        loop {
            let mut changed = false;
            for (i, (lhs, rhs)) in self.rules.iter().enumerate() {
                if !applied[i] && self.matches(lhs, &set) {
                    applied[i] = true;
                    self.add_conjuncts(rhs, &mut set);
                    changed = true;
                }
            }
            if !changed {
                return set;
            }
        }
    }

    /// Atomic names entailed by `expr`.
    pub fn entailed_names(&self, expr: &ConceptExpr) -> BTreeSet<String> {
        self.expand(expr)
            .into_iter()
            .filter_map(|c| c.as_atomic().map(str::to_owned))
            .collect()
    }

    pub fn subsumes(&self, sup: &ConceptExpr, sub: &ConceptExpr) -> bool {
        if sup == sub {
            return true;
        }
        self.matches(sup, &self.expand(sub))
    }

    pub fn equivalent(&self, a: &ConceptExpr, b: &ConceptExpr) -> bool {
        self.subsumes(a, b) && self.subsumes(b, a)
    }

    pub fn classify(&self) -> BTreeMap<String, BTreeSet<String>> {
        self.concepts
            .iter()
            .map(|c| (c.clone(), self.entailed_names(&ConceptExpr::atomic(c.as_str()))))
            .collect()
    }

    /// Drops every conjunct implied by the remaining ones, fillers first.
    pub fn reduce(&self, expr: &ConceptExpr) -> ConceptExpr {
        let mut parts: Vec<ConceptExpr> = expr
            .conjuncts()
            .into_iter()
            .map(|c| match c.restriction() {
                Some((n, r, f)) => ConceptExpr::min_card(n, r, self.reduce(f)),
                None => c.clone(),
            })
            .collect();
        parts.sort();
        parts.dedup();
        let mut i = 0;
        while i < parts.len() {
            let rest = ConceptExpr::and(parts.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p.clone()));
            if parts.len() > 1 && self.subsumes(&parts[i], &rest) {
                parts.remove(i);
            } else {
                i += 1;
            }
        }
        ConceptExpr::and(parts)
    }

    fn add_conjuncts(&self, expr: &ConceptExpr, set: &mut BTreeSet<ConceptExpr>) {
        for c in expr.conjuncts() {
            if let ConceptExpr::Atomic(a) = c {
                for s in self.name_supers(a) {
                    set.insert(ConceptExpr::Atomic(s));
                }
            } else {
                set.insert(c.clone());
            }
        }
    }

    fn matches(&self, sup: &ConceptExpr, set: &BTreeSet<ConceptExpr>) -> bool {
        sup.conjuncts().into_iter().all(|c| match c.restriction() {
            None => set.contains(c),
            Some((n, role, filler)) => set.iter().any(|x| {
                x.restriction()
                    .is_some_and(|(m, r, f)| r == role && m >= n && self.subsumes(filler, f))
            }),
        })
    }
}

fn reachable(edges: &BTreeMap<String, BTreeSet<String>>, start: &str) -> BTreeSet<String> {
    let mut seen = BTreeSet::from([start.to_owned()]);
    let mut queue = VecDeque::from([start.to_owned()]);
    while let Some(n) = queue.pop_front() {
        for m in edges.get(&n).into_iter().flatten() {
            if seen.insert(m.clone()) {
                queue.push_back(m.clone());
            }
        }
    }
    seen
}

/// Finds a name that reaches itself through a role filler of some told
/// definition. Such definitions make expansion-based products unbounded.
fn definitional_cycle(concepts: &BTreeSet<String>, onto: &Ontology) -> Option<String> {
    let mut plain: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut through_filler: Vec<(String, String)> = Vec::new();
    for ax in &onto.axioms {
        for (lhs, rhs) in ax.inclusions() {
            let mut triggers = lhs.top_names();
            if triggers.is_empty() {
                triggers = concepts.clone();
            }
            let top: BTreeSet<String> = rhs.top_names();
            let nested: BTreeSet<String> = rhs
                .conjuncts()
                .into_iter()
                .filter_map(|c| c.restriction())
                .flat_map(|(_, _, f)| f.concept_names())
                .collect();
            for t in &triggers {
                for m in top.iter().chain(&nested) {
                    plain.entry(t.clone()).or_default().insert(m.clone());
                }
                for m in &nested {
                    through_filler.push((t.clone(), m.clone()));
                }
            }
        }
    }
    through_filler
        .into_iter()
        .find(|(from, to)| reachable(&plain, to).contains(from))
        .map(|(from, _)| from)
}
