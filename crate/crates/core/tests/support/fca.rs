//! Random formal contexts and brute-force enumeration of their concepts.

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::Rng;

use nosqint_core::dlcore::{Axiom, ConceptExpr};
use nosqint_core::fca::{build_lattice, lattice_to_axioms, FormalContext, Set};

const ATTRIBUTES: [&str; 6] = ["A", "B", "C", "D", "E", "F"];

/// A context of up to 6 objects and 6 attributes with its incidence matrix.
pub struct RandomContext {
    pub incidence: Vec<Vec<bool>>,
    pub attributes: Vec<String>,
}

impl RandomContext {
    pub fn new(rng: &mut StdRng) -> Self {
        let g = rng.gen_range(0..=6);
        let m = rng.gen_range(0..=6);
        let density = rng.gen_range(0.1..0.9);
        RandomContext {
            incidence: (0..g).map(|_| (0..m).map(|_| rng.gen_bool(density)).collect()).collect(),
            attributes: ATTRIBUTES[..m].iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn context(&self) -> FormalContext {
        let objects = (0..self.incidence.len()).map(|g| format!("g{g}")).collect();
        let cells = self
            .incidence
            .iter()
            .enumerate()
            .flat_map(|(g, row)| row.iter().enumerate().filter(|(_, x)| **x).map(move |(m, _)| (g, m)));
        FormalContext::with_incidence(objects, self.attributes.clone(), cells).unwrap()
    }

    fn extent(&self, attrs: &Set) -> Set {
        (0..self.incidence.len()).filter(|&g| attrs.iter().all(|&m| self.incidence[g][m])).collect()
    }

    fn intent(&self, objs: &Set) -> Set {
        (0..self.attributes.len()).filter(|&m| objs.iter().all(|&g| self.incidence[g][m])).collect()
    }

    /// Every (extent, intent) pair whose intent is closed, found by trying
    /// all attribute subsets.
    pub fn brute_force_concepts(&self) -> BTreeSet<(Set, Set)> {
        let m = self.attributes.len();
        (0u32..1 << m)
            .map(|bits| (0..m).filter(|i| bits & (1 << i) != 0).collect::<Set>())
            .filter_map(|b| {
                let e = self.extent(&b);
                (self.intent(&e) == b).then_some((e, b))
            })
            .collect()
    }

    /// Axioms expected from the attribute order: attributes with the same
    /// extent are equivalent to their joined name, and named groups are
    /// linked by the covering pairs of strict extent inclusion.
    pub fn expected_axioms(&self) -> BTreeSet<Axiom> {
        let mut groups: BTreeMap<Set, Vec<&str>> = BTreeMap::new();
        for (m, name) in self.attributes.iter().enumerate() {
            groups.entry(self.extent(&Set::from([m]))).or_default().push(name);
        }
        let named: Vec<(&Set, String)> = groups
            .iter()
            .map(|(e, names)| {
                let mut names = names.clone();
                names.sort_unstable();
                (e, names.join("_"))
            })
            .collect();
        let mut out = BTreeSet::new();
        for (e, names) in &groups {
            let joined = &named.iter().find(|(x, _)| x == &e).unwrap().1;
            if names.len() > 1 {
                for n in names {
                    out.insert(Axiom::EquivalentTo {
                        left: ConceptExpr::atomic(*n),
                        right: ConceptExpr::atomic(joined.as_str()),
                    });
                }
            }
        }
        let below = |a: &Set, b: &Set| a != b && a.is_subset(b);
        for (ea, a) in &named {
            for (eb, b) in &named {
                if below(ea, eb) && !named.iter().any(|(ec, _)| below(ea, ec) && below(ec, eb)) {
                    out.insert(Axiom::sub_class(a.as_str(), b.as_str()));
                }
            }
        }
        out
    }

    /// Compares the lattice and its axioms with the brute-force results.
    pub fn check(&self) -> Result<(), String> {
        let ctx = self.context();
        let lattice = build_lattice(&ctx);
        let nodes: BTreeSet<(Set, Set)> = lattice.nodes.iter().map(|c| (c.extent.clone(), c.intent.clone())).collect();
        if nodes.len() != lattice.nodes.len() {
            return Err("lattice lists a concept twice".into());
        }
        let expected = self.brute_force_concepts();
        if nodes != expected {
            return Err(format!("concepts differ: got {nodes:?}, expected {expected:?}"));
        }
        let axioms: BTreeSet<Axiom> = lattice_to_axioms(&lattice, &ctx).into_iter().collect();
        let expected = self.expected_axioms();
        if axioms != expected {
            return Err(format!("axioms differ: got {axioms:?}, expected {expected:?}"));
        }
        Ok(())
    }
}
