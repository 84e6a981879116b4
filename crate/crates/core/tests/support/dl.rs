//! Random EL ontologies, expressions and ABoxes, plus a structural
//! subsumption oracle over the told name hierarchy.

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

use nosqint_core::dlcore::{classify, gcs, lcs, msc, ABox, Axiom, ConceptExpr, Filler, Ontology, Role};
use nosqint_core::fca::{build_lattice, FormalContext};
use nosqint_core::store::Value;

const NAMES: [&str; 6] = ["A", "B", "C", "D", "E", "F"];
const ROLES: [&str; 2] = ["r", "s"];

/// Concepts `A..` with object roles `r`, `s` and random name inclusions,
/// cycles included.
pub fn random_ontology(rng: &mut StdRng) -> Ontology {
    let names = &NAMES[..rng.gen_range(2..=6)];
    let mut o = Ontology::new("rand");
    for n in names {
        o.add_concept(*n);
    }
    for r in ROLES {
        o.add_role(Role::object(r, *names.choose(rng).unwrap(), *names.choose(rng).unwrap()));
    }
    for _ in 0..rng.gen_range(0..=6) {
        let (a, b) = (names.choose(rng).unwrap(), names.choose(rng).unwrap());
        if rng.gen_bool(0.15) {
            o.add_axiom(Axiom::EquivalentTo {
                left: ConceptExpr::atomic(*a),
                right: ConceptExpr::atomic(*b),
            });
        } else {
            o.add_axiom(Axiom::sub_class(*a, *b));
        }
    }
    o
}

fn names_of(o: &Ontology) -> Vec<&str> {
    o.concepts.iter().map(String::as_str).collect()
}

/// A conjunction of one to three names and restrictions, restrictions
/// nesting at most `depth` levels.
pub fn random_expr(rng: &mut StdRng, o: &Ontology, depth: usize) -> ConceptExpr {
    let names = names_of(o);
    let parts = (0..rng.gen_range(1..=3)).map(|_| {
        if depth == 0 || rng.gen_bool(0.5) {
            ConceptExpr::atomic(*names.choose(rng).unwrap())
        } else {
            let filler = if rng.gen_bool(0.2) {
                ConceptExpr::Top
            } else {
                random_expr(rng, o, depth - 1)
            };
            ConceptExpr::min_card(rng.gen_range(1..=3), *ROLES.choose(rng).unwrap(), filler)
        }
    });
    ConceptExpr::and(parts.collect::<Vec<_>>())
}

/// Up to four individuals with random types and role assertions, cycles
/// and literal fillers included.
pub fn random_abox(rng: &mut StdRng, o: &Ontology) -> ABox {
    let names = names_of(o);
    let inds: Vec<String> = (0..rng.gen_range(1..=4)).map(|i| format!("i{i}")).collect();
    let mut abox = ABox::default();
    for i in &inds {
        for _ in 0..rng.gen_range(0..=2) {
            abox.assert_type(i, names.choose(rng).unwrap());
        }
        for _ in 0..rng.gen_range(0..=2) {
            let filler = if rng.gen_bool(0.2) {
                Filler::Literal(Value::text("lit"))
            } else {
                Filler::Individual(inds.choose(rng).unwrap().clone())
            };
            abox.assert_role(i, ROLES.choose(rng).unwrap(), filler);
        }
        abox.types.entry(i.clone()).or_default();
    }
    abox
}

/// Structural subsumption over the reflexive-transitive closure of the
/// told name inclusions.
pub struct Oracle {
    supers: BTreeMap<String, BTreeSet<String>>,
}

type Restriction<'a> = (u32, &'a str, &'a ConceptExpr);

impl Oracle {
    pub fn new(o: &Ontology) -> Self {
        let mut edges: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for ax in &o.axioms {
            let pairs = match ax {
                Axiom::SubClassOf { sub, sup } => vec![(sub, sup)],
                Axiom::EquivalentTo { left, right } => vec![(left, right), (right, left)],
                Axiom::DisjointWith { .. } => Vec::new(),
            };
            for (a, b) in pairs {
                if let (ConceptExpr::Atomic(a), ConceptExpr::Atomic(b)) = (a, b) {
                    edges.entry(a).or_default().insert(b);
                }
            }
        }
        let supers = o
            .concepts
            .iter()
            .map(|c| {
                let mut seen = BTreeSet::from([c.as_str()]);
                let mut stack = vec![c.as_str()];
                while let Some(x) = stack.pop() {
                    for y in edges.get(x).into_iter().flatten() {
                        if seen.insert(y) {
                            stack.push(y);
                        }
                    }
                }
                (c.clone(), seen.into_iter().map(str::to_owned).collect())
            })
            .collect();
        Oracle { supers }
    }

    pub fn supers(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.supers
    }

    fn split(e: &ConceptExpr) -> (Vec<&str>, Vec<Restriction<'_>>) {
        let mut names = Vec::new();
        let mut rs = Vec::new();
        let mut stack = vec![e];
        while let Some(x) = stack.pop() {
            match x {
                ConceptExpr::Top => {}
                ConceptExpr::Atomic(a) => names.push(a.as_str()),
                ConceptExpr::And(parts) => stack.extend(parts),
                ConceptExpr::Exists { role, filler } => rs.push((1, role.as_str(), filler.as_ref())),
                ConceptExpr::MinCard { n, role, filler } => rs.push((*n, role.as_str(), filler.as_ref())),
            }
        }
        (names, rs)
    }

    /// `sup ⊒ sub`
    pub fn subsumes(&self, sup: &ConceptExpr, sub: &ConceptExpr) -> bool {
        let (sub_names, sub_rs) = Self::split(sub);
        let closed: BTreeSet<&str> = sub_names
            .iter()
            .flat_map(|n| self.supers.get(*n).into_iter().flatten().map(String::as_str).chain([*n]))
            .collect();
        let (sup_names, sup_rs) = Self::split(sup);
        sup_names.iter().all(|n| closed.contains(n))
            && sup_rs
                .iter()
                .all(|(n, r, f)| sub_rs.iter().any(|(m, q, g)| q == r && m >= n && self.subsumes(f, g)))
    }
}

fn depth(e: &ConceptExpr) -> usize {
    match e {
        ConceptExpr::Top | ConceptExpr::Atomic(_) => 0,
        ConceptExpr::And(parts) => parts.iter().map(depth).max().unwrap_or(0),
        ConceptExpr::Exists { filler, .. } | ConceptExpr::MinCard { filler, .. } => 1 + depth(filler),
    }
}

/// Single-conjunct concepts of depth at most 2 over the ontology's names:
/// names and `≥n r.F` with `F` drawn from Top, names, pairs of names,
/// `≥m s.G` and `N ⊓ ≥m s.G` (`G` Top or a name), `n, m ≤ 3`.
pub fn candidates(o: &Ontology) -> Vec<ConceptExpr> {
    let names: Vec<ConceptExpr> = names_of(o).into_iter().map(ConceptExpr::atomic).collect();
    let atoms: Vec<ConceptExpr> = std::iter::once(ConceptExpr::Top).chain(names.iter().cloned()).collect();
    let mut inner: Vec<ConceptExpr> = Vec::new();
    for role in ROLES {
        for m in 1..=3 {
            for g in &atoms {
                inner.push(ConceptExpr::min_card(m, role, g.clone()));
            }
        }
    }
    let mut fillers = atoms.clone();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            fillers.push(ConceptExpr::and([a.clone(), b.clone()]));
        }
    }
    fillers.extend(inner.iter().cloned());
    for a in &names {
        for r in &inner {
            fillers.push(ConceptExpr::and([a.clone(), r.clone()]));
        }
    }
    let mut out = names.clone();
    for role in ROLES {
        for n in 1..=3 {
            for f in &fillers {
                out.push(ConceptExpr::min_card(n, role, f.clone()));
            }
        }
    }
    out
}

/// One random case: lcs, gcs, msc and classification properties.
pub fn check_case(rng: &mut StdRng) -> Result<(), String> {
    let o = random_ontology(rng);
    let oracle = Oracle::new(&o);

    let got = classify(&o);
    if &got != oracle.supers() {
        return Err(format!("classify: got {got:?}, expected {:?}", oracle.supers()));
    }

    let exprs: Vec<ConceptExpr> = (0..rng.gen_range(1..=3)).map(|_| random_expr(rng, &o, 2)).collect();
    let l = lcs(&o, &exprs).map_err(|e| format!("lcs failed: {e}"))?;
    if depth(&l) > 2 {
        return Err(format!("lcs {l} deeper than its inputs"));
    }
    if let Some(e) = exprs.iter().find(|e| !oracle.subsumes(&l, e)) {
        return Err(format!("lcs {l} does not subsume {e}"));
    }
    for c in candidates(&o) {
        if exprs.iter().all(|e| oracle.subsumes(&c, e)) && !oracle.subsumes(&c, &l) {
            return Err(format!("{c} subsumes every input but not the lcs {l}"));
        }
    }

    let mut ctx = FormalContext::new((0..4).map(|g| format!("g{g}")).collect(), o.concepts.iter().cloned().collect());
    for g in 0..4 {
        for m in 0..o.concepts.len() {
            if rng.gen_bool(0.5) {
                ctx.set(g, m);
            }
        }
    }
    let g = gcs(&o, &build_lattice(&ctx), &exprs).map_err(|e| format!("gcs failed: {e}"))?;
    if !oracle.subsumes(&g, &l) {
        return Err(format!("gcs {g} does not subsume lcs {l}"));
    }

    let abox = random_abox(rng, &o);
    for ind in abox.types.keys() {
        let mut prev = msc(&o, &abox, ind, 0).map_err(|e| format!("msc failed: {e}"))?;
        for k in 1..=3 {
            let next = msc(&o, &abox, ind, k).map_err(|e| format!("msc failed: {e}"))?;
            if depth(&next) > k {
                return Err(format!("msc({ind}, {k}) = {next} is too deep"));
            }
            if !oracle.subsumes(&prev, &next) {
                return Err(format!("msc({ind}, {k}) = {next} is not below msc({ind}, {}) = {prev}", k - 1));
            }
            prev = next;
        }
    }
    Ok(())
}
