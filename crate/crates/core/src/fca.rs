//! Formal concept analysis: Galois closures, Next-Closure lattice
//! construction and the translation of a lattice into subsumption axioms.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::dlcore::{Axiom, ConceptExpr};

#[derive(Debug, Error, PartialEq)]
pub enum FcaError {
    #[error("index {index} out of range ({len} {what})")]
    IndexOutOfRange { what: &'static str, index: usize, len: usize },
}

pub type Set = BTreeSet<usize>;

/// Objects, attributes and the incidence relation between them. Both
/// orders are fixed at construction and drive every enumeration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FormalContext {
    pub objects: Vec<String>,
    pub attributes: Vec<String>,
    rows: Vec<Set>,
}

impl FormalContext {
    pub fn new(objects: Vec<String>, attributes: Vec<String>) -> Self {
        let rows = vec![Set::new(); objects.len()];
        FormalContext { objects, attributes, rows }
    }

    pub fn with_incidence(
        objects: Vec<String>,
        attributes: Vec<String>,
        incidence: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, FcaError> {
        let mut ctx = FormalContext::new(objects, attributes);
        for (g, m) in incidence {
            ctx.check_object(g)?;
            ctx.check_attributes([m].iter())?;
            ctx.rows[g].insert(m);
        }
        Ok(ctx)
    }

    /// Marks object `g` as having attribute `m`.
    ///
    /// # Panics
    /// When either index is out of range.
    pub fn set(&mut self, g: usize, m: usize) {
        assert!(m < self.attributes.len(), "attribute index {m} out of range");
        self.rows[g].insert(m);
    }

    pub fn has(&self, g: usize, m: usize) -> bool {
        self.rows.get(g).is_some_and(|r| r.contains(&m))
    }

    pub fn incidence(&self) -> BTreeSet<(usize, usize)> {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(g, row)| row.iter().map(move |&m| (g, m)))
            .collect()
    }

    pub fn object_intent(&self, g: usize) -> &Set {
        &self.rows[g]
    }

    /// Objects having every attribute in `attrs`.
    pub fn extent(&self, attrs: &Set) -> Set {
        (0..self.objects.len())
            .filter(|&g| attrs.is_subset(&self.rows[g]))
            .collect()
    }

    /// Attributes shared by every object in `objs`.
    pub fn intent(&self, objs: &Set) -> Set {
        let mut out: Set = (0..self.attributes.len()).collect();
        for &g in objs {
            out.retain(|m| self.rows[g].contains(m));
        }
        out
    }

    fn check_object(&self, g: usize) -> Result<(), FcaError> {
        if g >= self.objects.len() {
            return Err(FcaError::IndexOutOfRange {
                what: "objects",
                index: g,
                len: self.objects.len(),
            });
        }
        Ok(())
    }

    fn check_attributes<'a>(&self, attrs: impl Iterator<Item = &'a usize>) -> Result<(), FcaError> {
        for &m in attrs {
            if m >= self.attributes.len() {
                return Err(FcaError::IndexOutOfRange {
                    what: "attributes",
                    index: m,
                    len: self.attributes.len(),
                });
            }
        }
        Ok(())
    }

    fn closure(&self, attrs: &Set) -> Set {
        self.intent(&self.extent(attrs))
    }
}

/// `attrs''`, the smallest closed attribute set containing `attrs`.
pub fn close(ctx: &FormalContext, attrs: &Set) -> Result<Set, FcaError> {
    ctx.check_attributes(attrs.iter())?;
    Ok(ctx.closure(attrs))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormalConcept {
    pub extent: Set,
    pub intent: Set,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConceptLattice {
    pub objects: Vec<String>,
    pub attributes: Vec<String>,
    /// Concepts in lectic order of their intents.
    pub nodes: Vec<FormalConcept>,
    /// `(lower, upper)` node indexes of the covering relation.
    pub cover_edges: BTreeSet<(usize, usize)>,
}

/// Enumerates every formal concept with Next-Closure and links them by
/// their covering relation.
pub fn build_lattice(ctx: &FormalContext) -> ConceptLattice {
    let n = ctx.attributes.len();
    let mut intents = Vec::new();
    let mut current = ctx.closure(&Set::new());
    loop {
        intents.push(current.clone());
        match next_closure(ctx, &current, n) {
            Some(next) => current = next,
            None => break,
        }
    }
    let nodes: Vec<FormalConcept> = intents
        .into_iter()
        .map(|intent| FormalConcept {
            extent: ctx.extent(&intent),
            intent,
        })
        .collect();
    let index: BTreeMap<&Set, usize> = nodes.iter().enumerate().map(|(i, c)| (&c.intent, i)).collect();
    let mut cover_edges = BTreeSet::new();
    for (upper, node) in nodes.iter().enumerate() {
        // lower covers are the minimal closures of intent + one attribute
        let candidates: BTreeSet<Set> = (0..n)
            .filter(|m| !node.intent.contains(m))
            .map(|m| {
                let mut b = node.intent.clone();
                b.insert(m);
                ctx.closure(&b)
            })
            .collect();
        for c in &candidates {
            if !candidates.iter().any(|d| d != c && d.is_subset(c)) {
                cover_edges.insert((index[c], upper));
            }
        }
    }
    ConceptLattice {
        objects: ctx.objects.clone(),
        attributes: ctx.attributes.clone(),
        nodes,
        cover_edges,
    }
}

fn next_closure(ctx: &FormalContext, a: &Set, n: usize) -> Option<Set> {
    for i in (0..n).rev() {
        if a.contains(&i) {
            continue;
        }
        let mut b: Set = a.range(..i).copied().collect();
        b.insert(i);
        let b = ctx.closure(&b);
        if b.range(..i).eq(a.range(..i)) {
            return Some(b);
        }
    }
    None
}

impl ConceptLattice {
    /// Index of the node with the largest extent.
    pub fn top(&self) -> usize {
        self.extreme(|a, b| a.extent.len() > b.extent.len())
    }

    /// Index of the node with the largest intent.
    pub fn bottom(&self) -> usize {
        self.extreme(|a, b| a.intent.len() > b.intent.len())
    }

    fn extreme(&self, better: impl Fn(&FormalConcept, &FormalConcept) -> bool) -> usize {
        let mut best = 0;
        for (i, c) in self.nodes.iter().enumerate() {
            if better(c, &self.nodes[best]) {
                best = i;
            }
        }
        best
    }

    /// Extent of the attribute named `name`.
    pub fn attribute_extent(&self, name: &str) -> Option<&Set> {
        let m = self.attributes.iter().position(|a| a == name)?;
        self.nodes
            .iter()
            .filter(|c| c.intent.contains(&m))
            .max_by_key(|c| c.extent.len())
            .map(|c| &c.extent)
    }

    /// Both names are attributes, `c` is observed, and every object having
    /// `c` has `b` but not the other way round.
    pub fn attribute_strictly_below(&self, c: &str, b: &str) -> bool {
        match (self.attribute_extent(c), self.attribute_extent(b)) {
            (Some(ec), Some(eb)) => !ec.is_empty() && ec.len() < eb.len() && ec.is_subset(eb),
            _ => false,
        }
    }

    /// Attribute indexes whose attribute concept is node `i`.
    pub fn introduced_attributes(&self, i: usize) -> Set {
        let node = &self.nodes[i];
        node.intent
            .iter()
            .copied()
            .filter(|&m| {
                !self
                    .nodes
                    .iter()
                    .any(|c| c.intent.contains(&m) && c.extent.len() > node.extent.len())
            })
            .collect()
    }
}

/// Name a lattice node receives: the attribute it introduces, or the
/// sorted introduced attributes joined by `_`.
pub fn node_name(lat: &ConceptLattice, i: usize) -> Option<String> {
    let mut names: Vec<&str> = lat
        .introduced_attributes(i)
        .into_iter()
        .map(|m| lat.attributes[m].as_str())
        .collect();
    names.sort_unstable();
    (!names.is_empty()).then(|| names.join("_"))
}

/// Subsumption axioms between the named nodes of `lat`.
///
/// Nodes that introduce no attribute are pruned, and edges through them
/// are reconnected, so the result is the transitive reduction of extent
/// inclusion among named nodes. Attributes introduced together are
/// declared equivalent to their joined node name.
pub fn lattice_to_axioms(lat: &ConceptLattice, ctx: &FormalContext) -> Vec<Axiom> {
    debug_assert_eq!(lat.attributes, ctx.attributes);
    let named: Vec<(usize, String)> = (0..lat.nodes.len())
        .filter_map(|i| node_name(lat, i).map(|n| (i, n)))
        .collect();
    let strictly_below = |a: usize, b: usize| {
        let (ea, eb) = (&lat.nodes[a].extent, &lat.nodes[b].extent);
        a != b && ea.is_subset(eb) && lat.nodes[a].intent != lat.nodes[b].intent
    };
    let mut axioms = BTreeSet::new();
    for (i, name) in &named {
        let introduced = lat.introduced_attributes(*i);
        if introduced.len() > 1 {
            for m in introduced {
                axioms.insert(Axiom::EquivalentTo {
                    left: ConceptExpr::atomic(lat.attributes[m].as_str()),
                    right: ConceptExpr::atomic(name.as_str()),
                });
            }
        }
        for (j, upper) in &named {
            if strictly_below(*i, *j) && !named.iter().any(|(k, _)| strictly_below(*i, *k) && strictly_below(*k, *j)) {
                axioms.insert(Axiom::sub_class(name.as_str(), upper.as_str()));
            }
        }
    }
    axioms.into_iter().collect()
}
