use std::collections::BTreeSet;

use super::{ABox, ConceptExpr, DlError, Filler, Ontology, Reasoner};
use crate::fca::ConceptLattice;

/// Role depth used when no explicit bound is requested.
pub const DEFAULT_MSC_DEPTH: usize = 2;

// Fillers nest at most this deep before a product is declared unbounded.
const MAX_PRODUCT_DEPTH: usize = 32;

/// Most specific concept of `individual`, with role successors followed
/// `depth` levels deep.
pub fn msc(onto: &Ontology, abox: &ABox, individual: &str, depth: usize) -> Result<ConceptExpr, DlError> {
    if !abox.contains(individual) {
        return Err(DlError::UnknownIndividual(individual.to_owned()));
    }
    Ok(msc_with(&Reasoner::new(onto), abox, individual, depth))
}

pub(crate) fn msc_with(reasoner: &Reasoner, abox: &ABox, individual: &str, depth: usize) -> ConceptExpr {
    let mut parts: Vec<ConceptExpr> = abox
        .types
        .get(individual)
        .into_iter()
        .flatten()
        .flat_map(|t| reasoner.name_supers(t))
        .map(ConceptExpr::Atomic)
        .collect();
    if depth > 0 {
        for (role, filler) in abox.relations.get(individual).into_iter().flatten() {
            let successor = match filler {
                Filler::Individual(b) if abox.contains(b) => msc_with(reasoner, abox, b, depth - 1),
                _ => ConceptExpr::Top,
            };
            parts.push(ConceptExpr::exists(role.as_str(), successor));
        }
    }
    ConceptExpr::and(parts)
}

/// Least common subsumer of `exprs`, computed as the product of their
/// expansions and reduced to drop implied conjuncts.
pub fn lcs(onto: &Ontology, exprs: &[ConceptExpr]) -> Result<ConceptExpr, DlError> {
    if exprs.is_empty() {
        return Err(DlError::EmptyInput);
    }
    for e in exprs {
        onto.check_expr(e)?;
    }
    lcs_with(&Reasoner::new(onto), exprs)
}

pub(crate) fn lcs_with(reasoner: &Reasoner, exprs: &[ConceptExpr]) -> Result<ConceptExpr, DlError> {
    let (first, rest) = exprs.split_first().ok_or(DlError::EmptyInput)?;
    if let Some(name) = reasoner.definitional_cycle() {
        return Err(DlError::CyclicDefinitions(name.to_owned()));
    }
    let mut acc = reasoner.reduce(first);
    for e in rest {
        acc = product(reasoner, &acc, e, 0)?;
    }
    Ok(acc)
}

fn product(reasoner: &Reasoner, a: &ConceptExpr, b: &ConceptExpr, depth: usize) -> Result<ConceptExpr, DlError> {
    if depth > MAX_PRODUCT_DEPTH {
        return Err(DlError::CyclicDefinitions(a.to_string()));
    }
    let ea = reasoner.expand(a);
    let eb = reasoner.expand(b);
    let mut parts: Vec<ConceptExpr> = ea.iter().filter(|c| c.is_atomic() && eb.contains(c)).cloned().collect();
    for (n, role, fa) in ea.iter().filter_map(|c| c.restriction()) {
        for (m, other, fb) in eb.iter().filter_map(|c| c.restriction()) {
            if role == other {
                let filler = product(reasoner, fa, fb, depth + 1)?;
                parts.push(ConceptExpr::min_card(n.min(m), role, filler));
            }
        }
    }
    Ok(reasoner.reduce(&ConceptExpr::and(parts)))
}

/// Good common subsumer: the conjunction of the most specific concept
/// names shared by every input.
///
/// Each input contributes the names it entails through the told hierarchy.
/// A shared name is dropped when another shared name lies strictly below
/// it, either in the hierarchy or in the attribute order of `lattice`.
pub fn gcs(onto: &Ontology, lattice: &ConceptLattice, exprs: &[ConceptExpr]) -> Result<ConceptExpr, DlError> {
    if exprs.is_empty() {
        return Err(DlError::EmptyInput);
    }
    for e in exprs {
        onto.check_expr(e)?;
    }
    Ok(gcs_with(&Reasoner::new(onto), Some(lattice), exprs))
}

pub(crate) fn gcs_with(reasoner: &Reasoner, lattice: Option<&ConceptLattice>, exprs: &[ConceptExpr]) -> ConceptExpr {
    let mut sets = exprs.iter().map(|e| reasoner.entailed_names(e));
    let Some(mut common) = sets.next() else {
        return ConceptExpr::Top;
    };
    for s in sets {
        common = common.intersection(&s).cloned().collect();
    }
    let told_below = |c: &String, b: &String| {
        c != b && reasoner.name_supers(c).contains(b) && !reasoner.name_supers(b).contains(c)
    };
    let data_below = |c: &String, b: &String| {
        lattice.is_some_and(|l| l.attribute_strictly_below(c, b)) && !told_below(b, c)
    };
    let minimal = |below: &dyn Fn(&String, &String) -> bool| -> BTreeSet<String> {
        common
            .iter()
            .filter(|b| !common.iter().any(|c| below(c, b)))
            .cloned()
            .collect()
    };
    let mut picked = minimal(&|c, b| told_below(c, b) || data_below(c, b));
    if picked.is_empty() {
        picked = minimal(&told_below);
    }
    ConceptExpr::and(picked.into_iter().map(ConceptExpr::Atomic))
}
