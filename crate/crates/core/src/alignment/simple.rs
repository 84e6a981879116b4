use std::collections::{BTreeMap, BTreeSet};

use crate::dlcore::{Axiom, Ontology, Reasoner, RoleKind};

use super::similarity::{name_similarity, MatcherConfig};
use super::{Alignment, AlignmentError, Correspondence, Entity, Hierarchy, Provenance, Relation};

const MAX_ROUNDS: usize = 10;

/// Makes implicit name subsumptions explicit: every entailed `A ⊑ B`
/// between names, and `A ⊑ D` whenever a definition of `A` restricts a role
/// whose domain is `D`. Idempotent.
pub fn saturate(onto: &Ontology) -> Ontology {
    let mut out = onto.clone();
    loop {
        let mut missing = BTreeSet::new();
        let cls = Reasoner::new(&out).classify();
        for (c, sups) in &cls {
            missing.extend(sups.iter().filter(|s| *s != c).map(|s| (c.clone(), s.clone())));
        }
        for ax in &out.axioms {
            for (lhs, rhs) in ax.inclusions() {
                let Some(c) = lhs.as_atomic() else { continue };
                for conj in rhs.conjuncts() {
                    let domain = conj.restriction().and_then(|(_, r, _)| out.roles.get(r)).map(|r| &r.domain);
                    if let Some(d) = domain.filter(|d| d.as_str() != c) {
                        missing.insert((c.to_owned(), d.clone()));
                    }
                }
            }
        }
        let before = out.axioms.len();
        for (c, s) in missing {
            out.add_axiom(Axiom::sub_class(c, s));
        }
        if out.axioms.len() == before {
            return out;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Tag {
    Super,
    Sub,
    /// A role whose domain is the concept.
    Outgoing,
    /// A role whose range is the concept.
    Incoming,
    Domain,
    Range,
}

/// A neighbour is matched against neighbours with the same tag; `role`
/// selects which match table applies and `literal` marks datatype ranges,
/// which match by equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Neighbour {
    tag: Tag,
    name: String,
    role: bool,
    literal: bool,
}

struct Side<'a> {
    onto: &'a Ontology,
    concepts: Vec<String>,
    roles: Vec<String>,
    neighbours: BTreeMap<(bool, String), BTreeSet<Neighbour>>,
}

impl<'a> Side<'a> {
    fn new(onto: &'a Ontology) -> Self {
        let h = Hierarchy::new(onto);
        let n = |tag, name: &str, role| Neighbour {
            tag,
            name: name.to_owned(),
            role,
            literal: false,
        };
        let mut neighbours = BTreeMap::new();
        for c in &onto.concepts {
            let mut set: BTreeSet<Neighbour> = BTreeSet::new();
            set.extend(h.direct_supers(c).iter().map(|s| n(Tag::Super, s, false)));
            set.extend(h.direct_subs(c).iter().map(|s| n(Tag::Sub, s, false)));
            for r in onto.roles.values() {
                if &r.domain == c {
                    set.insert(n(Tag::Outgoing, &r.name, true));
                }
                if r.kind == RoleKind::Object && &r.range == c {
                    set.insert(n(Tag::Incoming, &r.name, true));
                }
            }
            neighbours.insert((false, c.clone()), set);
        }
        for r in onto.roles.values() {
            let mut set = BTreeSet::from([n(Tag::Domain, &r.domain, false)]);
            set.insert(Neighbour {
                literal: r.kind == RoleKind::Datatype,
                ..n(Tag::Range, &r.range, false)
            });
            neighbours.insert((true, r.name.clone()), set);
        }
        Side {
            onto,
            concepts: onto.concepts.iter().cloned().collect(),
            roles: onto.roles.keys().cloned().collect(),
            neighbours,
        }
    }

    fn annotations(&self, name: &str) -> &[String] {
        self.onto.annotations.get(name).map(Vec::as_slice).unwrap_or_default()
    }
}

type Matches = BTreeSet<(bool, String, String)>;

fn jaccard(a: &BTreeSet<Neighbour>, b: &BTreeSet<Neighbour>, m: &Matches) -> Option<f64> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let linked = |x: &Neighbour, y: &Neighbour| {
        x.tag == y.tag
            && x.role == y.role
            && if x.literal || y.literal {
                x.name == y.name
            } else {
                m.contains(&(x.role, x.name.clone(), y.name.clone()))
            }
    };
    let left = a.iter().filter(|x| b.iter().any(|y| linked(x, y))).count();
    let right = b.iter().filter(|y| a.iter().any(|x| linked(x, y))).count();
    let matched = left.min(right) as f64;
    Some(matched / ((a.len() + b.len()) as f64 - matched))
}

#[derive(Debug, Clone, Copy)]
struct Scores {
    lexical: f64,
    structural: Option<f64>,
    annotation: Option<f64>,
}

impl Scores {
    fn combined(&self, cfg: &MatcherConfig) -> f64 {
        let mut num = cfg.lexical_weight * self.lexical;
        let mut den = cfg.lexical_weight;
        if let Some(s) = self.structural {
            num += cfg.structural_weight * s;
            den += cfg.structural_weight;
        }
        if let Some(s) = self.annotation {
            num += cfg.annotation_weight * s;
            den += cfg.annotation_weight;
        }
        if den == 0.0 {
            return 0.0;
        }
        let v = (num / den).clamp(0.0, 1.0);
        // Identical or synonymous names are kept even when neighbourhoods differ.
        if self.lexical >= 1.0 {
            v.max(cfg.threshold)
        } else {
            v
        }
    }

    fn provenance(&self, cfg: &MatcherConfig) -> Provenance {
        let mut best = (cfg.lexical_weight * self.lexical, Provenance::Lexical);
        for (s, w, p) in [
            (self.structural, cfg.structural_weight, Provenance::Structural),
            (self.annotation, cfg.annotation_weight, Provenance::Annotation),
        ] {
            if let Some(s) = s {
                if w * s > best.0 {
                    best = (w * s, p);
                }
            }
        }
        best.1
    }
}

/// Equivalences between names of two ontologies.
///
/// Lexical, structural and annotation scores are combined with the
/// configured weights, renormalized over the matchers that apply to a pair
/// (the structural matcher needs neighbours on both sides, the annotation
/// matcher annotations on both sides). Structural scores are the Jaccard
/// overlap of already matched neighbours, iterated until the set of
/// accepted pairs is stable. Each entity keeps at most its best counterpart.
pub fn align_simple(o1: &Ontology, o2: &Ontology, cfg: &MatcherConfig) -> Result<Alignment, AlignmentError> {
    if o1.id == o2.id {
        return Err(AlignmentError::SameOntology(o1.id.clone()));
    }
    cfg.validate()?;
    let (s1, s2) = (Side::new(o1), Side::new(o2));
    let mut pairs: Vec<(bool, &String, &String)> = Vec::new();
    for a in &s1.concepts {
        pairs.extend(s2.concepts.iter().map(|b| (false, a, b)));
    }
    for a in &s1.roles {
        pairs.extend(s2.roles.iter().map(|b| (true, a, b)));
    }
    let base: Vec<(f64, Option<f64>)> = pairs
        .iter()
        .map(|&(_, a, b)| {
            let annotation = annotation_score(s1.annotations(a), s2.annotations(b), cfg);
            (name_similarity(a, b, cfg), annotation)
        })
        .collect();

    let score = |m: &Matches| -> Vec<Scores> {
        pairs
            .iter()
            .zip(&base)
            .map(|(&(role, a, b), &(lexical, annotation))| Scores {
                lexical,
                structural: jaccard(&s1.neighbours[&(role, a.clone())], &s2.neighbours[&(role, b.clone())], m),
                annotation,
            })
            .collect()
    };
    let accepted = |scores: &[Scores]| -> Matches {
        pairs
            .iter()
            .zip(scores)
            .filter(|(_, s)| s.combined(cfg) >= cfg.threshold)
            .map(|(&(role, a, b), _)| (role, a.clone(), b.clone()))
            .collect()
    };

    let mut matches: Matches = pairs
        .iter()
        .zip(&base)
        .filter(|(_, (lex, _))| *lex >= cfg.threshold)
        .map(|(&(role, a, b), _)| (role, a.clone(), b.clone()))
        .collect();
    let mut scores = score(&matches);
    for _ in 0..MAX_ROUNDS {
        let next = accepted(&scores);
        if next == matches {
            break;
        }
        matches = next;
        scores = score(&matches);
    }

    let mut candidates: Vec<(f64, bool, &String, &String, Provenance)> = pairs
        .iter()
        .zip(&scores)
        .map(|(&(role, a, b), s)| (s.combined(cfg), role, a, b, s.provenance(cfg)))
        .filter(|c| c.0 >= cfg.threshold)
        .collect();
    candidates.sort_by(|x, y| {
        y.0.total_cmp(&x.0)
            .then_with(|| x.2.min(x.3).cmp(y.2.min(y.3)))
            .then_with(|| x.2.max(x.3).cmp(y.2.max(y.3)))
            .then_with(|| x.1.cmp(&y.1))
            .then_with(|| x.2.cmp(y.2))
    });

    let mut used_left = BTreeSet::new();
    let mut used_right = BTreeSet::new();
    let mut out = Alignment::new(&o1.id, &o2.id);
    for (confidence, role, a, b, provenance) in candidates {
        if used_left.contains(&(role, a)) || used_right.contains(&(role, b)) {
            continue;
        }
        used_left.insert((role, a));
        used_right.insert((role, b));
        let entity = |n: &str| if role { Entity::role(n) } else { Entity::concept(n) };
        out.push(Correspondence {
            left: entity(a),
            right: entity(b),
            relation: Relation::Equiv,
            confidence,
            provenance,
        });
    }
    out.cells.sort_by(|x, y| {
        (x.left.is_role(), &x.left, &x.right).cmp(&(y.left.is_role(), &y.left, &y.right))
    });
    Ok(out)
}

fn annotation_score(a: &[String], b: &[String], cfg: &MatcherConfig) -> Option<f64> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| name_similarity(x, y, cfg)))
        .max_by(f64::total_cmp)
}
