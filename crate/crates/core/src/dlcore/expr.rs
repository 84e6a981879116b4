use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Concept expression in the EL fragment extended with at-least restrictions.
///
/// Use the constructor functions ([`ConceptExpr::and`], [`ConceptExpr::exists`],
/// [`ConceptExpr::min_card`]) to keep expressions canonical: conjunctions are
/// flat, sorted and free of duplicates and `Top`, and `≥1 r.C` is stored as
/// `∃r.C`. Canonical expressions compare equal iff they are syntactically
/// the same up to conjunct order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ConceptExpr {
    Top,
    Atomic(String),
    And(Vec<ConceptExpr>),
    Exists {
        role: String,
        filler: Box<ConceptExpr>,
    },
    MinCard {
        n: u32,
        role: String,
        filler: Box<ConceptExpr>,
    },
}

impl ConceptExpr {
    pub fn atomic(name: impl Into<String>) -> Self {
        ConceptExpr::Atomic(name.into())
    }

    pub fn and(parts: impl IntoIterator<Item = ConceptExpr>) -> Self {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                ConceptExpr::Top => {}
                ConceptExpr::And(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        flat.sort();
        flat.dedup();
        match flat.len() {
            0 => ConceptExpr::Top,
            1 => flat.pop().unwrap(),
            _ => ConceptExpr::And(flat),
        }
    }

    pub fn exists(role: impl Into<String>, filler: ConceptExpr) -> Self {
        ConceptExpr::Exists {
            role: role.into(),
            filler: Box::new(filler),
        }
    }

    /// `≥n r.C`; `n = 0` is `Top` and `n = 1` is `∃r.C`.
    pub fn min_card(n: u32, role: impl Into<String>, filler: ConceptExpr) -> Self {
        match n {
            0 => ConceptExpr::Top,
            1 => ConceptExpr::exists(role, filler),
            _ => ConceptExpr::MinCard {
                n,
                role: role.into(),
                filler: Box::new(filler),
            },
        }
    }

    /// Rebuilds the expression through the canonical constructors.
    pub fn canonical(&self) -> ConceptExpr {
        match self {
            ConceptExpr::Top | ConceptExpr::Atomic(_) => self.clone(),
            ConceptExpr::And(parts) => ConceptExpr::and(parts.iter().map(|p| p.canonical())),
            ConceptExpr::Exists { role, filler } => ConceptExpr::exists(role.clone(), filler.canonical()),
            ConceptExpr::MinCard { n, role, filler } => ConceptExpr::min_card(*n, role.clone(), filler.canonical()),
        }
    }

    /// Top-level conjuncts; `Top` has none.
    pub fn conjuncts(&self) -> Vec<&ConceptExpr> {
        match self {
            ConceptExpr::Top => Vec::new(),
            ConceptExpr::And(parts) => parts.iter().collect(),
            other => vec![other],
        }
    }

    /// `(n, role, filler)` when this is an existential or at-least restriction.
    pub fn restriction(&self) -> Option<(u32, &str, &ConceptExpr)> {
        match self {
            ConceptExpr::Exists { role, filler } => Some((1, role, filler)),
            ConceptExpr::MinCard { n, role, filler } => Some((*n, role, filler)),
            _ => None,
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, ConceptExpr::Atomic(_))
    }

    pub fn as_atomic(&self) -> Option<&str> {
        match self {
            ConceptExpr::Atomic(a) => Some(a),
            _ => None,
        }
    }

    /// Atomic names occurring at top level.
    pub fn top_names(&self) -> BTreeSet<String> {
        self.conjuncts()
            .into_iter()
            .filter_map(|c| c.as_atomic().map(str::to_owned))
            .collect()
    }

    pub fn concept_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let ConceptExpr::Atomic(a) = e {
                out.insert(a.clone());
            }
        });
        out
    }

    pub fn role_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Some((_, r, _)) = e.restriction() {
                out.insert(r.to_owned());
            }
        });
        out
    }

    /// Nesting depth of role restrictions.
    pub fn depth(&self) -> usize {
        match self {
            ConceptExpr::Top | ConceptExpr::Atomic(_) => 0,
            ConceptExpr::And(parts) => parts.iter().map(|p| p.depth()).max().unwrap_or(0),
            ConceptExpr::Exists { filler, .. } | ConceptExpr::MinCard { filler, .. } => 1 + filler.depth(),
        }
    }

    /// Renames every concept and role name; the result is canonical.
    pub fn rename(&self, concept: &impl Fn(&str) -> String, role: &impl Fn(&str) -> String) -> ConceptExpr {
        match self {
            ConceptExpr::Top => ConceptExpr::Top,
            ConceptExpr::Atomic(a) => ConceptExpr::Atomic(concept(a)),
            ConceptExpr::And(parts) => ConceptExpr::and(parts.iter().map(|p| p.rename(concept, role))),
            ConceptExpr::Exists { role: r, filler } => ConceptExpr::exists(role(r), filler.rename(concept, role)),
            ConceptExpr::MinCard { n, role: r, filler } => {
                ConceptExpr::min_card(*n, role(r), filler.rename(concept, role))
            }
        }
    }

    fn visit(&self, f: &mut impl FnMut(&ConceptExpr)) {
        f(self);
        match self {
            ConceptExpr::And(parts) => parts.iter().for_each(|p| p.visit(f)),
            ConceptExpr::Exists { filler, .. } | ConceptExpr::MinCard { filler, .. } => filler.visit(f),
            _ => {}
        }
    }
}

impl fmt::Display for ConceptExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn filler(f: &mut fmt::Formatter<'_>, c: &ConceptExpr) -> fmt::Result {
            if matches!(c, ConceptExpr::And(_)) {
                write!(f, "({c})")
            } else {
                write!(f, "{c}")
            }
        }
        match self {
            ConceptExpr::Top => write!(f, "⊤"),
            ConceptExpr::Atomic(a) => write!(f, "{a}"),
            ConceptExpr::And(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ⊓ ")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
            ConceptExpr::Exists { role, filler: c } => {
                write!(f, "∃{role}.")?;
                filler(f, c)
            }
            ConceptExpr::MinCard { n, role, filler: c } => {
                write!(f, "≥{n} {role}.")?;
                filler(f, c)
            }
        }
    }
}
