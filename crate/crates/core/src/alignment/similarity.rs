use std::collections::{BTreeMap, BTreeSet};

use super::AlignmentError;

/// Lower-cased word tokens of a label: camelCase humps, digit runs and
/// punctuation all split words.
pub fn tokens(label: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    let chars: Vec<char> = label.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if !c.is_alphanumeric() {
            flush(&mut word, &mut out);
            continue;
        }
        if let Some(&prev) = i.checked_sub(1).and_then(|j| chars.get(j)) {
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            let boundary = (c.is_uppercase() && (prev.is_lowercase() || prev.is_ascii_digit()))
                || (c.is_uppercase() && prev.is_uppercase() && next_lower)
                || (c.is_ascii_digit() != prev.is_ascii_digit() && prev.is_alphanumeric());
            if boundary {
                flush(&mut word, &mut out);
            }
        }
        word.extend(c.to_lowercase());
    }
    flush(&mut word, &mut out);
    out
}

fn flush(word: &mut String, out: &mut Vec<String>) {
    if !word.is_empty() {
        out.push(std::mem::take(word));
    }
}

/// The tokens of `label` joined without separators.
pub fn normalize(label: &str) -> String {
    tokens(label).concat()
}

/// Crude suffix stripping: `submitted` and `submits` both become `submit`.
pub fn stem(word: &str) -> String {
    let mut w = word.to_owned();
    for suffix in ["ing", "ed", "es", "s"] {
        if w.len() > suffix.len() + 2 && w.ends_with(suffix) && !w.ends_with("ss") {
            w.truncate(w.len() - suffix.len());
            break;
        }
    }
    let b = w.as_bytes();
    if b.len() > 3 && b[b.len() - 1] == b[b.len() - 2] && !b"aeiou".contains(&b[b.len() - 1]) {
        w.pop();
    }
    w
}

/// Symmetric synonym relation over normalized terms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynonymTable {
    links: BTreeMap<String, BTreeSet<String>>,
}

impl SynonymTable {
    /// Reads `term<TAB>synonym` lines; blank lines and `#` comments are skipped.
    pub fn from_tsv(text: &str) -> Result<Self, AlignmentError> {
        let mut table = SynonymTable::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            match (cols.next(), cols.next(), cols.next()) {
                (Some(a), Some(b), None) if !a.trim().is_empty() && !b.trim().is_empty() => table.add(a, b),
                _ => {
                    return Err(AlignmentError::Synonyms {
                        line: n + 1,
                        message: "expected `term<TAB>synonym`".into(),
                    })
                }
            }
        }
        Ok(table)
    }

    pub fn add(&mut self, a: &str, b: &str) {
        let (a, b) = (normalize(a), normalize(b));
        self.links.entry(a.clone()).or_default().insert(b.clone());
        self.links.entry(b).or_default().insert(a);
    }

    pub fn linked(&self, a: &str, b: &str) -> bool {
        self.links.get(a).is_some_and(|s| s.contains(b))
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }
}

/// Matcher settings: synonym table, acceptance threshold and the weights of
/// the lexical, structural and annotation matchers.
#[derive(Debug, Clone, PartialEq)]
pub struct MatcherConfig {
    pub synonyms: SynonymTable,
    pub threshold: f64,
    pub lexical_weight: f64,
    pub structural_weight: f64,
    pub annotation_weight: f64,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        MatcherConfig {
            synonyms: SynonymTable::default(),
            threshold: 0.85,
            lexical_weight: 0.6,
            structural_weight: 0.2,
            annotation_weight: 0.2,
        }
    }
}

impl MatcherConfig {
    pub fn with_synonyms(synonyms: SynonymTable) -> Self {
        MatcherConfig {
            synonyms,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), AlignmentError> {
        let weights = [self.lexical_weight, self.structural_weight, self.annotation_weight];
        let in_range = |x: f64| (0.0..=1.0).contains(&x);
        if !in_range(self.threshold) || !weights.iter().all(|w| in_range(*w)) {
            return Err(AlignmentError::InvalidConfig("threshold and weights must lie in [0, 1]".into()));
        }
        if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(AlignmentError::InvalidConfig("weights must sum to 1".into()));
        }
        Ok(())
    }
}

/// Label similarity in `[0, 1]`: 1 for equal normalized forms or synonyms
/// (as a whole or token by token), normalized Levenshtein similarity of the
/// normalized forms otherwise.
pub fn name_similarity(a: &str, b: &str, cfg: &MatcherConfig) -> f64 {
    let (ta, tb) = (tokens(a), tokens(b));
    let (ja, jb) = (ta.concat(), tb.concat());
    if ja == jb || cfg.synonyms.linked(&ja, &jb) {
        return 1.0;
    }
    let tokenwise = ta.len() == tb.len()
        && ta
            .iter()
            .zip(&tb)
            .all(|(x, y)| x == y || cfg.synonyms.linked(x, y));
    if tokenwise {
        return 1.0;
    }
    strsim::normalized_levenshtein(&ja, &jb)
}

/// Similarity between a concept label and a role label: the plain label
/// similarity, or 1 when every stemmed token of the role occurs among the
/// stemmed tokens of the concept.
pub fn concept_role_similarity(concept: &str, role: &str, cfg: &MatcherConfig) -> f64 {
    let stems = |s: &str| tokens(s).iter().map(|t| stem(t)).collect::<BTreeSet<_>>();
    let (c, r) = (stems(concept), stems(role));
    if !r.is_empty() && r.is_subset(&c) {
        return 1.0;
    }
    name_similarity(concept, role, cfg)
}
