use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::store::{Backend, ContainerRef, Record, SourceCatalog, Value, ValueKind};

use super::{InductionConfig, InductionError};

/// Which entries of a container induction looks at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SamplingStrategy {
    Full,
    /// The `top_n` most frequently accessed entry keys of an access log.
    FrequencyLog { path: PathBuf, top_n: usize },
    /// Scans everything and keeps the induction state for later updates.
    IncrementalHook,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Shape {
    Scalar,
    List,
    NestedMap,
}

/// Statistics about one key label (or nested key path) of a container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KeyProfile {
    pub key: String,
    pub key_path: Vec<String>,
    pub observed_kinds: BTreeSet<Shape>,
    /// Number of distinct scalar values (list elements counted one by one).
    pub distinct_values: usize,
    pub total_occurrences: usize,
    /// The distinct scalar values, sorted.
    pub value_sample: Vec<Value>,
    pub ref_target: Option<ContainerRef>,
    pub value_kinds: BTreeMap<ValueKind, usize>,
}

impl KeyProfile {
    fn new(key_path: Vec<String>) -> Self {
        KeyProfile {
            key: key_path.last().cloned().unwrap_or_default(),
            key_path,
            observed_kinds: BTreeSet::new(),
            distinct_values: 0,
            total_occurrences: 0,
            value_sample: Vec::new(),
            ref_target: None,
            value_kinds: BTreeMap::new(),
        }
    }

    pub fn is_nested(&self) -> bool {
        self.observed_kinds.contains(&Shape::NestedMap)
    }

    /// Majority value kind among scalar values; anything without a strict
    /// majority, or a majority of non-datatype kinds, reads as `Text`.
    pub fn datatype(&self) -> &'static str {
        let total: usize = self.value_kinds.values().sum();
        let winner = self.value_kinds.iter().find(|(_, &n)| 2 * n > total).map(|(k, _)| *k);
        match winner {
            Some(ValueKind::Number) => "Number",
            Some(ValueKind::Bool) => "Bool",
            _ => "Text",
        }
    }
}

/// Access counts per entry key, read from a log with one key per line.
pub(crate) fn read_log(path: &PathBuf) -> Result<BTreeMap<String, usize>, InductionError> {
    let text = fs::read_to_string(path).map_err(|e| InductionError::LogParse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut counts = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let key = line.trim();
        if key.is_empty() {
            continue;
        }
        if key.contains('\t') {
            return Err(InductionError::LogParse {
                path: path.display().to_string(),
                message: format!("line {} holds more than one key", n + 1),
            });
        }
        *counts.entry(key.to_owned()).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Keys of `entries` selected by the log: most accessed first, ties by key.
pub(crate) fn top_keys<'a>(
    entries: &'a BTreeMap<String, Record>,
    log: &BTreeMap<String, usize>,
    top_n: usize,
) -> BTreeSet<&'a str> {
    let mut ranked: Vec<(&'a str, usize)> = entries
        .keys()
        .filter_map(|k| log.get(k).map(|&n| (k.as_str(), n)))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked.into_iter().take(top_n).map(|(k, _)| k).collect()
}

pub(crate) enum Sample {
    All,
    Log(BTreeMap<String, usize>, usize),
}

impl Sample {
    pub(crate) fn of(strategy: &SamplingStrategy) -> Result<Sample, InductionError> {
        match strategy {
            SamplingStrategy::Full | SamplingStrategy::IncrementalHook => Ok(Sample::All),
            SamplingStrategy::FrequencyLog { path, top_n } => {
                if *top_n == 0 {
                    return Err(InductionError::LogParse {
                        path: path.display().to_string(),
                        message: "topN must be at least 1".into(),
                    });
                }
                Ok(Sample::Log(read_log(path)?, *top_n))
            }
        }
    }

    pub(crate) fn entries<'a>(&self, entries: &'a BTreeMap<String, Record>) -> Vec<(&'a String, &'a Record)> {
        match self {
            Sample::All => entries.iter().collect(),
            Sample::Log(log, top_n) => {
                let keep = top_keys(entries, log, *top_n);
                entries.iter().filter(|(k, _)| keep.contains(k.as_str())).collect()
            }
        }
    }
}

/// Profiles every key path observed in the sampled entries of `container`,
/// nested paths included, sorted by path.
pub fn profile_container(
    catalog: &SourceCatalog,
    container: &ContainerRef,
    strategy: &SamplingStrategy,
) -> Result<Vec<KeyProfile>, InductionError> {
    let entries = catalog.entries(container).map_err(|_| InductionError::UnknownContainer(container.to_string()))?;
    let sample = Sample::of(strategy)?;
    Ok(profile_records(sample.entries(entries).into_iter().map(|(_, r)| r)))
}

pub(crate) fn profile_records<'a>(records: impl IntoIterator<Item = &'a Record>) -> Vec<KeyProfile> {
    let mut acc: BTreeMap<Vec<String>, (KeyProfile, BTreeSet<Value>)> = BTreeMap::new();
    for record in records {
        walk(record, &mut Vec::new(), &mut acc);
    }
    acc.into_values()
        .map(|(mut p, distinct)| {
            p.distinct_values = distinct.len();
            p.value_sample = distinct.into_iter().collect();
            p
        })
        .collect()
}

fn walk(record: &Record, prefix: &mut Vec<String>, acc: &mut BTreeMap<Vec<String>, (KeyProfile, BTreeSet<Value>)>) {
    for (key, value) in record {
        prefix.push(key.clone());
        let mut nested = Vec::new();
        {
            let (profile, distinct) = acc
                .entry(prefix.clone())
                .or_insert_with(|| (KeyProfile::new(prefix.clone()), BTreeSet::new()));
            let mut scalar = |v: &Value, profile: &mut KeyProfile| {
                profile.total_occurrences += 1;
                *profile.value_kinds.entry(v.kind()).or_insert(0) += 1;
                distinct.insert(v.clone());
            };
            match value {
                Value::Null => {}
                Value::Map(m) => {
                    profile.observed_kinds.insert(Shape::NestedMap);
                    nested.push(m);
                }
                Value::List(items) => {
                    profile.observed_kinds.insert(Shape::List);
                    for item in items {
                        match item {
                            Value::Null => {}
                            Value::Map(m) => {
                                profile.observed_kinds.insert(Shape::NestedMap);
                                nested.push(m);
                            }
                            other => scalar(other, profile),
                        }
                    }
                }
                other => {
                    profile.observed_kinds.insert(Shape::Scalar);
                    scalar(other, profile);
                }
            }
        }
        for m in nested {
            walk(m, prefix, acc);
        }
        prefix.pop();
    }
}

/// Marks keys whose values identify entries of exactly one container of
/// `database`, for at least a fraction `threshold` of their distinct values.
pub fn detect_foreign_keys(
    mut profiles: Vec<KeyProfile>,
    catalog: &SourceCatalog,
    database: &str,
) -> Vec<KeyProfile> {
    if let Some(backend) = catalog.backend(database) {
        mark_foreign_keys(&mut profiles, backend, InductionConfig::default().fk_threshold);
    }
    profiles
}

pub(crate) fn mark_foreign_keys(profiles: &mut [KeyProfile], backend: &dyn Backend, threshold: f64) {
    for p in profiles.iter_mut() {
        p.ref_target = None;
        let texts: Vec<&str> = p.value_sample.iter().filter_map(Value::as_text).collect();
        if texts.is_empty() || texts.len() < p.value_sample.len() {
            continue;
        }
        let candidates: Vec<&String> = backend
            .containers()
            .iter()
            .filter(|(_, entries)| {
                let hits = texts.iter().filter(|t| entries.contains_key(**t)).count();
                hits as f64 >= threshold * texts.len() as f64
            })
            .map(|(name, _)| name)
            .collect();
        if let [target] = candidates.as_slice() {
            p.ref_target = Some(ContainerRef::new(backend.name(), target.as_str(), backend.kind()));
        }
    }
}

/// Keys behaving like a type-definition pattern: no foreign key, text
/// values only, a small value range, and values that repeat.
pub fn detect_type_keys(profiles: &[KeyProfile]) -> Vec<String> {
    detect_type_keys_with(profiles, &InductionConfig::default())
}

pub fn detect_type_keys_with(profiles: &[KeyProfile], cfg: &InductionConfig) -> Vec<String> {
    profiles
        .iter()
        .filter(|p| is_type_key(p, cfg))
        .map(|p| p.key.clone())
        .collect()
}

pub(crate) fn is_type_key(p: &KeyProfile, cfg: &InductionConfig) -> bool {
    let text_only = !p.is_nested() && p.distinct_values > 0 && p.value_kinds.keys().all(|k| *k == ValueKind::Text);
    let limit = (cfg.type_max_distinct as f64).max(cfg.type_ratio * p.total_occurrences as f64);
    p.ref_target.is_none()
        && text_only
        && p.distinct_values as f64 <= limit
        && p.total_occurrences as f64 >= cfg.type_min_repetition * p.distinct_values as f64
}
