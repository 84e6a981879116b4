//! Induction of a local ontology, plus entity-to-source mappings, from
//! one schemaless database.
//!
//! Every container becomes a concept and every key label a role. Keys whose
//! values identify entries of another container become object roles; keys
//! behaving like a type-definition pattern contribute one concept per value,
//! arranged by the concept lattice of the value co-occurrences; embedded maps
//! are reified as concepts of their own. Type-value concepts are finally
//! enriched with the least common subsumer of their instances' most specific
//! concepts.

mod mapping;
mod profile;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::dlcore::{self, ABox, Axiom, ConceptExpr, Filler, Ontology, Reasoner, Role};
use crate::fca::{self, FormalContext};
use crate::store::{Backend, ColumnStore, ContainerRef, DocumentDatabase, Record, SourceCatalog, StoreError, Value};

pub use mapping::{Mapping, MappingKind, MappingSet, Target};
pub use profile::{
    detect_foreign_keys, detect_type_keys, detect_type_keys_with, profile_container, KeyProfile, SamplingStrategy, Shape,
};

use profile::{is_type_key, mark_foreign_keys, profile_records, Sample};

#[derive(Debug, Error)]
pub enum InductionError {
    #[error("unknown database `{0}`")]
    UnknownDatabase(String),
    #[error("unknown container `{0}`")]
    UnknownContainer(String),
    #[error("cannot use access log {path}: {message}")]
    LogParse { path: String, message: String },
    #[error("malformed mapping file: {0}")]
    MappingParse(String),
    #[error("mappings do not match the ontology: {0}")]
    MappingMismatch(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Thresholds and bounds of the induction heuristics.
#[derive(Debug, Clone, PartialEq)]
pub struct InductionConfig {
    /// Fraction of a key's values that must be identifiers of one container.
    pub fk_threshold: f64,
    /// A type key has at most `max(type_max_distinct, type_ratio * occurrences)`
    /// distinct values ...
    pub type_max_distinct: usize,
    pub type_ratio: f64,
    /// ... and at least this many occurrences per distinct value.
    pub type_min_repetition: f64,
    pub msc_depth: usize,
    /// Instances per type concept fed to enrichment.
    pub enrichment_sample: usize,
    /// Objects per formal context; entries beyond it are left out.
    pub max_context_objects: usize,
    pub enrich: bool,
}

impl Default for InductionConfig {
    fn default() -> Self {
        InductionConfig {
            fk_threshold: 0.8,
            type_max_distinct: 12,
            type_ratio: 0.05,
            type_min_repetition: 2.0,
            msc_depth: dlcore::DEFAULT_MSC_DEPTH,
            enrichment_sample: 20,
            max_context_objects: 10_000,
            enrich: true,
        }
    }
}

/// The database an induction ran over, kept for incremental updates.
#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    Documents(DocumentDatabase),
    Columns(ColumnStore),
}

impl Snapshot {
    fn of(backend: &dyn Backend, catalog: &SourceCatalog) -> Snapshot {
        let name = backend.name();
        match catalog.document_dbs().iter().find(|d| d.name == name) {
            Some(d) => Snapshot::Documents(d.clone()),
            None => Snapshot::Columns(
                catalog
                    .column_stores()
                    .iter()
                    .find(|c| c.keyspace == name)
                    .cloned()
                    .expect("backend comes from the catalog"),
            ),
        }
    }

    pub fn backend(&self) -> &dyn Backend {
        match self {
            Snapshot::Documents(d) => d,
            Snapshot::Columns(c) => c,
        }
    }

    fn insert(&mut self, container: &str, key: &str, entry: Record) -> Result<(), StoreError> {
        match self {
            Snapshot::Documents(d) => {
                d.insert(container, key, entry);
                Ok(())
            }
            Snapshot::Columns(c) => c.insert(container, key, entry),
        }
    }
}

/// Everything an induction run produced.
#[derive(Debug, Clone)]
pub struct InductionState {
    pub ontology: Ontology,
    pub mappings: MappingSet,
    /// Key profiles per container name.
    pub profiles: BTreeMap<String, Vec<KeyProfile>>,
    pub abox: ABox,
    pub snapshot: Snapshot,
    pub strategy: SamplingStrategy,
    pub config: InductionConfig,
}

/// What an incremental update added or changed.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ChangeReport {
    pub added_concepts: Vec<String>,
    pub added_roles: Vec<String>,
    pub added_axioms: Vec<Axiom>,
    pub removed_axioms: Vec<Axiom>,
}

impl ChangeReport {
    pub fn is_empty(&self) -> bool {
        self.added_concepts.is_empty()
            && self.added_roles.is_empty()
            && self.added_axioms.is_empty()
            && self.removed_axioms.is_empty()
    }
}

/// Induces the ontology of `database` with default thresholds. The
/// ontology id is the database name.
pub fn induce_local(
    catalog: &SourceCatalog,
    database: &str,
    strategy: &SamplingStrategy,
) -> Result<(Ontology, MappingSet), InductionError> {
    let state = induce(catalog, database, strategy, &InductionConfig::default())?;
    Ok((state.ontology, state.mappings))
}

pub fn induce(
    catalog: &SourceCatalog,
    database: &str,
    strategy: &SamplingStrategy,
    cfg: &InductionConfig,
) -> Result<InductionState, InductionError> {
    let backend = catalog
        .backend(database)
        .ok_or_else(|| InductionError::UnknownDatabase(database.to_owned()))?;
    induce_snapshot(Snapshot::of(backend, catalog), strategy, cfg)
}

fn induce_snapshot(
    snapshot: Snapshot,
    strategy: &SamplingStrategy,
    cfg: &InductionConfig,
) -> Result<InductionState, InductionError> {
    let sample = Sample::of(strategy)?;
    let built = Builder::run(snapshot.backend(), &sample, cfg);
    Ok(InductionState {
        ontology: built.onto,
        mappings: built.mappings,
        profiles: built.profiles,
        abox: built.abox,
        snapshot,
        strategy: strategy.clone(),
        config: cfg.clone(),
    })
}

/// Inserts (or replaces) one entry and re-induces when it brings a new key
/// label or type value. Entries using only known labels and values leave
/// the ontology untouched and yield an empty report.
pub fn incremental_update(
    state: &mut InductionState,
    container: &ContainerRef,
    key: &str,
    entry: Record,
) -> Result<ChangeReport, InductionError> {
    let backend = state.snapshot.backend();
    if container.database != backend.name() || backend.entries(&container.container).is_none() {
        return Err(InductionError::UnknownContainer(container.to_string()));
    }
    let novel = brings_novelty(state, &container.container, &entry);
    state.snapshot.insert(&container.container, key, entry)?;
    if !novel {
        return Ok(ChangeReport::default());
    }
    let id = state.ontology.id.clone();
    let mut next = induce_snapshot(state.snapshot.clone(), &state.strategy, &state.config)?;
    next.ontology.id = id;
    let old = &state.ontology;
    let new = &next.ontology;
    let report = ChangeReport {
        added_concepts: new.concepts.difference(&old.concepts).cloned().collect(),
        added_roles: new.roles.keys().filter(|r| !old.roles.contains_key(*r)).cloned().collect(),
        added_axioms: new.axioms.iter().filter(|a| !old.axioms.contains(a)).cloned().collect(),
        removed_axioms: old.axioms.iter().filter(|a| !new.axioms.contains(a)).cloned().collect(),
    };
    *state = next;
    Ok(report)
}

fn brings_novelty(state: &InductionState, container: &str, entry: &Record) -> bool {
    let known: BTreeSet<&Vec<String>> = state
        .profiles
        .get(container)
        .into_iter()
        .flatten()
        .map(|p| &p.key_path)
        .collect();
    let fresh = profile_records([entry]);
    if fresh.iter().any(|p| !known.contains(&p.key_path)) {
        return true;
    }
    let typed: BTreeMap<&str, BTreeSet<&str>> = state
        .mappings
        .entries
        .iter()
        .filter(|m| m.kind == MappingKind::ConceptToTypeValue && m.container == container)
        .filter_map(|m| Some((m.top_key()?, m)))
        .fold(BTreeMap::new(), |mut acc, (k, m)| {
            acc.entry(k).or_default().extend(m.values.iter().map(String::as_str));
            acc
        });
    typed.iter().any(|(k, values)| {
        entry
            .get(*k)
            .into_iter()
            .flat_map(Value::elements)
            .filter_map(Value::as_text)
            .any(|v| !values.contains(v))
    })
}

struct Builder<'a> {
    backend: &'a dyn Backend,
    cfg: &'a InductionConfig,
    onto: Ontology,
    mappings: MappingSet,
    profiles: BTreeMap<String, Vec<KeyProfile>>,
    abox: ABox,
    /// Key labels to the concepts whose entries carry them.
    label_owners: BTreeMap<String, BTreeSet<String>>,
    /// Concept of each (container, key path) reified as nested concept.
    nested: BTreeMap<(String, Vec<String>), String>,
    /// Role of each (container, key path).
    roles: BTreeMap<(String, Vec<String>), String>,
    /// Concept of each (container, type key, value).
    type_values: BTreeMap<(String, String, String), String>,
    /// Attribute concepts of each type lattice with their sampled instances.
    type_instances: Vec<(String, Vec<String>)>,
}

impl<'a> Builder<'a> {
    fn run(backend: &'a dyn Backend, sample: &Sample, cfg: &'a InductionConfig) -> Builder<'a> {
        let mut b = Builder {
            backend,
            cfg,
            onto: Ontology::new(backend.name()),
            mappings: MappingSet::default(),
            profiles: BTreeMap::new(),
            abox: ABox::default(),
            label_owners: BTreeMap::new(),
            nested: BTreeMap::new(),
            roles: BTreeMap::new(),
            type_values: BTreeMap::new(),
            type_instances: Vec::new(),
        };
        for (name, entries) in backend.containers() {
            for record in entries.values() {
                collect_labels(name, record, &mut b.label_owners);
            }
        }
        let containers: Vec<String> = backend.containers().keys().cloned().collect();
        for name in &containers {
            b.onto.add_concept(name.as_str());
            b.mappings
                .push(Mapping::new(name, MappingKind::ConceptToContainer, &b.container_ref(name), Vec::new()));
        }
        let mut samples = BTreeMap::new();
        for name in &containers {
            let entries = sample.entries(&backend.containers()[name]);
            let mut profiles = profile_records(entries.iter().map(|(_, r)| *r));
            mark_foreign_keys(&mut profiles, backend, cfg.fk_threshold);
            b.add_roles(name, &profiles);
            b.profiles.insert(name.clone(), profiles);
            samples.insert(name.clone(), entries);
        }
        for name in &containers {
            b.add_type_concepts(name, &samples[name]);
        }
        for name in &containers {
            for (key, record) in &samples[name] {
                b.assert_entry(name, key, record);
            }
        }
        if cfg.enrich {
            b.enrich();
        }
        b
    }

    fn container_ref(&self, name: &str) -> ContainerRef {
        ContainerRef::new(self.backend.name(), name, self.backend.kind())
    }

    fn fresh_concept(&self, base: String) -> String {
        if !self.onto.concepts.contains(&base) {
            return base;
        }
        (2..).map(|i| format!("{base}_{i}")).find(|c| !self.onto.concepts.contains(c)).unwrap()
    }

    fn role_name(&self, domain: &str, label: &str) -> String {
        let owners = self.label_owners.get(label).map_or(0, BTreeSet::len);
        let base = if owners <= 1 { label.to_owned() } else { format!("{domain}_{label}") };
        if !self.onto.roles.contains_key(&base) {
            return base;
        }
        (2..).map(|i| format!("{base}_{i}")).find(|r| !self.onto.roles.contains_key(r)).unwrap()
    }

    fn domain_of(&self, container: &str, path: &[String]) -> String {
        match path.split_last() {
            Some((_, [])) | None => container.to_owned(),
            Some((_, parent)) => self.nested[&(container.to_owned(), parent.to_vec())].clone(),
        }
    }

    fn add_roles(&mut self, container: &str, profiles: &[KeyProfile]) {
        let source = self.container_ref(container);
        for p in profiles {
            let domain = self.domain_of(container, &p.key_path);
            let name = self.role_name(&domain, &p.key);
            let mut mapping;
            let role;
            if p.is_nested() {
                let concept = self.fresh_concept(format!("{container}_{}", p.key_path.join("_")));
                self.onto.add_concept(concept.as_str());
                self.mappings.push(Mapping::new(
                    &concept,
                    MappingKind::ConceptToNestedPath,
                    &source,
                    p.key_path.clone(),
                ));
                self.nested.insert((container.to_owned(), p.key_path.clone()), concept.clone());
                role = Role::object(name.as_str(), domain, concept);
                mapping = Mapping::new(&name, MappingKind::ObjectRoleToNestedPath, &source, p.key_path.clone());
            } else if let Some(target) = &p.ref_target {
                role = Role::object(name.as_str(), domain, target.container.as_str());
                mapping = Mapping::new(&name, MappingKind::ObjectRoleToKey, &source, p.key_path.clone());
                mapping.target = Some(Target {
                    database: target.database.clone(),
                    container: target.container.clone(),
                });
            } else {
                role = Role::datatype(name.as_str(), domain, p.datatype());
                mapping = Mapping::new(&name, MappingKind::DatatypeRoleToKey, &source, p.key_path.clone());
            }
            self.onto.add_role(role);
            self.mappings.push(mapping);
            self.roles.insert((container.to_owned(), p.key_path.clone()), name);
        }
    }

    fn add_type_concepts(&mut self, container: &str, entries: &[(&String, &Record)]) {
        let source = self.container_ref(container);
        let type_keys: Vec<String> = self.profiles[container]
            .iter()
            .filter(|p| p.key_path.len() == 1 && is_type_key(p, self.cfg))
            .map(|p| p.key.clone())
            .collect();
        for key in type_keys {
            let values: BTreeSet<String> = self.profiles[container]
                .iter()
                .find(|p| p.key_path == [key.clone()])
                .map(|p| p.value_sample.iter().filter_map(Value::as_text).map(str::to_owned).collect())
                .unwrap_or_default();
            let mut concept_of = BTreeMap::new();
            for v in &values {
                let concept = self.fresh_concept(type_concept_name(container, v, &self.onto));
                self.onto.add_concept(concept.as_str());
                self.onto.add_axiom(Axiom::sub_class(concept.as_str(), container));
                let mut m = Mapping::new(&concept, MappingKind::ConceptToTypeValue, &source, vec![key.clone()]);
                m.values = vec![v.clone()];
                self.mappings.push(m);
                self.type_values
                    .insert((container.to_owned(), key.clone(), v.clone()), concept.clone());
                concept_of.insert(v.clone(), concept);
            }
            // attributes in concept-name order so joined names are canonical
            let mut attributes: Vec<(String, String)> = concept_of.iter().map(|(v, c)| (c.clone(), v.clone())).collect();
            attributes.sort();
            let column: BTreeMap<&str, usize> =
                attributes.iter().enumerate().map(|(i, (_, v))| (v.as_str(), i)).collect();
            let typed: Vec<(&String, BTreeSet<usize>)> = entries
                .iter()
                .map(|(k, r)| {
                    let row: BTreeSet<usize> = r
                        .get(&key)
                        .into_iter()
                        .flat_map(Value::elements)
                        .filter_map(|v| v.as_text().and_then(|t| column.get(t).copied()))
                        .collect();
                    (*k, row)
                })
                .filter(|(_, row)| !row.is_empty())
                .take(self.cfg.max_context_objects)
                .collect();
            let mut ctx = FormalContext::new(
                typed.iter().map(|(k, _)| (*k).clone()).collect(),
                attributes.iter().map(|(c, _)| c.clone()).collect(),
            );
            for (g, (_, row)) in typed.iter().enumerate() {
                for &m in row {
                    ctx.set(g, m);
                }
            }
            let lat = fca::build_lattice(&ctx);
            for i in 0..lat.nodes.len() {
                let introduced = lat.introduced_attributes(i);
                if introduced.len() > 1 {
                    let joined = fca::node_name(&lat, i).expect("named node");
                    if !self.onto.concepts.contains(&joined) {
                        self.onto.add_concept(joined.as_str());
                        self.onto.add_axiom(Axiom::sub_class(joined.as_str(), container));
                        let mut m = Mapping::new(&joined, MappingKind::ConceptToTypeValue, &source, vec![key.clone()]);
                        m.values = introduced.iter().map(|&a| attributes[a].1.clone()).collect();
                        m.values.sort();
                        self.mappings.push(m);
                    }
                }
                if !introduced.is_empty() {
                    let instances: Vec<String> = lat.nodes[i]
                        .extent
                        .iter()
                        .map(|&g| individual(container, &ctx.objects[g]))
                        .collect();
                    for &a in &introduced {
                        self.type_instances.push((attributes[a].0.clone(), instances.clone()));
                    }
                }
            }
            for ax in fca::lattice_to_axioms(&lat, &ctx) {
                self.onto.add_axiom(ax);
            }
        }
    }

    fn assert_entry(&mut self, container: &str, key: &str, record: &Record) {
        let me = individual(container, key);
        self.abox.assert_type(&me, container);
        for ((c, k, v), concept) in &self.type_values {
            let holds = c == container
                && record
                    .get(k)
                    .into_iter()
                    .flat_map(Value::elements)
                    .any(|e| e.as_text() == Some(v.as_str()));
            if holds {
                self.abox.assert_type(&me, concept);
            }
        }
        self.assert_fields(container, &me, record, &mut Vec::new());
    }

    fn assert_fields(&mut self, container: &str, me: &str, record: &Record, path: &mut Vec<String>) {
        for (label, value) in record {
            path.push(label.clone());
            let Some(role) = self.roles.get(&(container.to_owned(), path.clone())).cloned() else {
                path.pop();
                continue;
            };
            let target = self
                .mappings
                .get(&role)
                .and_then(|m| m.target.clone())
                .map(|t| t.container);
            let nested = self.nested.get(&(container.to_owned(), path.clone())).cloned();
            let items: Vec<&Value> = match value {
                Value::List(items) => items.iter().collect(),
                Value::Null => Vec::new(),
                other => vec![other],
            };
            for (i, item) in items.into_iter().enumerate() {
                match (item, &nested, &target) {
                    (Value::Null, _, _) => {}
                    (Value::Map(m), Some(concept), _) => {
                        let child = format!("{me}/{}[{i}]", path.join("."));
                        self.abox.assert_type(&child, concept);
                        self.abox.assert_role(me, &role, Filler::Individual(child.clone()));
                        self.assert_fields(container, &child, m, path);
                    }
                    (Value::Text(id), _, Some(t)) if self.backend.entries(t).is_some_and(|e| e.contains_key(id)) => {
                        self.abox.assert_role(me, &role, Filler::Individual(individual(t, id)));
                    }
                    (other, _, _) => self.abox.assert_role(me, &role, Filler::Literal(other.clone())),
                }
            }
            path.pop();
        }
    }

    fn enrich(&mut self) {
        let reasoner = Reasoner::new(&self.onto);
        let mut candidates = Vec::new();
        for (concept, instances) in &self.type_instances {
            let mscs: Vec<ConceptExpr> = instances
                .iter()
                .take(self.cfg.enrichment_sample)
                .map(|ind| dlcore::services::msc_with(&reasoner, &self.abox, ind, self.cfg.msc_depth))
                .collect();
            if let Ok(common) = dlcore::services::lcs_with(&reasoner, &mscs) {
                candidates.push((ConceptExpr::atomic(concept.as_str()), common));
            }
        }
        // keep only what neither the hierarchy nor the other enrichments imply
        let mut additions = Vec::new();
        for (i, (own, common)) in candidates.iter().enumerate() {
            let mut others = self.onto.clone();
            for (j, (sub, sup)) in candidates.iter().enumerate() {
                if i != j {
                    others.add_axiom(Axiom::SubClassOf {
                        sub: sub.clone(),
                        sup: sup.clone(),
                    });
                }
            }
            let context = Reasoner::new(&others);
            let extra: Vec<ConceptExpr> = common
                .conjuncts()
                .into_iter()
                .filter(|c| !context.subsumes(c, own))
                .cloned()
                .collect();
            if !extra.is_empty() {
                additions.push(Axiom::SubClassOf {
                    sub: own.clone(),
                    sup: ConceptExpr::and(extra),
                });
            }
        }
        for ax in additions {
            self.onto.add_axiom(ax);
        }
    }
}

fn individual(container: &str, key: &str) -> String {
    format!("{container}/{key}")
}

fn collect_labels(owner: &str, record: &Record, out: &mut BTreeMap<String, BTreeSet<String>>) {
    for (label, value) in record {
        out.entry(label.clone()).or_default().insert(owner.to_owned());
        let child = format!("{owner}_{label}");
        let maps: Vec<&Record> = match value {
            Value::Map(m) => vec![m],
            Value::List(items) => items.iter().filter_map(Value::as_map).collect(),
            _ => Vec::new(),
        };
        for m in maps {
            collect_labels(&child, m, out);
        }
    }
}

/// The value itself when it is a usable name not yet taken, else the value
/// qualified by its container.
fn type_concept_name(container: &str, value: &str, onto: &Ontology) -> String {
    let clean: String = value
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    let usable = clean.chars().next().is_some_and(char::is_alphabetic);
    if usable && !onto.concepts.contains(&clean) {
        clean
    } else {
        format!("{container}_{clean}")
    }
}
