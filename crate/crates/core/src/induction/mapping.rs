use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dlcore::Ontology;
use crate::store::{ContainerRef, SourceCatalog, StoreError};

use super::InductionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MappingKind {
    ConceptToContainer,
    /// Entries whose type key holds every listed value.
    ConceptToTypeValue,
    /// Maps embedded at `keyPath` inside the container's entries.
    ConceptToNestedPath,
    DatatypeRoleToKey,
    /// Identifier values pointing at entries of `target`.
    ObjectRoleToKey,
    /// Link from an entry to the maps embedded at `keyPath`.
    ObjectRoleToNestedPath,
}

impl MappingKind {
    pub fn is_concept(self) -> bool {
        matches!(
            self,
            MappingKind::ConceptToContainer | MappingKind::ConceptToTypeValue | MappingKind::ConceptToNestedPath
        )
    }
}

/// A container addressed by name only; the kind is looked up in the catalog.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Target {
    pub database: String,
    pub container: String,
}

/// Binds one ontology entity to the part of a store it was induced from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Mapping {
    pub entity: String,
    pub kind: MappingKind,
    pub database: String,
    pub container: String,
    #[serde(default)]
    pub key_path: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Target>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<String>,
}

impl Mapping {
    pub(crate) fn new(entity: &str, kind: MappingKind, source: &ContainerRef, key_path: Vec<String>) -> Self {
        Mapping {
            entity: entity.to_owned(),
            kind,
            database: source.database.clone(),
            container: source.container.clone(),
            key_path,
            target: None,
            values: Vec::new(),
        }
    }

    pub fn source(&self, catalog: &SourceCatalog) -> Result<ContainerRef, StoreError> {
        catalog.resolve(&self.database, &self.container)
    }

    pub fn target_ref(&self, catalog: &SourceCatalog) -> Option<Result<ContainerRef, StoreError>> {
        self.target.as_ref().map(|t| catalog.resolve(&t.database, &t.container))
    }

    /// The single key a role reads, if it reads a top-level key.
    pub fn top_key(&self) -> Option<&str> {
        match self.key_path.as_slice() {
            [k] => Some(k),
            _ => None,
        }
    }
}

/// Mappings of one induced ontology, one per concept and role.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MappingSet {
    pub entries: Vec<Mapping>,
}

impl MappingSet {
    pub fn get(&self, entity: &str) -> Option<&Mapping> {
        self.entries.iter().find(|m| m.entity == entity)
    }

    pub fn push(&mut self, mapping: Mapping) {
        self.entries.push(mapping);
    }

    pub fn from_json(text: &str) -> Result<Self, InductionError> {
        serde_json::from_str(text).map_err(|e| InductionError::MappingParse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mappings serialize")
    }

    /// Checks that concepts and roles of `onto` and the mapped entities are
    /// in one-to-one correspondence, with matching entity classes.
    pub fn check_bijection(&self, onto: &Ontology) -> Result<(), InductionError> {
        let mut seen: BTreeMap<&str, &Mapping> = BTreeMap::new();
        for m in &self.entries {
            if seen.insert(&m.entity, m).is_some() {
                return Err(InductionError::MappingMismatch(format!("`{}` is mapped twice", m.entity)));
            }
            let declared = if m.kind.is_concept() {
                onto.concepts.contains(&m.entity)
            } else {
                onto.roles.contains_key(&m.entity)
            };
            if !declared {
                return Err(InductionError::MappingMismatch(format!("`{}` is not in the ontology", m.entity)));
            }
            if m.kind == MappingKind::ObjectRoleToKey && m.target.is_none() {
                return Err(InductionError::MappingMismatch(format!("`{}` has no target", m.entity)));
            }
        }
        let unmapped = onto
            .concepts
            .iter()
            .chain(onto.roles.keys())
            .find(|e| !seen.contains_key(e.as_str()));
        match unmapped {
            Some(e) => Err(InductionError::MappingMismatch(format!("`{e}` has no mapping"))),
            None => Ok(()),
        }
    }
}
