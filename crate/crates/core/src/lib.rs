//! Ontology-based integration of schemaless document and column-family
//! stores.
//!
//! The pipeline induces a local ontology per store ([`induction`]), aligns
//! local ontologies ([`alignment`]), merges them into a networked global
//! ontology ([`globalont`]) and answers SPARQL queries over it
//! ([`queryfront`]) by compiling them into per-source Bridge Query Language
//! programs ([`bql`]) that run against the in-memory stores ([`store`]).

pub mod alignment;
pub mod bql;
pub mod cli;
pub mod dlcore;
pub mod fca;
pub mod globalont;
pub mod induction;
pub mod queryfront;
pub mod store;

#[cfg(test)]
pub(crate) mod testutil {
    use std::collections::BTreeMap;
    use std::path::PathBuf;

    use crate::alignment::{align_simple, saturate, MatcherConfig};
    use crate::globalont::{build_global, GlobalOntology};
    use crate::induction::{induce_local, SamplingStrategy};
    use crate::store::SourceCatalog;

    pub fn fixture(name: &str) -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/conference").join(name)
    }

    pub fn conference() -> SourceCatalog {
        SourceCatalog::load(fixture("catalog.json")).expect("conference fixtures load")
    }

    /// Both conference stores induced, aligned and merged.
    pub fn conference_global() -> GlobalOntology {
        let cat = conference();
        let (doc, doc_maps) = induce_local(&cat, "docDB", &SamplingStrategy::Full).unwrap();
        let (col, col_maps) = induce_local(&cat, "colDB", &SamplingStrategy::Full).unwrap();
        let a = align_simple(&saturate(&doc), &saturate(&col), &MatcherConfig::default()).unwrap();
        let maps = BTreeMap::from([("docDB".to_owned(), doc_maps), ("colDB".to_owned(), col_maps)]);
        build_global(vec![doc, col], vec![a], maps).unwrap()
    }
}
