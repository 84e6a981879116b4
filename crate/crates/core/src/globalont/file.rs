use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::alignment::Alignment;
use crate::dlcore::Ontology;
use crate::induction::MappingSet;

use super::{build_global, EntityKind, GlobalError, GlobalOntology};

/// Files a global ontology was built from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceFiles {
    pub ontologies: BTreeMap<String, PathBuf>,
    pub alignments: Vec<PathBuf>,
    pub mappings: BTreeMap<String, PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRef {
    pub id: String,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRow {
    pub name: String,
    pub kind: EntityKind,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossEdge {
    pub sub: String,
    pub sup: String,
}

/// On-disk form: references to the input files plus the class table and
/// cross edges computed from them. Paths are relative to the file itself
/// when they lie below its directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GlobalFile {
    pub ontologies: Vec<FileRef>,
    pub alignments: Vec<String>,
    pub mappings: Vec<FileRef>,
    pub classes: Vec<ClassRow>,
    pub cross_edges: Vec<CrossEdge>,
}

impl GlobalFile {
    pub fn new(go: &GlobalOntology, files: &SourceFiles, out_dir: &Path) -> Self {
        let rel = |p: &PathBuf| relative(p, out_dir);
        let refs = |m: &BTreeMap<String, PathBuf>| {
            m.iter()
                .map(|(id, p)| FileRef {
                    id: id.clone(),
                    path: rel(p),
                })
                .collect()
        };
        let mut alignments: Vec<String> = files.alignments.iter().map(rel).collect();
        alignments.sort();
        GlobalFile {
            ontologies: refs(&files.ontologies),
            alignments,
            mappings: refs(&files.mappings),
            classes: class_rows(go),
            cross_edges: go
                .cross_edges()
                .into_iter()
                .map(|(sub, sup)| CrossEdge {
                    sub: sub.to_owned(),
                    sup: sup.to_owned(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("global file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GlobalError> {
        serde_json::from_str(text).map_err(|e| GlobalError::Parse(e.to_string()))
    }
}

fn class_rows(go: &GlobalOntology) -> Vec<ClassRow> {
    go.classes()
        .iter()
        .map(|c| ClassRow {
            name: c.name.clone(),
            kind: c.kind,
            members: c.members.iter().map(ToString::to_string).collect(),
        })
        .collect()
}

fn relative(path: &Path, base: &Path) -> String {
    let abs = |p: &Path| fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf());
    let (p, b) = (abs(path), abs(base));
    let shown = p.strip_prefix(&b).map(Path::to_path_buf).unwrap_or(p);
    shown.to_string_lossy().replace('\\', "/")
}

fn read(path: &Path) -> Result<String, GlobalError> {
    fs::read_to_string(path).map_err(|e| GlobalError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Loads a global ontology file and the files it references, rebuilds the
/// global ontology and checks it against the stored class table.
pub fn load_global(path: impl AsRef<Path>) -> Result<GlobalOntology, GlobalError> {
    let path = path.as_ref();
    let file = GlobalFile::from_json(&read(path)?)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let ontologies = file
        .ontologies
        .iter()
        .map(|r| {
            let onto = Ontology::from_json(&read(&dir.join(&r.path))?)?;
            if onto.id != r.id {
                return Err(GlobalError::Parse(format!("{} holds ontology `{}`, not `{}`", r.path, onto.id, r.id)));
            }
            Ok(onto)
        })
        .collect::<Result<Vec<_>, GlobalError>>()?;
    let alignments = file
        .alignments
        .iter()
        .map(|p| Ok(Alignment::from_json(&read(&dir.join(p))?)?))
        .collect::<Result<Vec<_>, GlobalError>>()?;
    let mappings = file
        .mappings
        .iter()
        .map(|r| Ok((r.id.clone(), MappingSet::from_json(&read(&dir.join(&r.path))?)?)))
        .collect::<Result<BTreeMap<_, _>, GlobalError>>()?;
    let go = build_global(ontologies, alignments, mappings)?;
    let edges: Vec<(&str, &str)> = file.cross_edges.iter().map(|e| (e.sub.as_str(), e.sup.as_str())).collect();
    if class_rows(&go) != file.classes || go.cross_edges() != edges {
        return Err(GlobalError::Parse("class table does not match the referenced files".into()));
    }
    Ok(go)
}
