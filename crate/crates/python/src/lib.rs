//! Python bindings: load stores, induce and align ontologies, merge them
//! and answer SPARQL queries. Failures raise `nosqint.NosqintError`.

use std::collections::{BTreeMap, BTreeSet};

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyFloat, PyInt, PyList, PyString};

use nosqint_core::alignment::{self, MatcherConfig, SynonymTable};
use nosqint_core::bql::{self, BqlProgram, Dialect};
use nosqint_core::cli::parse_strategy;
use nosqint_core::dlcore::{self, RoleKind};
use nosqint_core::globalont::{self, load_global, EntityKind};
use nosqint_core::induction::{self, MappingSet};
use nosqint_core::queryfront;
use nosqint_core::store::{self, Comparator, Filter, Value};

create_exception!(nosqint, NosqintError, PyException);

/// Column names and rows of a query answer.
type Answer<'py> = (Vec<String>, Vec<Vec<Bound<'py, PyAny>>>);

fn fail(module: &str, e: impl std::fmt::Display) -> PyErr {
    NosqintError::new_err(format!("{module}: {e}"))
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => PyFloat::new(py, *n).into_any(),
        Value::Text(s) => PyString::new(py, s).into_any(),
        Value::List(items) => PyList::new(py, items.iter().map(|x| to_py(py, x)).collect::<PyResult<Vec<_>>>()?)?.into_any(),
        Value::Map(m) => {
            let d = PyDict::new(py);
            for (k, x) in m {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn from_py(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    if obj.is_none() {
        Ok(Value::Null)
    } else if obj.is_instance_of::<PyBool>() {
        Ok(Value::Bool(obj.extract()?))
    } else if obj.is_instance_of::<PyInt>() || obj.is_instance_of::<PyFloat>() {
        Ok(Value::Number(obj.extract()?))
    } else if let Ok(s) = obj.cast::<PyString>() {
        Ok(Value::text(s.to_str()?))
    } else if let Ok(l) = obj.cast::<PyList>() {
        Ok(Value::List(l.iter().map(|x| from_py(&x)).collect::<PyResult<_>>()?))
    } else {
        Err(fail("store", format!("unsupported value {obj}")))
    }
}

fn comparator(symbol: &str) -> PyResult<Comparator> {
    [Comparator::Eq, Comparator::Lt, Comparator::Le, Comparator::Gt, Comparator::Ge, Comparator::Ne]
        .into_iter()
        .find(|c| c.symbol() == symbol)
        .ok_or_else(|| fail("store", format!("unknown comparator `{symbol}`")))
}

/// Document databases and column stores loaded from a catalog file.
#[pyclass(frozen)]
struct Catalog {
    inner: store::SourceCatalog,
}

#[pymethods]
impl Catalog {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner = store::SourceCatalog::load(path).map_err(|e| fail("store", e))?;
        Ok(Catalog { inner })
    }

    fn databases(&self) -> Vec<String> {
        self.inner.backends().map(|b| b.name().to_owned()).collect()
    }

    fn containers(&self) -> Vec<(String, String)> {
        self.inner
            .container_names()
            .into_iter()
            .map(|c| (c.database, c.container))
            .collect()
    }

    /// Rows of `database.container` matching every `(attribute, op, value)`
    /// filter, restricted to `projections` (all attributes when empty).
    #[pyo3(signature = (database, container, filters=Vec::new(), projections=Vec::new()))]
    fn get<'py>(
        &self,
        py: Python<'py>,
        database: &str,
        container: &str,
        filters: Vec<(String, String, Bound<'py, PyAny>)>,
        projections: Vec<String>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let c = self.inner.resolve(database, container).map_err(|e| fail("store", e))?;
        let filters = filters
            .iter()
            .map(|(a, op, v)| Ok(Filter::new(a.as_str(), comparator(op)?, from_py(v)?)))
            .collect::<PyResult<Vec<_>>>()?;
        let projections: BTreeSet<String> = projections.into_iter().collect();
        let rows = self.inner.get(&c, &filters, &projections).map_err(|e| fail("store", e))?;
        rows.rows
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                for (k, v) in r {
                    d.set_item(k, to_py(py, v)?)?;
                }
                Ok(d)
            })
            .collect()
    }
}

#[pyclass(frozen)]
struct Ontology {
    inner: dlcore::Ontology,
}

#[pymethods]
impl Ontology {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = dlcore::Ontology::from_json(text).map_err(|e| fail("dlcore", e))?;
        Ok(Ontology { inner })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn id(&self) -> String {
        self.inner.id.clone()
    }

    #[getter]
    fn concepts(&self) -> Vec<String> {
        self.inner.concepts.iter().cloned().collect()
    }

    /// `(name, kind, domain, range)` for every role, kind being
    /// `"object"` or `"datatype"`.
    #[getter]
    fn roles(&self) -> Vec<(String, &'static str, String, String)> {
        self.inner
            .roles
            .values()
            .map(|r| {
                let kind = match r.kind {
                    RoleKind::Object => "object",
                    RoleKind::Datatype => "datatype",
                };
                (r.name.clone(), kind, r.domain.clone(), r.range.clone())
            })
            .collect()
    }

    /// Told name inclusions `(sub, sup)`.
    fn subclass_pairs(&self) -> Vec<(String, String)> {
        let mut out = BTreeSet::new();
        for ax in &self.inner.axioms {
            for (l, r) in ax.inclusions() {
                if let (Some(l), Some(r)) = (l.as_atomic(), r.as_atomic()) {
                    out.insert((l.to_owned(), r.to_owned()));
                }
            }
        }
        out.into_iter().collect()
    }

    /// Every concept name with all its atomic subsumers.
    fn classify(&self) -> BTreeMap<String, Vec<String>> {
        dlcore::classify(&self.inner)
            .into_iter()
            .map(|(c, s)| (c, s.into_iter().collect()))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Ontology(id={:?}, concepts={}, roles={})", self.inner.id, self.inner.concepts.len(), self.inner.roles.len())
    }
}

#[pyclass(frozen)]
struct Mappings {
    inner: MappingSet,
}

#[pymethods]
impl Mappings {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = MappingSet::from_json(text).map_err(|e| fail("induction", e))?;
        Ok(Mappings { inner })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// Database the mappings read from.
    #[getter]
    fn database(&self) -> Option<String> {
        self.inner.entries.first().map(|m| m.database.clone())
    }

    fn __len__(&self) -> usize {
        self.inner.entries.len()
    }
}

#[pyclass(frozen)]
struct Alignment {
    inner: alignment::Alignment,
}

#[pymethods]
impl Alignment {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = alignment::Alignment::from_json(text).map_err(|e| fail("alignment", e))?;
        Ok(Alignment { inner })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// `(left, relation, right, confidence)` per cell, relation being one
    /// of `=`, `<`, `>`, `%`.
    fn cells(&self) -> Vec<(String, &'static str, String, f64)> {
        self.inner
            .cells
            .iter()
            .map(|c| (c.left.to_string(), c.relation.tag(), c.right.to_string(), c.confidence))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.cells.len()
    }
}

#[pyclass(frozen)]
struct GlobalOntology {
    inner: globalont::GlobalOntology,
}

#[pymethods]
impl GlobalOntology {
    /// Loads a global ontology file written by `nosqint merge`.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner = load_global(path).map_err(|e| fail("globalont", e))?;
        Ok(GlobalOntology { inner })
    }

    /// `(name, kind, members)` per class, members written `ontology#entity`.
    fn classes(&self) -> Vec<(String, &'static str, Vec<String>)> {
        self.inner
            .classes()
            .iter()
            .map(|c| {
                let kind = match c.kind {
                    EntityKind::Concept => "concept",
                    EntityKind::Role => "role",
                };
                (c.name.clone(), kind, c.members.iter().map(ToString::to_string).collect())
            })
            .collect()
    }

    /// Compiles a SPARQL query into one program per answering database.
    fn translate(&self, sparql: &str) -> PyResult<Vec<Program>> {
        let q = queryfront::parse_sparql(sparql).map_err(|e| fail("queryfront", e))?;
        let programs = bql::translate(&q, &self.inner).map_err(|e| fail("bql", e))?;
        Ok(programs.into_iter().map(|inner| Program { inner }).collect())
    }

    /// BQL text of the programs answering `sparql`.
    fn explain(&self, sparql: &str) -> PyResult<String> {
        let programs: Vec<BqlProgram> = self.translate(sparql)?.into_iter().map(|p| p.inner).collect();
        Ok(bql::explain(&programs))
    }

    /// Answers `sparql` against `catalog`: the select variables and the
    /// distinct rows in sorted order.
    fn query<'py>(&self, py: Python<'py>, catalog: &Catalog, sparql: &str) -> PyResult<Answer<'py>> {
        let programs: Vec<BqlProgram> = self.translate(sparql)?.into_iter().map(|p| p.inner).collect();
        let table = bql::execute_all(&programs, &catalog.inner).map_err(|e| fail("bql", e))?;
        let rows = table
            .rows
            .iter()
            .map(|r| r.iter().map(|v| to_py(py, v)).collect())
            .collect::<PyResult<_>>()?;
        Ok((table.schema, rows))
    }
}

/// A BQL program for one database.
#[pyclass(frozen)]
struct Program {
    inner: BqlProgram,
}

#[pymethods]
impl Program {
    #[getter]
    fn source(&self) -> String {
        self.inner.source.clone()
    }

    /// Procedural plan for the `"doc"` or `"column"` API.
    #[pyo3(signature = (dialect="doc"))]
    fn plan(&self, dialect: &str) -> PyResult<String> {
        let d = match dialect {
            "doc" => Dialect::DocApi,
            "column" => Dialect::ColumnApi,
            other => return Err(fail("bql", format!("unknown dialect `{other}`"))),
        };
        Ok(bql::emit_plan(&self.inner, d))
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }
}

/// Induces the ontology and mappings of `database`. `strategy` is `full`
/// or `freq:LOG:TOPN`.
#[pyfunction]
#[pyo3(signature = (catalog, database, strategy="full"))]
fn induce(catalog: &Catalog, database: &str, strategy: &str) -> PyResult<(Ontology, Mappings)> {
    let strategy = parse_strategy(strategy).map_err(|e| fail("cli", e))?;
    let (o, m) = induction::induce_local(&catalog.inner, database, &strategy).map_err(|e| fail("induction", e))?;
    Ok((Ontology { inner: o }, Mappings { inner: m }))
}

/// Aligns two ontologies; `synonyms` is the text of a tab-separated
/// synonym table.
#[pyfunction]
#[pyo3(signature = (left, right, synonyms=None, complex=false))]
fn align(left: &Ontology, right: &Ontology, synonyms: Option<&str>, complex: bool) -> PyResult<Alignment> {
    let cfg = match synonyms {
        Some(t) => MatcherConfig::with_synonyms(SynonymTable::from_tsv(t).map_err(|e| fail("alignment", e))?),
        None => MatcherConfig::default(),
    };
    let inner = nosqint_core::cli::align(&left.inner, &right.inner, complex, &cfg).map_err(|e| fail("alignment", e))?;
    Ok(Alignment { inner })
}

#[pyfunction]
fn merge(ontologies: Vec<PyRef<'_, Ontology>>, alignments: Vec<PyRef<'_, Alignment>>, mappings: Vec<PyRef<'_, Mappings>>) -> PyResult<GlobalOntology> {
    let mut maps = BTreeMap::new();
    for m in &mappings {
        let db = m.database().ok_or_else(|| fail("globalont", "empty mapping set"))?;
        maps.insert(db, m.inner.clone());
    }
    let inner = globalont::build_global(
        ontologies.iter().map(|o| o.inner.clone()).collect(),
        alignments.iter().map(|a| a.inner.clone()).collect(),
        maps,
    )
    .map_err(|e| fail("globalont", e))?;
    Ok(GlobalOntology { inner })
}

/// Canonical text of a SPARQL query.
#[pyfunction]
fn normalize_sparql(text: &str) -> PyResult<String> {
    queryfront::parse_sparql(text).map(|q| q.to_string()).map_err(|e| fail("queryfront", e))
}

#[pymodule]
fn nosqint(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NosqintError", m.py().get_type::<NosqintError>())?;
    m.add_class::<Catalog>()?;
    m.add_class::<Ontology>()?;
    m.add_class::<Mappings>()?;
    m.add_class::<Alignment>()?;
    m.add_class::<GlobalOntology>()?;
    m.add_class::<Program>()?;
    m.add_function(wrap_pyfunction!(induce, m)?)?;
    m.add_function(wrap_pyfunction!(align, m)?)?;
    m.add_function(wrap_pyfunction!(merge, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_sparql, m)?)?;
    Ok(())
}
