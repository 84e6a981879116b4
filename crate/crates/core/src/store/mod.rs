//! In-memory document and column-family stores.
//!
//! Both store kinds are loaded from JSON snapshot files and exposed through
//! the [`Backend`] trait. Everything downstream (induction, query execution)
//! reads data through [`SourceCatalog::get`], the single access primitive:
//! a conjunction of filters plus a projection, returning rows that always
//! carry the entry key under the reserved attribute [`KEY_ATTR`].

mod value;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use value::{Value, ValueKind};
pub(crate) use value::Entries;

/// Reserved attribute name under which every row exposes its entry key.
pub const KEY_ATTR: &str = "Key";

/// One document or one column-family row.
pub type Record = BTreeMap<String, Value>;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed snapshot {path}: {message}")]
    Parse { path: String, message: String },
    #[error("duplicate key `{key}` in container `{container}`")]
    DuplicateKey { container: String, key: String },
    #[error("column `{column}` of row `{row}` in family `{family}` holds a nested map")]
    NestedColumnValue {
        family: String,
        row: String,
        column: String,
    },
    #[error("database name `{0}` is used twice in the catalog")]
    DuplicateDatabase(String),
    #[error("unknown database `{0}`")]
    UnknownDatabase(String),
    #[error("unknown container `{0}`")]
    UnknownContainer(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ContainerKind {
    Collection,
    ColumnFamily,
}

/// A collection or column family, addressed by database and container name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContainerRef {
    pub database: String,
    pub container: String,
    pub kind: ContainerKind,
}

impl ContainerRef {
    pub fn new(database: impl Into<String>, container: impl Into<String>, kind: ContainerKind) -> Self {
        ContainerRef {
            database: database.into(),
            container: container.into(),
            kind,
        }
    }
}

impl fmt::Display for ContainerRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.database, self.container)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "!=")]
    Ne,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
            Comparator::Ne => "!=",
        }
    }

    /// Whether `attribute <op> operand` holds.
    ///
    /// Values of different kinds never compare (every comparator is false).
    /// A list attribute compared against a scalar operand is read as a set:
    /// `=` is membership, `!=` is non-membership, ordering comparators hold
    /// when some element satisfies them.
    pub fn holds(self, attribute: &Value, operand: &Value) -> bool {
        match (attribute, operand) {
            (Value::Null, _) | (_, Value::Null) => false,
            (Value::List(items), op) if !matches!(op, Value::List(_)) => match self {
                Comparator::Ne => !items.iter().any(|v| Comparator::Eq.holds(v, op)),
                _ => items.iter().any(|v| self.holds(v, op)),
            },
            (Value::List(a), Value::List(b)) => match self {
                Comparator::Eq => a == b,
                Comparator::Ne => a != b,
                _ => false,
            },
            (a, b) => {
                let ord = match (a, b) {
                    (Value::Number(x), Value::Number(y)) => x.partial_cmp(y),
                    (Value::Text(x), Value::Text(y)) => Some(x.cmp(y)),
                    (Value::Bool(x), Value::Bool(y)) => Some(x.cmp(y)),
                    (Value::Map(_), Value::Map(_)) => Some(a.cmp(b)),
                    _ => None,
                };
                let Some(ord) = ord else { return false };
                match self {
                    Comparator::Eq => ord.is_eq(),
                    Comparator::Ne => ord.is_ne(),
                    Comparator::Lt => ord.is_lt(),
                    Comparator::Le => ord.is_le(),
                    Comparator::Gt => ord.is_gt(),
                    Comparator::Ge => ord.is_ge(),
                }
            }
        }
    }
}

/// `attribute <comparator> value`, evaluated against one row.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Filter {
    pub attribute: String,
    pub comparator: Comparator,
    pub value: Value,
}

impl Filter {
    pub fn new(attribute: impl Into<String>, comparator: Comparator, value: Value) -> Self {
        Filter {
            attribute: attribute.into(),
            comparator,
            value,
        }
    }

    pub fn eq(attribute: impl Into<String>, value: Value) -> Self {
        Self::new(attribute, Comparator::Eq, value)
    }

    fn matches(&self, key: &str, record: &Record) -> bool {
        if self.attribute == KEY_ATTR {
            return self.comparator.holds(&Value::text(key), &self.value);
        }
        record
            .get(&self.attribute)
            .is_some_and(|v| self.comparator.holds(v, &self.value))
    }
}

pub type Row = BTreeMap<String, Value>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RowSet {
    pub rows: Vec<Row>,
}

impl RowSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Uniform read access to one database, whatever its data model.
pub trait Backend {
    fn name(&self) -> &str;
    fn kind(&self) -> ContainerKind;
    fn containers(&self) -> &BTreeMap<String, BTreeMap<String, Record>>;

    fn entries(&self, container: &str) -> Option<&BTreeMap<String, Record>> {
        self.containers().get(container)
    }
}

/// A document database: collections of keyed documents.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DocumentDatabase {
    pub name: String,
    pub collections: BTreeMap<String, BTreeMap<String, Record>>,
}

#[derive(Deserialize)]
struct DocumentSnapshot {
    name: String,
    #[serde(default)]
    collections: Entries<Entries<Value>>,
}

impl DocumentDatabase {
    pub fn new(name: impl Into<String>) -> Self {
        DocumentDatabase {
            name: name.into(),
            collections: BTreeMap::new(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref();
        let text = read(path)?;
        Self::from_json(&text).map_err(|e| with_path(e, path))
    }

    pub fn from_json(text: &str) -> Result<Self, StoreError> {
        let snap: DocumentSnapshot = serde_json::from_str(text).map_err(parse_error)?;
        let mut db = DocumentDatabase::new(snap.name);
        for (coll, docs) in snap.collections.0 {
            if db.collections.contains_key(&coll) {
                return Err(StoreError::Parse {
                    path: String::new(),
                    message: format!("collection `{coll}` appears twice"),
                });
            }
            let mut out = BTreeMap::new();
            for (key, doc) in docs.0 {
                let Value::Map(fields) = doc else {
                    return Err(StoreError::Parse {
                        path: String::new(),
                        message: format!("document `{key}` in `{coll}` is not an object"),
                    });
                };
                if out.insert(key.clone(), fields).is_some() {
                    return Err(StoreError::DuplicateKey { container: coll, key });
                }
            }
            db.collections.insert(coll, out);
        }
        Ok(db)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document snapshot serializes")
    }

    pub fn insert(&mut self, collection: &str, key: &str, doc: Record) {
        self.collections
            .entry(collection.to_owned())
            .or_default()
            .insert(key.to_owned(), doc);
    }
}

impl Backend for DocumentDatabase {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> ContainerKind {
        ContainerKind::Collection
    }

    fn containers(&self) -> &BTreeMap<String, BTreeMap<String, Record>> {
        &self.collections
    }
}

/// A column-family store: families of rows, each row a flat map of columns.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ColumnStore {
    pub keyspace: String,
    #[serde(rename = "columnFamilies")]
    pub families: BTreeMap<String, BTreeMap<String, Record>>,
}

#[derive(Deserialize)]
struct ColumnSnapshot {
    keyspace: String,
    #[serde(default, rename = "columnFamilies")]
    families: Entries<Entries<Entries<Value>>>,
}

impl ColumnStore {
    pub fn new(keyspace: impl Into<String>) -> Self {
        ColumnStore {
            keyspace: keyspace.into(),
            families: BTreeMap::new(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref();
        let text = read(path)?;
        Self::from_json(&text).map_err(|e| with_path(e, path))
    }

    pub fn from_json(text: &str) -> Result<Self, StoreError> {
        let snap: ColumnSnapshot = serde_json::from_str(text).map_err(parse_error)?;
        let mut store = ColumnStore::new(snap.keyspace);
        for (family, rows) in snap.families.0 {
            if store.families.contains_key(&family) {
                return Err(StoreError::Parse {
                    path: String::new(),
                    message: format!("column family `{family}` appears twice"),
                });
            }
            let mut out = BTreeMap::new();
            for (row_key, columns) in rows.0 {
                let mut record = Record::new();
                for (column, value) in columns.0 {
                    if !is_flat_column(&value) {
                        return Err(StoreError::NestedColumnValue {
                            family,
                            row: row_key,
                            column,
                        });
                    }
                    if record.insert(column.clone(), value).is_some() {
                        return Err(StoreError::Parse {
                            path: String::new(),
                            message: format!("column `{column}` repeated in row `{row_key}`"),
                        });
                    }
                }
                if out.insert(row_key.clone(), record).is_some() {
                    return Err(StoreError::DuplicateKey {
                        container: family,
                        key: row_key,
                    });
                }
            }
            store.families.insert(family, out);
        }
        Ok(store)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("column snapshot serializes")
    }

    pub fn insert(&mut self, family: &str, row_key: &str, row: Record) -> Result<(), StoreError> {
        if let Some((column, _)) = row.iter().find(|(_, v)| !is_flat_column(v)) {
            return Err(StoreError::NestedColumnValue {
                family: family.to_owned(),
                row: row_key.to_owned(),
                column: column.clone(),
            });
        }
        self.families
            .entry(family.to_owned())
            .or_default()
            .insert(row_key.to_owned(), row);
        Ok(())
    }
}

fn is_flat_column(value: &Value) -> bool {
    match value {
        Value::Map(_) => false,
        Value::List(items) => items.iter().all(|v| !matches!(v, Value::Map(_) | Value::List(_))),
        _ => true,
    }
}

impl Backend for ColumnStore {
    fn name(&self) -> &str {
        &self.keyspace
    }

    fn kind(&self) -> ContainerKind {
        ContainerKind::ColumnFamily
    }

    fn containers(&self) -> &BTreeMap<String, BTreeMap<String, Record>> {
        &self.families
    }
}

/// Read access used by query execution. [`SourceCatalog`] is the real
/// implementation; wrappers can observe or restrict access.
pub trait RowSource {
    fn get(
        &self,
        container: &ContainerRef,
        filters: &[Filter],
        projections: &BTreeSet<String>,
    ) -> Result<RowSet, StoreError>;

    fn resolve(&self, database: &str, container: &str) -> Result<ContainerRef, StoreError>;
}

/// All loaded databases, addressable by database name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceCatalog {
    document_dbs: Vec<DocumentDatabase>,
    column_stores: Vec<ColumnStore>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct CatalogFile {
    #[serde(default)]
    document_dbs: Vec<PathBuf>,
    #[serde(default)]
    column_stores: Vec<PathBuf>,
}

impl SourceCatalog {
    pub fn new(document_dbs: Vec<DocumentDatabase>, column_stores: Vec<ColumnStore>) -> Result<Self, StoreError> {
        let mut seen = BTreeSet::new();
        let names = document_dbs
            .iter()
            .map(|d| d.name.as_str())
            .chain(column_stores.iter().map(|c| c.keyspace.as_str()));
        for name in names {
            if !seen.insert(name) {
                return Err(StoreError::DuplicateDatabase(name.to_owned()));
            }
        }
        Ok(SourceCatalog {
            document_dbs,
            column_stores,
        })
    }

    /// Loads a catalog file listing snapshot paths relative to itself:
    /// `{"documentDbs": [..], "columnStores": [..]}`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref();
        let text = read(path)?;
        let file: CatalogFile = serde_json::from_str(&text).map_err(|e| StoreError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        let docs = file
            .document_dbs
            .iter()
            .map(|p| DocumentDatabase::load(base.join(p)))
            .collect::<Result<Vec<_>, _>>()?;
        let cols = file
            .column_stores
            .iter()
            .map(|p| ColumnStore::load(base.join(p)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(docs, cols)
    }

    pub fn document_dbs(&self) -> &[DocumentDatabase] {
        &self.document_dbs
    }

    pub fn column_stores(&self) -> &[ColumnStore] {
        &self.column_stores
    }

    pub fn backends(&self) -> impl Iterator<Item = &dyn Backend> {
        self.document_dbs
            .iter()
            .map(|d| d as &dyn Backend)
            .chain(self.column_stores.iter().map(|c| c as &dyn Backend))
    }

    pub fn backend(&self, database: &str) -> Option<&dyn Backend> {
        self.backends().find(|b| b.name() == database)
    }

    pub fn entries(&self, container: &ContainerRef) -> Result<&BTreeMap<String, Record>, StoreError> {
        self.backend(&container.database)
            .filter(|b| b.kind() == container.kind)
            .and_then(|b| b.entries(&container.container))
            .ok_or_else(|| StoreError::UnknownContainer(container.to_string()))
    }

    /// Resolves `database.container` without knowing the container kind.
    pub fn resolve(&self, database: &str, container: &str) -> Result<ContainerRef, StoreError> {
        let backend = self
            .backend(database)
            .ok_or_else(|| StoreError::UnknownDatabase(database.to_owned()))?;
        if backend.entries(container).is_none() {
            return Err(StoreError::UnknownContainer(format!("{database}.{container}")));
        }
        Ok(ContainerRef::new(database, container, backend.kind()))
    }

    /// Every collection and column family, sorted by (database, container).
    pub fn container_names(&self) -> Vec<ContainerRef> {
        let mut out: Vec<ContainerRef> = self
            .backends()
            .flat_map(|b| {
                b.containers()
                    .keys()
                    .map(move |c| ContainerRef::new(b.name(), c.clone(), b.kind()))
            })
            .collect();
        out.sort();
        out
    }

    /// Rows of `container` satisfying every filter, projected to
    /// `projections` plus [`KEY_ATTR`]. Empty projections keep every
    /// attribute. Rows come back in key order.
    pub fn get(
        &self,
        container: &ContainerRef,
        filters: &[Filter],
        projections: &BTreeSet<String>,
    ) -> Result<RowSet, StoreError> {
        let entries = self.entries(container)?;
        let rows = entries
            .iter()
            .filter(|(key, record)| filters.iter().all(|f| f.matches(key, record)))
            .map(|(key, record)| {
                let mut row: Row = if projections.is_empty() {
                    record.clone()
                } else {
                    projections
                        .iter()
                        .filter_map(|p| record.get(p).map(|v| (p.clone(), v.clone())))
                        .collect()
                };
                row.insert(KEY_ATTR.to_owned(), Value::text(key.as_str()));
                row
            })
            .collect();
        Ok(RowSet { rows })
    }
}

impl RowSource for SourceCatalog {
    fn get(
        &self,
        container: &ContainerRef,
        filters: &[Filter],
        projections: &BTreeSet<String>,
    ) -> Result<RowSet, StoreError> {
        SourceCatalog::get(self, container, filters, projections)
    }

    fn resolve(&self, database: &str, container: &str) -> Result<ContainerRef, StoreError> {
        SourceCatalog::resolve(self, database, container)
    }
}

fn read(path: &Path) -> Result<String, StoreError> {
    fs::read_to_string(path).map_err(|source| StoreError::Io {
        path: path.to_owned(),
        source,
    })
}

fn parse_error(e: serde_json::Error) -> StoreError {
    StoreError::Parse {
        path: String::new(),
        message: e.to_string(),
    }
}

fn with_path(e: StoreError, path: &Path) -> StoreError {
    match e {
        StoreError::Parse { message, .. } => StoreError::Parse {
            path: path.display().to_string(),
            message,
        },
        other => other,
    }
}
