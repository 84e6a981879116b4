//! Command-line front end. Every stage reads its inputs from files and
//! writes one JSON document:
//!
//! ```text
//! nosqint induce --catalog stores.json --database docDB --out docdb.onto.json
//! nosqint align  --left docdb.onto.json --right coldb.onto.json --out a.json
//! nosqint merge  --ontologies *.onto.json --alignments a.json --mappings *.mappings.json --out go.json
//! nosqint query  --global go.json --catalog stores.json --sparql q.rq [--explain] [--emit doc|column]
//! ```

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::alignment::{align_complex, align_simple, saturate, Alignment, AlignmentError, MatcherConfig, SynonymTable};
use crate::bql::{self, BqlError, Dialect, ResultTable};
use crate::dlcore::{DlError, Ontology};
use crate::globalont::{build_global, load_global, GlobalError, GlobalFile, SourceFiles};
use crate::induction::{induce_local, InductionError, MappingSet, SamplingStrategy};
use crate::queryfront::{parse_sparql, QueryError};
use crate::store::{SourceCatalog, StoreError};

/// Environment variable holding the tie-breaking seed.
pub const SEED_VAR: &str = "NOSQINT_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Ontology(#[from] DlError),
    #[error(transparent)]
    Induction(#[from] InductionError),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error(transparent)]
    Global(#[from] GlobalError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Bql(#[from] BqlError),
}

impl CliError {
    /// Module the error comes from, shown as `error[module]` on stderr.
    pub fn module(&self) -> &'static str {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => "cli",
            CliError::Store(_) => "store",
            CliError::Ontology(_) => "dlcore",
            CliError::Induction(_) => "induction",
            CliError::Alignment(_) => "alignment",
            CliError::Global(_) => "globalont",
            CliError::Query(_) => "queryfront",
            CliError::Bql(_) => "bql",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// Parsed command line plus the seed read from the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub command: Command,
    pub seed: u64,
}

#[derive(Debug, Parser)]
#[command(name = "nosqint", version, about = "Ontology-based integration of NoSQL stores")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Induce the local ontology and mappings of one database.
    Induce(InduceArgs),
    /// Align two local ontologies.
    Align(AlignArgs),
    /// Merge ontologies, alignments and mappings into a global ontology.
    Merge(MergeArgs),
    /// Answer a SPARQL query over a global ontology.
    Query(QueryArgs),
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct InduceArgs {
    #[arg(long)]
    pub catalog: PathBuf,
    #[arg(long)]
    pub database: String,
    /// `full` or `freq:LOG:TOPN`
    #[arg(long, default_value = "full")]
    pub strategy: String,
    /// Ontology output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Mapping output; defaults to the ontology path with a `.mappings.json` suffix.
    #[arg(long)]
    pub mappings_out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct AlignArgs {
    #[arg(long)]
    pub left: PathBuf,
    #[arg(long)]
    pub right: PathBuf,
    /// Tab-separated synonym table.
    #[arg(long)]
    pub synonyms: Option<PathBuf>,
    /// Also emit complex (formula) correspondences.
    #[arg(long)]
    pub complex: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct MergeArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub ontologies: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub alignments: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub mappings: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmitDialect {
    Doc,
    Column,
}

impl From<EmitDialect> for Dialect {
    fn from(d: EmitDialect) -> Self {
        match d {
            EmitDialect::Doc => Dialect::DocApi,
            EmitDialect::Column => Dialect::ColumnApi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub global: PathBuf,
    #[arg(long)]
    pub catalog: PathBuf,
    #[arg(long)]
    pub sparql: PathBuf,
    /// Print the BQL programs instead of running them.
    #[arg(long)]
    pub explain: bool,
    /// Print the procedural plan of each program instead of running it.
    #[arg(long, value_enum)]
    pub emit: Option<EmitDialect>,
}

impl CliConfig {
    /// Parses `args`, program name first.
    pub fn parse<I, T>(args: I, seed: Option<&str>) -> Result<Self, clap::Error>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        let cli = Cli::try_parse_from(args)?;
        let seed = match seed {
            None => 0,
            Some(s) => s.trim().parse().map_err(|_| {
                Cli::command_error(clap::error::ErrorKind::ValueValidation, format!("{SEED_VAR} must be an unsigned integer, got `{s}`"))
            })?,
        };
        Ok(CliConfig {
            command: cli.command,
            seed,
        })
    }

    /// Checks that input files exist and output directories are present.
    pub fn validate(&self) -> Result<(), CliError> {
        let (inputs, outputs): (Vec<PathBuf>, Vec<PathBuf>) = match &self.command {
            Command::Induce(a) => {
                let mut inputs = vec![a.catalog.clone()];
                if let SamplingStrategy::FrequencyLog { path, .. } = parse_strategy(&a.strategy)? {
                    inputs.push(path);
                }
                (inputs, [a.out.clone(), mappings_path(a)].into_iter().flatten().collect())
            }
            Command::Align(a) => (
                [Some(&a.left), Some(&a.right), a.synonyms.as_ref()].into_iter().flatten().cloned().collect(),
                a.out.iter().cloned().collect(),
            ),
            Command::Merge(a) => (
                a.ontologies.iter().chain(&a.alignments).chain(&a.mappings).cloned().collect(),
                a.out.iter().cloned().collect(),
            ),
            Command::Query(a) => (vec![a.global.clone(), a.catalog.clone(), a.sparql.clone()], Vec::new()),
        };
        if let Some(p) = inputs.iter().find(|p| !p.is_file()) {
            return Err(CliError::Usage(format!("input file {} does not exist", p.display())));
        }
        for p in &outputs {
            let dir = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
            if !dir.is_dir() {
                return Err(CliError::Usage(format!("output directory {} does not exist", dir.display())));
            }
        }
        Ok(())
    }
}

impl Cli {
    fn command_error(kind: clap::error::ErrorKind, message: String) -> clap::Error {
        use clap::CommandFactory;
        Cli::command().error(kind, message)
    }
}

/// `full` or `freq:LOG:TOPN`; the log path may itself contain colons.
pub fn parse_strategy(s: &str) -> Result<SamplingStrategy, CliError> {
    if s == "full" {
        return Ok(SamplingStrategy::Full);
    }
    let bad = || CliError::Usage(format!("strategy must be `full` or `freq:LOG:TOPN`, got `{s}`"));
    let rest = s.strip_prefix("freq:").ok_or_else(bad)?;
    let (log, top_n) = rest.rsplit_once(':').ok_or_else(bad)?;
    let top_n: usize = top_n.parse().map_err(|_| bad())?;
    if log.is_empty() || top_n == 0 {
        return Err(bad());
    }
    Ok(SamplingStrategy::FrequencyLog {
        path: PathBuf::from(log),
        top_n,
    })
}

fn mappings_path(a: &InduceArgs) -> Option<PathBuf> {
    a.mappings_out.clone().or_else(|| {
        let out = a.out.as_ref()?;
        let stem = out.file_stem()?.to_string_lossy();
        let stem = stem.strip_suffix(".onto").unwrap_or(&stem);
        Some(out.with_file_name(format!("{stem}.mappings.json")))
    })
}

/// Runs one command line. Returns the process exit code: 0 on success,
/// 1 when a pipeline stage fails, 2 on usage errors.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let seed = std::env::var(SEED_VAR).ok();
    let config = match CliConfig::parse(args, seed.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match config.validate().and_then(|_| execute(&config, out)) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error[{}]: {e}", e.module());
            e.exit_code()
        }
    }
}

/// Executes a validated configuration, writing primary output to its
/// `--out` file or to `out`.
pub fn execute(config: &CliConfig, out: &mut dyn Write) -> Result<(), CliError> {
    match &config.command {
        Command::Induce(a) => {
            let catalog = SourceCatalog::load(&a.catalog)?;
            let (onto, mappings) = induce_local(&catalog, &a.database, &parse_strategy(&a.strategy)?)?;
            if let Some(p) = mappings_path(a) {
                write_file(&p, &mappings.to_json())?;
            }
            emit(a.out.as_deref(), &onto.to_json(), out)
        }
        Command::Align(a) => {
            let left = Ontology::from_json(&read(&a.left)?)?;
            let right = Ontology::from_json(&read(&a.right)?)?;
            let cfg = match &a.synonyms {
                Some(p) => MatcherConfig::with_synonyms(SynonymTable::from_tsv(&read(p)?)?),
                None => MatcherConfig::default(),
            };
            let alignment = align(&left, &right, a.complex, &cfg)?;
            emit(a.out.as_deref(), &alignment.to_json(), out)
        }
        Command::Merge(a) => {
            let mut files = SourceFiles::default();
            let mut ontologies = Vec::new();
            for p in &a.ontologies {
                let onto = Ontology::from_json(&read(p)?)?;
                files.ontologies.insert(onto.id.clone(), p.clone());
                ontologies.push(onto);
            }
            let mut alignments = Vec::new();
            for p in &a.alignments {
                alignments.push(Alignment::from_json(&read(p)?)?);
                files.alignments.push(p.clone());
            }
            let mut mappings = BTreeMap::new();
            for p in &a.mappings {
                let set = MappingSet::from_json(&read(p)?)?;
                let db = set
                    .entries
                    .first()
                    .map(|m| m.database.clone())
                    .ok_or_else(|| CliError::Usage(format!("mapping file {} is empty", p.display())))?;
                if mappings.insert(db.clone(), set).is_some() {
                    return Err(CliError::Usage(format!("two mapping files describe `{db}`")));
                }
                files.mappings.insert(db, p.clone());
            }
            let go = build_global(ontologies, alignments, mappings)?;
            let base = a
                .out
                .as_deref()
                .and_then(Path::parent)
                .filter(|d| !d.as_os_str().is_empty())
                .unwrap_or(Path::new("."));
            emit(a.out.as_deref(), &GlobalFile::new(&go, &files, base).to_json(), out)
        }
        Command::Query(a) => {
            let go = load_global(&a.global)?;
            let catalog = SourceCatalog::load(&a.catalog)?;
            let query = parse_sparql(&read(&a.sparql)?)?;
            let programs = bql::translate(&query, &go)?;
            if a.explain || a.emit.is_some() {
                let mut parts = Vec::new();
                if a.explain {
                    parts.push(bql::explain(&programs));
                }
                if let Some(d) = a.emit {
                    parts.extend(programs.iter().map(|p| bql::emit_plan(p, d.into())));
                }
                return emit(None, &parts.join("\n"), out);
            }
            let table: ResultTable = bql::execute_all(&programs, &catalog)?;
            emit(None, &table.to_json(), out)
        }
    }
}

/// Simple cells of the saturated ontologies, followed by the complex cells
/// when requested.
pub fn align(left: &Ontology, right: &Ontology, complex: bool, cfg: &MatcherConfig) -> Result<Alignment, AlignmentError> {
    let mut alignment = align_simple(&saturate(left), &saturate(right), cfg)?;
    if complex {
        for cell in align_complex(left, right, &alignment, cfg)?.cells {
            alignment.push(cell);
        }
    }
    Ok(alignment)
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, ensure_newline(text)).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, text),
        None => out.write_all(ensure_newline(text).as_bytes()).map_err(|e| CliError::Io {
            path: "<stdout>".into(),
            message: e.to_string(),
        }),
    }
}

fn ensure_newline(text: &str) -> String {
    if text.ends_with('\n') || text.is_empty() {
        text.to_owned()
    } else {
        format!("{text}\n")
    }
}
