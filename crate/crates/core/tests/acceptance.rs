//! Acceptance suite: one pass/fail line per criterion, with its runtime
//! against the allowed bound. Exits non-zero when any criterion fails.

mod support;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::SeedableRng;

use nosqint_core::alignment::{align_complex, align_simple, saturate, Alignment, Entity, MatcherConfig, Relation, SynonymTable};
use nosqint_core::bql::{execute_all, explain, translate, ResultTable};
use nosqint_core::cli;
use nosqint_core::dlcore::{Axiom, ConceptExpr, Ontology, Role};
use nosqint_core::globalont::{build_global, GlobalFile};
use nosqint_core::induction::{induce_local, MappingSet, SamplingStrategy};
use nosqint_core::queryfront::parse_sparql;
use nosqint_core::store::{ColumnStore, DocumentDatabase, SourceCatalog, Value};

use support::fca::RandomContext;
use support::{global_for, random_catalog, random_query, TripleOracle};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/conference").join(name)
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn conference() -> SourceCatalog {
    SourceCatalog::load(fixture("catalog.json")).expect("conference fixtures load")
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn induction_golden() -> Outcome {
    let raw: serde_json::Value = serde_json::from_str(&read(&fixture("docdb.json"))).map_err(|e| e.to_string())?;
    let combos: BTreeSet<BTreeSet<String>> = raw["collections"]["Person"]
        .as_object()
        .ok_or("no Person collection")?
        .values()
        .map(|p| match &p["type"] {
            serde_json::Value::Array(a) => a.iter().filter_map(|v| v.as_str().map(str::to_owned)).collect(),
            v => v.as_str().map(str::to_owned).into_iter().collect(),
        })
        .collect();
    let needed: [&[&str]; 5] = [
        &["User"],
        &["User", "Author"],
        &["User", "Reviewer"],
        &["User", "ConfMember"],
        &["User", "Author", "Reviewer", "ConfMember"],
    ];
    for n in needed {
        let set: BTreeSet<String> = n.iter().map(|s| s.to_string()).collect();
        ensure(combos.contains(&set), || format!("snapshot lacks a person typed {n:?}"))?;
    }

    let (o, _) = induce_local(&conference(), "docDB", &SamplingStrategy::Full).map_err(|e| e.to_string())?;
    for c in ["Person", "Document", "User", "Author", "Reviewer", "ConfMember"] {
        ensure(o.concepts.contains(c), || format!("concept {c} missing"))?;
    }
    ensure(o.roles.get("firstName") == Some(&Role::datatype("firstName", "Person", "Text")), || {
        format!("firstName is {:?}", o.roles.get("firstName"))
    })?;
    ensure(o.roles.get("writeReview") == Some(&Role::object("writeReview", "Person", "Document")), || {
        format!("writeReview is {:?}", o.roles.get("writeReview"))
    })?;
    let types = ["User", "Author", "Reviewer", "ConfMember"];
    let among: BTreeSet<&Axiom> = o
        .axioms
        .iter()
        .filter(|a| {
            a.inclusions()
                .iter()
                .any(|(l, r)| [l, r].iter().all(|e| e.as_atomic().is_some_and(|n| types.contains(&n))))
        })
        .collect();
    let expected = [
        Axiom::sub_class("Author", "User"),
        Axiom::sub_class("Reviewer", "User"),
        Axiom::sub_class("ConfMember", "User"),
    ];
    ensure(among == expected.iter().collect(), || format!("type axioms are {among:?}"))?;
    Ok(format!("{} concepts, {} roles, 3 type axioms", o.concepts.len(), o.roles.len()))
}

fn doe_reviews() -> Outcome {
    let cat = conference();
    let (doc, doc_maps) = induce_local(&cat, "docDB", &SamplingStrategy::Full).map_err(|e| e.to_string())?;
    let (col, col_maps) = induce_local(&cat, "colDB", &SamplingStrategy::Full).map_err(|e| e.to_string())?;
    let a = align_simple(&saturate(&doc), &saturate(&col), &MatcherConfig::default()).map_err(|e| e.to_string())?;
    let maps = BTreeMap::from([("docDB".to_owned(), doc_maps), ("colDB".to_owned(), col_maps)]);
    let go = build_global(vec![doc, col], vec![a], maps).map_err(|e| e.to_string())?;

    let q = parse_sparql(&read(&fixture("doe_reviews.rq"))).map_err(|e| e.to_string())?;
    let programs = translate(&q, &go).map_err(|e| e.to_string())?;
    let text = explain(&programs);
    ensure(text == read(&fixture("doe_reviews.bql")), || format!("explain text differs:\n{text}"))?;

    let table = execute_all(&programs, &cat).map_err(|e| e.to_string())?;
    let raw: serde_json::Value = serde_json::from_str(&read(&fixture("docdb.json"))).map_err(|e| e.to_string())?;
    let docs = &raw["collections"]["Document"];
    let expected: BTreeSet<Vec<Value>> = ["doc101", "doc104"]
        .iter()
        .map(|d| vec![Value::text(docs[d]["title"].as_str().unwrap_or_default())])
        .collect();
    let got: BTreeSet<Vec<Value>> = table.rows.into_iter().collect();
    ensure(got == expected, || format!("answer {got:?}, expected {expected:?}"))?;
    Ok(format!("{} program(s), {} titles", programs.len(), got.len()))
}

fn alignment_cells() -> Outcome {
    let load = |n: &str| Ontology::from_json(&read(&fixture(n))).map_err(|e| e.to_string());
    let (o1, o2) = (load("o1.json")?, load("o2.json")?);
    let syn = SynonymTable::from_tsv(&read(&fixture("synonyms.tsv"))).map_err(|e| e.to_string())?;
    let cfg = MatcherConfig::with_synonyms(syn);
    let simple = align_simple(&saturate(&o1), &saturate(&o2), &cfg).map_err(|e| e.to_string())?;
    let c = Entity::concept;
    let r = Entity::role;
    let expected = [
        (c("Person"), c("Person")),
        (c("Document"), c("Document")),
        (c("Review"), c("Review")),
        (c("Reviewer"), c("Referee")),
        (c("ConfMember"), c("ConfMember")),
        (r("writeReview"), r("WriteReview")),
        (r("name"), r("name")),
        (r("title"), r("title")),
    ];
    for (l, rt) in &expected {
        let cell = simple.find(l, rt).ok_or_else(|| format!("missing {l} = {rt}"))?;
        ensure(cell.relation == Relation::Equiv && cell.confidence >= 0.85, || {
            format!("{l} {rt}: {:?} at {}", cell.relation, cell.confidence)
        })?;
    }
    for (l, rt) in [("Paper", "Person"), ("Person", "Paper")] {
        ensure(simple.find(&c(l), &c(rt)).is_none(), || format!("false cell {l} / {rt}"))?;
    }
    let complex = align_complex(&o1, &o2, &simple, &cfg).map_err(|e| e.to_string())?;
    let left = Entity::Concept(ConceptExpr::and([
        ConceptExpr::atomic("Reviewer"),
        ConceptExpr::min_card(1, "writeReview", ConceptExpr::atomic("Review")),
    ]));
    let right = Entity::Concept(ConceptExpr::and([
        ConceptExpr::atomic("Referee"),
        ConceptExpr::exists("WriteReview", ConceptExpr::atomic("Review")),
    ]));
    let cell = complex.find(&left, &right).ok_or("no Reviewer/Referee formula cell")?;
    ensure(cell.relation == Relation::SubsumedBy, || format!("formula cell relation {:?}", cell.relation))?;
    Ok(format!("{} simple cells, {} complex cells", simple.cells.len(), complex.cells.len()))
}

fn fca_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(4);
    let mut nodes = 0;
    for i in 0..200 {
        let ctx = RandomContext::new(&mut rng);
        ctx.check().map_err(|e| format!("context {i}: {e}"))?;
        nodes += ctx.brute_force_concepts().len();
    }
    Ok(format!("200 contexts, {nodes} concepts, 0 mismatches"))
}

fn query_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let (mut checked, mut answers, mut multi) = (0, 0, 0);
    while checked < 100 {
        let catalog = random_catalog(&mut rng);
        let go = global_for(&catalog);
        let oracle = TripleOracle::new(&go, &catalog);
        for _ in 0..5 {
            let Some(q) = random_query(&mut rng, &go, &catalog) else { continue };
            let programs = translate(&q, &go).map_err(|e| format!("cannot translate\n{q}: {e}"))?;
            let table = execute_all(&programs, &catalog).map_err(|e| format!("{q}: {e}"))?;
            let got: BTreeSet<Vec<Value>> = table.rows.into_iter().collect();
            let expected = oracle.answer(&q);
            ensure(got == expected, || format!("mismatch on\n{q}got {got:?}\nexpected {expected:?}"))?;
            checked += 1;
            answers += usize::from(!got.is_empty());
            multi += usize::from(programs.len() > 1);
            if checked == 100 {
                break;
            }
        }
    }
    Ok(format!("100 queries ({answers} non-empty, {multi} multi-source), 0 mismatches"))
}

fn dl_properties() -> Outcome {
    let mut rng = StdRng::seed_from_u64(6);
    for i in 0..500 {
        support::dl::check_case(&mut rng).map_err(|e| format!("case {i}: {e}"))?;
    }
    Ok("500 cases, 0 violations".into())
}

fn round_trip(name: &str, text: &str, again: String) -> Result<(), String> {
    ensure(text == again, || format!("{name} does not round-trip"))
}

/// Induce, align (with complex cells), merge and query the conference
/// fixtures through the command line into `dir`.
fn cli_pipeline(dir: &Path) -> Result<(), String> {
    let p = |f: &str| dir.join(f).display().to_string();
    let catalog = fixture("catalog.json").display().to_string();
    let rq = fixture("doe_reviews.rq").display().to_string();
    let runs: Vec<Vec<String>> = vec![
        vec!["induce".into(), "--catalog".into(), catalog.clone(), "--database".into(), "docDB".into(), "--out".into(), p("docdb.onto.json")],
        vec!["induce".into(), "--catalog".into(), catalog.clone(), "--database".into(), "colDB".into(), "--out".into(), p("coldb.onto.json")],
        vec!["align".into(), "--left".into(), p("docdb.onto.json"), "--right".into(), p("coldb.onto.json"), "--complex".into(), "--out".into(), p("a.json")],
        vec![
            "merge".into(),
            "--ontologies".into(),
            p("docdb.onto.json"),
            p("coldb.onto.json"),
            "--alignments".into(),
            p("a.json"),
            "--mappings".into(),
            p("docdb.mappings.json"),
            p("coldb.mappings.json"),
            "--out".into(),
            p("go.json"),
        ],
    ];
    for args in runs {
        let mut err = Vec::new();
        let code = cli::run(std::iter::once("nosqint".to_owned()).chain(args.clone()), &mut Vec::new(), &mut err);
        ensure(code == 0, || format!("{args:?}: {}", String::from_utf8_lossy(&err)))?;
    }
    for (extra, file) in [(None, "answer.json"), (Some("--explain"), "explain.bql"), (Some("--emit=doc"), "plan.txt")] {
        let mut args = vec!["nosqint".to_owned(), "query".into(), "--global".into(), p("go.json"), "--catalog".into(), catalog.clone(), "--sparql".into(), rq.clone()];
        args.extend(extra.map(str::to_owned));
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = cli::run(args, &mut out, &mut err);
        ensure(code == 0, || String::from_utf8_lossy(&err).into_owned())?;
        fs::write(dir.join(file), out).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn determinism() -> Outcome {
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    for d in &dirs {
        cli_pipeline(d.path())?;
    }
    let files: BTreeSet<_> = fs::read_dir(dirs[0].path())
        .map_err(|e| e.to_string())?
        .map(|e| e.map(|e| e.file_name()).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    for f in &files {
        let (a, b) = (fs::read(dirs[0].path().join(f)), fs::read(dirs[1].path().join(f)));
        ensure(a.is_ok() && a.ok() == b.ok(), || format!("{f:?} differs between runs"))?;
    }

    let d = dirs[0].path();
    let file = |n: &str| read(&d.join(n));
    let onto = file("docdb.onto.json");
    round_trip("ontology", &onto, format!("{}\n", Ontology::from_json(&onto).map_err(|e| e.to_string())?.to_json()))?;
    let maps = file("docdb.mappings.json");
    round_trip("mappings", &maps, format!("{}\n", MappingSet::from_json(&maps).map_err(|e| e.to_string())?.to_json()))?;
    let align = file("a.json");
    round_trip("alignment", &align, format!("{}\n", Alignment::from_json(&align).map_err(|e| e.to_string())?.to_json()))?;
    let global = file("go.json");
    round_trip("global ontology", &global, format!("{}\n", GlobalFile::from_json(&global).map_err(|e| e.to_string())?.to_json()))?;
    let answer = file("answer.json");
    round_trip("result table", &answer, format!("{}\n", ResultTable::from_json(&answer).map_err(|e| e.to_string())?.to_json()))?;
    let docdb = DocumentDatabase::load(fixture("docdb.json")).map_err(|e| e.to_string())?.to_json();
    round_trip("document store", &docdb, DocumentDatabase::from_json(&docdb).map_err(|e| e.to_string())?.to_json())?;
    let coldb = ColumnStore::load(fixture("coldb.json")).map_err(|e| e.to_string())?.to_json();
    round_trip("column store", &coldb, ColumnStore::from_json(&coldb).map_err(|e| e.to_string())?.to_json())?;
    let q = parse_sparql(&read(&fixture("doe_reviews.rq"))).map_err(|e| e.to_string())?.to_string();
    round_trip("sparql", &q, parse_sparql(&q).map_err(|e| e.to_string())?.to_string())?;
    Ok(format!("{} pipeline files identical across 2 runs, 8 serializers round-trip", files.len()))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("induction golden (docDB concepts, roles, type axioms)", induction_golden, Some(Duration::from_secs(1))),
        ("Doe review titles translation and answer", doe_reviews, Some(Duration::from_secs(1))),
        ("conference alignment cells", alignment_cells, Some(Duration::from_secs(5))),
        ("FCA lattice vs brute force", fca_oracle, Some(Duration::from_secs(30))),
        ("query programs vs triple oracle", query_oracle, Some(Duration::from_secs(60))),
        ("DL service properties", dl_properties, Some(Duration::from_secs(60))),
        ("determinism and round-trips", determinism, None),
    ];
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let bound = limit.map_or_else(|| "no bound".to_owned(), |l| format!("limit {} ms", l.as_millis()));
        let (ok, detail) = match outcome {
            Ok(d) if limit.is_none_or(|l| took < l) => (true, d),
            Ok(d) => (false, format!("{d}; too slow")),
            Err(e) => (false, e),
        };
        failed += usize::from(!ok);
        println!(
            "criterion {}: {} {name}: {detail} [{} ms, {bound}]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            took.as_millis()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
