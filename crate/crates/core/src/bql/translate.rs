use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::globalont::{resolve_kind, Binding, EntityKind, GlobalOntology};
use crate::induction::{MappingKind, Target};
use crate::queryfront::{SparqlQuery, Term, TriplePattern};
use crate::store::{Value, KEY_ATTR};

use super::{BqlError, BqlFilter, BqlProgram, GetCall, Operand, Projection, Step, StepBody, ANSWER};

/// One program per database able to answer `q` on its own, in database
/// order. Executing all of them and taking the union answers `q`.
pub fn translate(q: &SparqlQuery, go: &GlobalOntology) -> Result<Vec<BqlProgram>, BqlError> {
    let resolved = resolve(q, go)?;
    let mut programs = Vec::new();
    let mut failures = Vec::new();
    for onto in &go.ontologies {
        match compile(q, &resolved, &onto.id)? {
            Ok(p) => programs.push(p),
            Err(f) => failures.push(f),
        }
    }
    if !programs.is_empty() {
        return Ok(programs);
    }
    // Nothing compiled: report the most specific reason.
    let all_miss = |pred: &dyn Fn(&Miss) -> bool| !failures.is_empty() && failures.iter().all(pred);
    for (i, p) in q.patterns.iter().enumerate() {
        if all_miss(&|f| matches!(f, Miss::Type(j) if *j == i)) {
            return Err(BqlError::UnresolvableType(describe_type(p)));
        }
        if all_miss(&|f| matches!(f, Miss::Role(j) if *j == i)) {
            return Err(BqlError::UnmappedPredicate(p.predicate.clone()));
        }
    }
    if let Some(Miss::Conflict(v)) = failures.iter().find(|f| matches!(f, Miss::Conflict(_))) {
        if failures.iter().all(|f| matches!(f, Miss::Conflict(_))) {
            return Err(BqlError::UnresolvableType(format!("{v} (no container satisfies all its patterns)")));
        }
    }
    Err(BqlError::CrossSourceJoin(
        "every pattern is mapped somewhere, but no single database maps them all".into(),
    ))
}

fn describe_type(p: &TriplePattern) -> String {
    format!("{} of type {}", p.subject, p.object)
}

/// Why a database cannot answer the query alone.
enum Miss {
    /// The class of this type pattern has no member there.
    Type(usize),
    /// The role of this pattern has no usable mapping there.
    Role(usize),
    /// A node would have to live in two containers at once.
    Conflict(String),
}

/// Global class bindings of every pattern, by pattern index.
struct Resolved {
    bindings: Vec<Vec<Binding>>,
}

fn resolve(q: &SparqlQuery, go: &GlobalOntology) -> Result<Resolved, BqlError> {
    let mut bindings = Vec::new();
    for p in &q.patterns {
        if p.is_type() {
            let Term::Iri(class) = &p.object else {
                return Err(BqlError::Unsupported("rdf:type needs a class name as object".into()));
            };
            let b = resolve_kind(go, class, Some(EntityKind::Concept), false)
                .map_err(|_| BqlError::UnresolvableType(describe_type(p)))?;
            bindings.push(b.bindings);
        } else {
            let b = role_candidates(&p.predicate)
                .into_iter()
                .find_map(|name| resolve_kind(go, &name, Some(EntityKind::Role), false).ok())
                .ok_or_else(|| BqlError::UnmappedPredicate(p.predicate.clone()))?;
            bindings.push(b.bindings);
        }
    }
    Ok(Resolved { bindings })
}

/// The predicate itself, then `hasFoo` read as `foo`.
fn role_candidates(predicate: &str) -> Vec<String> {
    let mut out = vec![predicate.to_owned()];
    if let Some(rest) = predicate.strip_prefix("has") {
        let mut chars = rest.chars();
        if let Some(first) = chars.next().filter(|c| c.is_uppercase()) {
            out.push(first.to_lowercase().chain(chars).collect());
        }
    }
    out
}

/// How a non-type pattern reads in one database.
enum Use {
    /// Subject node follows an object role to the object node.
    Edge { attr: String, target: Target },
    /// Object variable takes the values of a stored attribute.
    Bind { attr: String, var: String },
    /// Object is a constant the attribute must hold.
    Test { attr: String, value: Value },
}

#[derive(Default)]
struct Node {
    containers: BTreeSet<Target>,
    filters: Vec<BqlFilter>,
    binds: Vec<(String, String)>,
}

struct TreeEdge {
    parent: usize,
    child: usize,
    attr: String,
    /// The parent holds the attribute pointing at the child.
    forward: bool,
}

/// The node for `t`; constants are entries with that key.
fn node_entry<'a>(nodes: &'a mut BTreeMap<Term, Node>, t: &Term) -> &'a mut Node {
    nodes.entry(t.clone()).or_insert_with(|| {
        let mut n = Node::default();
        let key = match t {
            Term::Var(_) => None,
            Term::Iri(k) => Some(Value::text(k.as_str())),
            Term::Literal(v) => Some(v.clone()),
        };
        if let Some(key) = key {
            n.filters.push(BqlFilter::eq(KEY_ATTR, Operand::Value(key)));
        }
        n
    })
}

fn compile(q: &SparqlQuery, resolved: &Resolved, db: &str) -> Result<Result<BqlProgram, Miss>, BqlError> {
    let mut order: Vec<Term> = Vec::new();
    let mut nodes: BTreeMap<Term, Node> = BTreeMap::new();
    let node = |t: &Term, order: &mut Vec<Term>| -> Term {
        if !order.contains(t) {
            order.push(t.clone());
        }
        t.clone()
    };
    let mut edges: Vec<(Term, Term, String)> = Vec::new();
    let mut value_vars: BTreeMap<String, usize> = BTreeMap::new();

    for (i, p) in q.patterns.iter().enumerate() {
        let Some(binding) = resolved.bindings[i].iter().find(|b| b.ontology == db) else {
            return Ok(Err(if p.is_type() { Miss::Type(i) } else { Miss::Role(i) }));
        };
        let Some(m) = &binding.mapping else {
            return Ok(Err(if p.is_type() { Miss::Type(i) } else { Miss::Role(i) }));
        };
        let subject = node(&p.subject, &mut order);
        let container = Target {
            database: m.database.clone(),
            container: m.container.clone(),
        };
        let entry = node_entry(&mut nodes, &subject);
        entry.containers.insert(container);
        if p.is_type() {
            match (m.kind, m.top_key()) {
                (MappingKind::ConceptToContainer, _) => {}
                (MappingKind::ConceptToTypeValue, Some(key)) => {
                    for v in &m.values {
                        let f = BqlFilter::eq(key, Operand::Value(Value::text(v.as_str())));
                        if !entry.filters.contains(&f) {
                            entry.filters.push(f);
                        }
                    }
                }
                _ => return Ok(Err(Miss::Type(i))),
            }
            continue;
        }
        let Some(attr) = m.top_key() else {
            return Ok(Err(Miss::Role(i)));
        };
        let usage = match (&p.object, m.kind) {
            (_, MappingKind::ObjectRoleToKey) => {
                let Some(t) = &m.target else { return Ok(Err(Miss::Role(i))) };
                Use::Edge {
                    attr: attr.to_owned(),
                    target: t.clone(),
                }
            }
            (Term::Var(v), MappingKind::DatatypeRoleToKey) => Use::Bind {
                attr: attr.to_owned(),
                var: v.clone(),
            },
            (Term::Iri(x), MappingKind::DatatypeRoleToKey) => Use::Test {
                attr: attr.to_owned(),
                value: Value::text(x.as_str()),
            },
            (Term::Literal(v), MappingKind::DatatypeRoleToKey) => Use::Test {
                attr: attr.to_owned(),
                value: v.clone(),
            },
            _ => return Ok(Err(Miss::Role(i))),
        };
        match usage {
            Use::Edge { attr, target } => {
                let object = node(&p.object, &mut order);
                node_entry(&mut nodes, &object).containers.insert(target);
                edges.push((subject, object, attr));
            }
            Use::Bind { attr, var } => {
                *value_vars.entry(var.clone()).or_default() += 1;
                nodes.get_mut(&subject).expect("inserted above").binds.push((attr, var));
            }
            Use::Test { attr, value } => {
                let entry = nodes.get_mut(&subject).expect("inserted above");
                let f = BqlFilter::eq(attr, Operand::Value(value));
                if !entry.filters.contains(&f) {
                    entry.filters.push(f);
                }
            }
        }
    }

    for (v, n) in &value_vars {
        if *n > 1 || nodes.contains_key(&Term::Var(v.clone())) {
            return Err(BqlError::Unsupported(format!("?{v} is compared across patterns (value join)")));
        }
    }
    for (t, n) in &nodes {
        if n.containers.len() > 1 {
            return Ok(Err(Miss::Conflict(t.to_string())));
        }
    }

    let index: BTreeMap<&Term, usize> = order.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let tree = spanning_order(&order, &edges, &index)?;

    Ok(Ok(build(q, db, &order, &nodes, &tree)))
}

/// Visit order of the pattern graph from its root, with the edge reaching
/// each node after the first.
fn spanning_order(
    order: &[Term],
    edges: &[(Term, Term, String)],
    index: &BTreeMap<&Term, usize>,
) -> Result<Vec<(usize, Option<TreeEdge>)>, BqlError> {
    if edges.len() + 1 != order.len() {
        let msg = if edges.len() + 1 > order.len() {
            "the triple patterns form a cycle"
        } else {
            "the triple patterns are not connected"
        };
        return Err(BqlError::Unsupported(msg.into()));
    }
    let targets: BTreeSet<usize> = edges.iter().map(|(_, o, _)| index[o]).collect();
    let root = (0..order.len()).find(|i| !targets.contains(i)).unwrap_or(0);
    let mut seen = BTreeSet::from([root]);
    let mut out = vec![(root, None)];
    let mut queue = VecDeque::from([root]);
    while let Some(n) = queue.pop_front() {
        for (s, o, attr) in edges {
            let (s, o) = (index[s], index[o]);
            let (child, forward) = if s == n {
                (o, true)
            } else if o == n {
                (s, false)
            } else {
                continue;
            };
            if seen.insert(child) {
                queue.push_back(child);
                out.push((
                    child,
                    Some(TreeEdge {
                        parent: n,
                        child,
                        attr: attr.clone(),
                        forward,
                    }),
                ));
            }
        }
    }
    if out.len() != order.len() {
        return Err(BqlError::Unsupported("the triple patterns are not connected".into()));
    }
    Ok(out)
}

fn build(q: &SparqlQuery, db: &str, order: &[Term], nodes: &BTreeMap<Term, Node>, tree: &[(usize, Option<TreeEdge>)]) -> BqlProgram {
    let select: Vec<String> = q.select_vars.clone();
    let var_names: BTreeSet<String> = q.vars().into_iter().map(str::to_owned).collect();

    let mut taken = var_names.clone();
    let mut fresh = |base: &str| {
        let mut name = base.to_owned();
        let mut k = 2;
        while taken.contains(&name) || name == KEY_ATTR {
            name = format!("{base}_{k}");
            k += 1;
        }
        taken.insert(name.clone());
        name
    };
    // Key columns: the variable itself, or a fresh name for constants.
    let keys: Vec<String> = order
        .iter()
        .map(|t| match t {
            Term::Var(v) => v.clone(),
            _ => fresh("key"),
        })
        .collect();
    // Iteration columns of forward edges, named after their attribute.
    let mut iter_col: BTreeMap<usize, String> = BTreeMap::new();
    for (child, edge) in tree {
        if let Some(e) = edge.as_ref().filter(|e| e.forward) {
            iter_col.insert(*child, fresh(&e.attr));
        }
    }

    // Columns each step reads from its input.
    let consumed: Vec<Option<String>> = tree
        .iter()
        .map(|(child, edge)| {
            edge.as_ref().map(|e| {
                if e.forward {
                    iter_col[child].clone()
                } else {
                    keys[e.parent].clone()
                }
            })
        })
        .collect();

    let count = tree.len();
    let mut steps: Vec<Step> = Vec::new();
    let mut schema: Vec<String> = Vec::new();
    for (i, (n, edge)) in tree.iter().enumerate() {
        let node = &nodes[&order[*n]];
        let later: BTreeSet<&String> = consumed[i + 1..].iter().flatten().collect();
        let needed = |c: &String| later.contains(c) || select.contains(c);

        let mut projections = Vec::new();
        if needed(&keys[*n]) {
            projections.push(Projection::new(KEY_ATTR, keys[*n].clone()));
        }
        for (attr, var) in &node.binds {
            projections.push(Projection::new(attr.clone(), var.clone()));
        }
        for (child, e) in tree.iter().filter_map(|(c, e)| e.as_ref().map(|e| (c, e))) {
            if e.parent == *n && e.forward {
                projections.push(Projection::new(e.attr.clone(), iter_col[child].clone()));
            }
        }

        let mut filters = node.filters.clone();
        let container = node.containers.iter().next().expect("every node has a container").clone();
        let body = match edge {
            None => StepBody::Get(GetCall {
                container,
                filters,
                projections,
            }),
            Some(e) => {
                let loop_var = if e.forward {
                    order[e.child].as_var().map_or_else(|| iter_col[&e.child].clone(), str::to_owned)
                } else {
                    keys[e.parent].clone()
                };
                let link = if e.forward { KEY_ATTR.to_owned() } else { e.attr.clone() };
                filters.insert(0, BqlFilter::eq(link, Operand::LoopVar(loop_var.clone())));
                let carry: Vec<String> = schema.iter().filter(|c| needed(c)).cloned().collect();
                StepBody::ForEachGet {
                    loop_var,
                    input: steps.last().map(|s: &Step| s.name.clone()).expect("not the first step"),
                    attribute: consumed[i].clone().expect("edge steps consume a column"),
                    carry,
                    get: GetCall {
                        container,
                        filters,
                        projections,
                    },
                }
            }
        };
        schema = match &body {
            StepBody::Get(g) => g.projections.iter().map(|p| p.alias.clone()).collect(),
            StepBody::ForEachGet { carry, get, .. } => {
                carry.iter().cloned().chain(get.projections.iter().map(|p| p.alias.clone())).collect()
            }
            StepBody::Project { attributes, .. } => attributes.clone(),
        };
        let name = if i + 1 == count && schema == select {
            ANSWER.to_owned()
        } else if i == 0 {
            "temp".to_owned()
        } else {
            format!("temp{}", i + 1)
        };
        steps.push(Step {
            name,
            schema: schema.clone(),
            body,
        });
    }
    if steps.last().is_some_and(|s| s.name != ANSWER) {
        let input = steps.last().expect("checked").name.clone();
        steps.push(Step {
            name: ANSWER.to_owned(),
            schema: select.clone(),
            body: StepBody::Project {
                input,
                attributes: select,
            },
        });
    }
    BqlProgram {
        source: db.to_owned(),
        steps,
        answer_relation: ANSWER.to_owned(),
    }
}
