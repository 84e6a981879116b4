use std::collections::VecDeque;

use proptest::prelude::*;

use super::*;
use crate::dlcore::{Axiom, Role};
use crate::testutil::fixture;

pub(crate) fn conference_pair() -> (Ontology, Ontology, MatcherConfig) {
    let load = |n: &str| Ontology::from_json(&std::fs::read_to_string(fixture(n)).unwrap()).unwrap();
    let syn = SynonymTable::from_tsv(&std::fs::read_to_string(fixture("synonyms.tsv")).unwrap()).unwrap();
    (load("o1.json"), load("o2.json"), MatcherConfig::with_synonyms(syn))
}

/// Reachability over told name-to-name inclusions.
fn told_closure(onto: &Ontology, from: &str) -> BTreeSet<String> {
    let mut seen = BTreeSet::from([from.to_owned()]);
    let mut queue = VecDeque::from([from.to_owned()]);
    while let Some(c) = queue.pop_front() {
        for ax in &onto.axioms {
            for (l, r) in ax.inclusions() {
                if let (Some(l), Some(r)) = (l.as_atomic(), r.as_atomic()) {
                    if l == c && seen.insert(r.to_owned()) {
                        queue.push_back(r.to_owned());
                    }
                }
            }
        }
    }
    seen
}

fn has_sub(onto: &Ontology, a: &str, b: &str) -> bool {
    onto.axioms.contains(&Axiom::sub_class(a, b))
}

fn equiv(l: &str, r: &str) -> (Entity, Entity) {
    (Entity::concept(l), Entity::concept(r))
}

#[test]
fn saturation_adds_transitive_edges() {
    let mut o = Ontology::new("t");
    for c in ["A", "B", "C"] {
        o.add_concept(c);
    }
    o.add_axiom(Axiom::sub_class("A", "B"));
    o.add_axiom(Axiom::sub_class("B", "C"));
    let s = saturate(&o);
    assert!(has_sub(&s, "A", "C"));
    assert_eq!(saturate(&s), s);
}

#[test]
fn saturation_uses_role_domains() {
    let mut o = Ontology::new("t");
    for c in ["A", "D", "R"] {
        o.add_concept(c);
    }
    o.add_role(Role::object("r", "D", "R"));
    o.add_axiom(Axiom::SubClassOf {
        sub: ConceptExpr::atomic("A"),
        sup: ConceptExpr::exists("r", ConceptExpr::Top),
    });
    assert!(has_sub(&saturate(&o), "A", "D"));
}

#[test]
fn saturated_conference_matches_closure() {
    let (o1, _, _) = conference_pair();
    let s = saturate(&o1);
    assert!(has_sub(&s, "Reviewer", "Person"));
    for c in &o1.concepts {
        for sup in told_closure(&o1, c) {
            if &sup != c {
                assert!(has_sub(&s, c, &sup), "{c} ⊑ {sup}");
            }
        }
    }
    assert_eq!(saturate(&s), s);
}

#[test]
fn conference_simple_alignment() {
    let (o1, o2, cfg) = conference_pair();
    let a = align_simple(&saturate(&o1), &saturate(&o2), &cfg).unwrap();
    let expected = [
        equiv("Person", "Person"),
        equiv("Document", "Document"),
        equiv("Review", "Review"),
        equiv("Reviewer", "Referee"),
        equiv("ConfMember", "ConfMember"),
        equiv("Conference", "Conference"),
        equiv("Submit", "Submit"),
        equiv("WriteReview", "WriteReview"),
        (Entity::role("writeReview"), Entity::role("WriteReview")),
        (Entity::role("name"), Entity::role("name")),
        (Entity::role("title"), Entity::role("title")),
    ];
    for (l, r) in &expected {
        let cell = a.find(l, r).unwrap_or_else(|| panic!("missing {l} = {r}"));
        assert_eq!(cell.relation, Relation::Equiv);
        assert!(cell.confidence >= 0.85);
    }
    for (l, r) in [("Paper", "Person"), ("Person", "Paper")] {
        assert!(a.find(&Entity::concept(l), &Entity::concept(r)).is_none());
    }
}

#[test]
fn one_to_one() {
    let (o1, o2, cfg) = conference_pair();
    let a = align_simple(&o1, &o2, &cfg).unwrap();
    let lefts: BTreeSet<_> = a.cells.iter().map(|c| &c.left).collect();
    let rights: BTreeSet<_> = a.cells.iter().map(|c| &c.right).collect();
    assert_eq!(lefts.len(), a.cells.len());
    assert_eq!(rights.len(), a.cells.len());
}

#[test]
fn identity_alignment() {
    let (o1, _, cfg) = conference_pair();
    let mut copy = o1.clone();
    copy.id = "copy".into();
    let a = align_simple(&o1, &copy, &cfg).unwrap();
    assert_eq!(a.cells.len(), o1.concepts.len() + o1.roles.len());
    for c in &a.cells {
        assert_eq!(c.left, c.right);
        assert_eq!(c.confidence, 1.0);
    }
}

#[test]
fn disjoint_vocabularies() {
    let mut a = Ontology::new("a");
    let mut b = Ontology::new("b");
    for c in ["Apple", "Banana"] {
        a.add_concept(c);
    }
    for c in ["Quartz", "Zinc"] {
        b.add_concept(c);
    }
    assert!(align_simple(&a, &b, &MatcherConfig::default()).unwrap().cells.is_empty());
}

#[test]
fn same_ontology_rejected() {
    let (o1, _, cfg) = conference_pair();
    assert_eq!(align_simple(&o1, &o1, &cfg), Err(AlignmentError::SameOntology("o1".into())));
    let empty = Alignment::new("o1", "o1x");
    assert!(matches!(align_complex(&o1, &o1, &empty, &cfg), Err(AlignmentError::SameOntology(_))));
}

fn sorted(mut a: Alignment) -> Alignment {
    a.cells.sort_by(|x, y| (&x.left, &x.right, x.relation).cmp(&(&y.left, &y.right, y.relation)));
    a
}

#[test]
fn symmetric_on_conference() {
    let (o1, o2, cfg) = conference_pair();
    let ab = align_simple(&o1, &o2, &cfg).unwrap();
    let ba = align_simple(&o2, &o1, &cfg).unwrap();
    assert_eq!(sorted(ab), sorted(ba.swapped()));
}

#[test]
fn reviewer_subgraph() {
    let (o1, _, _) = conference_pair();
    let sg = extract_subgraph(&saturate(&o1), "Reviewer").unwrap();
    assert!(sg.properties.contains(&SubGraphProperty {
        role: "writeReview".into(),
        min: 1,
        domain: "Reviewer".into(),
        range: "Review".into(),
        datatype: false,
    }));
    assert_eq!(sg.direct_supers, BTreeSet::from(["User".to_owned()]));
    assert_eq!(sg.disjoints, BTreeSet::from(["Author".to_owned()]));
    assert!(!sg.direct_supers.contains("Reviewer") && !sg.direct_subs.contains("Reviewer"));
    assert_eq!(
        sg.formula(),
        ConceptExpr::and([
            ConceptExpr::atomic("Reviewer"),
            ConceptExpr::exists("writeReview", ConceptExpr::atomic("Review"))
        ])
    );
}

#[test]
fn isolated_and_single_super() {
    let (o1, _, _) = conference_pair();
    let s = saturate(&o1);
    let conf = extract_subgraph(&s, "Conference").unwrap();
    assert!(conf.direct_subs.is_empty() && conf.direct_supers.is_empty());
    assert!(conf.disjoints.is_empty() && conf.properties.is_empty());
    let sp = extract_subgraph(&s, "SubmittedPaper").unwrap();
    assert_eq!(sp.direct_supers, BTreeSet::from(["Paper".to_owned()]));
    assert_eq!(extract_subgraph(&s, "Nope"), Err(AlignmentError::UnknownName("Nope".into())));
}

#[test]
fn reviewer_referee_subsumption() {
    let (o1, o2, cfg) = conference_pair();
    let (s1, s2) = (saturate(&o1), saturate(&o2));
    let simple = align_simple(&s1, &s2, &cfg).unwrap();
    let reviewer = extract_subgraph(&s1, "Reviewer").unwrap();
    let referee = extract_subgraph(&s2, "Referee").unwrap();
    assert!(subgraph_subsumes(&referee, &reviewer, &simple, &cfg));
    assert!(!subgraph_subsumes(&reviewer, &referee, &simple, &cfg));
    assert!(subgraph_subsumes(&reviewer, &reviewer, &simple, &cfg));
}

#[test]
fn unmatched_property_blocks_subsumption() {
    let (o1, o2, cfg) = conference_pair();
    let simple = align_simple(&o1, &o2, &cfg).unwrap();
    let referee = extract_subgraph(&saturate(&o2), "Referee").unwrap();
    let mut other = referee.clone();
    other.ontology = "o1".into();
    other.properties.clear();
    assert!(!subgraph_subsumes(&referee, &other, &simple.swapped(), &cfg));
    assert!(subgraph_subsumes(&other, &referee, &simple, &cfg));
}

fn reviewer_cell() -> Correspondence {
    Correspondence {
        left: Entity::Concept(ConceptExpr::and([
            ConceptExpr::atomic("Reviewer"),
            ConceptExpr::min_card(1, "writeReview", ConceptExpr::atomic("Review")),
        ])),
        right: Entity::Concept(ConceptExpr::and([
            ConceptExpr::atomic("Referee"),
            ConceptExpr::exists("WriteReview", ConceptExpr::atomic("Review")),
        ])),
        relation: Relation::SubsumedBy,
        confidence: 1.0,
        provenance: Provenance::Prop1,
    }
}

#[test]
fn conference_complex_alignment() {
    let (o1, o2, cfg) = conference_pair();
    let simple = align_simple(&saturate(&o1), &saturate(&o2), &cfg).unwrap();
    let a = align_complex(&o1, &o2, &simple, &cfg).unwrap();
    let expected = reviewer_cell();
    let found = a.find(&expected.left, &expected.right).expect("Reviewer/Referee formula cell");
    assert_eq!(found.relation, Relation::SubsumedBy);
    assert_eq!(found.provenance, Provenance::Prop1);

    let submitted = a
        .find(
            &Entity::concept("SubmittedPaper"),
            &Entity::Concept(ConceptExpr::exists("submit", ConceptExpr::atomic("Author"))),
        )
        .expect("SubmittedPaper cell");
    assert_eq!(submitted.relation, Relation::SubsumedBy);
    assert_eq!(submitted.provenance, Provenance::Prop2);

    let reviewer = extract_subgraph(&saturate(&o1), "Reviewer").unwrap();
    assert_eq!(expected.left, Entity::Concept(reviewer.formula()));
}

#[test]
fn complex_formulas_resolve() {
    let (o1, o2, cfg) = conference_pair();
    let simple = align_simple(&o1, &o2, &cfg).unwrap();
    for c in align_complex(&o1, &o2, &simple, &cfg).unwrap().cells {
        for (side, onto) in [(&c.left, &o1), (&c.right, &o2)] {
            if let Entity::Concept(e) = side {
                onto.check_expr(e).unwrap();
            }
        }
    }
}

#[test]
fn identical_ontologies_complex() {
    let (o1, _, cfg) = conference_pair();
    let mut copy = o1.clone();
    copy.id = "copy".into();
    let simple = align_simple(&o1, &copy, &cfg).unwrap();
    let a = align_complex(&o1, &copy, &simple, &cfg).unwrap();
    let s = saturate(&o1);
    for c in &o1.concepts {
        let f = Entity::Concept(extract_subgraph(&s, c).unwrap().formula());
        let cell = a.find(&f, &f).unwrap_or_else(|| panic!("no cell for {c}"));
        assert_eq!(cell.relation, Relation::Equiv);
    }
}

#[test]
fn json_cell_shape() {
    let mut a = Alignment::new("o1", "o2");
    a.push(Correspondence {
        left: Entity::concept("Reviewer"),
        right: Entity::concept("Referee"),
        relation: Relation::Equiv,
        confidence: 1.0,
        provenance: Provenance::Lexical,
    });
    assert_eq!(
        a.to_json(),
        r#"{"onto1":"o1","onto2":"o2","cells":[{"entity1":{"atomic":"o1#Reviewer"},"entity2":{"atomic":"o2#Referee"},"relation":"=","measure":1.0,"method":"Lexical"}]}"#
    );
    assert_eq!(Alignment::new("o1", "o2").to_json(), r#"{"onto1":"o1","onto2":"o2","cells":[]}"#);
}

#[test]
fn json_complex_round_trip() {
    let mut a = Alignment::new("o1", "o2");
    a.push(reviewer_cell());
    a.push(Correspondence {
        left: Entity::role("writeReview"),
        right: Entity::role("WriteReview"),
        relation: Relation::Equiv,
        confidence: 0.9,
        provenance: Provenance::Structural,
    });
    let text = a.to_json();
    assert!(text.contains(r#""and":"#) && text.contains(r#""relation":"<""#));
    assert!(text.contains(r#"{"property":"o2#WriteReview"}"#));
    let back = Alignment::from_json(&text).unwrap();
    assert_eq!(back, a);
    assert_eq!(back.to_json(), text);
}

#[test]
fn json_rejects_malformed() {
    let cell = |e1: &str, rel: &str, m: &str| {
        format!(r#"{{"onto1":"o1","onto2":"o2","cells":[{{"entity1":{e1},"entity2":{{"atomic":"o2#B"}},"relation":"{rel}","measure":{m},"method":"Lexical"}}]}}"#)
    };
    assert!(Alignment::from_json(&cell(r#"{"atomic":"o1#A"}"#, "=", "0.5")).is_ok());
    assert!(Alignment::from_json(&cell(r#"{"atomic":"o2#A"}"#, "=", "0.5")).is_err());
    assert!(Alignment::from_json(&cell(r#"{"atomic":"A"}"#, "=", "0.5")).is_err());
    assert!(Alignment::from_json(&cell(r#"{"atomic":"o1#A"}"#, "~", "0.5")).is_err());
    assert!(Alignment::from_json(&cell(r#"{"atomic":"o1#A"}"#, "=", "1.5")).is_err());
    assert!(Alignment::from_json(r#"{"onto1":"o1","onto2":"o1","cells":[]}"#).is_err());
}

fn arb_ontology(id: &'static str) -> impl Strategy<Value = Ontology> {
    let names = ["Alpha", "Beta", "Gamma", "Delta", "Epsilon", "Zeta", "Theta", "Kappa"];
    (
        proptest::sample::subsequence(names.to_vec(), 2..=8),
        proptest::collection::vec((0usize..8, 0usize..8), 0..10),
        proptest::collection::vec((0usize..8, 0usize..8), 0..4),
    )
        .prop_map(move |(concepts, edges, roles)| {
            let mut o = Ontology::new(id);
            for c in &concepts {
                o.add_concept(*c);
            }
            let pick = |i: usize| concepts[i % concepts.len()];
            for (a, b) in edges {
                if pick(a) != pick(b) {
                    o.add_axiom(Axiom::sub_class(pick(a), pick(b)));
                }
            }
            for (i, (d, r)) in roles.into_iter().enumerate() {
                o.add_role(Role::object(format!("link{i}"), pick(d), pick(r)));
            }
            o
        })
}

fn renamed(onto: &Ontology, id: &str) -> (Ontology, SynonymTable) {
    let fresh = |n: &str| format!("{n}Syn");
    let mut out = Ontology::new(id);
    let mut syn = SynonymTable::default();
    for c in &onto.concepts {
        out.add_concept(fresh(c));
        syn.add(c, &fresh(c));
    }
    for r in onto.roles.values() {
        out.add_role(Role::object(fresh(&r.name), fresh(&r.domain), fresh(&r.range)));
        syn.add(&r.name, &fresh(&r.name));
    }
    for ax in &onto.axioms {
        if let Axiom::SubClassOf { sub, sup } = ax {
            out.add_axiom(Axiom::SubClassOf {
                sub: sub.rename(&fresh, &fresh),
                sup: sup.rename(&fresh, &fresh),
            });
        }
    }
    (out, syn)
}

fn arb_subgraph() -> impl Strategy<Value = SubGraph> {
    let set = || proptest::collection::btree_set(prop_oneof![Just("A"), Just("B"), Just("C")].prop_map(String::from), 0..3);
    let prop = (prop_oneof![Just("r"), Just("s")], 0u32..3, prop_oneof![Just("A"), Just("B")]).prop_map(|(r, n, d)| {
        SubGraphProperty {
            role: r.into(),
            min: n,
            domain: d.into(),
            range: "C".into(),
            datatype: false,
        }
    });
    (set(), set(), set(), proptest::collection::vec(prop, 0..3)).prop_map(|(subs, disj, sups, mut props)| {
        props.sort();
        props.dedup();
        SubGraph {
            ontology: String::new(),
            center: "X".into(),
            direct_subs: subs,
            disjoints: disj,
            direct_supers: sups,
            properties: props,
            generalizations: BTreeMap::new(),
        }
    })
}

fn exact() -> MatcherConfig {
    MatcherConfig {
        threshold: 1.0,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn renamed_copy_recovers_identity(o in arb_ontology("left")) {
        let (copy, syn) = renamed(&o, "right");
        let cfg = MatcherConfig::with_synonyms(syn);
        let a = align_simple(&saturate(&o), &saturate(&copy), &cfg).unwrap();
        prop_assert_eq!(a.cells.len(), o.concepts.len() + o.roles.len());
        for c in &a.cells {
            let (l, r) = (c.left.as_name().unwrap(), c.right.as_name().unwrap());
            prop_assert_eq!(format!("{l}Syn"), r);
        }
    }

    #[test]
    fn simple_alignment_is_symmetric(a in arb_ontology("left"), b in arb_ontology("right")) {
        let cfg = MatcherConfig::default();
        let ab = align_simple(&a, &b, &cfg).unwrap();
        let ba = align_simple(&b, &a, &cfg).unwrap();
        prop_assert_eq!(sorted(ab), sorted(ba.swapped()));
    }

    #[test]
    fn subsumption_reflexive_and_transitive(
        a in arb_subgraph(), b in arb_subgraph(), c in arb_subgraph()
    ) {
        let (a, b, c) = (
            SubGraph { ontology: "p".into(), ..a },
            SubGraph { ontology: "q".into(), ..b },
            SubGraph { ontology: "p".into(), ..c },
        );
        let cfg = exact();
        let none = Alignment::new("p", "q");
        prop_assert!(subgraph_subsumes(&a, &a, &none, &cfg));
        if subgraph_subsumes(&a, &b, &none, &cfg) && subgraph_subsumes(&b, &c, &none, &cfg) {
            prop_assert!(subgraph_subsumes(&a, &c, &none, &cfg));
        }
    }

    #[test]
    fn alignment_json_round_trips(a in arb_ontology("left"), b in arb_ontology("right")) {
        let cfg = MatcherConfig::default();
        let simple = align_simple(&a, &b, &cfg).unwrap();
        let complex = align_complex(&a, &b, &simple, &cfg).unwrap();
        for al in [simple, complex] {
            let text = al.to_json();
            let back = Alignment::from_json(&text).unwrap();
            prop_assert_eq!(back.to_json(), text);
            prop_assert_eq!(back, al);
        }
    }
}
