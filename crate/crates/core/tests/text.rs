mod common;

use common::{all_configs, all_messages, oracle_priority_guards, random_env, random_std, rng};
use proptest::prelude::*;
use std::collections::BTreeSet;
use stdref::callproc::{build_step, CORPUS};
use stdref::model::{desugar, holds, Config, Environment, Message, Scope, Std, Trigger};
use stdref::text::{
    export_dot, export_json, import_json, parse_feature, parse_std, print_feature, print_std,
    JsonError,
};

fn corpus_stds() -> Vec<(&'static str, Std)> {
    CORPUS
        .iter()
        .filter(|(n, _)| n.ends_with(".std"))
        .map(|(n, t)| (*n, parse_std(t, n).unwrap()))
        .collect()
}

#[test]
fn corpus_stds_round_trip_through_text() {
    for (name, s) in corpus_stds() {
        let printed = print_std(&s);
        let back = parse_std(&printed, name).unwrap_or_else(|e| panic!("{name}: {e:?}\n{printed}"));
        assert_eq!(back, s, "{name}");
        assert_eq!(print_std(&back), printed, "{name}");
    }
}

#[test]
fn corpus_features_round_trip_through_text() {
    for (name, t) in CORPUS.iter().filter(|(n, _)| n.ends_with(".feat")) {
        let f = parse_feature(t, name).unwrap();
        let back = parse_feature(&print_feature(&f), name).unwrap();
        assert_eq!(back, f, "{name}");
    }
}

#[test]
fn corpus_stds_round_trip_through_json() {
    for (name, s) in corpus_stds() {
        assert_eq!(import_json(&export_json(&s)).unwrap(), s, "{name}");
    }
}

#[test]
fn json_with_wrong_format_is_rejected() {
    let j = export_json(&build_step(0)).replace("std/1", "std/9");
    assert!(matches!(import_json(&j), Err(JsonError::Format(f)) if f == "std/9"));
}

#[test]
fn dot_has_a_node_per_state_and_an_edge_per_transition() {
    let s = build_step(1);
    let dot = export_dot(&s);
    assert!(dot.starts_with("digraph \"callproc\" {"));
    for st in &s.states {
        assert!(dot.contains(&format!("\"{st}\" [shape=ellipse];")), "{st}");
    }
    assert_eq!(dot.matches("[shape=point]").count(), s.initial.len());
    let edges = dot
        .lines()
        .filter(|l| l.contains(" -> ") && !l.contains("__init"))
        .count();
    assert_eq!(edges, s.transitions.len());
    assert!(dot.contains("abandon / [dropped]"));
}

#[test]
fn desugaring_is_idempotent_on_the_corpus() {
    for n in 0..=5 {
        let d = desugar(&build_step(n)).unwrap();
        assert!(!d.has_surface_sugar());
        assert_eq!(desugar(&d).unwrap(), d);
    }
}

/// Indices whose desugared guard holds, evaluated by the library.
fn desugared_guards(
    d: &Std,
    env: &Environment,
    c: &Config,
    m: Option<&Message>,
) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for (i, t) in d.transitions.iter().enumerate() {
        if t.source != c.state {
            continue;
        }
        let binding: Vec<(String, stdref::model::Value)> = match (&t.trigger, m) {
            (Trigger::Eps, None) => vec![],
            (Trigger::Input { ctor, params }, Some(m)) if *ctor == m.ctor => {
                params.iter().cloned().zip(m.args.iter().cloned()).collect()
            }
            _ => continue,
        };
        let scope = Scope::new(&d.attributes, &c.vals).with_params(&binding);
        if holds(&t.guard, &scope, env).unwrap() {
            out.insert(i);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_stds_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = random_std(&mut r, true);
        let printed = print_std(&s);
        let back = parse_std(&printed, "gen.std").map_err(|e| TestCaseError::fail(format!("{e:?}\n{printed}")))?;
        prop_assert_eq!(&back, &s, "{}", printed);
        prop_assert_eq!(import_json(&export_json(&s)).unwrap(), s);
    }

    #[test]
    fn desugar_is_idempotent(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = desugar(&random_std(&mut r, true)).unwrap();
        prop_assert_eq!(desugar(&d).unwrap(), d);
    }

    #[test]
    fn desugared_guards_match_priority_reading(seed in any::<u64>()) {
        let mut r = rng(seed);
        let env = random_env(&mut r);
        let s = random_std(&mut r, true);
        let d = desugar(&s).unwrap();
        for c in all_configs(&s, &env) {
            prop_assert_eq!(desugared_guards(&d, &env, &c, None), oracle_priority_guards(&s, &env, &c, None));
            for m in all_messages(&s, &env) {
                prop_assert_eq!(
                    desugared_guards(&d, &env, &c, Some(&m)),
                    oracle_priority_guards(&s, &env, &c, Some(&m))
                );
            }
        }
    }
}
