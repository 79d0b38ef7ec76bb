mod common;

use common::{all_configs, all_messages, oracle_delta, oracle_step, random_env, random_std, rng};
use proptest::prelude::*;
use std::collections::{BTreeMap, BTreeSet};
use stdref::callproc::{default_env, parse_corpus_std};
use stdref::interp::{
    check_monotone, simulate, step, traces, Bounds, Counterexample, Outcome, Step, TraceSet,
    TRACES_FORMAT,
};
use stdref::model::{desugar, enabled_transitions, Config, Environment, Message, Universe, Value};
use stdref::text::{parse_messages, parse_std};

fn msgs(s: &str) -> Vec<Message> {
    parse_messages(s).unwrap()
}

fn outputs(sets: &[&str]) -> Outcome {
    Outcome::Outputs(sets.iter().map(|s| msgs(s)).collect())
}

fn run(std: &stdref::model::Std, env: &Environment, input: &str) -> Outcome {
    let d = desugar(std).unwrap();
    let u = Universe::new(&d, env);
    simulate(&u, &msgs(input), &Bounds::default()).unwrap().0
}

#[test]
fn tel_lift_then_dial_rings_or_is_busy() {
    let tel = parse_corpus_std("tel.std");
    let env = Environment::new();
    for n in 0..=9 {
        let got = run(&tel, &env, &format!("LT, DL({n})"));
        assert_eq!(got, outputs(&["DT, RG", "DT, BY"]), "n = {n}");
    }
}

#[test]
fn empty_input_observes_the_empty_output() {
    let tel = parse_corpus_std("tel.std");
    assert_eq!(run(&tel, &Environment::new(), ""), outputs(&[""]));
}

#[test]
fn tel_dial_while_idle_is_chaos() {
    let tel = parse_corpus_std("tel.std");
    assert!(run(&tel, &Environment::new(), "DL(3)").is_chaos());
}

/// Reference stack: `None` is CHAOS (pop or top on empty, push on full).
fn stack_model(input: &[Message], cap: usize) -> Option<Vec<Message>> {
    let mut l: Vec<i64> = Vec::new();
    let mut out = Vec::new();
    for m in input {
        match (m.ctor.as_str(), m.args.first()) {
            ("Push", Some(Value::Int(x))) => {
                if l.len() == cap {
                    return None;
                }
                l.push(*x);
            }
            ("Pop", _) => {
                l.pop()?;
            }
            ("Top", _) => out.push(Message::new("", vec![Value::Int(*l.last()?)])),
            _ => unreachable!(),
        }
    }
    Some(out)
}

#[test]
fn stack_push_then_top() {
    let stack = parse_corpus_std("stack.std");
    let got = run(&stack, &Environment::new(), "Push(2), Top");
    assert_eq!(
        got,
        Outcome::Outputs(BTreeSet::from([vec![Message::new(
            "",
            vec![Value::Int(2)]
        )]]))
    );
}

#[test]
fn stack_agrees_with_list_model_at_k4() {
    let stack = parse_corpus_std("stack.std");
    let env = Environment::new();
    let d = desugar(&stack).unwrap();
    let u = Universe::new(&d, &env);
    let ts = traces(&u, &Bounds::default()).unwrap();
    assert_eq!(
        ts.entries.len(),
        (0..=4).map(|n| 5usize.pow(n)).sum::<usize>()
    );
    for (input, got) in &ts.entries {
        let want = match stack_model(input, 3) {
            None => Outcome::Chaos,
            Some(o) => Outcome::Outputs(BTreeSet::from([o])),
        };
        let chaos_prefix = (0..input.len()).any(|n| stack_model(&input[..n], 3).is_none());
        if !chaos_prefix {
            assert_eq!(got, &want, "input {input:?}");
        } else {
            assert!(got.is_chaos());
        }
    }
    assert!(check_monotone(&ts).pass);
}

#[test]
fn step0_call_from_idle_enters_connect() {
    let s0 = desugar(&parse_corpus_std("step0.std")).unwrap();
    let env = default_env();
    let u = Universe::new(&s0, &env);
    let idle = Config::new("idle", vec![Value::Sym("d1".into()); 3]);
    let Step::Reactions { reactions, .. } =
        step(&u, &idle, &msgs("call(d1, d2)")[0], &Bounds::default()).unwrap()
    else {
        panic!("chaos")
    };
    let want = Config::new(
        "connect",
        vec![
            Value::Sym("d1".into()),
            Value::Sym("d2".into()),
            Value::Sym("d2".into()),
        ],
    );
    assert_eq!(reactions, BTreeSet::from([(vec![], want)]));
}

#[test]
fn step0_abandon_at_connect_is_chaos() {
    let s0 = desugar(&parse_corpus_std("step0.std")).unwrap();
    let env = default_env();
    let u = Universe::new(&s0, &env);
    let c = Config::new(
        "connect",
        vec![
            Value::Sym("d1".into()),
            Value::Sym("d2".into()),
            Value::Sym("d2".into()),
        ],
    );
    assert_eq!(
        step(&u, &c, &Message::plain("abandon"), &Bounds::default()).unwrap(),
        Step::Chaos
    );
}

const EPS_FIXTURE: &str = "std e = {
  input go | stop
  output x | y
  states
    a init
    b
    c
  go: a -> b : go / [x]
  hop: b -> c : eps / [y]
  stop: c -> a : stop
}
";

#[test]
fn eps_path_handles_a_message() {
    let s = parse_std(EPS_FIXTURE, "e.std").unwrap();
    let env = Environment::new();
    assert_eq!(run(&s, &env, "go"), outputs(&["x", "x, y"]));
    assert_eq!(run(&s, &env, "go, stop"), outputs(&["x, y"]));
    assert!(run(&s, &env, "stop").is_chaos());
}

#[test]
fn eps_budget_zero_stalls_the_path() {
    let s = parse_std(EPS_FIXTURE, "e.std").unwrap();
    let env = Environment::new();
    let u = Universe::new(&s, &env);
    let b = Bounds {
        eps_budget: 0,
        ..Bounds::default()
    };
    let (o, warnings) = simulate(&u, &msgs("go, stop"), &b).unwrap();
    assert_eq!(o, outputs(&["x, y"]));
    assert!(!warnings.is_empty());
}

#[test]
fn eps_loop_diverges_without_hanging() {
    let s = parse_std(
        "std l = {
  input go
  output x
  states
    a init
  spin: a -> a : eps / [x]
}
",
        "l.std",
    )
    .unwrap();
    let env = Environment::new();
    let u = Universe::new(&s, &env);
    let b = Bounds {
        output_cap: 3,
        ..Bounds::default()
    };
    let ts = traces(&u, &b).unwrap();
    assert!(ts.cap_hit);
    assert!(ts
        .entries
        .values()
        .all(|o| o.outputs().unwrap().iter().all(|v| v.len() <= 3)));
    assert!(check_monotone(&ts).pass);
}

fn hand_traces(entries: Vec<(&str, Outcome)>) -> TraceSet {
    TraceSet {
        bounds: Bounds::default(),
        alphabet: msgs("a, b"),
        entries: entries
            .into_iter()
            .map(|(i, o)| (msgs(i), o))
            .collect::<BTreeMap<_, _>>(),
        reached: BTreeSet::new(),
        warnings: vec![],
        cap_hit: false,
    }
}

#[test]
fn monotonicity_violation_is_reported() {
    let ts = hand_traces(vec![
        ("", outputs(&[""])),
        ("a", outputs(&["x"])),
        ("a, b", outputs(&["y"])),
    ]);
    let v = check_monotone(&ts);
    assert!(!v.pass);
    let Some(Counterexample::Monotonicity {
        shorter, longer, ..
    }) = v.counterexample
    else {
        panic!("{v:?}")
    };
    assert_eq!(shorter, msgs("a"));
    assert_eq!(longer, msgs("a, b"));
}

#[test]
fn chaos_after_chaos_is_monotone() {
    let ts = hand_traces(vec![
        ("", outputs(&[""])),
        ("a", Outcome::Chaos),
        ("a, b", Outcome::Chaos),
    ]);
    assert!(check_monotone(&ts).pass);
    let ts = hand_traces(vec![("a", Outcome::Chaos), ("a, b", outputs(&[""]))]);
    assert!(!check_monotone(&ts).pass);
}

#[test]
fn traces_json_carries_format_and_bounds() {
    let tel = parse_corpus_std("tel.std");
    let env = Environment::new();
    let u = Universe::new(&tel, &env);
    let j = traces(&u, &Bounds::default().with_k(2)).unwrap().to_json();
    assert_eq!(j["format"], TRACES_FORMAT);
    assert_eq!(j["bounds"]["k"], 2);
    assert_eq!(j["entries"][0]["input"], serde_json::json!([]));
}

#[test]
fn max_states_is_a_resource_error() {
    let stack = parse_corpus_std("stack.std");
    let env = Environment::new();
    let d = desugar(&stack).unwrap();
    let u = Universe::new(&d, &env);
    let b = Bounds {
        max_states: 5,
        ..Bounds::default()
    };
    let err = traces(&u, &b).unwrap_err();
    assert!(err.to_string().contains("max-states"), "{err}");
}

fn flat_delta(
    u: &Universe<'_>,
    c: &Config,
    m: Option<&Message>,
) -> BTreeSet<(usize, Vec<Message>, Config)> {
    enabled_transitions(u, c, m)
        .unwrap()
        .into_iter()
        .flat_map(|e| e.reactions.into_iter().map(move |(o, n)| (e.index, o, n)))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn delta_matches_brute_force(seed in any::<u64>()) {
        let mut r = rng(seed);
        let env = random_env(&mut r);
        let std = desugar(&random_std(&mut r, true)).unwrap();
        let u = Universe::new(&std, &env);
        for c in all_configs(&std, &env) {
            prop_assert_eq!(flat_delta(&u, &c, None), oracle_delta(&std, &env, &c, None));
            for m in all_messages(&std, &env) {
                prop_assert_eq!(flat_delta(&u, &c, Some(&m)), oracle_delta(&std, &env, &c, Some(&m)));
            }
        }
    }

    #[test]
    fn step_matches_recursive_oracle(seed in any::<u64>(), budget in 0usize..3, cap in 1usize..4) {
        let mut r = rng(seed);
        let env = random_env(&mut r);
        let std = desugar(&random_std(&mut r, true)).unwrap();
        let u = Universe::new(&std, &env);
        let b = Bounds { eps_budget: budget, output_cap: cap, ..Bounds::default() };
        for c in all_configs(&std, &env) {
            for m in all_messages(&std, &env) {
                prop_assert_eq!(step(&u, &c, &m, &b).unwrap(), oracle_step(&std, &env, &c, &m, &b));
            }
        }
    }

    #[test]
    fn chaos_propagates_to_extensions(seed in any::<u64>()) {
        let mut r = rng(seed);
        let env = random_env(&mut r);
        let std = desugar(&random_std(&mut r, true)).unwrap();
        let u = Universe::new(&std, &env);
        let ts = traces(&u, &Bounds::default().with_k(3)).unwrap();
        for (i, o) in &ts.entries {
            if o.is_chaos() {
                for m in &ts.alphabet {
                    let mut j = i.clone();
                    j.push(m.clone());
                    if let Some(oj) = ts.get(&j) {
                        prop_assert!(oj.is_chaos());
                    }
                }
            }
        }
        prop_assert!(check_monotone(&ts).pass);
    }

    #[test]
    fn raising_k_only_adds_entries(seed in any::<u64>()) {
        let mut r = rng(seed);
        let env = random_env(&mut r);
        let std = desugar(&random_std(&mut r, true)).unwrap();
        let u = Universe::new(&std, &env);
        let t2 = traces(&u, &Bounds::default().with_k(2)).unwrap();
        let t3 = traces(&u, &Bounds::default().with_k(3)).unwrap();
        for (i, o) in &t2.entries {
            prop_assert_eq!(t3.get(i), Some(o));
        }
        prop_assert!(t3.entries.len() >= t2.entries.len());
    }
}
