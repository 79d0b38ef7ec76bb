//! Shared test support: a seeded generator of small random Stds and rule
//! applications, and brute-force oracles written independently of the
//! library's evaluator and interpreter.
#![allow(dead_code, clippy::too_many_arguments, clippy::type_complexity)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use stdref::interp::{Bounds, Step};
use stdref::model::{
    Attribute, BinOp, Config, Ctor, Environment, Expr, InitEntry, Message, OutputExpr, Signature,
    Sort, Std, SymbolDecl, Transition, Trigger, UnOp, Value,
};
use stdref::refine::{Redirect, RuleApplication};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn int(i: i64) -> Expr {
    Expr::Lit(Value::Int(i))
}

fn sym(s: &str) -> Expr {
    Expr::Lit(Value::Sym(s.into()))
}

/// Environment shared by generated Stds: `P(C)` total, `F(0..2)` partial.
pub fn random_env(r: &mut impl Rng) -> Environment {
    let mut env = Environment::new();
    env.add_domain("C", &["c0", "c1"]);
    env.declare("P", SymbolDecl::predicate(vec![Sort::enumeration("C")]));
    env.declare(
        "F",
        SymbolDecl::function(vec![Sort::int(0, 2)], Sort::int(0, 2)),
    );
    for c in ["c0", "c1"] {
        env.set(
            "P",
            vec![Value::Sym(c.into())],
            Value::Bool(r.gen_bool(0.5)),
        );
    }
    for i in 0..=2 {
        if r.gen_bool(0.6) {
            env.set("F", vec![Value::Int(i)], Value::Int(r.gen_range(0..=2)));
        }
    }
    env
}

struct Gen<'a, R: Rng> {
    r: &'a mut R,
    has_v0: bool,
    has_v1: bool,
}

impl<R: Rng> Gen<'_, R> {
    fn int_expr(&mut self, param: bool) -> Expr {
        let mut choices = vec![0, 1];
        if self.has_v0 {
            choices.extend([2, 3, 4]);
        }
        if param {
            choices.push(5);
        }
        match *choices.choose(self.r).unwrap() {
            0 | 1 => int(self.r.gen_range(0..=2)),
            2 => Expr::attr("v0"),
            3 => Expr::app("F", vec![Expr::attr("v0")]),
            4 => Expr::bin(BinOp::Sub, Expr::attr("v0"), int(1)),
            _ => Expr::param("p"),
        }
    }

    fn atom(&mut self, param: bool) -> Expr {
        let mut choices = vec![0, 1];
        if self.has_v0 || param {
            choices.extend([2, 3]);
        }
        if self.has_v1 {
            choices.extend([4, 5]);
        }
        if self.has_v0 {
            choices.push(6);
        }
        match *choices.choose(self.r).unwrap() {
            0 => Expr::tt(),
            1 => Expr::Lit(Value::Bool(self.r.gen_bool(0.3))),
            2 => Expr::eq(self.int_expr(param), self.int_expr(param)),
            3 => Expr::bin(BinOp::Lt, self.int_expr(param), self.int_expr(param)),
            4 => Expr::app("P", vec![Expr::attr("v1")]),
            5 => Expr::eq(Expr::attr("v1"), sym(["c0", "c1"].choose(self.r).unwrap())),
            _ => Expr::Defined(Box::new(Expr::app("F", vec![Expr::attr("v0")]))),
        }
    }

    fn guard(&mut self, param: bool, depth: u32) -> Expr {
        if depth == 0 || self.r.gen_bool(0.5) {
            return self.atom(param);
        }
        match self.r.gen_range(0..3) {
            0 => Expr::not(self.guard(param, depth - 1)),
            1 => Expr::bin(
                BinOp::And,
                self.guard(param, depth - 1),
                self.guard(param, depth - 1),
            ),
            _ => Expr::bin(
                BinOp::Or,
                self.guard(param, depth - 1),
                self.guard(param, depth - 1),
            ),
        }
    }

    fn post(&mut self, param: bool) -> Expr {
        let mut parts = Vec::new();
        if self.has_v0 && self.r.gen_bool(0.5) {
            parts.push(match self.r.gen_range(0..3) {
                0 => Expr::eq(Expr::primed("v0"), self.int_expr(param)),
                1 => Expr::bin(BinOp::Le, Expr::primed("v0"), self.int_expr(param)),
                _ => Expr::bin(BinOp::Ne, Expr::primed("v0"), Expr::attr("v0")),
            });
        }
        if self.has_v1 && self.r.gen_bool(0.4) {
            parts.push(if self.r.gen_bool(0.5) {
                Expr::eq(
                    Expr::primed("v1"),
                    sym(["c0", "c1"].choose(self.r).unwrap()),
                )
            } else {
                Expr::app("P", vec![Expr::primed("v1")])
            });
        }
        parts.into_iter().fold(Expr::tt(), Expr::and)
    }

    fn outputs(&mut self, param: bool) -> Vec<OutputExpr> {
        let n = self.r.gen_range(0..=2);
        (0..n)
            .map(|_| {
                if self.r.gen_bool(0.5) {
                    OutputExpr {
                        ctor: "x".into(),
                        args: vec![],
                    }
                } else {
                    let e = if param && self.r.gen_bool(0.5) {
                        Expr::param("p")
                    } else if self.has_v0 {
                        Expr::attr("v0")
                    } else {
                        int(self.r.gen_range(0..=2))
                    };
                    OutputExpr {
                        ctor: "y".into(),
                        args: vec![e],
                    }
                }
            })
            .collect()
    }

    fn transition(&mut self, label: String, states: &[String], sugar: bool) -> Transition {
        let source = states.choose(self.r).unwrap().clone();
        let target = states.choose(self.r).unwrap().clone();
        let trigger = match self.r.gen_range(0..10) {
            0 => Trigger::Eps,
            1..=4 => Trigger::input("a", &[]),
            _ => Trigger::input("b", &["p"]),
        };
        let param = trigger.params().len() == 1;
        let mut t = Transition::new(source, target, trigger)
            .labeled(label)
            .with_guard(self.guard(param, 2))
            .with_outputs(self.outputs(param))
            .with_post(self.post(param));
        if sugar {
            match self.r.gen_range(0..10) {
                0 => t.guard = Expr::Else,
                1 | 2 => t.priority = Some(self.r.gen_range(1..=3)),
                _ => {}
            }
        }
        t
    }
}

/// A small random Std: at most 4 control states, at most 2 attributes with
/// at most 3 values each. With `sugar`, some guards are `else` or carry
/// priorities.
pub fn random_std(r: &mut impl Rng, sugar: bool) -> Std {
    let n_states = r.gen_range(1..=4);
    let states: Vec<String> = (0..n_states).map(|i| format!("s{i}")).collect();
    let has_v0 = r.gen_bool(0.7);
    let has_v1 = r.gen_bool(0.4);
    let mut attributes = Vec::new();
    if has_v0 {
        attributes.push(Attribute {
            name: "v0".into(),
            sort: Sort::int(0, 2),
        });
    }
    if has_v1 {
        attributes.push(Attribute {
            name: "v1".into(),
            sort: Sort::enumeration("C"),
        });
    }
    let mut g = Gen { r, has_v0, has_v1 };
    let mut initial = vec![InitEntry {
        state: "s0".into(),
        pred: if has_v0 && g.r.gen_bool(0.5) {
            Expr::eq(Expr::attr("v0"), int(0))
        } else {
            Expr::tt()
        },
    }];
    if n_states > 1 && g.r.gen_bool(0.3) {
        initial.push(InitEntry {
            state: "s1".into(),
            pred: Expr::tt(),
        });
    }
    let n_trans = g.r.gen_range(0..=6);
    let mut transitions: Vec<Transition> = Vec::new();
    for i in 0..n_trans {
        let t = g.transition(format!("t{i}"), &states, sugar);
        let dup_else = matches!(t.guard, Expr::Else)
            && transitions.iter().any(|u| {
                matches!(u.guard, Expr::Else)
                    && u.source == t.source
                    && u.trigger.ctor() == t.trigger.ctor()
            });
        if !dup_else {
            transitions.push(t);
        }
    }
    let mut domains = std::collections::BTreeMap::new();
    if has_v1 {
        domains.insert("C".to_string(), stdref::model::DomainDecl::Abstract);
    }
    Std {
        name: "gen".into(),
        domains,
        signature: Signature {
            inputs: vec![
                Ctor::new("a", vec![]),
                Ctor::new("b", vec![Sort::int(0, 1)]),
            ],
            outputs: vec![
                Ctor::new("x", vec![]),
                Ctor::new("y", vec![Sort::int(0, 2)]),
            ],
        },
        attributes,
        states,
        initial,
        transitions,
    }
}

/// A random rule application for `std`; it may or may not satisfy the
/// rule's side conditions.
pub fn random_rule(r: &mut impl Rng, std: &Std) -> RuleApplication {
    let labels: Vec<String> = std
        .transitions
        .iter()
        .filter_map(|t| t.label.clone())
        .collect();
    let has_v0 = std.attr("v0").is_some();
    let has_v1 = std.attr("v1").is_some();
    let mut g = Gen { r, has_v0, has_v1 };
    match g.r.gen_range(0..6) {
        0 => {
            let names = vec!["n0".to_string(), "n1".to_string()];
            let transitions = if g.r.gen_bool(0.5) {
                vec![g.transition("nt".into(), &names, false)]
            } else {
                vec![]
            };
            RuleApplication::AddStates { names, transitions }
        }
        1 => RuleApplication::RemoveStates {
            names: vec![std.states.choose(g.r).unwrap().clone()],
        },
        2 => {
            let state = std.states.choose(g.r).unwrap().clone();
            let parts = vec![format!("{state}a"), format!("{state}b")];
            let mut redirects = Vec::new();
            for t in std
                .transitions
                .iter()
                .filter(|t| t.target == state && t.label.is_some())
            {
                if !g.r.gen_bool(0.5) {
                    continue;
                }
                redirects.push(Redirect {
                    transition: t.label.clone().unwrap(),
                    part: parts.choose(g.r).unwrap().clone(),
                    strengthen: if has_v0 && g.r.gen_bool(0.3) {
                        Some(Expr::bin(BinOp::Le, Expr::primed("v0"), int(1)))
                    } else {
                        None
                    },
                });
            }
            RuleApplication::SplitState {
                state,
                parts,
                redirects,
            }
        }
        3 => {
            let n = g.r.gen_range(1..=2);
            let transitions = (0..n)
                .map(|i| g.transition(format!("add{i}"), &std.states, false))
                .collect();
            RuleApplication::AddTransitions { transitions }
        }
        4 if !labels.is_empty() => RuleApplication::RemoveTransitions {
            labels: vec![labels.choose(g.r).unwrap().clone()],
        },
        _ => RuleApplication::RemoveInitialStates {
            names: vec![std.initial.choose(g.r).unwrap().state.clone()],
        },
    }
}

// ---- independent oracles ----

fn lookup(env: &Environment, f: &str, args: &[Value]) -> Option<Value> {
    let t = env.tables.get(f)?;
    t.rows.get(args).cloned().or_else(|| t.default.clone())
}

/// Reference evaluator for the expression subset produced by the
/// generator and by desugaring. `None` is Undefined.
pub fn oracle_eval(
    e: &Expr,
    std: &Std,
    vals: &[Value],
    primed: Option<&[Value]>,
    params: &[(String, Value)],
    env: &Environment,
) -> Option<Value> {
    let idx = |n: &str| std.attributes.iter().position(|a| a.name == n).unwrap();
    let ev = |x: &Expr| oracle_eval(x, std, vals, primed, params, env);
    match e {
        Expr::Lit(v) => Some(v.clone()),
        Expr::Attr(n) => Some(vals[idx(n)].clone()),
        Expr::Primed(n) => Some(primed.expect("primed outside post")[idx(n)].clone()),
        Expr::Param(n) => Some(params.iter().find(|(p, _)| p == n).unwrap().1.clone()),
        Expr::App(f, args) => {
            let vs: Option<Vec<Value>> = args.iter().map(ev).collect();
            lookup(env, f, &vs?)
        }
        Expr::Defined(x) => Some(Value::Bool(ev(x).is_some())),
        Expr::Unary(UnOp::Holds, x) => Some(Value::Bool(ev(x) == Some(Value::Bool(true)))),
        Expr::Unary(UnOp::Not, x) => match ev(x)? {
            Value::Bool(b) => Some(Value::Bool(!b)),
            _ => panic!("not on non-bool"),
        },
        Expr::Binary(op, l, r) => {
            let (l, r) = (ev(l)?, ev(r)?);
            let i = |v: &Value| match v {
                Value::Int(i) => *i,
                _ => panic!("int expected"),
            };
            let b = |v: &Value| match v {
                Value::Bool(b) => *b,
                _ => panic!("bool expected"),
            };
            Some(match op {
                BinOp::And => Value::Bool(b(&l) && b(&r)),
                BinOp::Or => Value::Bool(b(&l) || b(&r)),
                BinOp::Implies => Value::Bool(!b(&l) || b(&r)),
                BinOp::Eq => Value::Bool(l == r),
                BinOp::Ne => Value::Bool(l != r),
                BinOp::Lt => Value::Bool(i(&l) < i(&r)),
                BinOp::Le => Value::Bool(i(&l) <= i(&r)),
                BinOp::Gt => Value::Bool(i(&l) > i(&r)),
                BinOp::Ge => Value::Bool(i(&l) >= i(&r)),
                BinOp::Add => Value::Int(i(&l) + i(&r)),
                BinOp::Sub => Value::Int(i(&l) - i(&r)),
            })
        }
        other => panic!("oracle does not cover {other:?}"),
    }
}

fn oracle_holds(
    e: &Expr,
    std: &Std,
    vals: &[Value],
    primed: Option<&[Value]>,
    params: &[(String, Value)],
    env: &Environment,
) -> bool {
    oracle_eval(e, std, vals, primed, params, env) == Some(Value::Bool(true))
}

fn sort_values(s: &Sort, env: &Environment) -> Vec<Value> {
    match s {
        Sort::Bool => vec![Value::Bool(false), Value::Bool(true)],
        Sort::Int { lo, hi } => (*lo..=*hi).map(Value::Int).collect(),
        Sort::Enum { domain } => env.decls.domains[domain]
            .iter()
            .cloned()
            .map(Value::Sym)
            .collect(),
        Sort::List { .. } => panic!("oracle has no lists"),
    }
}

/// Every valuation of the attributes.
pub fn all_valuations(std: &Std, env: &Environment) -> Vec<Vec<Value>> {
    let mut out = vec![vec![]];
    for a in &std.attributes {
        let vs = sort_values(&a.sort, env);
        out = out
            .into_iter()
            .flat_map(|p| {
                vs.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(v.clone());
                    q
                })
            })
            .collect();
    }
    out
}

pub fn all_configs(std: &Std, env: &Environment) -> Vec<Config> {
    let vals = all_valuations(std, env);
    std.states
        .iter()
        .flat_map(|s| vals.iter().map(move |v| Config::new(s.clone(), v.clone())))
        .collect()
}

pub fn all_messages(std: &Std, env: &Environment) -> Vec<Message> {
    let mut out = Vec::new();
    for c in &std.signature.inputs {
        let mut tuples = vec![vec![]];
        for s in &c.params {
            let vs = sort_values(s, env);
            tuples = tuples
                .into_iter()
                .flat_map(|p: Vec<Value>| {
                    vs.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(v.clone());
                        q
                    })
                })
                .collect();
        }
        out.extend(tuples.into_iter().map(|a| Message::new(c.name.clone(), a)));
    }
    out
}

/// δ enumerated pointwise over every possible successor configuration:
/// (transition index, outputs, successor) for a desugared Std.
pub fn oracle_delta(
    std: &Std,
    env: &Environment,
    c: &Config,
    m: Option<&Message>,
) -> BTreeSet<(usize, Vec<Message>, Config)> {
    let mut out = BTreeSet::new();
    let succs = all_configs(std, env);
    for (i, t) in std.transitions.iter().enumerate() {
        if t.source != c.state {
            continue;
        }
        let params: Vec<(String, Value)> = match (&t.trigger, m) {
            (Trigger::Eps, None) => vec![],
            (Trigger::Input { ctor, params }, Some(m)) if *ctor == m.ctor => {
                params.iter().cloned().zip(m.args.iter().cloned()).collect()
            }
            _ => continue,
        };
        if !oracle_holds(&t.guard, std, &c.vals, None, &params, env) {
            continue;
        }
        let outs: Option<Vec<Message>> = t
            .outputs
            .iter()
            .map(|o| {
                let args: Option<Vec<Value>> = o
                    .args
                    .iter()
                    .map(|a| oracle_eval(a, std, &c.vals, None, &params, env))
                    .collect();
                args.map(|a| Message::new(o.ctor.clone(), a))
            })
            .collect();
        let Some(outs) = outs else { continue };
        let primed = t.post.primed_attrs();
        for s in &succs {
            if s.state != t.target {
                continue;
            }
            let frame_ok = std
                .attributes
                .iter()
                .enumerate()
                .all(|(k, a)| primed.contains(&a.name) || s.vals[k] == c.vals[k]);
            if frame_ok && oracle_holds(&t.post, std, &c.vals, Some(&s.vals), &params, env) {
                out.insert((i, outs.clone(), s.clone()));
            }
        }
    }
    out
}

/// Naive recursive reading of one step: CHAOS iff some configuration on an
/// ε-path (within budget) has neither a matching nor an ε-successor.
pub fn oracle_step(std: &Std, env: &Environment, c: &Config, m: &Message, bounds: &Bounds) -> Step {
    fn go(
        std: &Std,
        env: &Environment,
        c: &Config,
        m: &Message,
        out: Vec<Message>,
        used: usize,
        b: &Bounds,
        acc: &mut (
            BTreeSet<(Vec<Message>, Config)>,
            BTreeSet<Vec<Message>>,
            bool,
        ),
    ) -> bool {
        let ext = oracle_delta(std, env, c, Some(m));
        let eps = oracle_delta(std, env, c, None);
        if ext.is_empty() && eps.is_empty() {
            return false;
        }
        for (_, o, s) in ext {
            let v = cat(&out, o, b.output_cap, &mut acc.2);
            acc.0.insert((v, s));
        }
        for (_, o, s) in eps {
            let v = cat(&out, o, b.output_cap, &mut acc.2);
            if used < b.eps_budget {
                if !go(std, env, &s, m, v, used + 1, b, acc) {
                    return false;
                }
            } else {
                acc.1.insert(v);
            }
        }
        true
    }
    fn cat(out: &[Message], more: Vec<Message>, cap: usize, hit: &mut bool) -> Vec<Message> {
        let mut v = out.to_vec();
        v.extend(more);
        if v.len() > cap {
            *hit = true;
            v.truncate(cap);
        }
        v
    }
    let mut acc = (BTreeSet::new(), BTreeSet::new(), false);
    if go(std, env, c, m, vec![], 0, bounds, &mut acc) {
        Step::Reactions {
            reactions: acc.0,
            diverged: acc.1,
            cap_hit: acc.2,
        }
    } else {
        Step::Chaos
    }
}

/// Indices of transitions of a sugared Std whose effective guard holds, read
/// directly: an `else` guard holds when no sibling guard holds, and a
/// prioritized guard holds when its own does and no sibling with a smaller
/// priority number holds.
pub fn oracle_priority_guards(
    std: &Std,
    env: &Environment,
    c: &Config,
    m: Option<&Message>,
) -> BTreeSet<usize> {
    let raw = |t: &Transition| -> Option<bool> {
        let params: Vec<(String, Value)> = match (&t.trigger, m) {
            (Trigger::Eps, None) => vec![],
            (Trigger::Input { ctor, params }, Some(m)) if *ctor == m.ctor => {
                params.iter().cloned().zip(m.args.iter().cloned()).collect()
            }
            _ => return None,
        };
        if t.source != c.state {
            return None;
        }
        if matches!(t.guard, Expr::Else) {
            return Some(false);
        }
        Some(oracle_holds(&t.guard, std, &c.vals, None, &params, env))
    };
    let mut out = BTreeSet::new();
    for (i, t) in std.transitions.iter().enumerate() {
        let Some(own) = raw(t) else { continue };
        let siblings = std.transitions.iter().enumerate().filter(|(j, u)| {
            *j != i
                && u.source == t.source
                && u.trigger.ctor() == t.trigger.ctor()
                && raw(u).is_some()
        });
        let ok = if matches!(t.guard, Expr::Else) {
            siblings
                .filter(|(_, u)| !matches!(u.guard, Expr::Else))
                .all(|(_, u)| raw(u) == Some(false))
        } else if let Some(p) = t.priority {
            own && siblings
                .filter(|(_, u)| {
                    matches!(u.priority, Some(q) if q < p) && !matches!(u.guard, Expr::Else)
                })
                .all(|(_, u)| raw(u) == Some(false))
        } else {
            own
        };
        if ok {
            out.insert(i);
        }
    }
    out
}
