//! Refinement calculus: the six syntactic rules with checked side
//! conditions, and semantic refinement as bounded trace-set inclusion.

use crate::interp::{traces_over, Bounds, Counterexample, InterpError, Outcome, TraceSet, Verdict};
use crate::model::{
    desugar, enabled_transitions, holds, input_instances, reachable_configurations, validate_std,
    Config, DesugarError, Environment, EvalError, Message, Scope, Std, Trigger, Universe, Value,
};
use crate::model::{Expr, Transition};
use crate::text::parser::resolve_transition;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

/// Redirection of one incoming transition when splitting a state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Redirect {
    pub transition: String,
    pub part: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strengthen: Option<Expr>,
}

/// One instance of a refinement rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum RuleApplication {
    AddStates {
        names: Vec<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        transitions: Vec<Transition>,
    },
    RemoveStates {
        names: Vec<String>,
    },
    SplitState {
        state: String,
        parts: Vec<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        redirects: Vec<Redirect>,
    },
    AddTransitions {
        transitions: Vec<Transition>,
    },
    RemoveTransitions {
        labels: Vec<String>,
    },
    RemoveInitialStates {
        names: Vec<String>,
    },
}

impl RuleApplication {
    pub fn rule_name(&self) -> &'static str {
        match self {
            RuleApplication::AddStates { .. } => "add-states",
            RuleApplication::RemoveStates { .. } => "remove-states",
            RuleApplication::SplitState { .. } => "split",
            RuleApplication::AddTransitions { .. } => "add-transitions",
            RuleApplication::RemoveTransitions { .. } => "remove-transitions",
            RuleApplication::RemoveInitialStates { .. } => "remove-initial",
        }
    }
}

/// A violated side condition, with a witness configuration and trigger
/// where one exists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleError {
    pub rule: String,
    pub condition: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl RuleError {
    fn new(rule: &str, condition: impl Into<String>) -> RuleError {
        RuleError {
            rule: rule.into(),
            condition: condition.into(),
            witness: None,
        }
    }

    fn at(mut self, std: &Std, c: &Config, trigger: Option<&Message>) -> RuleError {
        let t = trigger.map(|m| m.to_string()).unwrap_or_else(|| "ε".into());
        self.witness = Some(format!("{} on {t}", c.display(std)));
        self
    }
}

impl fmt::Display for RuleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.rule, self.condition)?;
        if let Some(w) = &self.witness {
            write!(f, " (witness: {w})")?;
        }
        Ok(())
    }
}

impl std::error::Error for RuleError {}

fn eval_err(rule: &str) -> impl Fn(EvalError) -> RuleError + '_ {
    move |e| RuleError::new(rule, format!("evaluation failed: {e}"))
}

fn desugared(rule: &str, std: &Std) -> Result<Std, RuleError> {
    desugar(std).map_err(|e| RuleError::new(rule, e.to_string()))
}

fn triggers(u: &Universe<'_>) -> Vec<Option<Message>> {
    std::iter::once(None)
        .chain(input_instances(u).into_iter().map(Some))
        .collect()
}

fn matches_trigger(t: &Trigger, m: Option<&Message>) -> Option<Vec<(String, Value)>> {
    match (t, m) {
        (Trigger::Eps, None) => Some(vec![]),
        (Trigger::Input { ctor, params }, Some(m))
            if *ctor == m.ctor && params.len() == m.args.len() =>
        {
            Some(params.iter().cloned().zip(m.args.iter().cloned()).collect())
        }
        _ => None,
    }
}

/// Whether transition `i` of `u` has its trigger matched by `m` and its
/// guard true at `c`.
fn guard_true(
    u: &Universe<'_>,
    i: usize,
    c: &Config,
    m: Option<&Message>,
) -> Result<bool, EvalError> {
    let t = &u.std.transitions[i];
    if t.source != c.state {
        return Ok(false);
    }
    let Some(binding) = matches_trigger(&t.trigger, m) else {
        return Ok(false);
    };
    let scope = Scope::new(&u.std.attributes, &c.vals).with_params(&binding);
    holds(&t.guard, &scope, u.env)
}

type Reactions = BTreeSet<(Vec<Message>, Config)>;

fn reactions_where(
    u: &Universe<'_>,
    c: &Config,
    m: Option<&Message>,
    keep: impl Fn(usize) -> bool,
) -> Result<Reactions, EvalError> {
    Ok(enabled_transitions(u, c, m)?
        .into_iter()
        .filter(|e| keep(e.index))
        .flat_map(|e| e.reactions)
        .collect())
}

fn check_valid(rule: &str, std: &Std, env: &Environment) -> Result<(), RuleError> {
    let diags = validate_std(std, Some(&env.decls));
    match diags.first() {
        None => Ok(()),
        Some(d) => Err(RuleError::new(
            rule,
            format!("result is not well-formed: {d}"),
        )),
    }
}

fn fresh(rule: &str, std: &Std, names: &[String]) -> Result<(), RuleError> {
    let mut seen = BTreeSet::new();
    for n in names {
        if std.has_state(n) || !seen.insert(n) {
            return Err(RuleError::new(rule, format!("state `{n}` is not fresh")));
        }
    }
    Ok(())
}

fn add_states(std: &Std, names: &[String], transitions: &[Transition]) -> Result<Std, RuleError> {
    const R: &str = "add-states";
    if names.is_empty() {
        return Err(RuleError::new(R, "no states given"));
    }
    fresh(R, std, names)?;
    let mut out = std.clone();
    out.states.extend(names.iter().cloned());
    for t in transitions {
        if !names.contains(&t.source) || !names.contains(&t.target) {
            return Err(RuleError::new(
                R,
                format!(
                    "transition `{}` does not stay among the new states",
                    t.describe()
                ),
            ));
        }
        out.transitions.push(resolve_transition(std, t.clone()));
    }
    Ok(out)
}

fn remove_states(std: &Std, names: &[String], env: &Environment) -> Result<Std, RuleError> {
    const R: &str = "remove-states";
    let d = desugared(R, std)?;
    let u = Universe::new(&d, env);
    let reach = reachable_configurations(&u).map_err(eval_err(R))?;
    for n in names {
        if !std.has_state(n) {
            return Err(RuleError::new(R, format!("no state `{n}`")));
        }
        if let Some(c) = reach.iter().find(|c| &c.state == n) {
            return Err(RuleError::new(R, format!("state `{n}` is reachable")).at(std, c, None));
        }
    }
    let mut out = std.clone();
    out.states.retain(|s| !names.contains(s));
    out.initial.retain(|i| !names.contains(&i.state));
    out.transitions
        .retain(|t| !names.contains(&t.source) && !names.contains(&t.target));
    if out.states.is_empty() {
        return Err(RuleError::new(R, "no states would remain"));
    }
    Ok(out)
}

fn split_state(
    std: &Std,
    state: &str,
    parts: &[String],
    redirects: &[Redirect],
    env: &Environment,
) -> Result<Std, RuleError> {
    const R: &str = "split";
    if !std.has_state(state) {
        return Err(RuleError::new(R, format!("no state `{state}`")));
    }
    if parts.is_empty() {
        return Err(RuleError::new(R, "no parts given"));
    }
    fresh(R, std, parts)?;
    for r in redirects {
        if !parts.contains(&r.part) {
            return Err(RuleError::new(
                R,
                format!("`{}` is not one of the parts", r.part),
            ));
        }
        match std.transition_by_label(&r.transition) {
            Some((_, t)) if t.target == state => {}
            _ => {
                return Err(RuleError::new(
                    R,
                    format!("`{}` is not a transition into `{state}`", r.transition),
                ))
            }
        }
        if redirects
            .iter()
            .filter(|o| o.transition == r.transition)
            .count()
            > 1
        {
            return Err(RuleError::new(
                R,
                format!("`{}` redirected twice", r.transition),
            ));
        }
    }
    let first = &parts[0];
    let redirect_of = |t: &Transition| {
        t.label
            .as_ref()
            .and_then(|l| redirects.iter().find(|r| &r.transition == l))
    };
    let redirected = |mut t: Transition| {
        match redirect_of(&t) {
            Some(r) => {
                t.target = r.part.clone();
                if let Some(s) = &r.strengthen {
                    let s = s.clone().resolve(&std.attributes, t.trigger.params());
                    t.post = Expr::and(t.post, s);
                }
            }
            None => t.target = first.clone(),
        }
        t
    };
    let mut out = std.clone();
    out.states = std
        .states
        .iter()
        .flat_map(|s| {
            if s == state {
                parts.to_vec()
            } else {
                vec![s.clone()]
            }
        })
        .collect();
    for i in &mut out.initial {
        if i.state == state {
            i.state = first.clone();
        }
    }
    let mut ts = Vec::new();
    // (original index, new index) of every strengthened redirect
    let mut strengthened = Vec::new();
    for (oi, t) in std.transitions.iter().enumerate() {
        if t.source == state {
            for p in parts {
                let mut c = t.clone();
                c.source = p.clone();
                c.label = t.label.as_ref().map(|l| format!("{l}-{p}"));
                if t.target == state {
                    c = redirected(c);
                }
                if t.target == state && redirect_of(t).is_some_and(|r| r.strengthen.is_some()) {
                    strengthened.push((oi, ts.len()));
                }
                ts.push(c);
            }
        } else if t.target == state {
            if redirect_of(t).is_some_and(|r| r.strengthen.is_some()) {
                strengthened.push((oi, ts.len()));
            }
            ts.push(redirected(t.clone()));
        } else {
            ts.push(t.clone());
        }
    }
    out.transitions = ts;
    if !strengthened.is_empty() {
        // a strengthened post must stay satisfiable wherever the original was enabled
        let d0 = desugared(R, std)?;
        let d1 = desugared(R, &out)?;
        let u0 = Universe::new(&d0, env);
        let u1 = Universe::new(&d1, env);
        for c in reachable_configurations(&u0).map_err(eval_err(R))? {
            for m in triggers(&u0) {
                let a = enabled_transitions(&u0, &c, m.as_ref()).map_err(eval_err(R))?;
                let mut c1 = c.clone();
                if c1.state == state {
                    c1.state = first.clone();
                }
                let b = enabled_transitions(&u1, &c1, m.as_ref()).map_err(eval_err(R))?;
                for &(oi, ni) in &strengthened {
                    if a.iter().any(|e| e.index == oi) && !b.iter().any(|e| e.index == ni) {
                        return Err(RuleError::new(
                            R,
                            format!(
                                "strengthened postcondition of `{}` is unsatisfiable where it was enabled",
                                std.transitions[oi].describe()
                            ),
                        )
                        .at(std, &c, m.as_ref()));
                    }
                }
            }
        }
    }
    Ok(out)
}

fn add_transitions(std: &Std, new: &[Transition], env: &Environment) -> Result<Std, RuleError> {
    const R: &str = "add-transitions";
    if new.is_empty() {
        return Err(RuleError::new(R, "no transitions given"));
    }
    let n0 = std.transitions.len();
    let mut out = std.clone();
    out.transitions
        .extend(new.iter().map(|t| resolve_transition(std, t.clone())));
    check_valid(R, &out, env)?;
    let d0 = desugared(R, std)?;
    let d1 = desugared(R, &out)?;
    let u0 = Universe::new(&d0, env);
    let u1 = Universe::new(&d1, env);
    let reach = reachable_configurations(&u0).map_err(eval_err(R))?;
    let trigs = triggers(&u0);
    for c in &reach {
        let eps_guards: Vec<usize> = (0..n0)
            .filter(|&i| d0.transitions[i].trigger == Trigger::Eps)
            .collect();
        for m in &trigs {
            let m = m.as_ref();
            for ni in n0..d1.transitions.len() {
                if !guard_true(&u1, ni, c, m).map_err(eval_err(R))? {
                    continue;
                }
                let nt = &d1.transitions[ni];
                if nt.trigger == Trigger::Eps {
                    return Err(RuleError::new(
                        R,
                        format!(
                            "added ε-transition `{}` is enabled at a reachable configuration",
                            nt.describe()
                        ),
                    )
                    .at(std, c, m));
                }
                for oi in 0..n0 {
                    if d0.transitions[oi].trigger != Trigger::Eps
                        && guard_true(&u0, oi, c, m).map_err(eval_err(R))?
                    {
                        return Err(RuleError::new(
                            R,
                            format!(
                                "guard of `{}` overlaps guard of existing `{}`",
                                nt.describe(),
                                d0.transitions[oi].describe()
                            ),
                        )
                        .at(std, c, m));
                    }
                }
                for &oi in &eps_guards {
                    if guard_true(&u0, oi, c, None).map_err(eval_err(R))? {
                        return Err(RuleError::new(
                            R,
                            format!(
                                "ε-transition `{}` can be taken where `{}` would be added",
                                d0.transitions[oi].describe(),
                                nt.describe()
                            ),
                        )
                        .at(std, c, m));
                    }
                }
            }
            let a = reactions_where(&u0, c, m, |_| true).map_err(eval_err(R))?;
            let b = reactions_where(&u1, c, m, |i| i < n0).map_err(eval_err(R))?;
            if a != b {
                return Err(RuleError::new(
                    R,
                    "the added transitions change the meaning of an existing else or priority guard",
                )
                .at(std, c, m));
            }
        }
    }
    Ok(out)
}

fn remove_transitions(std: &Std, labels: &[String], env: &Environment) -> Result<Std, RuleError> {
    const R: &str = "remove-transitions";
    let mut removed = BTreeSet::new();
    for l in labels {
        match std.transition_by_label(l) {
            Some((i, _)) => {
                removed.insert(i);
            }
            None => return Err(RuleError::new(R, format!("no transition labelled `{l}`"))),
        }
    }
    let mut out = std.clone();
    out.transitions = std
        .transitions
        .iter()
        .enumerate()
        .filter(|(i, _)| !removed.contains(i))
        .map(|(_, t)| t.clone())
        .collect();
    let d0 = desugared(R, std)?;
    let d1 = desugared(R, &out)?;
    let u0 = Universe::new(&d0, env);
    let u1 = Universe::new(&d1, env);
    for c in reachable_configurations(&u0).map_err(eval_err(R))? {
        let eps_left = !enabled_transitions(&u1, &c, None)
            .map_err(eval_err(R))?
            .is_empty();
        for m in triggers(&u0) {
            let m = m.as_ref();
            let a = enabled_transitions(&u0, &c, m).map_err(eval_err(R))?;
            let b = enabled_transitions(&u1, &c, m).map_err(eval_err(R))?;
            let ra: Reactions = a.iter().flat_map(|e| e.reactions.iter().cloned()).collect();
            let rb: Reactions = b.iter().flat_map(|e| e.reactions.iter().cloned()).collect();
            if !rb.is_subset(&ra) {
                return Err(RuleError::new(
                    R,
                    "the removal widens an else or priority guard of a remaining transition",
                )
                .at(std, &c, m));
            }
            if let Some(e) = a.iter().find(|e| removed.contains(&e.index)) {
                let covered = !b.is_empty() || (m.is_some() && eps_left);
                if !covered {
                    return Err(RuleError::new(
                        R,
                        format!(
                            "no remaining transition for the trigger or ε is enabled where `{}` was",
                            std.transitions[e.index].describe()
                        ),
                    )
                    .at(std, &c, m));
                }
            }
        }
    }
    Ok(out)
}

fn remove_initial(std: &Std, names: &[String]) -> Result<Std, RuleError> {
    const R: &str = "remove-initial";
    for n in names {
        if !std.is_initial(n) {
            return Err(RuleError::new(R, format!("`{n}` is not an initial state")));
        }
    }
    let mut out = std.clone();
    out.initial.retain(|i| !names.contains(&i.state));
    if out.initial.is_empty() {
        return Err(RuleError::new(R, "at least one initial state must remain"));
    }
    Ok(out)
}

/// Applies one rule, checking its side conditions against the reachable
/// configurations of `std` under `env`.
pub fn apply_rule(std: &Std, app: &RuleApplication, env: &Environment) -> Result<Std, RuleError> {
    let rule = app.rule_name();
    check_valid(rule, std, env).map_err(|mut e| {
        e.condition = e.condition.replace("result", "subject");
        e
    })?;
    let out = match app {
        RuleApplication::AddStates { names, transitions } => add_states(std, names, transitions)?,
        RuleApplication::RemoveStates { names } => remove_states(std, names, env)?,
        RuleApplication::SplitState {
            state,
            parts,
            redirects,
        } => split_state(std, state, parts, redirects, env)?,
        RuleApplication::AddTransitions { transitions } => add_transitions(std, transitions, env)?,
        RuleApplication::RemoveTransitions { labels } => remove_transitions(std, labels, env)?,
        RuleApplication::RemoveInitialStates { names } => remove_initial(std, names)?,
    };
    check_valid(rule, &out, env)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefineError {
    #[error("signatures differ: {0}")]
    SignatureMismatch(String),
    #[error(transparent)]
    Desugar(#[from] DesugarError),
    #[error(transparent)]
    Interp(#[from] InterpError),
}

fn same_interface(a: &Std, b: &Std) -> Result<(), RefineError> {
    if a.signature != b.signature {
        return Err(RefineError::SignatureMismatch(
            "input or output constructors".into(),
        ));
    }
    if a.domains != b.domains {
        return Err(RefineError::SignatureMismatch("declared domains".into()));
    }
    Ok(())
}

/// Bounded trace semantics of a (possibly sugared) Std.
pub fn std_traces(std: &Std, env: &Environment, bounds: &Bounds) -> Result<TraceSet, RefineError> {
    let d = desugar(std)?;
    let u = Universe::new(&d, env);
    let alphabet = input_instances(&u);
    Ok(traces_over(&u, &alphabet, bounds)?)
}

fn merged_warnings(a: &TraceSet, c: &TraceSet) -> Vec<String> {
    let mut w: Vec<String> = a
        .warnings
        .iter()
        .map(|w| format!("abstract: {w}"))
        .chain(c.warnings.iter().map(|w| format!("concrete: {w}")))
        .collect();
    w.dedup();
    w
}

/// Trace-set inclusion over two precomputed trace sets; the counterexample
/// is minimal in shortlex order.
pub fn compare_traces(abs: &TraceSet, conc: &TraceSet) -> Verdict {
    let warnings = merged_warnings(abs, conc);
    for i in abs.inputs_shortlex() {
        let a = &abs.entries[i];
        let Outcome::Outputs(allowed) = a else {
            continue;
        };
        let cx = match conc.entries.get(i) {
            Some(Outcome::Chaos) => Some(None),
            Some(Outcome::Outputs(got)) => got
                .iter()
                .find(|o| !allowed.contains(*o))
                .map(|o| Some(o.clone())),
            None => None,
        };
        if let Some(output) = cx {
            return Verdict::fail(
                abs.bounds,
                Counterexample::Trace {
                    input: i.clone(),
                    output,
                    allowed: Some(a.clone()),
                },
                warnings,
            );
        }
    }
    Verdict::pass(abs.bounds, warnings)
}

/// Bounded refinement: every behavior of `concrete` is a behavior of
/// `abstract_` wherever the latter is not CHAOS.
pub fn check_refinement(
    abstract_: &Std,
    concrete: &Std,
    env: &Environment,
    bounds: &Bounds,
) -> Result<Verdict, RefineError> {
    same_interface(abstract_, concrete)?;
    let a = std_traces(abstract_, env, bounds)?;
    let c = std_traces(concrete, env, bounds)?;
    Ok(compare_traces(&a, &c))
}

/// Bounded trace equality; the counterexample is the first input whose
/// outcomes differ, reported from the side of `b`.
pub fn check_trace_equivalence(
    a: &Std,
    b: &Std,
    env: &Environment,
    bounds: &Bounds,
) -> Result<Verdict, RefineError> {
    same_interface(a, b)?;
    let ta = std_traces(a, env, bounds)?;
    let tb = std_traces(b, env, bounds)?;
    Ok(compare_equal(&ta, &tb))
}

pub fn compare_equal(ta: &TraceSet, tb: &TraceSet) -> Verdict {
    let warnings = merged_warnings(ta, tb);
    for i in ta.inputs_shortlex() {
        let (x, y) = (&ta.entries[i], tb.entries.get(i));
        if Some(x) != y {
            let output = match y {
                Some(Outcome::Outputs(s)) => s
                    .iter()
                    .find(|o| x.outputs().is_some_and(|xs| !xs.contains(*o)))
                    .or_else(|| s.iter().next())
                    .cloned(),
                _ => None,
            };
            return Verdict::fail(
                ta.bounds,
                Counterexample::Trace {
                    input: i.clone(),
                    output,
                    allowed: Some(x.clone()),
                },
                warnings,
            );
        }
    }
    Verdict::pass(ta.bounds, warnings)
}
