use super::env::{cartesian, Environment};
use super::eval::{eval_expr, holds, EvalError, Scope};
use super::{DomainDecl, Message, Std, Trigger, Value};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap, VecDeque};

/// One total machine state: control state plus attribute valuation, aligned
/// with the Std's attribute order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Config {
    pub state: String,
    pub vals: Vec<Value>,
}

impl Config {
    pub fn new(state: impl Into<String>, vals: Vec<Value>) -> Config {
        Config {
            state: state.into(),
            vals,
        }
    }

    /// Renders as `state{a=1, b=d2}`.
    pub fn display(&self, std: &Std) -> String {
        if self.vals.is_empty() {
            return self.state.clone();
        }
        let parts: Vec<String> = std
            .attributes
            .iter()
            .zip(&self.vals)
            .map(|(a, v)| format!("{}={}", a.name, v))
            .collect();
        format!("{}{{{}}}", self.state, parts.join(", "))
    }
}

/// Parameter binding of a fired trigger.
pub type Binding = Vec<(String, Value)>;

/// A transition enabled at a configuration, with every (outputs, successor)
/// pair its postcondition admits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enabled {
    pub index: usize,
    pub binding: Binding,
    pub reactions: BTreeSet<(Vec<Message>, Config)>,
}

/// A Std paired with an environment, with the value sets of its sorts
/// precomputed.
pub struct Universe<'a> {
    pub std: &'a Std,
    pub env: &'a Environment,
    attr_values: Vec<Vec<Value>>,
    by_source: HashMap<&'a str, Vec<usize>>,
}

impl<'a> Universe<'a> {
    pub fn new(std: &'a Std, env: &'a Environment) -> Universe<'a> {
        let mut u = Universe {
            std,
            env,
            attr_values: Vec::new(),
            by_source: HashMap::new(),
        };
        let elems = u.elems_fn();
        let attr_values = std
            .attributes
            .iter()
            .map(|a| a.sort.values(&elems))
            .collect();
        u.attr_values = attr_values;
        for (i, t) in std.transitions.iter().enumerate() {
            u.by_source.entry(t.source.as_str()).or_default().push(i);
        }
        u
    }

    /// Elements of an enum domain, from the Std's own declaration or the
    /// environment.
    pub fn domain_elems(&self, name: &str) -> Option<Vec<String>> {
        domain_elems(self.std, self.env, name)
    }

    pub fn elems_fn(&self) -> impl Fn(&str) -> Option<Vec<String>> + 'a {
        let std = self.std;
        let env = self.env;
        move |d: &str| domain_elems(std, env, d)
    }

    pub fn transitions_from(&self, state: &str) -> &[usize] {
        self.by_source.get(state).map(Vec::as_slice).unwrap_or(&[])
    }
}

pub(crate) fn domain_elems(std: &Std, env: &Environment, name: &str) -> Option<Vec<String>> {
    match std.domains.get(name) {
        Some(DomainDecl::Enum { elems }) => Some(elems.clone()),
        Some(DomainDecl::Range { .. }) => None,
        Some(DomainDecl::Abstract) | None => env.decls.domains.get(name).cloned(),
    }
}

/// The finite input alphabet: every constructor instantiated over its
/// parameter sorts.
pub fn input_instances(u: &Universe<'_>) -> Vec<Message> {
    let elems = u.elems_fn();
    let mut out = Vec::new();
    for c in &u.std.signature.inputs {
        for args in cartesian(&c.params, &elems) {
            out.push(Message::new(c.name.clone(), args));
        }
    }
    out
}

/// Checks a message against the input signature: known constructor, arity,
/// and argument sorts.
pub fn check_input(u: &Universe<'_>, m: &Message) -> Result<(), String> {
    let c = u
        .std
        .signature
        .input(&m.ctor)
        .ok_or_else(|| format!("`{}` is not an input constructor", m.ctor))?;
    if c.params.len() != m.args.len() {
        return Err(format!(
            "`{}` takes {} argument(s), got {}",
            c.name,
            c.params.len(),
            m.args.len()
        ));
    }
    let elems = u.elems_fn();
    for (s, v) in c.params.iter().zip(&m.args) {
        if !s.contains(v, &elems) {
            return Err(format!("argument {v} of `{}` is not in sort {s}", c.name));
        }
    }
    Ok(())
}

/// All configurations satisfying some initial marking.
pub fn initial_configurations(u: &Universe<'_>) -> Result<BTreeSet<Config>, EvalError> {
    let mut out = BTreeSet::new();
    let vals = product(&u.attr_values);
    for init in &u.std.initial {
        for v in &vals {
            let scope = Scope::new(&u.std.attributes, v);
            if holds(&init.pred, &scope, u.env)? {
                out.insert(Config::new(init.state.clone(), v.clone()));
            }
        }
    }
    Ok(out)
}

fn product(sets: &[Vec<Value>]) -> Vec<Vec<Value>> {
    let mut out: Vec<Vec<Value>> = vec![vec![]];
    for s in sets {
        let mut next = Vec::with_capacity(out.len() * s.len());
        for p in &out {
            for v in s {
                let mut q = p.clone();
                q.push(v.clone());
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Transitions enabled at `config` for `trigger` (`None` is ε).
///
/// A transition is enabled when its source and trigger match, its guard
/// holds, and at least one successor valuation satisfies its postcondition.
/// Attributes whose primed form does not occur in the postcondition keep
/// their value; the others range over their whole sort.
pub fn enabled_transitions(
    u: &Universe<'_>,
    config: &Config,
    trigger: Option<&Message>,
) -> Result<Vec<Enabled>, EvalError> {
    let std = u.std;
    let mut out = Vec::new();
    for &i in u.transitions_from(&config.state) {
        let t = &std.transitions[i];
        let binding: Binding = match (&t.trigger, trigger) {
            (Trigger::Eps, None) => vec![],
            (Trigger::Input { ctor, params }, Some(m)) if *ctor == m.ctor => {
                if params.len() != m.args.len() {
                    continue;
                }
                params.iter().cloned().zip(m.args.iter().cloned()).collect()
            }
            _ => continue,
        };
        let scope = Scope::new(&std.attributes, &config.vals).with_params(&binding);
        if !holds(&t.guard, &scope, u.env)? {
            continue;
        }
        let mut outputs = Vec::with_capacity(t.outputs.len());
        let mut defined = true;
        for o in &t.outputs {
            let mut args = Vec::with_capacity(o.args.len());
            for a in &o.args {
                match eval_expr(a, &scope, u.env)? {
                    Some(v) => args.push(v),
                    None => defined = false,
                }
            }
            outputs.push(Message::new(o.ctor.clone(), args));
        }
        if !defined {
            continue;
        }
        let primed = t.post.primed_attrs();
        let idx: Vec<usize> = std
            .attributes
            .iter()
            .enumerate()
            .filter(|(_, a)| primed.contains(&a.name))
            .map(|(i, _)| i)
            .collect();
        let choices: Vec<Vec<Value>> = idx.iter().map(|&i| u.attr_values[i].clone()).collect();
        let mut reactions = BTreeSet::new();
        let mut next = config.vals.clone();
        for combo in product(&choices) {
            for (k, &i) in idx.iter().enumerate() {
                next[i] = combo[k].clone();
            }
            let s = scope.with_primed(&next);
            if holds(&t.post, &s, u.env)? {
                reactions.insert((outputs.clone(), Config::new(t.target.clone(), next.clone())));
            }
        }
        if !reactions.is_empty() {
            out.push(Enabled {
                index: i,
                binding,
                reactions,
            });
        }
    }
    Ok(out)
}

/// Every configuration reachable from an initial one through any enabled
/// transition, with unbounded input and unbounded ε-steps. This
/// over-approximates what the bounded semantics can observe, which is the
/// safe direction for side-condition checks.
pub fn reachable_configurations(u: &Universe<'_>) -> Result<BTreeSet<Config>, EvalError> {
    let instances = input_instances(u);
    let mut seen = initial_configurations(u)?;
    let mut queue: VecDeque<Config> = seen.iter().cloned().collect();
    while let Some(c) = queue.pop_front() {
        let mut succs = Vec::new();
        for e in enabled_transitions(u, &c, None)? {
            succs.extend(e.reactions.into_iter().map(|(_, s)| s));
        }
        for m in &instances {
            for e in enabled_transitions(u, &c, Some(m))? {
                succs.extend(e.reactions.into_iter().map(|(_, s)| s));
            }
        }
        for s in succs {
            if seen.insert(s.clone()) {
                queue.push_back(s);
            }
        }
    }
    Ok(seen)
}

/// Control states occurring in configurations reachable within `depth`
/// processed input messages, with at most `eps_budget` consecutive ε-steps
/// per message.
pub fn reachable_control_states(
    u: &Universe<'_>,
    depth: usize,
    eps_budget: usize,
) -> Result<BTreeSet<String>, EvalError> {
    let instances = input_instances(u);
    let mut seen: BTreeSet<Config> = initial_configurations(u)?;
    let mut frontier: BTreeSet<Config> = seen.clone();
    for _ in 0..depth {
        let mut next = BTreeSet::new();
        for c in &frontier {
            // ε-closure before the message, bounded by the budget
            let mut layer = vec![c.clone()];
            let mut closure: BTreeSet<Config> = layer.iter().cloned().collect();
            for _ in 0..eps_budget {
                let mut nl = Vec::new();
                for x in &layer {
                    for e in enabled_transitions(u, x, None)? {
                        for (_, s) in e.reactions {
                            if closure.insert(s.clone()) {
                                nl.push(s);
                            }
                        }
                    }
                }
                layer = nl;
            }
            for x in &closure {
                seen.insert(x.clone());
                for m in &instances {
                    for e in enabled_transitions(u, x, Some(m))? {
                        for (_, s) in e.reactions {
                            next.insert(s);
                        }
                    }
                }
            }
        }
        seen.extend(next.iter().cloned());
        frontier = next;
    }
    Ok(seen.into_iter().map(|c| c.state).collect())
}
