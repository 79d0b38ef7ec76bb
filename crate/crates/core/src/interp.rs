//! Bounded operational semantics.
//!
//! For every input sequence up to length `k` over the finite alphabet of
//! input instances, [`traces`] computes the set of output sequences the
//! machine may produce, or CHAOS where its behavior is unspecified.

use crate::model::{
    enabled_transitions, initial_configurations, input_instances, Config, EvalError, Message,
    Universe,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use thiserror::Error;

pub const TRACES_FORMAT: &str = "traces/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    /// Maximum input sequence length.
    pub k: usize,
    /// Consecutive ε-steps allowed per processed message.
    pub eps_budget: usize,
    pub output_cap: usize,
    /// Limit on (configuration, output) pairs kept across the whole run.
    pub max_states: usize,
}

impl Default for Bounds {
    fn default() -> Bounds {
        Bounds {
            k: 4,
            eps_budget: 4,
            output_cap: 16,
            max_states: 2_000_000,
        }
    }
}

impl Bounds {
    pub fn with_k(self, k: usize) -> Bounds {
        Bounds { k, ..self }
    }
}

impl fmt::Display for Bounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "k={}, eps-budget={}, output-cap={}",
            self.k, self.eps_budget, self.output_cap
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterpError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("resource bound `{bound}` exceeded (limit {limit})")]
    Resource { bound: &'static str, limit: usize },
}

/// Result of processing one message from one configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Chaos,
    Reactions {
        reactions: BTreeSet<(Vec<Message>, Config)>,
        /// Outputs of branches cut off by the ε-budget.
        diverged: BTreeSet<Vec<Message>>,
        cap_hit: bool,
    },
}

fn append(out: &[Message], more: &[Message], cap: usize, cap_hit: &mut bool) -> Vec<Message> {
    let mut v = out.to_vec();
    for m in more {
        if v.len() >= cap {
            *cap_hit = true;
            break;
        }
        v.push(m.clone());
    }
    v
}

/// Reactions to `msg` at `config`: external transitions for `msg`, possibly
/// preceded by up to `eps_budget` ε-steps. Reaching a configuration where
/// neither kind of transition is enabled makes the whole step CHAOS.
pub fn step(
    u: &Universe<'_>,
    config: &Config,
    msg: &Message,
    bounds: &Bounds,
) -> Result<Step, InterpError> {
    let mut reactions = BTreeSet::new();
    let mut diverged = BTreeSet::new();
    let mut cap_hit = false;
    let mut seen: BTreeSet<(Config, Vec<Message>, usize)> = BTreeSet::new();
    let mut stack = vec![(config.clone(), Vec::new(), 0usize)];
    while let Some((c, out, used)) = stack.pop() {
        if !seen.insert((c.clone(), out.clone(), used)) {
            continue;
        }
        let ext = enabled_transitions(u, &c, Some(msg))?;
        let eps = enabled_transitions(u, &c, None)?;
        if ext.is_empty() && eps.is_empty() {
            return Ok(Step::Chaos);
        }
        for e in ext {
            for (o, next) in e.reactions {
                reactions.insert((append(&out, &o, bounds.output_cap, &mut cap_hit), next));
            }
        }
        for e in eps {
            for (o, next) in e.reactions {
                let o = append(&out, &o, bounds.output_cap, &mut cap_hit);
                if used < bounds.eps_budget {
                    stack.push((next, o, used + 1));
                } else {
                    diverged.insert(o);
                }
            }
        }
        if reactions.len() + stack.len() > bounds.max_states {
            return Err(InterpError::Resource {
                bound: "max-states",
                limit: bounds.max_states,
            });
        }
    }
    Ok(Step::Reactions {
        reactions,
        diverged,
        cap_hit,
    })
}

/// Output sequences observable after the last message: every point of the
/// bounded ε-closure of `config`. Returns the configurations passed through
/// and whether the budget cut off an ε-path.
fn trailing(
    u: &Universe<'_>,
    config: &Config,
    out: &[Message],
    bounds: &Bounds,
    obs: &mut BTreeSet<Vec<Message>>,
    reached: &mut BTreeSet<Config>,
    cap_hit: &mut bool,
) -> Result<bool, InterpError> {
    let mut diverged = false;
    let mut seen = BTreeSet::new();
    let mut stack = vec![(config.clone(), out.to_vec(), 0usize)];
    while let Some((c, o, used)) = stack.pop() {
        if !seen.insert((c.clone(), o.clone(), used)) {
            continue;
        }
        obs.insert(o.clone());
        reached.insert(c.clone());
        for e in enabled_transitions(u, &c, None)? {
            for (eo, next) in e.reactions {
                if used < bounds.eps_budget {
                    stack.push((next, append(&o, &eo, bounds.output_cap, cap_hit), used + 1));
                } else {
                    diverged = true;
                }
            }
        }
    }
    Ok(diverged)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Chaos,
    Outputs(BTreeSet<Vec<Message>>),
}

impl Outcome {
    pub fn is_chaos(&self) -> bool {
        matches!(self, Outcome::Chaos)
    }

    pub fn outputs(&self) -> Option<&BTreeSet<Vec<Message>>> {
        match self {
            Outcome::Chaos => None,
            Outcome::Outputs(o) => Some(o),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Chaos => write!(f, "CHAOS"),
            Outcome::Outputs(set) => {
                let parts: Vec<String> = set
                    .iter()
                    .map(|o| crate::model::format_messages(o))
                    .collect();
                write!(f, "{{{}}}", parts.join(", "))
            }
        }
    }
}

/// Bounded trace semantics of a Std.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceSet {
    pub bounds: Bounds,
    pub alphabet: Vec<Message>,
    pub entries: BTreeMap<Vec<Message>, Outcome>,
    pub reached: BTreeSet<Config>,
    pub warnings: Vec<String>,
    pub cap_hit: bool,
}

impl TraceSet {
    pub fn get(&self, input: &[Message]) -> Option<&Outcome> {
        self.entries.get(input)
    }

    /// Input sequences ordered by length, then lexicographically.
    pub fn inputs_shortlex(&self) -> Vec<&Vec<Message>> {
        let mut v: Vec<&Vec<Message>> = self.entries.keys().collect();
        v.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        v
    }

    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<serde_json::Value> = self
            .inputs_shortlex()
            .into_iter()
            .map(|i| {
                serde_json::json!({
                    "input": i.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
                    "outcome": match &self.entries[i] {
                        Outcome::Chaos => serde_json::json!("chaos"),
                        Outcome::Outputs(set) => serde_json::json!(set
                            .iter()
                            .map(|o| o.iter().map(|m| m.to_string()).collect::<Vec<_>>())
                            .collect::<Vec<_>>()),
                    },
                })
            })
            .collect();
        serde_json::json!({
            "format": TRACES_FORMAT,
            "bounds": self.bounds,
            "entries": entries,
            "warnings": self.warnings,
            "cap_hit": self.cap_hit,
        })
    }
}

/// Frontier of one input sequence: live branches plus output sequences of
/// branches stalled in ε-divergence, which keep their output forever.
#[derive(Clone, Default)]
struct Frontier {
    live: BTreeSet<(Config, Vec<Message>)>,
    stalled: BTreeSet<Vec<Message>>,
}

/// Enumerates every input sequence up to `bounds.k` and its outcome.
pub fn traces(u: &Universe<'_>, bounds: &Bounds) -> Result<TraceSet, InterpError> {
    let alphabet = input_instances(u);
    traces_over(u, &alphabet, bounds)
}

/// Like [`traces`], over a given input alphabet.
pub fn traces_over(
    u: &Universe<'_>,
    alphabet: &[Message],
    bounds: &Bounds,
) -> Result<TraceSet, InterpError> {
    let mut ts = TraceSet {
        bounds: *bounds,
        alphabet: alphabet.to_vec(),
        entries: BTreeMap::new(),
        reached: BTreeSet::new(),
        warnings: Vec::new(),
        cap_hit: false,
    };
    let mut warnings = BTreeSet::new();
    let mut total = 0usize;
    let mut cache: HashMap<(Config, Message), Step> = HashMap::new();
    let init = Frontier {
        live: initial_configurations(u)?
            .into_iter()
            .map(|c| (c, vec![]))
            .collect(),
        stalled: BTreeSet::new(),
    };
    // None marks a chaotic prefix
    let mut layer: Vec<(Vec<Message>, Option<Frontier>)> = vec![(vec![], Some(init))];
    for depth in 0..=bounds.k {
        let mut next_layer = Vec::new();
        for (input, frontier) in layer {
            let Some(fr) = frontier else {
                if depth < bounds.k {
                    for m in alphabet {
                        let mut j = input.clone();
                        j.push(m.clone());
                        next_layer.push((j, None));
                    }
                }
                ts.entries.insert(input, Outcome::Chaos);
                continue;
            };
            let mut obs = fr.stalled.clone();
            for (c, out) in &fr.live {
                if trailing(
                    u,
                    c,
                    out,
                    bounds,
                    &mut obs,
                    &mut ts.reached,
                    &mut ts.cap_hit,
                )? {
                    warnings.insert(format!(
                        "ε-budget exhausted after the last input at {}",
                        c.display(u.std)
                    ));
                }
            }
            if depth < bounds.k {
                for m in alphabet {
                    let mut j = input.clone();
                    j.push(m.clone());
                    let mut nf = Frontier {
                        live: BTreeSet::new(),
                        stalled: fr.stalled.clone(),
                    };
                    let mut chaos = false;
                    for (c, out) in &fr.live {
                        let key = (c.clone(), m.clone());
                        if !cache.contains_key(&key) {
                            let r = step(u, c, m, bounds)?;
                            cache.insert(key.clone(), r);
                        }
                        match cache[&key].clone() {
                            Step::Chaos => {
                                chaos = true;
                                break;
                            }
                            Step::Reactions {
                                reactions,
                                diverged,
                                cap_hit,
                            } => {
                                if !diverged.is_empty() {
                                    warnings.insert(format!(
                                        "ε-budget exhausted processing {m} at {}",
                                        c.display(u.std)
                                    ));
                                }
                                ts.cap_hit |= cap_hit;
                                let mut hit = false;
                                for d in diverged {
                                    nf.stalled
                                        .insert(append(out, &d, bounds.output_cap, &mut hit));
                                }
                                for (o, next) in reactions {
                                    nf.live.insert((
                                        next,
                                        append(out, &o, bounds.output_cap, &mut hit),
                                    ));
                                }
                                ts.cap_hit |= hit;
                            }
                        }
                    }
                    if chaos {
                        next_layer.push((j, None));
                    } else {
                        total += nf.live.len() + nf.stalled.len();
                        if total > bounds.max_states {
                            return Err(InterpError::Resource {
                                bound: "max-states",
                                limit: bounds.max_states,
                            });
                        }
                        next_layer.push((j, Some(nf)));
                    }
                }
            }
            ts.entries.insert(input, Outcome::Outputs(obs));
        }
        layer = next_layer;
    }
    if ts.cap_hit {
        warnings.insert(format!(
            "output-length cap {} reached; outputs truncated",
            bounds.output_cap
        ));
    }
    ts.warnings = warnings.into_iter().collect();
    Ok(ts)
}

/// Outputs for a single input sequence, computed without enumerating the
/// rest of the input space.
pub fn simulate(
    u: &Universe<'_>,
    input: &[Message],
    bounds: &Bounds,
) -> Result<(Outcome, Vec<String>), InterpError> {
    let b = Bounds {
        k: input.len(),
        ..*bounds
    };
    let mut fr = Frontier {
        live: initial_configurations(u)?
            .into_iter()
            .map(|c| (c, vec![]))
            .collect(),
        stalled: BTreeSet::new(),
    };
    let mut warnings = BTreeSet::new();
    let mut cap_hit = false;
    for m in input {
        let mut nf = Frontier {
            live: BTreeSet::new(),
            stalled: fr.stalled.clone(),
        };
        for (c, out) in &fr.live {
            match step(u, c, m, &b)? {
                Step::Chaos => return Ok((Outcome::Chaos, warnings.into_iter().collect())),
                Step::Reactions {
                    reactions,
                    diverged,
                    ..
                } => {
                    if !diverged.is_empty() {
                        warnings.insert(format!(
                            "ε-budget exhausted processing {m} at {}",
                            c.display(u.std)
                        ));
                    }
                    for d in diverged {
                        nf.stalled
                            .insert(append(out, &d, b.output_cap, &mut cap_hit));
                    }
                    for (o, next) in reactions {
                        nf.live
                            .insert((next, append(out, &o, b.output_cap, &mut cap_hit)));
                    }
                }
            }
        }
        if nf.live.len() + nf.stalled.len() > b.max_states {
            return Err(InterpError::Resource {
                bound: "max-states",
                limit: b.max_states,
            });
        }
        fr = nf;
    }
    let mut obs = fr.stalled.clone();
    let mut reached = BTreeSet::new();
    for (c, out) in &fr.live {
        if trailing(u, c, out, &b, &mut obs, &mut reached, &mut cap_hit)? {
            warnings.insert(format!(
                "ε-budget exhausted after the last input at {}",
                c.display(u.std)
            ));
        }
    }
    if cap_hit {
        warnings.insert(format!(
            "output-length cap {} reached; outputs truncated",
            b.output_cap
        ));
    }
    Ok((Outcome::Outputs(obs), warnings.into_iter().collect()))
}

pub fn is_prefix(a: &[Message], b: &[Message]) -> bool {
    a.len() <= b.len() && a == &b[..a.len()]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Counterexample {
    /// An input sequence where the concrete machine produces `output`
    /// (CHAOS when `None`) and the abstract one does not allow it.
    Trace {
        input: Vec<Message>,
        output: Option<Vec<Message>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        allowed: Option<Outcome>,
    },
    /// `shorter ⊑ longer`, but `output` (CHAOS when `None`) observed on
    /// `shorter` is not extended by anything observed on `longer`.
    Monotonicity {
        shorter: Vec<Message>,
        longer: Vec<Message>,
        output: Option<Vec<Message>>,
    },
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use crate::model::format_messages as fm;
        match self {
            Counterexample::Trace {
                input,
                output,
                allowed,
            } => {
                write!(f, "input {}: concrete ", fm(input))?;
                match output {
                    Some(o) => write!(f, "produces {}", fm(o))?,
                    None => write!(f, "is CHAOS")?,
                }
                match allowed {
                    Some(a) => write!(f, ", abstract allows {a}"),
                    None => write!(f, ", not allowed by abstract"),
                }
            }
            Counterexample::Monotonicity {
                shorter,
                longer,
                output,
            } => {
                write!(f, "input {} ", fm(shorter))?;
                match output {
                    Some(o) => write!(f, "produces {}", fm(o))?,
                    None => write!(f, "is CHAOS")?,
                }
                write!(f, " but no output for {} extends it", fm(longer))
            }
        }
    }
}

pub const VERDICT_FORMAT: &str = "verdict/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub bounds: Bounds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Verdict {
    pub fn pass(bounds: Bounds, warnings: Vec<String>) -> Verdict {
        Verdict {
            pass: true,
            bounds,
            counterexample: None,
            warnings,
        }
    }

    pub fn fail(bounds: Bounds, cx: Counterexample, warnings: Vec<String>) -> Verdict {
        Verdict {
            pass: false,
            bounds,
            counterexample: Some(cx),
            warnings,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("verdict serializes");
        v.as_object_mut()
            .unwrap()
            .insert("format".into(), VERDICT_FORMAT.into());
        v
    }
}

/// Checks that observations only grow along input prefixes, with CHAOS
/// above every output set.
pub fn check_monotone(ts: &TraceSet) -> Verdict {
    for j in ts.inputs_shortlex() {
        let oj = &ts.entries[j];
        for n in 0..j.len() {
            let i = &j[..n];
            let Some(oi) = ts.entries.get(i) else {
                continue;
            };
            let witness = match (oi, oj) {
                (_, Outcome::Chaos) => None,
                (Outcome::Chaos, Outcome::Outputs(_)) => Some(None),
                (Outcome::Outputs(si), Outcome::Outputs(sj)) => si
                    .iter()
                    .find(|o| !sj.iter().any(|o2| is_prefix(o, o2)))
                    .map(|o| Some(o.clone())),
            };
            if let Some(output) = witness {
                return Verdict::fail(
                    ts.bounds,
                    Counterexample::Monotonicity {
                        shorter: i.to_vec(),
                        longer: j.clone(),
                        output,
                    },
                    ts.warnings.clone(),
                );
            }
        }
    }
    Verdict::pass(ts.bounds, ts.warnings.clone())
}
