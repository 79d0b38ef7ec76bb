//! The call-processing case study: Step 0 and the feature patches that
//! produce Steps 1 to 5, the feature tables, and the assumptions the
//! development relies on.

use crate::features::{apply_feature, FeaturePatch};
use crate::model::{Environment, Std, Value};
use crate::text::{parse_env, parse_feature, parse_std};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

/// Every shipped corpus file, by file name.
pub const CORPUS: &[(&str, &str)] = &[
    ("step0.std", include_str!("../corpus/step0.std")),
    ("step1.std", include_str!("../corpus/step1.std")),
    ("step2.std", include_str!("../corpus/step2.std")),
    ("step3.std", include_str!("../corpus/step3.std")),
    ("step4.std", include_str!("../corpus/step4.std")),
    ("step5.std", include_str!("../corpus/step5.std")),
    ("abandon.feat", include_str!("../corpus/abandon.feat")),
    (
        "split-connect.feat",
        include_str!("../corpus/split-connect.feat"),
    ),
    ("forwarding.feat", include_str!("../corpus/forwarding.feat")),
    ("blocking.feat", include_str!("../corpus/blocking.feat")),
    ("vp-busy.feat", include_str!("../corpus/vp-busy.feat")),
    ("vp-ring.feat", include_str!("../corpus/vp-ring.feat")),
    (
        "time-out-retry.feat",
        include_str!("../corpus/time-out-retry.feat"),
    ),
    ("default.env", include_str!("../corpus/default.env")),
    ("dormant.env", include_str!("../corpus/dormant.env")),
    ("tel.std", include_str!("../corpus/tel.std")),
    ("tel.env", include_str!("../corpus/tel.env")),
    ("stack.std", include_str!("../corpus/stack.std")),
];

pub fn corpus_file(name: &str) -> Option<&'static str> {
    CORPUS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

fn file(name: &str) -> &'static str {
    corpus_file(name).unwrap_or_else(|| panic!("corpus file {name} missing"))
}

pub fn parse_corpus_std(name: &str) -> Std {
    parse_std(file(name), name).unwrap_or_else(|e| panic!("{name}: {}", e[0]))
}

pub fn parse_corpus_env(name: &str) -> Environment {
    parse_env(file(name), name).unwrap_or_else(|e| panic!("{name}: {}", e[0]))
}

/// Environment over DN = {d1, d2, d3} in which every feature has a
/// directory number that triggers it.
pub fn default_env() -> Environment {
    static ENV: OnceLock<Environment> = OnceLock::new();
    ENV.get_or_init(|| parse_corpus_env("default.env")).clone()
}

/// The default environment with every feature table empty.
pub fn dormant_env() -> Environment {
    parse_corpus_env("dormant.env")
}

/// Names accepted by [`feature_patch`].
pub const FEATURES: &[&str] = &[
    "abandon",
    "split-connect",
    "forwarding",
    "blocking",
    "vp-busy",
    "vp-ring",
    "time-out-retry",
];

pub fn feature_patch(name: &str) -> Option<FeaturePatch> {
    let fname = format!("{name}.feat");
    let text = corpus_file(&fname)?;
    Some(parse_feature(text, &fname).unwrap_or_else(|e| panic!("{fname}: {e}")))
}

fn patch(name: &str) -> FeaturePatch {
    feature_patch(name).unwrap_or_else(|| panic!("no feature {name}"))
}

/// Step `n` of the development, for `n` in 0..=5. Step 0 is parsed; every
/// later step is the result of applying a patch to an earlier one under
/// [`default_env`]: abandon (1), split-connect (2), forwarding on 2 (3),
/// blocking on 2 (4) and blocking on 3 (5).
///
/// Panics if `n > 5`.
pub fn build_step(n: usize) -> Std {
    static STEPS: OnceLock<Vec<Std>> = OnceLock::new();
    STEPS
        .get_or_init(|| {
            let env = default_env();
            let apply = |s: &Std, f: &str| {
                apply_feature(s, &patch(f), &env).unwrap_or_else(|e| panic!("{e}"))
            };
            let s0 = parse_corpus_std("step0.std");
            let s1 = apply(&s0, "abandon");
            let s2 = apply(&s1, "split-connect");
            let s3 = apply(&s2, "forwarding");
            let s4 = apply(&s2, "blocking");
            let s5 = apply(&s3, "blocking");
            vec![s0, s1, s2, s3, s4, s5]
        })
        .get(n)
        .unwrap_or_else(|| panic!("no step {n}"))
        .clone()
}

fn dn(env: &Environment) -> Vec<String> {
    env.decls.domains.get("DN").cloned().unwrap_or_default()
}

fn sym(s: &str) -> Value {
    Value::Sym(s.to_string())
}

fn truth(env: &Environment, name: &str, args: &[&str]) -> bool {
    let args: Vec<Value> = args.iter().map(|a| sym(a)).collect();
    matches!(env.lookup(name, &args), Ok(Some(Value::Bool(true))))
}

fn image(env: &Environment, name: &str, x: &str) -> Option<String> {
    match env.lookup(name, &[sym(x)]) {
        Ok(Some(Value::Sym(y))) => Some(y.clone()),
        _ => None,
    }
}

/// Block-Sub, Block-Phone and Block-Route over (origin, subscriber).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BlockTables {
    pub sub: BTreeMap<(String, String), bool>,
    pub phone: BTreeMap<(String, String), bool>,
    pub route: BTreeMap<(String, String), bool>,
}

/// Computes the three blocking predicates pointwise from the component
/// tables.
pub fn block_predicates(env: &Environment) -> BlockTables {
    let mut t = BlockTables::default();
    let elems = dn(env);
    for o in &elems {
        for s in &elems {
            let k = (o.clone(), s.clone());
            let (o, s) = (o.as_str(), s.as_str());
            t.sub.insert(
                k.clone(),
                truth(env, "DNR", &[s])
                    || truth(env, "CNDB", &[o, s])
                    || truth(env, "ACR", &[o, s]),
            );
            t.phone.insert(k.clone(), truth(env, "VP", &[s]));
            t.route
                .insert(k, truth(env, "OCS", &[o, s]) || truth(env, "TCS", &[o, s]));
        }
    }
    t
}

pub const FORWARDING_TABLES: &[&str] = &["FM", "Del", "DelB", "FMNA", "DelNA"];

/// A forwarding loop, first element repeated at the end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForwardingCycle(pub Vec<String>);

impl fmt::Display for ForwardingCycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "forwarding cycle {}", self.0.join(" -> "))
    }
}

/// Checks that the forwarding tables, read as a graph over DN, have no
/// cycle.
pub fn check_forwarding_acyclic(env: &Environment) -> Result<(), ForwardingCycle> {
    let elems = dn(env);
    let mut edges: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for x in &elems {
        for t in FORWARDING_TABLES {
            if let Some(y) = image(env, t, x) {
                edges.entry(x.clone()).or_default().push(y);
            }
        }
    }
    // 0 unvisited, 1 on the current path, 2 done
    let mut color: BTreeMap<&str, u8> = BTreeMap::new();
    fn visit<'a>(
        x: &'a str,
        edges: &'a BTreeMap<String, Vec<String>>,
        color: &mut BTreeMap<&'a str, u8>,
        path: &mut Vec<&'a str>,
    ) -> Option<Vec<String>> {
        color.insert(x, 1);
        path.push(x);
        for y in edges.get(x).into_iter().flatten() {
            match color.get(y.as_str()).copied().unwrap_or(0) {
                1 => {
                    let start = path.iter().position(|p| *p == y).unwrap();
                    let mut cycle: Vec<String> =
                        path[start..].iter().map(|s| s.to_string()).collect();
                    cycle.push(y.clone());
                    return Some(cycle);
                }
                0 => {
                    if let Some(c) = visit(y, edges, color, path) {
                        return Some(c);
                    }
                }
                _ => {}
            }
        }
        path.pop();
        color.insert(x, 2);
        None
    }
    for x in &elems {
        if color.get(x.as_str()).copied().unwrap_or(0) == 0 {
            if let Some(c) = visit(x, &edges, &mut color, &mut Vec::new()) {
                return Err(ForwardingCycle(c));
            }
        }
    }
    Ok(())
}

/// Checks that Busy, ok and ok-s are pairwise exclusive and that wherever
/// one holds for a subscriber, none of the features competing with them
/// at `find-subscriber` (FM, Del, DNR, and the three blocking predicates
/// for any origin) applies. Returns the offending subscriber and feature.
pub fn check_ok_disjoint(env: &Environment) -> Result<(), String> {
    let elems = dn(env);
    let blocks = block_predicates(env);
    for x in &elems {
        let basic: Vec<&str> = ["Busy", "ok", "ok-s"]
            .into_iter()
            .filter(|p| truth(env, p, &[x]))
            .collect();
        if basic.len() > 1 {
            return Err(format!("{} overlap at {x}", basic.join(" and ")));
        }
        if basic.is_empty() {
            continue;
        }
        for t in ["FM", "Del"] {
            if image(env, t, x).is_some() {
                return Err(format!("{} and {t} overlap at {x}", basic[0]));
            }
        }
        if truth(env, "DNR", &[x]) {
            return Err(format!("{} and DNR overlap at {x}", basic[0]));
        }
        for o in &elems {
            let k = (o.clone(), x.clone());
            for (name, table) in [
                ("Block-Sub", &blocks.sub),
                ("Block-Phone", &blocks.phone),
                ("Block-Route", &blocks.route),
            ] {
                if table[&k] {
                    return Err(format!("{} and {name} overlap at ({o}, {x})", basic[0]));
                }
            }
        }
    }
    Ok(())
}
