//! Features as named refinement patches, and conflict detection.

use crate::interp::{Bounds, Verdict};
use crate::model::{Environment, Std};
use crate::refine::{
    apply_rule, check_refinement, check_trace_equivalence, RefineError, RuleApplication, RuleError,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

pub const CONFLICT_FORMAT: &str = "conflict/1";

/// A named sequence of rule applications refining a subject Std.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeaturePatch {
    pub name: String,
    pub subject: String,
    pub steps: Vec<RuleApplication>,
}

impl FeaturePatch {
    /// States this patch creates by adding or splitting.
    pub fn new_states(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for s in &self.steps {
            match s {
                RuleApplication::AddStates { names, .. } => out.extend(names.iter().cloned()),
                RuleApplication::SplitState { parts, .. } => out.extend(parts.iter().cloned()),
                _ => {}
            }
        }
        out
    }
}

/// Failure of one step of a patch; `step` is 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureError {
    pub feature: String,
    pub step: usize,
    pub error: RuleError,
}

impl fmt::Display for FeatureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "feature `{}`, step {}: {}",
            self.feature, self.step, self.error
        )
    }
}

impl std::error::Error for FeatureError {}

pub fn apply_feature(std: &Std, f: &FeaturePatch, env: &Environment) -> Result<Std, FeatureError> {
    if f.subject != std.name {
        return Err(FeatureError {
            feature: f.name.clone(),
            step: 0,
            error: RuleError {
                rule: "feature".into(),
                condition: format!("patch targets `{}`, not `{}`", f.subject, std.name),
                witness: None,
            },
        });
    }
    let mut cur = std.clone();
    for (i, app) in f.steps.iter().enumerate() {
        cur = apply_rule(&cur, app, env).map_err(|error| FeatureError {
            feature: f.name.clone(),
            step: i,
            error,
        })?;
    }
    Ok(cur)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictVerdict {
    NotIndependent,
    Conflicting,
    Compatible,
}

impl fmt::Display for ConflictVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConflictVerdict::NotIndependent => "not-independent",
            ConflictVerdict::Conflicting => "conflicting",
            ConflictVerdict::Compatible => "compatible",
        })
    }
}

/// One application order `first` then `second`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderAttempt {
    pub first: String,
    pub second: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<FeatureError>,
    /// Refinement from the Std with only `first` applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refines_first: Option<Verdict>,
    /// Refinement from the Std with only `second` applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refines_second: Option<Verdict>,
    #[serde(skip)]
    pub result: Option<Std>,
}

impl OrderAttempt {
    pub fn common_refinement(&self) -> bool {
        self.result.is_some()
            && self.refines_first.as_ref().is_some_and(|v| v.pass)
            && self.refines_second.as_ref().is_some_and(|v| v.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictReport {
    pub verdict: ConflictVerdict,
    pub features: [String; 2],
    pub bounds: Bounds,
    pub evidence: Vec<String>,
    pub attempts: Vec<OrderAttempt>,
    /// Trace equivalence of the two orders, when both succeed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orders_equivalent: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub merged: Option<Std>,
}

impl ConflictReport {
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut()
            .unwrap()
            .insert("format".into(), CONFLICT_FORMAT.into());
        v
    }
}

impl fmt::Display for ConflictReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} / {}: {} (bounds: {})",
            self.features[0], self.features[1], self.verdict, self.bounds
        )?;
        if self.verdict == ConflictVerdict::Conflicting {
            writeln!(
                f,
                "  no common refinement found by composing the patches in either order"
            )?;
        }
        for e in &self.evidence {
            writeln!(f, "  {e}")?;
        }
        Ok(())
    }
}

fn attempt(
    base: &Std,
    first: (&FeaturePatch, &Std),
    second: (&FeaturePatch, &Std),
    env: &Environment,
    bounds: &Bounds,
) -> Result<OrderAttempt, RefineError> {
    let mut a = OrderAttempt {
        first: first.0.name.clone(),
        second: second.0.name.clone(),
        error: None,
        refines_first: None,
        refines_second: None,
        result: None,
    };
    // the second patch is written against the base Std's name
    let mut subject = first.1.clone();
    subject.name = base.name.clone();
    match apply_feature(&subject, second.0, env) {
        Err(e) => a.error = Some(e),
        Ok(merged) => {
            a.refines_first = Some(check_refinement(first.1, &merged, env, bounds)?);
            a.refines_second = Some(check_refinement(second.1, &merged, env, bounds)?);
            a.result = Some(merged);
        }
    }
    Ok(a)
}

fn describe_attempt(a: &OrderAttempt, out: &mut Vec<String>) {
    let order = format!("{} then {}", a.first, a.second);
    if let Some(e) = &a.error {
        out.push(format!("{order}: {e}"));
    }
    for (what, v) in [(&a.first, &a.refines_first), (&a.second, &a.refines_second)] {
        if let Some(v) = v {
            if let Some(cx) = &v.counterexample {
                out.push(format!(
                    "{order}: result does not refine the Std with only `{what}`: {cx}"
                ));
            }
        }
    }
}

/// Decides whether two features applicable to `std` have a common
/// refinement reachable by applying both patches in some order.
pub fn detect_conflict(
    std: &Std,
    f1: &FeaturePatch,
    f2: &FeaturePatch,
    env: &Environment,
    bounds: &Bounds,
) -> Result<ConflictReport, RefineError> {
    let mut report = ConflictReport {
        verdict: ConflictVerdict::NotIndependent,
        features: [f1.name.clone(), f2.name.clone()],
        bounds: *bounds,
        evidence: Vec::new(),
        attempts: Vec::new(),
        orders_equivalent: None,
        merged: None,
    };
    let s1 = apply_feature(std, f1, env);
    let s2 = apply_feature(std, f2, env);
    let (s1, s2) = match (s1, s2) {
        (Ok(a), Ok(b)) => (a, b),
        (a, b) => {
            for e in [a.err(), b.err()].into_iter().flatten() {
                report
                    .evidence
                    .push(format!("does not apply to `{}` alone: {e}", std.name));
            }
            return Ok(report);
        }
    };
    let clash: Vec<String> = f1
        .new_states()
        .intersection(&f2.new_states())
        .cloned()
        .collect();
    if !clash.is_empty() {
        report.evidence.push(format!(
            "both features create state(s) {}",
            clash.join(", ")
        ));
        return Ok(report);
    }
    let ab = attempt(std, (f1, &s1), (f2, &s2), env, bounds)?;
    let ba = attempt(std, (f2, &s2), (f1, &s1), env, bounds)?;
    let good: Vec<&OrderAttempt> = [&ab, &ba]
        .into_iter()
        .filter(|a| a.common_refinement())
        .collect();
    report.verdict = ConflictVerdict::Conflicting;
    describe_attempt(&ab, &mut report.evidence);
    describe_attempt(&ba, &mut report.evidence);
    if !good.is_empty() {
        let merged = good[0].result.clone().unwrap();
        if let (Some(x), Some(y)) = (&ab.result, &ba.result) {
            let eq = check_trace_equivalence(x, y, env, bounds)?;
            if let Some(cx) = &eq.counterexample {
                report
                    .evidence
                    .push(format!("the two application orders differ: {cx}"));
            } else {
                report.verdict = ConflictVerdict::Compatible;
            }
            report.orders_equivalent = Some(eq);
        } else {
            report.verdict = ConflictVerdict::Compatible;
        }
        if report.verdict == ConflictVerdict::Compatible {
            report.evidence.push(format!(
                "common refinement found applying {} then {}",
                good[0].first, good[0].second
            ));
            report.merged = Some(merged);
        }
    }
    report.attempts = vec![ab, ba];
    Ok(report)
}

#[derive(Debug, Clone)]
pub enum ChainError {
    /// Patch `index` failed; `conflict` compares it with the patch before it.
    Feature {
        index: usize,
        error: FeatureError,
        conflict: Option<Box<ConflictReport>>,
    },
    NotRefinement(Box<Verdict>),
    Check(RefineError),
}

impl fmt::Display for ChainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainError::Feature {
                index,
                error,
                conflict,
            } => {
                write!(f, "patch {index}: {error}")?;
                if let Some(c) = conflict {
                    write!(f, "\n{c}")?;
                }
                Ok(())
            }
            ChainError::NotRefinement(v) => write!(
                f,
                "chain result does not refine the original: {}",
                v.counterexample
                    .as_ref()
                    .map(|c| c.to_string())
                    .unwrap_or_default()
            ),
            ChainError::Check(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ChainError {}

/// Applies patches in order and certifies that the result refines `std`.
pub fn integrate_chain(
    std: &Std,
    fs: &[FeaturePatch],
    env: &Environment,
    bounds: &Bounds,
) -> Result<(Std, Verdict), ChainError> {
    let mut prev = std.clone();
    let mut cur = std.clone();
    for (i, f) in fs.iter().enumerate() {
        match apply_feature(&cur, f, env) {
            Ok(next) => {
                prev = cur;
                cur = next;
            }
            Err(error) => {
                let conflict = if i > 0 {
                    Some(Box::new(
                        detect_conflict(&prev, &fs[i - 1], f, env, bounds)
                            .map_err(ChainError::Check)?,
                    ))
                } else {
                    None
                };
                return Err(ChainError::Feature {
                    index: i,
                    error,
                    conflict,
                });
            }
        }
    }
    let v = check_refinement(std, &cur, env, bounds).map_err(ChainError::Check)?;
    if !v.pass {
        return Err(ChainError::NotRefinement(Box::new(v)));
    }
    Ok((cur, v))
}

/// Pairwise reports keyed by patch indices `(i, j)` with `i < j`.
pub type ConflictMatrix = Vec<((usize, usize), ConflictReport)>;

/// Reports for every unordered pair of patches, in row-major order.
pub fn conflict_matrix(
    std: &Std,
    fs: &[FeaturePatch],
    env: &Environment,
    bounds: &Bounds,
) -> Result<ConflictMatrix, RefineError> {
    let mut out = Vec::new();
    for i in 0..fs.len() {
        for j in i + 1..fs.len() {
            out.push(((i, j), detect_conflict(std, &fs[i], &fs[j], env, bounds)?));
        }
    }
    Ok(out)
}
