use super::{Expr, Std, Transition};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DesugarError {
    #[error("two `else` guards from `{state}` on {trigger}")]
    DuplicateElse { state: String, trigger: String },
}

fn same_group(a: &Transition, b: &Transition) -> bool {
    a.source == b.source && a.trigger.ctor() == b.trigger.ctor()
}

/// Guard of `other`, with its parameters renamed to those of `target`.
fn guard_in_terms_of(other: &Transition, target: &Transition) -> Expr {
    let mapping: BTreeMap<String, String> = other
        .trigger
        .params()
        .iter()
        .cloned()
        .zip(target.trigger.params().iter().cloned())
        .collect();
    other.guard.clone().rename_params(&mapping)
}

/// Eliminates `else` guards and priority annotations.
///
/// Within each (source, trigger) group, an `else` guard becomes the
/// conjunction of the negations of every other guard in the group, and a
/// transition with priority `p` gets the negation of every guard with a
/// smaller priority number conjoined to its own. Negations use `holds` when
/// the negated guard may be undefined, so an undefined guard still counts as
/// not satisfied.
pub fn desugar(std: &Std) -> Result<Std, DesugarError> {
    let orig = &std.transitions;
    for (i, t) in orig.iter().enumerate() {
        if matches!(t.guard, Expr::Else)
            && orig[i + 1..]
                .iter()
                .any(|u| same_group(t, u) && matches!(u.guard, Expr::Else))
        {
            return Err(DesugarError::DuplicateElse {
                state: t.source.clone(),
                trigger: t.trigger.ctor().unwrap_or("eps").to_string(),
            });
        }
    }
    let mut out = std.clone();
    for (i, t) in orig.iter().enumerate() {
        let others = orig
            .iter()
            .enumerate()
            .filter(|(j, u)| *j != i && same_group(t, u))
            .map(|(_, u)| u);
        let guard = if matches!(t.guard, Expr::Else) {
            others.fold(Expr::tt(), |acc, u| {
                Expr::and(acc, Expr::negate_total(guard_in_terms_of(u, t)))
            })
        } else if let Some(p) = t.priority {
            others
                .filter(|u| !matches!(u.guard, Expr::Else))
                .filter(|u| matches!(u.priority, Some(q) if q < p))
                .fold(t.guard.clone(), |acc, u| {
                    Expr::and(acc, Expr::negate_total(guard_in_terms_of(u, t)))
                })
        } else {
            t.guard.clone()
        };
        out.transitions[i].guard = guard;
        out.transitions[i].priority = None;
    }
    Ok(out)
}
