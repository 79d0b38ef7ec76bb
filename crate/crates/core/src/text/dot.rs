use super::printer::print_expr;
use crate::model::{Std, Trigger};
use std::fmt::Write;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz rendering: one node per state, a point-shaped entry node per
/// initial state, and edges labelled `{guard} trigger / [outputs] {post}`.
pub fn export_dot(std: &Std) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "digraph {} {{", quote(&std.name));
    s.push_str("  rankdir=LR;\n");
    for st in &std.states {
        let _ = writeln!(s, "  {} [shape=ellipse];", quote(st));
    }
    for (i, init) in std.initial.iter().enumerate() {
        let entry = quote(&format!("__init{i}"));
        let _ = writeln!(s, "  {entry} [shape=point];");
        let label = if init.pred.is_true() {
            String::new()
        } else {
            format!(
                " [label={}]",
                quote(&format!("{{{}}}", print_expr(&init.pred)))
            )
        };
        let _ = writeln!(s, "  {entry} -> {}{label};", quote(&init.state));
    }
    for t in &std.transitions {
        let mut label = String::new();
        if !t.guard.is_true() {
            let _ = write!(label, "{{{}}} ", print_expr(&t.guard));
        }
        match &t.trigger {
            Trigger::Eps => label.push('ε'),
            Trigger::Input { ctor, params } if params.is_empty() => label.push_str(ctor),
            Trigger::Input { ctor, params } => {
                let _ = write!(label, "{ctor}({})", params.join(", "));
            }
        }
        if !t.outputs.is_empty() {
            let outs: Vec<String> = t
                .outputs
                .iter()
                .map(|o| {
                    let args: Vec<String> = o.args.iter().map(print_expr).collect();
                    match (o.ctor.is_empty(), args.is_empty()) {
                        (true, _) => args.join(", "),
                        (false, true) => o.ctor.clone(),
                        (false, false) => format!("{}({})", o.ctor, args.join(", ")),
                    }
                })
                .collect();
            let _ = write!(label, " / [{}]", outs.join(", "));
        }
        if !t.post.is_true() {
            let _ = write!(label, " {{{}}}", print_expr(&t.post));
        }
        if let Some(l) = &t.label {
            label = format!("{l}: {label}");
        }
        let _ = writeln!(
            s,
            "  {} -> {} [label={}];",
            quote(&t.source),
            quote(&t.target),
            quote(&label)
        );
    }
    s.push_str("}\n");
    s
}
