use crate::features::FeaturePatch;
use crate::model::{
    BinOp, Ctor, DomainDecl, Expr, OutputExpr, Std, Transition, Trigger, UnOp, Value,
};
use crate::refine::RuleApplication;
use std::fmt::Write;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Implies, ..) => 0,
        Expr::Binary(BinOp::Or, ..) => 1,
        Expr::Binary(BinOp::And, ..) => 2,
        Expr::Unary(UnOp::Not, _) => 3,
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 5,
        Expr::Binary(..) => 4,
        Expr::Unary(UnOp::Neg, _) => 6,
        Expr::Lit(Value::Int(i)) if *i < 0 => 6,
        _ => 7,
    }
}

fn value(v: &Value, out: &mut String) {
    match v {
        Value::List(items) => {
            out.push('[');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                value(x, out);
            }
            out.push(']');
        }
        other => {
            let _ = write!(out, "{other}");
        }
    }
}

fn call(name: &str, args: &[&Expr], out: &mut String) {
    out.push_str(name);
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        expr(a, 0, out);
    }
    out.push(')');
}

fn expr(e: &Expr, min: u8, out: &mut String) {
    let p = prec(e);
    if p < min {
        out.push('(');
        expr(e, 0, out);
        out.push(')');
        return;
    }
    match e {
        Expr::Lit(v) => value(v, out),
        Expr::Var(n) | Expr::Attr(n) | Expr::Param(n) => out.push_str(n),
        Expr::Primed(n) => {
            out.push_str(n);
            out.push('\'');
        }
        Expr::App(f, args) => call(f, &args.iter().collect::<Vec<_>>(), out),
        Expr::Defined(a) => call("defined", &[a], out),
        Expr::Unary(UnOp::Not, a) => {
            out.push('!');
            expr(a, 5, out);
        }
        Expr::Unary(UnOp::Neg, a) => {
            out.push('-');
            if matches!(**a, Expr::Lit(Value::Int(_))) {
                out.push('(');
                expr(a, 0, out);
                out.push(')');
            } else {
                expr(a, 6, out);
            }
        }
        Expr::Unary(UnOp::Head, a) => call("head", &[a], out),
        Expr::Unary(UnOp::Tail, a) => call("tail", &[a], out),
        Expr::Unary(UnOp::Len, a) => call("len", &[a], out),
        Expr::Unary(UnOp::Holds, a) => call("holds", &[a], out),
        Expr::Binary(op, l, r) => {
            let (lm, rm) = match op {
                BinOp::Implies => (1, 0),
                BinOp::Or => (1, 2),
                BinOp::And => (2, 3),
                BinOp::Add | BinOp::Sub => (5, 6),
                _ => (5, 5),
            };
            expr(l, lm, out);
            let _ = write!(out, " {} ", op.symbol());
            expr(r, rm, out);
        }
        Expr::List(items) => {
            out.push('[');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expr(x, 0, out);
            }
            out.push(']');
        }
        Expr::Cons(h, t) => call("cons", &[h, t], out),
        Expr::Else => out.push_str("else"),
    }
}

/// Prints an expression with the minimal parentheses needed to parse back.
pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    expr(e, 0, &mut s);
    s
}

fn output(o: &OutputExpr, out: &mut String) {
    if o.ctor.is_empty() && o.args.len() == 1 {
        expr(&o.args[0], 0, out);
    } else if o.args.is_empty() {
        out.push_str(&o.ctor);
    } else {
        call(&o.ctor, &o.args.iter().collect::<Vec<_>>(), out);
    }
}

pub fn print_transition(t: &Transition) -> String {
    let mut s = String::new();
    if let Some(l) = &t.label {
        let _ = write!(s, "{l}: ");
    }
    let _ = write!(s, "{} -> {} : ", t.source, t.target);
    if !t.guard.is_true() {
        let _ = write!(s, "{{{}}} ", print_expr(&t.guard));
    }
    match &t.trigger {
        Trigger::Eps => s.push_str("eps"),
        Trigger::Input { ctor, params } => {
            s.push_str(ctor);
            if !params.is_empty() {
                let _ = write!(s, "({})", params.join(", "));
            }
        }
    }
    if !t.outputs.is_empty() {
        s.push_str(" / [");
        for (i, o) in t.outputs.iter().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            output(o, &mut s);
        }
        s.push(']');
    }
    if !t.post.is_true() {
        let _ = write!(s, " {{{}}}", print_expr(&t.post));
    }
    if let Some(p) = t.priority {
        let _ = write!(s, " @{p}");
    }
    s
}

fn ctors(cs: &[Ctor]) -> String {
    cs.iter()
        .map(|c| {
            if c.name.is_empty() && c.params.len() == 1 {
                c.params[0].to_string()
            } else if c.params.is_empty() {
                c.name.clone()
            } else {
                let ps: Vec<String> = c.params.iter().map(|p| p.to_string()).collect();
                format!("{}({})", c.name, ps.join(", "))
            }
        })
        .collect::<Vec<_>>()
        .join(" | ")
}

/// Canonical text of a Std; parsing it back yields an equal Std.
pub fn print_std(std: &Std) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "std {} = {{", std.name);
    for (name, d) in &std.domains {
        match d {
            DomainDecl::Abstract => {
                let _ = writeln!(s, "  domain {name}");
            }
            DomainDecl::Enum { elems } => {
                let _ = writeln!(s, "  domain {name} = {{{}}}", elems.join(", "));
            }
            DomainDecl::Range { lo, hi } => {
                let _ = writeln!(s, "  domain {name} = {lo}..{hi}");
            }
        }
    }
    let _ = writeln!(s, "  input {}", ctors(&std.signature.inputs));
    let _ = writeln!(s, "  output {}", ctors(&std.signature.outputs));
    if !std.attributes.is_empty() {
        s.push_str("  attributes\n");
        for a in &std.attributes {
            let _ = writeln!(s, "    {} :: {}", a.name, a.sort);
        }
    }
    s.push_str("  states\n");
    for st in &std.states {
        let _ = write!(s, "    {st}");
        for init in std.initial.iter().filter(|i| &i.state == st) {
            s.push_str(" init");
            if !init.pred.is_true() {
                let _ = write!(s, " {{{}}}", print_expr(&init.pred));
            }
        }
        s.push('\n');
    }
    for t in &std.transitions {
        let _ = writeln!(s, "  {}", print_transition(t));
    }
    s.push_str("}\n");
    s
}

pub fn print_feature(f: &FeaturePatch) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "feature {} on {} {{", f.name, f.subject);
    for step in &f.steps {
        match step {
            RuleApplication::AddStates { names, transitions } => {
                let _ = write!(s, "  add-states {}", names.join(", "));
                if transitions.is_empty() {
                    s.push('\n');
                } else {
                    s.push_str(" {\n");
                    for t in transitions {
                        let _ = writeln!(s, "    {}", print_transition(t));
                    }
                    s.push_str("  }\n");
                }
            }
            RuleApplication::RemoveStates { names } => {
                let _ = writeln!(s, "  remove-states {}", names.join(", "));
            }
            RuleApplication::SplitState {
                state,
                parts,
                redirects,
            } => {
                let _ = write!(s, "  split {state} into {}", parts.join(", "));
                if redirects.is_empty() {
                    s.push('\n');
                } else {
                    s.push_str(" {\n");
                    for r in redirects {
                        let _ = write!(s, "    {} -> {}", r.transition, r.part);
                        if let Some(e) = &r.strengthen {
                            let _ = write!(s, " {{{}}}", print_expr(e));
                        }
                        s.push('\n');
                    }
                    s.push_str("  }\n");
                }
            }
            RuleApplication::AddTransitions { transitions } => {
                s.push_str("  add-transitions {\n");
                for t in transitions {
                    let _ = writeln!(s, "    {}", print_transition(t));
                }
                s.push_str("  }\n");
            }
            RuleApplication::RemoveTransitions { labels } => {
                let _ = writeln!(s, "  remove-transitions {}", labels.join(", "));
            }
            RuleApplication::RemoveInitialStates { names } => {
                let _ = writeln!(s, "  remove-initial {}", names.join(", "));
            }
        }
    }
    s.push_str("}\n");
    s
}
