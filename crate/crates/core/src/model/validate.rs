use super::env::EnvDecls;
use super::{BinOp, DomainDecl, Expr, Sort, Std, UnOp, Value};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// A static well-formedness finding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub location: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Ty {
    Bool,
    Int,
    Enum(String),
    List(Box<Ty>),
    Any,
}

impl Ty {
    fn of(sort: &Sort) -> Ty {
        match sort {
            Sort::Bool => Ty::Bool,
            Sort::Int { .. } => Ty::Int,
            Sort::Enum { domain } => Ty::Enum(domain.clone()),
            Sort::List { elem, .. } => Ty::List(Box::new(Ty::of(elem))),
        }
    }

    fn compatible(&self, other: &Ty) -> bool {
        match (self, other) {
            (Ty::Any, _) | (_, Ty::Any) => true,
            (Ty::List(a), Ty::List(b)) => a.compatible(b),
            (a, b) => a == b,
        }
    }

    fn join(self, other: Ty) -> Ty {
        if self == Ty::Any {
            other
        } else {
            self
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Bool => write!(f, "Bool"),
            Ty::Int => write!(f, "Int"),
            Ty::Enum(d) => write!(f, "{d}"),
            Ty::List(t) => write!(f, "[{t}]"),
            Ty::Any => write!(f, "?"),
        }
    }
}

struct Checker<'a> {
    std: &'a Std,
    decls: Option<&'a EnvDecls>,
    diags: Vec<Diagnostic>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Ctx {
    Guard,
    Post,
    Output,
    Init,
}

impl<'a> Checker<'a> {
    fn report(&mut self, loc: &str, msg: impl Into<String>) {
        self.diags.push(Diagnostic {
            location: loc.to_string(),
            message: msg.into(),
        });
    }

    fn domain_known(&self, d: &str) -> bool {
        match self.std.domains.get(d) {
            Some(DomainDecl::Enum { .. }) => true,
            Some(DomainDecl::Range { .. }) => false,
            Some(DomainDecl::Abstract) => self
                .decls
                .map(|e| e.domains.contains_key(d))
                .unwrap_or(true),
            None => self
                .decls
                .map(|e| e.domains.contains_key(d))
                .unwrap_or(false),
        }
    }

    fn check_sort(&mut self, loc: &str, sort: &Sort) {
        match sort {
            Sort::Bool => {}
            Sort::Int { lo, hi } => {
                if lo > hi {
                    self.report(loc, format!("empty integer range {lo}..{hi}"));
                }
            }
            Sort::Enum { domain } => {
                if !self.domain_known(domain) {
                    self.report(loc, format!("undeclared domain `{domain}`"));
                }
            }
            Sort::List { elem, .. } => self.check_sort(loc, elem),
        }
    }

    fn sym_domain(&self, s: &str) -> Option<String> {
        for (d, decl) in &self.std.domains {
            if let DomainDecl::Enum { elems } = decl {
                if elems.iter().any(|e| e == s) {
                    return Some(d.clone());
                }
            }
        }
        self.decls.and_then(|e| e.domain_of(s)).map(str::to_string)
    }

    fn value_ty(&mut self, loc: &str, v: &Value) -> Ty {
        match v {
            Value::Bool(_) => Ty::Bool,
            Value::Int(_) => Ty::Int,
            Value::Sym(s) => match self.sym_domain(s) {
                Some(d) => Ty::Enum(d),
                None => {
                    if self.decls.is_some() {
                        self.report(loc, format!("unknown name `{s}`"));
                    }
                    Ty::Any
                }
            },
            Value::List(items) => {
                let mut t = Ty::Any;
                for i in items {
                    let it = self.value_ty(loc, i);
                    t = t.join(it);
                }
                Ty::List(Box::new(t))
            }
        }
    }

    fn expect(&mut self, loc: &str, got: &Ty, want: &Ty, what: &str) {
        if !got.compatible(want) {
            self.report(
                loc,
                format!("sort mismatch in {what}: expected {want}, found {got}"),
            );
        }
    }

    fn infer(&mut self, loc: &str, e: &Expr, params: &[(String, Sort)], ctx: Ctx) -> Ty {
        match e {
            Expr::Lit(v) => self.value_ty(loc, v),
            Expr::Var(n) => {
                self.report(loc, format!("unresolved name `{n}`"));
                Ty::Any
            }
            Expr::Else => {
                self.report(loc, "`else` is only allowed as an entire guard");
                Ty::Bool
            }
            Expr::Attr(n) | Expr::Primed(n) => {
                if matches!(e, Expr::Primed(_)) && ctx != Ctx::Post {
                    self.report(loc, "primed reference outside postcondition");
                }
                match self.std.attr(n) {
                    Some(a) => Ty::of(&a.sort),
                    None => {
                        self.report(loc, format!("unknown attribute `{n}`"));
                        Ty::Any
                    }
                }
            }
            Expr::Param(n) => match params.iter().find(|(p, _)| p == n) {
                Some((_, s)) => Ty::of(s),
                None => {
                    self.report(loc, format!("unbound parameter `{n}`"));
                    Ty::Any
                }
            },
            Expr::App(f, args) => {
                let arg_tys: Vec<Ty> = args
                    .iter()
                    .map(|a| self.infer(loc, a, params, ctx))
                    .collect();
                let Some(decls) = self.decls else {
                    return Ty::Any;
                };
                match decls.symbols.get(f) {
                    None => {
                        self.report(loc, format!("undeclared environment symbol `{f}`"));
                        Ty::Any
                    }
                    Some(d) => {
                        if d.params.len() != args.len() {
                            self.report(
                                loc,
                                format!(
                                    "`{f}` expects {} argument(s), got {}",
                                    d.params.len(),
                                    args.len()
                                ),
                            );
                        } else {
                            let want: Vec<Ty> = d.params.iter().map(Ty::of).collect();
                            for (g, w) in arg_tys.iter().zip(&want) {
                                self.expect(loc, g, w, &format!("argument of `{f}`"));
                            }
                        }
                        Ty::of(&d.result)
                    }
                }
            }
            Expr::Defined(inner) => {
                self.infer(loc, inner, params, ctx);
                Ty::Bool
            }
            Expr::Unary(op, inner) => {
                let t = self.infer(loc, inner, params, ctx);
                match op {
                    UnOp::Not | UnOp::Holds => {
                        self.expect(loc, &t, &Ty::Bool, "boolean operand");
                        Ty::Bool
                    }
                    UnOp::Neg => {
                        self.expect(loc, &t, &Ty::Int, "integer operand");
                        Ty::Int
                    }
                    UnOp::Len => {
                        self.expect(loc, &t, &Ty::List(Box::new(Ty::Any)), "len");
                        Ty::Int
                    }
                    UnOp::Head => match t {
                        Ty::List(el) => *el,
                        Ty::Any => Ty::Any,
                        other => {
                            self.report(loc, format!("head of non-list {other}"));
                            Ty::Any
                        }
                    },
                    UnOp::Tail => {
                        self.expect(loc, &t, &Ty::List(Box::new(Ty::Any)), "tail");
                        t
                    }
                }
            }
            Expr::Binary(op, l, r) => {
                let lt = self.infer(loc, l, params, ctx);
                let rt = self.infer(loc, r, params, ctx);
                match op {
                    BinOp::And | BinOp::Or | BinOp::Implies => {
                        self.expect(loc, &lt, &Ty::Bool, op.symbol());
                        self.expect(loc, &rt, &Ty::Bool, op.symbol());
                        Ty::Bool
                    }
                    BinOp::Eq | BinOp::Ne => {
                        self.expect(loc, &rt, &lt, "equality");
                        Ty::Bool
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        self.expect(loc, &lt, &Ty::Int, op.symbol());
                        self.expect(loc, &rt, &Ty::Int, op.symbol());
                        Ty::Bool
                    }
                    BinOp::Add | BinOp::Sub => {
                        self.expect(loc, &lt, &Ty::Int, op.symbol());
                        self.expect(loc, &rt, &Ty::Int, op.symbol());
                        Ty::Int
                    }
                }
            }
            Expr::List(items) => {
                let mut t = Ty::Any;
                for i in items {
                    let it = self.infer(loc, i, params, ctx);
                    self.expect(loc, &it, &t, "list element");
                    t = t.join(it);
                }
                Ty::List(Box::new(t))
            }
            Expr::Cons(h, tl) => {
                let ht = self.infer(loc, h, params, ctx);
                let tt = self.infer(loc, tl, params, ctx);
                let want = Ty::List(Box::new(ht));
                self.expect(loc, &tt, &want, "cons");
                want.join(tt)
            }
        }
    }

    fn check_bool(&mut self, loc: &str, e: &Expr, params: &[(String, Sort)], ctx: Ctx) {
        let t = self.infer(loc, e, params, ctx);
        self.expect(loc, &t, &Ty::Bool, "condition");
    }

    fn run(&mut self) {
        let std = self.std;
        for (name, d) in &std.domains {
            match d {
                DomainDecl::Range { lo, hi } if lo > hi => self.report(
                    &format!("domain {name}"),
                    format!("empty integer range {lo}..{hi}"),
                ),
                DomainDecl::Enum { elems } if elems.is_empty() => {
                    self.report(&format!("domain {name}"), "empty enumeration")
                }
                _ => {}
            }
        }
        if std.signature.inputs.is_empty() {
            self.report("signature", "input set empty");
        }
        if std.signature.outputs.is_empty() {
            self.report("signature", "output set empty");
        }
        for (kind, ctors) in [
            ("input", &std.signature.inputs),
            ("output", &std.signature.outputs),
        ] {
            let mut seen = BTreeSet::new();
            for c in ctors {
                if !seen.insert(&c.name) {
                    self.report(
                        "signature",
                        format!("duplicate {kind} constructor `{}`", c.name),
                    );
                }
                for s in &c.params {
                    self.check_sort(&format!("{kind} {}", c.name), s);
                }
            }
        }
        let mut seen = BTreeSet::new();
        for a in &std.attributes {
            if !seen.insert(&a.name) {
                self.report("attributes", format!("duplicate attribute `{}`", a.name));
            }
            self.check_sort(&format!("attribute {}", a.name), &a.sort);
        }
        if std.states.is_empty() {
            self.report("states", "control state set empty");
        }
        let mut seen = BTreeSet::new();
        for s in &std.states {
            if !seen.insert(s) {
                self.report("states", format!("duplicate control state `{s}`"));
            }
        }
        if std.initial.is_empty() {
            self.report("states", "initial set empty");
        }
        for i in &std.initial {
            let loc = format!("initial {}", i.state);
            if !std.has_state(&i.state) {
                self.report(&loc, format!("undeclared control state `{}`", i.state));
            }
            self.check_bool(&loc, &i.pred, &[], Ctx::Init);
        }
        let mut labels = BTreeSet::new();
        for (idx, t) in std.transitions.iter().enumerate() {
            let loc = match &t.label {
                Some(l) => format!("transition {l}"),
                None => format!("transition #{idx} ({} -> {})", t.source, t.target),
            };
            if let Some(l) = &t.label {
                if !labels.insert(l) {
                    self.report(&loc, format!("duplicate transition label `{l}`"));
                }
            }
            for s in [&t.source, &t.target] {
                if !std.has_state(s) {
                    self.report(&loc, format!("undeclared control state `{s}`"));
                }
            }
            let mut params: Vec<(String, Sort)> = Vec::new();
            if let Some(ctor) = t.trigger.ctor() {
                match std.signature.input(ctor) {
                    None => self.report(&loc, format!("undeclared input constructor `{ctor}`")),
                    Some(c) => {
                        let ps = t.trigger.params();
                        if ps.len() != c.params.len() {
                            self.report(
                                &loc,
                                format!(
                                    "`{ctor}` takes {} parameter(s), {} bound",
                                    c.params.len(),
                                    ps.len()
                                ),
                            );
                        }
                        let mut seenp = BTreeSet::new();
                        for (p, s) in ps.iter().zip(&c.params) {
                            if !seenp.insert(p) {
                                self.report(&loc, format!("parameter `{p}` bound twice"));
                            }
                            params.push((p.clone(), s.clone()));
                        }
                    }
                }
            }
            if !matches!(t.guard, Expr::Else) {
                self.check_bool(&loc, &t.guard, &params, Ctx::Guard);
            }
            for o in &t.outputs {
                match std.signature.output(&o.ctor) {
                    None => {
                        self.report(&loc, format!("undeclared output constructor `{}`", o.ctor))
                    }
                    Some(c) => {
                        if c.params.len() != o.args.len() {
                            self.report(
                                &loc,
                                format!(
                                    "`{}` takes {} argument(s), got {}",
                                    o.ctor,
                                    c.params.len(),
                                    o.args.len()
                                ),
                            );
                        }
                        let want: Vec<Ty> = c.params.iter().map(Ty::of).collect();
                        for (a, w) in o.args.iter().zip(&want) {
                            let got = self.infer(&loc, a, &params, Ctx::Output);
                            self.expect(&loc, &got, w, &format!("argument of `{}`", o.ctor));
                        }
                    }
                }
            }
            self.check_bool(&loc, &t.post, &params, Ctx::Post);
        }
    }
}

/// Static validation. The result is empty iff the Std is well-formed; with
/// `decls` present, environment symbols and abstract domains are checked too.
pub fn validate_std(std: &Std, decls: Option<&EnvDecls>) -> Vec<Diagnostic> {
    let mut c = Checker {
        std,
        decls,
        diags: Vec::new(),
    };
    c.run();
    c.diags
}
