//! Abstract syntax of state transition diagrams.
//!
//! A [`Std`] is the notated form of a state machine: a signature of input and
//! output message constructors, typed attributes over finite sorts, a set of
//! control states with initial markings, and guarded transitions of the form
//! `{P} m / op {Q}`. The machine's state space is control state × attribute
//! valuation; its transition relation is induced by the transitions.

mod desugar;
mod env;
mod eval;
mod semantics;
mod validate;

pub use desugar::{desugar, DesugarError};
pub use env::{EnvDecls, EnvError, Environment, SymbolDecl, Table};
pub use eval::{eval_expr, holds, EvalError, Scope};
pub use semantics::{
    check_input, enabled_transitions, initial_configurations, input_instances,
    reachable_configurations, reachable_control_states, Binding, Config, Enabled, Universe,
};
pub use validate::{validate_std, Diagnostic};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// A runtime value. Every sort denotes a finite set of these.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Sym(String),
    List(Vec<Value>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Sym(s) => write!(f, "{s}"),
            Value::List(items) => {
                write!(f, "[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Finite sorts for attributes, parameters and environment symbols.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sort {
    Bool,
    Int { lo: i64, hi: i64 },
    Enum { domain: String },
    List { elem: Box<Sort>, max_len: usize },
}

impl Sort {
    pub fn int(lo: i64, hi: i64) -> Sort {
        Sort::Int { lo, hi }
    }

    pub fn enumeration(domain: impl Into<String>) -> Sort {
        Sort::Enum {
            domain: domain.into(),
        }
    }

    pub fn list(elem: Sort, max_len: usize) -> Sort {
        Sort::List {
            elem: Box::new(elem),
            max_len,
        }
    }

    /// Enumerates the value set. `domain_elems` resolves enum domains; an
    /// unresolvable domain yields an empty set.
    pub fn values(&self, domain_elems: &dyn Fn(&str) -> Option<Vec<String>>) -> Vec<Value> {
        match self {
            Sort::Bool => vec![Value::Bool(false), Value::Bool(true)],
            Sort::Int { lo, hi } => (*lo..=*hi).map(Value::Int).collect(),
            Sort::Enum { domain } => domain_elems(domain)
                .unwrap_or_default()
                .into_iter()
                .map(Value::Sym)
                .collect(),
            Sort::List { elem, max_len } => {
                let elems = elem.values(domain_elems);
                let mut out = vec![Value::List(vec![])];
                let mut layer: Vec<Vec<Value>> = vec![vec![]];
                for _ in 0..*max_len {
                    let mut next = Vec::new();
                    for prefix in &layer {
                        for e in &elems {
                            let mut l = prefix.clone();
                            l.push(e.clone());
                            next.push(l);
                        }
                    }
                    out.extend(next.iter().cloned().map(Value::List));
                    layer = next;
                }
                out
            }
        }
    }

    /// Membership test.
    pub fn contains(&self, v: &Value, domain_elems: &dyn Fn(&str) -> Option<Vec<String>>) -> bool {
        match (self, v) {
            (Sort::Bool, Value::Bool(_)) => true,
            (Sort::Int { lo, hi }, Value::Int(i)) => lo <= i && i <= hi,
            (Sort::Enum { domain }, Value::Sym(s)) => domain_elems(domain)
                .map(|d| d.iter().any(|e| e == s))
                .unwrap_or(false),
            (Sort::List { elem, max_len }, Value::List(items)) => {
                items.len() <= *max_len && items.iter().all(|i| elem.contains(i, domain_elems))
            }
            _ => false,
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => write!(f, "Bool"),
            Sort::Int { lo, hi } => write!(f, "{lo}..{hi}"),
            Sort::Enum { domain } => write!(f, "{domain}"),
            Sort::List { elem, max_len } => write!(f, "[{elem}; {max_len}]"),
        }
    }
}

/// Named finite domain declared inside a Std.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainDecl {
    /// Elements supplied by the environment.
    Abstract,
    Enum {
        elems: Vec<String>,
    },
    Range {
        lo: i64,
        hi: i64,
    },
}

/// A message constructor with its parameter sorts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ctor {
    pub name: String,
    pub params: Vec<Sort>,
}

impl Ctor {
    pub fn new(name: impl Into<String>, params: Vec<Sort>) -> Ctor {
        Ctor {
            name: name.into(),
            params,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub inputs: Vec<Ctor>,
    pub outputs: Vec<Ctor>,
}

impl Signature {
    pub fn input(&self, name: &str) -> Option<&Ctor> {
        self.inputs.iter().find(|c| c.name == name)
    }

    pub fn output(&self, name: &str) -> Option<&Ctor> {
        self.outputs.iter().find(|c| c.name == name)
    }
}

/// A concrete message instance, e.g. `call(d1, d2)` or `DT`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Message {
    pub ctor: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub args: Vec<Value>,
}

impl Message {
    pub fn new(ctor: impl Into<String>, args: Vec<Value>) -> Message {
        Message {
            ctor: ctor.into(),
            args,
        }
    }

    pub fn plain(ctor: impl Into<String>) -> Message {
        Message::new(ctor, vec![])
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ctor.is_empty() && self.args.len() == 1 {
            return write!(f, "{}", self.args[0]);
        }
        write!(f, "{}", self.ctor)?;
        if !self.args.is_empty() {
            write!(f, "(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// Formats a message sequence as `[a, b(1)]`.
pub fn format_messages(msgs: &[Message]) -> String {
    let parts: Vec<String> = msgs.iter().map(|m| m.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinOp {
    And,
    Or,
    Implies,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Implies => "=>",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnOp {
    Not,
    Neg,
    Head,
    Tail,
    Len,
    /// Total truth test: true iff the operand is defined and true.
    Holds,
}

/// Expression language for guards, postconditions and output arguments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Lit(Value),
    /// Name not yet resolved to an attribute, parameter or enum element.
    Var(String),
    Attr(String),
    Primed(String),
    Param(String),
    App(String, Vec<Expr>),
    Defined(Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    List(Vec<Expr>),
    Cons(Box<Expr>, Box<Expr>),
    Else,
}

impl Expr {
    pub fn tt() -> Expr {
        Expr::Lit(Value::Bool(true))
    }

    pub fn ff() -> Expr {
        Expr::Lit(Value::Bool(false))
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Expr::Lit(Value::Bool(true)))
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn un(op: UnOp, e: Expr) -> Expr {
        Expr::Unary(op, Box::new(e))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Expr {
        Expr::un(UnOp::Not, e)
    }

    pub fn and(l: Expr, r: Expr) -> Expr {
        if l.is_true() {
            return r;
        }
        if r.is_true() {
            return l;
        }
        Expr::bin(BinOp::And, l, r)
    }

    pub fn or(l: Expr, r: Expr) -> Expr {
        Expr::bin(BinOp::Or, l, r)
    }

    pub fn eq(l: Expr, r: Expr) -> Expr {
        Expr::bin(BinOp::Eq, l, r)
    }

    pub fn app(f: impl Into<String>, args: Vec<Expr>) -> Expr {
        Expr::App(f.into(), args)
    }

    pub fn attr(n: impl Into<String>) -> Expr {
        Expr::Attr(n.into())
    }

    pub fn primed(n: impl Into<String>) -> Expr {
        Expr::Primed(n.into())
    }

    pub fn param(n: impl Into<String>) -> Expr {
        Expr::Param(n.into())
    }

    /// Negation that stays total even when `e` may be undefined.
    pub fn negate_total(e: Expr) -> Expr {
        if e.may_be_undefined() {
            Expr::not(Expr::un(UnOp::Holds, e))
        } else {
            Expr::not(e)
        }
    }

    /// Conservative syntactic check: false only when evaluation can never
    /// produce Undefined.
    pub fn may_be_undefined(&self) -> bool {
        match self {
            Expr::Lit(_) | Expr::Var(_) | Expr::Attr(_) | Expr::Primed(_) | Expr::Param(_) => false,
            Expr::Defined(_) | Expr::Unary(UnOp::Holds, _) | Expr::Else => false,
            Expr::App(..) => true,
            Expr::Unary(UnOp::Head | UnOp::Tail, _) => true,
            Expr::Unary(_, e) => e.may_be_undefined(),
            Expr::Binary(_, l, r) | Expr::Cons(l, r) => {
                l.may_be_undefined() || r.may_be_undefined()
            }
            Expr::List(items) => items.iter().any(Expr::may_be_undefined),
        }
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::App(_, args) | Expr::List(args) => args.iter().for_each(|a| a.walk(f)),
            Expr::Defined(e) | Expr::Unary(_, e) => e.walk(f),
            Expr::Binary(_, l, r) | Expr::Cons(l, r) => {
                l.walk(f);
                r.walk(f);
            }
            _ => {}
        }
    }

    /// Rewrites every node bottom-up.
    pub fn map(self, f: &mut dyn FnMut(Expr) -> Expr) -> Expr {
        let e = match self {
            Expr::App(n, args) => Expr::App(n, args.into_iter().map(|a| a.map(f)).collect()),
            Expr::List(items) => Expr::List(items.into_iter().map(|a| a.map(f)).collect()),
            Expr::Defined(e) => Expr::Defined(Box::new(e.map(f))),
            Expr::Unary(op, e) => Expr::Unary(op, Box::new(e.map(f))),
            Expr::Binary(op, l, r) => Expr::Binary(op, Box::new(l.map(f)), Box::new(r.map(f))),
            Expr::Cons(l, r) => Expr::Cons(Box::new(l.map(f)), Box::new(r.map(f))),
            other => other,
        };
        f(e)
    }

    /// Names of attributes referenced in primed form.
    pub fn primed_attrs(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Primed(n) = e {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
        });
        out
    }

    pub fn contains_else(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= matches!(e, Expr::Else));
        found
    }

    pub fn contains_primed(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= matches!(e, Expr::Primed(_)));
        found
    }

    /// Resolves [`Expr::Var`] names: parameters first, then attributes, and
    /// anything else becomes an enum literal.
    pub fn resolve(self, attrs: &[Attribute], params: &[String]) -> Expr {
        self.map(&mut |e| match e {
            Expr::Var(n) => {
                if params.contains(&n) {
                    Expr::Param(n)
                } else if attrs.iter().any(|a| a.name == n) {
                    Expr::Attr(n)
                } else {
                    Expr::Lit(Value::Sym(n))
                }
            }
            other => other,
        })
    }

    /// Renames transition parameters.
    pub fn rename_params(self, mapping: &BTreeMap<String, String>) -> Expr {
        self.map(&mut |e| match e {
            Expr::Param(n) => Expr::Param(mapping.get(&n).cloned().unwrap_or(n)),
            other => other,
        })
    }
}

/// An output message expression `ctor(args)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputExpr {
    pub ctor: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub args: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    /// Internal transition, enabled without an input stimulus.
    Eps,
    Input {
        ctor: String,
        params: Vec<String>,
    },
}

impl Trigger {
    pub fn input(ctor: impl Into<String>, params: &[&str]) -> Trigger {
        Trigger::Input {
            ctor: ctor.into(),
            params: params.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn ctor(&self) -> Option<&str> {
        match self {
            Trigger::Eps => None,
            Trigger::Input { ctor, .. } => Some(ctor),
        }
    }

    pub fn params(&self) -> &[String] {
        match self {
            Trigger::Eps => &[],
            Trigger::Input { params, .. } => params,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub source: String,
    pub target: String,
    pub trigger: Trigger,
    pub guard: Expr,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<OutputExpr>,
    pub post: Expr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority: Option<i64>,
}

impl Transition {
    pub fn new(
        source: impl Into<String>,
        target: impl Into<String>,
        trigger: Trigger,
    ) -> Transition {
        Transition {
            label: None,
            source: source.into(),
            target: target.into(),
            trigger,
            guard: Expr::tt(),
            outputs: vec![],
            post: Expr::tt(),
            priority: None,
        }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Transition {
        self.label = Some(label.into());
        self
    }

    pub fn with_guard(mut self, guard: Expr) -> Transition {
        self.guard = guard;
        self
    }

    pub fn with_post(mut self, post: Expr) -> Transition {
        self.post = post;
        self
    }

    pub fn with_outputs(mut self, outputs: Vec<OutputExpr>) -> Transition {
        self.outputs = outputs;
        self
    }

    pub fn with_priority(mut self, p: i64) -> Transition {
        self.priority = Some(p);
        self
    }

    /// Short human-readable identity, used in diagnostics.
    pub fn describe(&self) -> String {
        match &self.label {
            Some(l) => l.clone(),
            None => {
                let trig = self.trigger.ctor().unwrap_or("eps");
                format!("{} -> {} on {}", self.source, self.target, trig)
            }
        }
    }

    /// Resolves names in all expressions.
    pub fn resolve(mut self, attrs: &[Attribute]) -> Transition {
        let params = self.trigger.params().to_vec();
        self.guard = self.guard.resolve(attrs, &params);
        self.post = self.post.resolve(attrs, &params);
        for o in &mut self.outputs {
            o.args = std::mem::take(&mut o.args)
                .into_iter()
                .map(|a| a.resolve(attrs, &params))
                .collect();
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub sort: Sort,
}

/// An initial marking: a control state plus an initialization predicate over
/// the (unprimed) attributes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitEntry {
    pub state: String,
    pub pred: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Std {
    pub name: String,
    pub domains: BTreeMap<String, DomainDecl>,
    pub signature: Signature,
    pub attributes: Vec<Attribute>,
    pub states: Vec<String>,
    pub initial: Vec<InitEntry>,
    pub transitions: Vec<Transition>,
}

impl Std {
    pub fn has_state(&self, s: &str) -> bool {
        self.states.iter().any(|x| x == s)
    }

    pub fn attr(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn attr_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn transition_by_label(&self, label: &str) -> Option<(usize, &Transition)> {
        self.transitions
            .iter()
            .enumerate()
            .find(|(_, t)| t.label.as_deref() == Some(label))
    }

    pub fn is_initial(&self, s: &str) -> bool {
        self.initial.iter().any(|i| i.state == s)
    }

    /// True when some guard is `else` or some transition carries a priority.
    pub fn has_surface_sugar(&self) -> bool {
        self.transitions
            .iter()
            .any(|t| t.priority.is_some() || t.guard.contains_else())
    }
}
