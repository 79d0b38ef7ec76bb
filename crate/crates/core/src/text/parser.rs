use super::lexer::{lex, Tok, Token};
use super::{ParseError, SourceSpan};
use crate::features::FeaturePatch;
use crate::model::{
    validate_std, Attribute, BinOp, Ctor, DomainDecl, Environment, Expr, InitEntry, Message,
    OutputExpr, Scope, Signature, Sort, Std, SymbolDecl, Transition, Trigger, UnOp, Value,
};
use crate::refine::{Redirect, RuleApplication};
use std::collections::BTreeMap;

/// Maximum length assumed for a list sort written without one, e.g. `[Int]`.
pub const DEFAULT_LIST_MAX: usize = 3;

const RESERVED: &[&str] = &[
    "true", "false", "else", "eps", "defined", "holds", "head", "tail", "len", "cons",
];

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    file: &'a str,
}

type PResult<T> = Result<T, ParseError>;

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(i) => format!("`{i}`"),
        Tok::Punct(p) => format!("`{p}`"),
        Tok::Eof => "end of input".into(),
    }
}

impl<'a> Parser<'a> {
    fn new(text: &str, file: &'a str) -> PResult<Parser<'a>> {
        Ok(Parser {
            toks: lex(text, file)?,
            pos: 0,
            file,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].span.clone()
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let mut e = ParseError::new(
            self.span(),
            format!(
                "expected {}, found {}",
                expected
                    .iter()
                    .map(|s| format!("'{s}'"))
                    .collect::<Vec<_>>()
                    .join(" or "),
                describe(self.peek())
            ),
        );
        e.expected = expected.iter().map(|s| s.to_string()).collect();
        e
    }

    fn expect_punct(&mut self, p: &'static str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error(&[p]))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(&[kw]))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn int(&mut self) -> PResult<i64> {
        let neg = self.eat_punct("-");
        match *self.peek() {
            Tok::Int(i) => {
                self.bump();
                Ok(if neg { -i } else { i })
            }
            _ => Err(self.error(&["integer"])),
        }
    }

    fn names(&mut self, what: &str) -> PResult<Vec<String>> {
        let mut out = vec![self.ident(what)?];
        while self.eat_punct(",") {
            out.push(self.ident(what)?);
        }
        Ok(out)
    }

    fn expect_eof(&self) -> PResult<()> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            Err(self.error(&["end of input"]))
        }
    }

    // ---- sorts and signatures ----

    fn sort(&mut self, domains: &BTreeMap<String, DomainDecl>) -> PResult<Sort> {
        if self.eat_punct("[") {
            let elem = self.sort(domains)?;
            let max = if self.eat_punct(";") {
                let n = self.int()?;
                usize::try_from(n)
                    .map_err(|_| ParseError::new(self.span(), "negative list length"))?
            } else {
                DEFAULT_LIST_MAX
            };
            self.expect_punct("]")?;
            return Ok(Sort::list(elem, max));
        }
        if matches!(self.peek(), Tok::Int(_)) || self.is_punct("-") {
            let lo = self.int()?;
            self.expect_punct("..")?;
            let hi = self.int()?;
            return Ok(Sort::int(lo, hi));
        }
        let name = self.ident("sort")?;
        if name == "Bool" {
            return Ok(Sort::Bool);
        }
        match domains.get(&name) {
            Some(DomainDecl::Range { lo, hi }) => Ok(Sort::int(*lo, *hi)),
            _ => Ok(Sort::enumeration(name)),
        }
    }

    fn sort_list(&mut self, domains: &BTreeMap<String, DomainDecl>) -> PResult<Vec<Sort>> {
        let mut out = Vec::new();
        if self.eat_punct("(") {
            if !self.is_punct(")") {
                out.push(self.sort(domains)?);
                while self.eat_punct(",") {
                    out.push(self.sort(domains)?);
                }
            }
            self.expect_punct(")")?;
        }
        Ok(out)
    }

    fn is_bare_sort(&self, domains: &BTreeMap<String, DomainDecl>) -> bool {
        if self.is_punct("[") || self.is_punct("-") || matches!(self.peek(), Tok::Int(_)) {
            return true;
        }
        match self.peek() {
            Tok::Ident(s) => {
                (s == "Bool" || domains.contains_key(s))
                    && !matches!(self.peek_at(1), Tok::Punct("("))
            }
            _ => false,
        }
    }

    fn ctor_alts(
        &mut self,
        domains: &BTreeMap<String, DomainDecl>,
        allow_bare: bool,
    ) -> PResult<Vec<Ctor>> {
        let mut out = Vec::new();
        loop {
            if allow_bare && self.is_bare_sort(domains) {
                let s = self.sort(domains)?;
                out.push(Ctor::new("", vec![s]));
            } else {
                let name = self.ident("message constructor")?;
                let params = self.sort_list(domains)?;
                out.push(Ctor::new(name, params));
            }
            if !self.eat_punct("|") {
                break;
            }
        }
        Ok(out)
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Expr> {
        let lhs = self.or_expr()?;
        if self.eat_punct("=>") {
            let rhs = self.expr()?;
            return Ok(Expr::bin(BinOp::Implies, lhs, rhs));
        }
        Ok(lhs)
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut e = self.and_expr()?;
        while self.eat_punct("||") {
            let r = self.and_expr()?;
            e = Expr::bin(BinOp::Or, e, r);
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut e = self.not_expr()?;
        while self.eat_punct("&&") {
            let r = self.not_expr()?;
            e = Expr::bin(BinOp::And, e, r);
        }
        Ok(e)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.eat_punct("!") {
            let e = self.not_expr()?;
            return Ok(Expr::not(e));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let l = self.add_expr()?;
        let op = match self.peek() {
            Tok::Punct("=") => BinOp::Eq,
            Tok::Punct("!=") => BinOp::Ne,
            Tok::Punct("<") => BinOp::Lt,
            Tok::Punct("<=") => BinOp::Le,
            Tok::Punct(">") => BinOp::Gt,
            Tok::Punct(">=") => BinOp::Ge,
            _ => return Ok(l),
        };
        self.bump();
        let r = self.add_expr()?;
        Ok(Expr::bin(op, l, r))
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        let mut e = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("+") => BinOp::Add,
                Tok::Punct("-") => BinOp::Sub,
                _ => return Ok(e),
            };
            self.bump();
            let r = self.unary_expr()?;
            e = Expr::bin(op, e, r);
        }
    }

    fn unary_expr(&mut self) -> PResult<Expr> {
        if self.is_punct("-") {
            if let Tok::Int(i) = *self.peek_at(1) {
                self.bump();
                self.bump();
                return Ok(Expr::Lit(Value::Int(-i)));
            }
            self.bump();
            let e = self.unary_expr()?;
            return Ok(Expr::un(UnOp::Neg, e));
        }
        self.atom()
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_punct("(")?;
        let mut out = Vec::new();
        if !self.is_punct(")") {
            out.push(self.expr()?);
            while self.eat_punct(",") {
                out.push(self.expr()?);
            }
        }
        self.expect_punct(")")?;
        Ok(out)
    }

    fn one_arg(&mut self, f: &str) -> PResult<Expr> {
        let span = self.span();
        let mut a = self.args()?;
        if a.len() != 1 {
            return Err(ParseError::new(span, format!("`{f}` takes one argument")));
        }
        Ok(a.remove(0))
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Expr::Lit(Value::Int(i)))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Punct("[") => {
                self.bump();
                let mut items = Vec::new();
                if !self.is_punct("]") {
                    items.push(self.expr()?);
                    while self.eat_punct(",") {
                        items.push(self.expr()?);
                    }
                }
                self.expect_punct("]")?;
                Ok(Expr::List(items))
            }
            Tok::Ident(name) => {
                let span = self.span();
                self.bump();
                match name.as_str() {
                    "true" => return Ok(Expr::tt()),
                    "false" => return Ok(Expr::ff()),
                    "else" => {
                        return Err(ParseError::new(
                            span,
                            "`else` is only allowed as an entire guard",
                        ))
                    }
                    "defined" => return Ok(Expr::Defined(Box::new(self.one_arg("defined")?))),
                    "holds" => return Ok(Expr::un(UnOp::Holds, self.one_arg("holds")?)),
                    "head" => return Ok(Expr::un(UnOp::Head, self.one_arg("head")?)),
                    "tail" => return Ok(Expr::un(UnOp::Tail, self.one_arg("tail")?)),
                    "len" => return Ok(Expr::un(UnOp::Len, self.one_arg("len")?)),
                    "cons" => {
                        let mut a = self.args()?;
                        if a.len() != 2 {
                            return Err(ParseError::new(span, "`cons` takes two arguments"));
                        }
                        let t = a.pop().unwrap();
                        let h = a.pop().unwrap();
                        return Ok(Expr::Cons(Box::new(h), Box::new(t)));
                    }
                    _ => {}
                }
                if self.is_punct("(") {
                    let args = self.args()?;
                    return Ok(Expr::App(name, args));
                }
                if self.eat_punct("'") {
                    return Ok(Expr::Primed(name));
                }
                Ok(Expr::Var(name))
            }
            _ => Err(self.error(&["expression"])),
        }
    }

    // ---- transitions ----

    fn transition(&mut self) -> PResult<Transition> {
        let first = self.ident("transition")?;
        let (label, source) = if self.eat_punct(":") {
            (Some(first), self.ident("source state")?)
        } else {
            (None, first)
        };
        self.expect_punct("->")?;
        let target = self.ident("target state")?;
        self.expect_punct(":")?;
        let guard = if self.eat_punct("{") {
            let g = if self.eat_kw("else") {
                Expr::Else
            } else {
                self.expr()?
            };
            self.expect_punct("}")?;
            g
        } else {
            Expr::tt()
        };
        let trigger = if self.eat_kw("eps") {
            Trigger::Eps
        } else {
            let ctor = self.ident("trigger")?;
            let mut params = Vec::new();
            if self.eat_punct("(") {
                if !self.is_punct(")") {
                    params = self.names("parameter")?;
                }
                self.expect_punct(")")?;
            }
            Trigger::Input { ctor, params }
        };
        let mut outputs = Vec::new();
        if self.eat_punct("/") {
            self.expect_punct("[")?;
            if !self.is_punct("]") {
                outputs.push(self.output_item()?);
                while self.eat_punct(",") {
                    outputs.push(self.output_item()?);
                }
            }
            self.expect_punct("]")?;
        }
        let post = if self.eat_punct("{") {
            let q = self.expr()?;
            self.expect_punct("}")?;
            q
        } else {
            Expr::tt()
        };
        let priority = if self.eat_punct("@") {
            Some(self.int()?)
        } else {
            None
        };
        Ok(Transition {
            label,
            source,
            target,
            trigger,
            guard,
            outputs,
            post,
            priority,
        })
    }

    fn output_item(&mut self) -> PResult<OutputExpr> {
        Ok(match self.expr()? {
            Expr::Var(n) if !RESERVED.contains(&n.as_str()) => OutputExpr {
                ctor: n,
                args: vec![],
            },
            Expr::App(n, args) => OutputExpr { ctor: n, args },
            other => OutputExpr {
                ctor: String::new(),
                args: vec![other],
            },
        })
    }

    // ---- std ----

    fn domain_decl(&mut self, domains: &mut BTreeMap<String, DomainDecl>) -> PResult<()> {
        let span = self.span();
        let d = self.ident("domain name")?;
        let decl = if self.eat_punct("=") {
            if self.eat_punct("{") {
                let elems = if self.is_punct("}") {
                    vec![]
                } else {
                    self.names("element")?
                };
                self.expect_punct("}")?;
                DomainDecl::Enum { elems }
            } else {
                let lo = self.int()?;
                self.expect_punct("..")?;
                let hi = self.int()?;
                DomainDecl::Range { lo, hi }
            }
        } else {
            DomainDecl::Abstract
        };
        if domains.insert(d.clone(), decl).is_some() {
            return Err(ParseError::new(
                span,
                format!("domain `{d}` declared twice"),
            ));
        }
        Ok(())
    }

    /// A Std, optionally preceded by domain declarations.
    fn std(&mut self) -> PResult<(Std, SourceSpan)> {
        let mut domains = BTreeMap::new();
        while self.eat_kw("domain") {
            self.domain_decl(&mut domains)?;
        }
        if !self.is_kw("std") {
            let mut e = ParseError::new(self.span(), "expected 'std'");
            e.expected = vec!["std".into()];
            return Err(e);
        }
        self.bump();
        let name_span = self.span();
        let name = self.ident("name")?;
        self.expect_punct("=")?;
        self.expect_punct("{")?;
        while self.eat_kw("domain") {
            self.domain_decl(&mut domains)?;
        }
        self.expect_kw("input")?;
        let inputs = self.ctor_alts(&domains, false)?;
        self.expect_kw("output")?;
        let outputs = self.ctor_alts(&domains, true)?;
        let mut attributes = Vec::new();
        if self.eat_kw("attributes") {
            while matches!(self.peek(), Tok::Ident(_))
                && matches!(self.peek_at(1), Tok::Punct("::"))
            {
                let n = self.ident("attribute")?;
                self.expect_punct("::")?;
                let sort = self.sort(&domains)?;
                attributes.push(Attribute { name: n, sort });
            }
        }
        self.expect_kw("states")?;
        let mut states = Vec::new();
        let mut initial = Vec::new();
        loop {
            let is_state = match self.peek() {
                Tok::Ident(s) => {
                    s != "init" && !matches!(self.peek_at(1), Tok::Punct("->") | Tok::Punct(":"))
                }
                _ => false,
            };
            if !is_state {
                break;
            }
            let s = self.ident("state")?;
            while self.eat_kw("init") {
                let pred = if self.eat_punct("{") {
                    let p = self.expr()?;
                    self.expect_punct("}")?;
                    p.resolve(&attributes, &[])
                } else {
                    Expr::tt()
                };
                initial.push(InitEntry {
                    state: s.clone(),
                    pred,
                });
            }
            states.push(s);
        }
        if states.is_empty() {
            return Err(self.error(&["state name"]));
        }
        let mut std = Std {
            name,
            domains,
            signature: Signature { inputs, outputs },
            attributes,
            states,
            initial,
            transitions: Vec::new(),
        };
        while !self.is_punct("}") {
            if matches!(self.peek(), Tok::Eof) {
                return Err(self.error(&["}"]));
            }
            let t = self.transition()?;
            std.transitions.push(resolve_transition(&std, t));
        }
        self.expect_punct("}")?;
        self.expect_eof()?;
        Ok((std, name_span))
    }

    // ---- environments ----

    fn value(&mut self) -> PResult<Value> {
        match self.peek().clone() {
            Tok::Int(_) | Tok::Punct("-") => Ok(Value::Int(self.int()?)),
            Tok::Ident(s) => {
                self.bump();
                Ok(match s.as_str() {
                    "true" => Value::Bool(true),
                    "false" => Value::Bool(false),
                    _ => Value::Sym(s),
                })
            }
            Tok::Punct("[") => {
                self.bump();
                let mut items = Vec::new();
                if !self.is_punct("]") {
                    items.push(self.value()?);
                    while self.eat_punct(",") {
                        items.push(self.value()?);
                    }
                }
                self.expect_punct("]")?;
                Ok(Value::List(items))
            }
            _ => Err(self.error(&["value"])),
        }
    }

    fn values(&mut self) -> PResult<Vec<Value>> {
        let mut out = Vec::new();
        if self.eat_punct("(") {
            if !self.is_punct(")") {
                out.push(self.value()?);
                while self.eat_punct(",") {
                    out.push(self.value()?);
                }
            }
            self.expect_punct(")")?;
        }
        Ok(out)
    }

    fn env(&mut self) -> Result<Environment, Vec<ParseError>> {
        let mut env = Environment::new();
        let no_domains = BTreeMap::new();
        let mut derived: Vec<(String, Vec<String>, Expr, SourceSpan)> = Vec::new();
        let mut first_span: BTreeMap<String, SourceSpan> = BTreeMap::new();
        let mut rows: Vec<(String, Vec<Value>, Value, SourceSpan)> = Vec::new();
        let mut errors = Vec::new();
        let res: PResult<()> = (|| loop {
            while self.eat_punct(";") {}
            if matches!(self.peek(), Tok::Eof) {
                return Ok(());
            }
            let span = self.span();
            if self.eat_kw("domain") {
                let d = self.ident("domain name")?;
                self.expect_punct("=")?;
                self.expect_punct("{")?;
                let elems = if self.is_punct("}") {
                    vec![]
                } else {
                    self.names("element")?
                };
                self.expect_punct("}")?;
                if env.decls.domains.insert(d.clone(), elems).is_some() {
                    return Err(ParseError::new(
                        span,
                        format!("domain `{d}` declared twice"),
                    ));
                }
            } else if self.eat_kw("pred") {
                let name = self.ident("predicate name")?;
                first_span.entry(name.clone()).or_insert(span.clone());
                let named = matches!(self.peek_at(1), Tok::Ident(_))
                    && matches!(self.peek_at(2), Tok::Punct(":"));
                if named {
                    self.expect_punct("(")?;
                    let mut params = Vec::new();
                    let mut sorts = Vec::new();
                    loop {
                        params.push(self.ident("parameter")?);
                        self.expect_punct(":")?;
                        sorts.push(self.sort(&no_domains)?);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                    self.expect_punct(")")?;
                    self.expect_punct(":=")?;
                    let body = self.expr()?.resolve(&[], &params);
                    env.decls
                        .symbols
                        .insert(name.clone(), SymbolDecl::predicate(sorts));
                    derived.push((name, params, body, span));
                } else {
                    let sorts = self.sort_list(&no_domains)?;
                    let default = if self.eat_kw("default") {
                        match self.value()? {
                            Value::Bool(b) => Some(Value::Bool(b)),
                            _ => {
                                return Err(ParseError::new(
                                    span,
                                    "predicate default must be true or false",
                                ))
                            }
                        }
                    } else {
                        None
                    };
                    env.decls
                        .symbols
                        .insert(name.clone(), SymbolDecl::predicate(sorts));
                    env.tables.entry(name).or_default().default = default;
                }
            } else if self.eat_kw("fun") {
                let name = self.ident("function name")?;
                first_span.entry(name.clone()).or_insert(span.clone());
                let sorts = self.sort_list(&no_domains)?;
                self.expect_punct(":")?;
                let result = self.sort(&no_domains)?;
                env.decls
                    .symbols
                    .insert(name.clone(), SymbolDecl::function(sorts, result));
                env.tables.entry(name).or_default();
            } else {
                let name = self.ident("declaration or table row")?;
                first_span.entry(name.clone()).or_insert(span.clone());
                if !self.is_punct("(") {
                    return Err(self.error(&["("]));
                }
                let args = self.values()?;
                self.expect_punct("=")?;
                let v = self.value()?;
                rows.push((name, args, v, span));
            }
        })();
        if let Err(e) = res {
            return Err(vec![e]);
        }
        // implicit declarations, inferred from the rows
        let mut inferred: BTreeMap<String, SymbolDecl> = BTreeMap::new();
        for (name, args, v, span) in &rows {
            if env.decls.symbols.contains_key(name) || inferred.contains_key(name) {
                continue;
            }
            let mut params = Vec::new();
            let mut ok = true;
            for a in args.iter().chain(std::iter::once(v)) {
                let s = match a {
                    Value::Bool(_) => Some(Sort::Bool),
                    Value::Sym(s) => env.decls.domain_of(s).map(Sort::enumeration),
                    _ => None,
                };
                match s {
                    Some(s) => params.push(s),
                    None => {
                        errors.push(ParseError::new(
                            span.clone(),
                            format!("value `{a}` of `{name}` is not in any declared domain"),
                        ));
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let result = params.pop().unwrap();
            let decl = if result == Sort::Bool {
                SymbolDecl::predicate(params)
            } else {
                SymbolDecl::function(params, result)
            };
            inferred.insert(name.clone(), decl);
        }
        env.decls.symbols.extend(inferred);
        for (name, args, v, _) in rows {
            env.set(&name, args, v);
        }
        for (name, params, body, span) in derived {
            let mut table = BTreeMap::new();
            for tuple in env.arg_tuples(&name) {
                let binding: Vec<(String, Value)> =
                    params.iter().cloned().zip(tuple.iter().cloned()).collect();
                let scope = Scope::new(&[], &[]).with_params(&binding);
                match crate::model::holds(&body, &scope, &env) {
                    Ok(b) => {
                        table.insert(tuple, Value::Bool(b));
                    }
                    Err(e) => {
                        errors.push(ParseError::new(
                            span.clone(),
                            format!("in definition of `{name}`: {e}"),
                        ));
                        break;
                    }
                }
            }
            env.tables.entry(name).or_default().rows = table;
        }
        for e in env.check() {
            let sym = match &e {
                crate::model::EnvError::UnknownSymbol(s) => s.clone(),
                crate::model::EnvError::Arity { symbol, .. }
                | crate::model::EnvError::SortViolation { symbol, .. }
                | crate::model::EnvError::NotTotal { symbol, .. } => symbol.clone(),
                crate::model::EnvError::DuplicateDomain(d) => d.clone(),
            };
            let span = first_span
                .get(&sym)
                .cloned()
                .unwrap_or_else(|| SourceSpan::new(self.file, 1, 1, 1, 1));
            errors.push(ParseError::new(span, e.to_string()));
        }
        if errors.is_empty() {
            Ok(env)
        } else {
            Err(errors)
        }
    }

    // ---- features ----

    fn feature(&mut self) -> PResult<FeaturePatch> {
        self.expect_kw("feature")?;
        let name = self.ident("feature name")?;
        self.expect_kw("on")?;
        let subject = self.ident("subject name")?;
        self.expect_punct("{")?;
        let mut steps = Vec::new();
        while !self.is_punct("}") {
            steps.push(self.rule_application()?);
        }
        self.expect_punct("}")?;
        self.expect_eof()?;
        Ok(FeaturePatch {
            name,
            subject,
            steps,
        })
    }

    fn transition_block(&mut self) -> PResult<Vec<Transition>> {
        let mut out = Vec::new();
        if self.eat_punct("{") {
            while !self.is_punct("}") {
                if matches!(self.peek(), Tok::Eof) {
                    return Err(self.error(&["}"]));
                }
                out.push(self.transition()?);
            }
            self.expect_punct("}")?;
        }
        Ok(out)
    }

    fn rule_application(&mut self) -> PResult<RuleApplication> {
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return Err(self.error(&["rule name"])),
        };
        let span = self.span();
        self.bump();
        match kw.as_str() {
            "add-state" | "add-states" => {
                let names = self.names("state")?;
                let transitions = self.transition_block()?;
                Ok(RuleApplication::AddStates { names, transitions })
            }
            "remove-state" | "remove-states" => Ok(RuleApplication::RemoveStates {
                names: self.names("state")?,
            }),
            "split" => {
                let state = self.ident("state")?;
                self.expect_kw("into")?;
                let parts = self.names("part")?;
                let mut redirects = Vec::new();
                if self.eat_punct("{") {
                    while !self.is_punct("}") {
                        let transition = self.ident("transition label")?;
                        self.expect_punct("->")?;
                        let part = self.ident("part")?;
                        let strengthen = if self.eat_punct("{") {
                            let e = self.expr()?;
                            self.expect_punct("}")?;
                            Some(e)
                        } else {
                            None
                        };
                        redirects.push(Redirect {
                            transition,
                            part,
                            strengthen,
                        });
                    }
                    self.expect_punct("}")?;
                }
                Ok(RuleApplication::SplitState {
                    state,
                    parts,
                    redirects,
                })
            }
            "add-transition" => Ok(RuleApplication::AddTransitions {
                transitions: vec![self.transition()?],
            }),
            "add-transitions" => {
                let transitions = self.transition_block()?;
                Ok(RuleApplication::AddTransitions { transitions })
            }
            "remove-transition" | "remove-transitions" => Ok(RuleApplication::RemoveTransitions {
                labels: self.names("transition label")?,
            }),
            "remove-initial" => Ok(RuleApplication::RemoveInitialStates {
                names: self.names("state")?,
            }),
            other => {
                let mut e = ParseError::new(span, format!("unknown rule `{other}`"));
                e.expected = [
                    "add-state",
                    "remove-state",
                    "split",
                    "add-transition",
                    "add-transitions",
                    "remove-transition",
                    "remove-initial",
                ]
                .iter()
                .map(|s| s.to_string())
                .collect();
                Err(e)
            }
        }
    }

    fn messages(&mut self) -> PResult<Vec<Message>> {
        let mut out = Vec::new();
        if matches!(self.peek(), Tok::Eof) {
            return Ok(out);
        }
        loop {
            match self.peek().clone() {
                Tok::Ident(s) if s != "true" && s != "false" => {
                    self.bump();
                    let args = self.values()?;
                    out.push(Message::new(s, args));
                }
                _ => {
                    let v = self.value()?;
                    out.push(Message::new("", vec![v]));
                }
            }
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_eof()?;
        Ok(out)
    }
}

/// Resolves names in a parsed transition against a Std: parameters,
/// attributes and enum literals, plus output items that denote bare values.
pub(crate) fn resolve_transition(std: &Std, mut t: Transition) -> Transition {
    let has_bare = std.signature.output("").is_some();
    for o in &mut t.outputs {
        if !o.ctor.is_empty() && std.signature.output(&o.ctor).is_none() && has_bare {
            let e = if o.args.is_empty() {
                Expr::Var(std::mem::take(&mut o.ctor))
            } else {
                Expr::App(std::mem::take(&mut o.ctor), std::mem::take(&mut o.args))
            };
            o.args = vec![e];
        }
    }
    t.resolve(&std.attributes)
}

/// Parses a `.std` text without running static validation.
pub fn parse_std_unchecked(text: &str, file: &str) -> Result<Std, ParseError> {
    let mut p = Parser::new(text, file)?;
    p.std().map(|(s, _)| s)
}

/// Parses and validates a `.std` text. Validation diagnostics are reported
/// as errors located at the diagram's name.
pub fn parse_std(text: &str, file: &str) -> Result<Std, Vec<ParseError>> {
    let mut p = Parser::new(text, file).map_err(|e| vec![e])?;
    let (std, span) = p.std().map_err(|e| vec![e])?;
    let diags = validate_std(&std, None);
    if diags.is_empty() {
        Ok(std)
    } else {
        Err(diags
            .into_iter()
            .map(|d| ParseError::new(span.clone(), d.to_string()))
            .collect())
    }
}

/// Parses a `.env` file: domains, symbol declarations, table rows and
/// derived predicate definitions.
pub fn parse_env(text: &str, file: &str) -> Result<Environment, Vec<ParseError>> {
    let mut p = Parser::new(text, file).map_err(|e| vec![e])?;
    p.env()
}

pub fn parse_feature(text: &str, file: &str) -> Result<FeaturePatch, ParseError> {
    let mut p = Parser::new(text, file)?;
    p.feature()
}

/// Parses a comma-separated message list such as `LT, DL(7)`.
pub fn parse_messages(text: &str) -> Result<Vec<Message>, ParseError> {
    let mut p = Parser::new(text, "<input>")?;
    p.messages()
}
