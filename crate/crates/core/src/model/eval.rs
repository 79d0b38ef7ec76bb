use super::env::{EnvError, Environment};
use super::{Attribute, BinOp, Expr, UnOp, Value};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("sort mismatch: {0}")]
    SortMismatch(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttr(String),
    #[error("unbound parameter `{0}`")]
    UnboundParam(String),
    #[error("primed reference `{0}'` evaluated without a successor valuation")]
    MissingPrimed(String),
    #[error("unresolved name `{0}`")]
    Unresolved(String),
    #[error("`else` must be desugared before evaluation")]
    Else,
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// Variable bindings visible to an expression.
#[derive(Debug, Clone, Copy)]
pub struct Scope<'a> {
    pub attrs: &'a [Attribute],
    pub vals: &'a [Value],
    pub primed: Option<&'a [Value]>,
    pub params: &'a [(String, Value)],
}

impl<'a> Scope<'a> {
    pub fn new(attrs: &'a [Attribute], vals: &'a [Value]) -> Scope<'a> {
        Scope {
            attrs,
            vals,
            primed: None,
            params: &[],
        }
    }

    pub fn with_params(mut self, params: &'a [(String, Value)]) -> Scope<'a> {
        self.params = params;
        self
    }

    pub fn with_primed(mut self, primed: &'a [Value]) -> Scope<'a> {
        self.primed = Some(primed);
        self
    }

    fn attr_index(&self, name: &str) -> Result<usize, EvalError> {
        self.attrs
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| EvalError::UnknownAttr(name.to_string()))
    }
}

type Eval = Result<Option<Value>, EvalError>;

fn mismatch(what: &str, got: &Value) -> EvalError {
    EvalError::SortMismatch(format!("expected {what}, got `{got}`"))
}

fn as_bool(v: Value) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(b),
        other => Err(mismatch("Bool", &other)),
    }
}

fn as_int(v: Value) -> Result<i64, EvalError> {
    match v {
        Value::Int(i) => Ok(i),
        other => Err(mismatch("Int", &other)),
    }
}

fn as_list(v: Value) -> Result<Vec<Value>, EvalError> {
    match v {
        Value::List(l) => Ok(l),
        other => Err(mismatch("list", &other)),
    }
}

/// Strict evaluation. `Ok(None)` is Undefined: it arises from a partial
/// function applied outside its table, or from `head`/`tail` of an empty
/// list, and propagates through every operator except `defined` and `holds`.
pub fn eval_expr(expr: &Expr, scope: &Scope<'_>, env: &Environment) -> Eval {
    match expr {
        Expr::Lit(v) => Ok(Some(v.clone())),
        Expr::Var(n) => Err(EvalError::Unresolved(n.clone())),
        Expr::Else => Err(EvalError::Else),
        Expr::Attr(n) => {
            let i = scope.attr_index(n)?;
            Ok(scope.vals.get(i).cloned())
        }
        Expr::Primed(n) => {
            let i = scope.attr_index(n)?;
            let primed = scope
                .primed
                .ok_or_else(|| EvalError::MissingPrimed(n.clone()))?;
            Ok(primed.get(i).cloned())
        }
        Expr::Param(n) => scope
            .params
            .iter()
            .find(|(p, _)| p == n)
            .map(|(_, v)| Some(v.clone()))
            .ok_or_else(|| EvalError::UnboundParam(n.clone())),
        Expr::App(f, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                match eval_expr(a, scope, env)? {
                    Some(v) => vals.push(v),
                    None => return Ok(None),
                }
            }
            Ok(env.lookup(f, &vals)?.cloned())
        }
        Expr::Defined(e) => Ok(Some(Value::Bool(eval_expr(e, scope, env)?.is_some()))),
        Expr::Unary(UnOp::Holds, e) => Ok(Some(Value::Bool(holds(e, scope, env)?))),
        Expr::Unary(op, e) => {
            let Some(v) = eval_expr(e, scope, env)? else {
                return Ok(None);
            };
            match op {
                UnOp::Not => Ok(Some(Value::Bool(!as_bool(v)?))),
                UnOp::Neg => Ok(Some(Value::Int(-as_int(v)?))),
                UnOp::Len => Ok(Some(Value::Int(as_list(v)?.len() as i64))),
                UnOp::Head => Ok(as_list(v)?.into_iter().next()),
                UnOp::Tail => {
                    let l = as_list(v)?;
                    if l.is_empty() {
                        Ok(None)
                    } else {
                        Ok(Some(Value::List(l[1..].to_vec())))
                    }
                }
                UnOp::Holds => unreachable!(),
            }
        }
        Expr::Binary(op, l, r) => {
            let lv = eval_expr(l, scope, env)?;
            let rv = eval_expr(r, scope, env)?;
            let (Some(lv), Some(rv)) = (lv, rv) else {
                return Ok(None);
            };
            let v = match op {
                BinOp::And => Value::Bool(as_bool(lv)? && as_bool(rv)?),
                BinOp::Or => Value::Bool(as_bool(lv)? || as_bool(rv)?),
                BinOp::Implies => Value::Bool(!as_bool(lv)? || as_bool(rv)?),
                BinOp::Eq => Value::Bool(lv == rv),
                BinOp::Ne => Value::Bool(lv != rv),
                BinOp::Lt => Value::Bool(as_int(lv)? < as_int(rv)?),
                BinOp::Le => Value::Bool(as_int(lv)? <= as_int(rv)?),
                BinOp::Gt => Value::Bool(as_int(lv)? > as_int(rv)?),
                BinOp::Ge => Value::Bool(as_int(lv)? >= as_int(rv)?),
                BinOp::Add => Value::Int(as_int(lv)?.saturating_add(as_int(rv)?)),
                BinOp::Sub => Value::Int(as_int(lv)?.saturating_sub(as_int(rv)?)),
            };
            Ok(Some(v))
        }
        Expr::List(items) => {
            let mut out = Vec::with_capacity(items.len());
            for i in items {
                match eval_expr(i, scope, env)? {
                    Some(v) => out.push(v),
                    None => return Ok(None),
                }
            }
            Ok(Some(Value::List(out)))
        }
        Expr::Cons(h, t) => {
            let hv = eval_expr(h, scope, env)?;
            let tv = eval_expr(t, scope, env)?;
            let (Some(hv), Some(tv)) = (hv, tv) else {
                return Ok(None);
            };
            let mut l = vec![hv];
            l.extend(as_list(tv)?);
            Ok(Some(Value::List(l)))
        }
    }
}

/// Guard satisfaction: Undefined counts as not satisfied.
pub fn holds(expr: &Expr, scope: &Scope<'_>, env: &Environment) -> Result<bool, EvalError> {
    match eval_expr(expr, scope, env)? {
        Some(v) => as_bool(v),
        None => Ok(false),
    }
}
