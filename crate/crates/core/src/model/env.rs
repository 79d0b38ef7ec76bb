use super::{Sort, Value};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Declared signature of an environment predicate or function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolDecl {
    pub params: Vec<Sort>,
    pub result: Sort,
    /// Partial functions may lack rows; predicates must be total.
    pub partial: bool,
}

impl SymbolDecl {
    pub fn predicate(params: Vec<Sort>) -> SymbolDecl {
        SymbolDecl {
            params,
            result: Sort::Bool,
            partial: false,
        }
    }

    pub fn function(params: Vec<Sort>, result: Sort) -> SymbolDecl {
        SymbolDecl {
            params,
            result,
            partial: true,
        }
    }
}

/// Domain assignments and symbol declarations: the static half of an
/// environment, enough to sort-check a Std.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvDecls {
    pub domains: BTreeMap<String, Vec<String>>,
    pub symbols: BTreeMap<String, SymbolDecl>,
}

impl EnvDecls {
    /// Domain containing the given element, if any.
    pub fn domain_of(&self, elem: &str) -> Option<&str> {
        self.domains
            .iter()
            .find(|(_, elems)| elems.iter().any(|e| e == elem))
            .map(|(d, _)| d.as_str())
    }
}

/// Finite table for one symbol. Absent rows fall back to `default`, and
/// without a default they are undefined.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub rows: BTreeMap<Vec<Value>, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<Value>,
}

impl Table {
    pub fn get(&self, args: &[Value]) -> Option<&Value> {
        self.rows.get(args).or(self.default.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("`{symbol}` expects {expected} argument(s), got {got}")]
    Arity {
        symbol: String,
        expected: usize,
        got: usize,
    },
    #[error("value `{value}` is not in sort {sort} (in `{symbol}`)")]
    SortViolation {
        symbol: String,
        value: String,
        sort: String,
    },
    #[error("predicate `{symbol}` has no row for ({args})")]
    NotTotal { symbol: String, args: String },
    #[error("domain `{0}` declared twice")]
    DuplicateDomain(String),
}

/// Finite interpretation of the free predicates and partial functions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Environment {
    pub decls: EnvDecls,
    pub tables: BTreeMap<String, Table>,
}

impl Environment {
    pub fn new() -> Environment {
        Environment::default()
    }

    pub fn add_domain(&mut self, name: impl Into<String>, elems: &[&str]) {
        self.decls
            .domains
            .insert(name.into(), elems.iter().map(|s| s.to_string()).collect());
    }

    pub fn declare(&mut self, name: impl Into<String>, decl: SymbolDecl) {
        let name = name.into();
        let default = if decl.partial {
            None
        } else {
            Some(Value::Bool(false))
        };
        self.decls.symbols.insert(name.clone(), decl);
        self.tables.entry(name).or_insert(Table {
            rows: BTreeMap::new(),
            default,
        });
    }

    pub fn set(&mut self, name: &str, args: Vec<Value>, value: Value) {
        self.tables
            .entry(name.to_string())
            .or_default()
            .rows
            .insert(args, value);
    }

    /// Looks up `name(args)`. `Ok(None)` is an undefined entry.
    pub fn lookup(&self, name: &str, args: &[Value]) -> Result<Option<&Value>, EnvError> {
        let decl = self
            .decls
            .symbols
            .get(name)
            .ok_or_else(|| EnvError::UnknownSymbol(name.to_string()))?;
        if decl.params.len() != args.len() {
            return Err(EnvError::Arity {
                symbol: name.to_string(),
                expected: decl.params.len(),
                got: args.len(),
            });
        }
        Ok(self.tables.get(name).and_then(|t| t.get(args)))
    }

    fn elems(&self) -> impl Fn(&str) -> Option<Vec<String>> + '_ {
        move |d: &str| self.decls.domains.get(d).cloned()
    }

    /// Checks that every row respects its declaration and that predicates
    /// are total. Returns all violations found.
    pub fn check(&self) -> Vec<EnvError> {
        let elems = self.elems();
        let mut errs = Vec::new();
        for (name, decl) in &self.decls.symbols {
            let table = self.tables.get(name).cloned().unwrap_or_default();
            for (args, v) in &table.rows {
                if args.len() != decl.params.len() {
                    errs.push(EnvError::Arity {
                        symbol: name.clone(),
                        expected: decl.params.len(),
                        got: args.len(),
                    });
                    continue;
                }
                for (a, s) in args.iter().zip(&decl.params) {
                    if !s.contains(a, &elems) {
                        errs.push(EnvError::SortViolation {
                            symbol: name.clone(),
                            value: a.to_string(),
                            sort: s.to_string(),
                        });
                    }
                }
                if !decl.result.contains(v, &elems) {
                    errs.push(EnvError::SortViolation {
                        symbol: name.clone(),
                        value: v.to_string(),
                        sort: decl.result.to_string(),
                    });
                }
            }
            if !decl.partial && table.default.is_none() {
                for args in cartesian(&decl.params, &elems) {
                    if !table.rows.contains_key(&args) {
                        let shown: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                        errs.push(EnvError::NotTotal {
                            symbol: name.clone(),
                            args: shown.join(", "),
                        });
                        break;
                    }
                }
            }
        }
        for name in self.tables.keys() {
            if !self.decls.symbols.contains_key(name) {
                errs.push(EnvError::UnknownSymbol(name.clone()));
            }
        }
        errs
    }

    /// Every argument tuple of a declared symbol.
    pub fn arg_tuples(&self, name: &str) -> Vec<Vec<Value>> {
        match self.decls.symbols.get(name) {
            Some(decl) => cartesian(&decl.params, &self.elems()),
            None => vec![],
        }
    }
}

/// Cartesian product of sort value sets.
pub(crate) fn cartesian(
    sorts: &[Sort],
    elems: &dyn Fn(&str) -> Option<Vec<String>>,
) -> Vec<Vec<Value>> {
    let mut out: Vec<Vec<Value>> = vec![vec![]];
    for s in sorts {
        let vals = s.values(elems);
        let mut next = Vec::with_capacity(out.len() * vals.len());
        for prefix in &out {
            for v in &vals {
                let mut p = prefix.clone();
                p.push(v.clone());
                next.push(p);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dn() -> Sort {
        Sort::enumeration("DN")
    }

    #[test]
    fn predicates_default_to_false() {
        let mut env = Environment::new();
        env.add_domain("DN", &["d1", "d2"]);
        env.declare("Busy", SymbolDecl::predicate(vec![dn()]));
        env.set("Busy", vec![Value::Sym("d1".into())], Value::Bool(true));
        assert_eq!(
            env.lookup("Busy", &[Value::Sym("d1".into())]).unwrap(),
            Some(&Value::Bool(true))
        );
        assert_eq!(
            env.lookup("Busy", &[Value::Sym("d2".into())]).unwrap(),
            Some(&Value::Bool(false))
        );
        assert!(env.check().is_empty());
    }

    #[test]
    fn partial_function_rows_may_be_absent() {
        let mut env = Environment::new();
        env.add_domain("DN", &["d1", "d2"]);
        env.declare("Del", SymbolDecl::function(vec![dn()], dn()));
        env.set(
            "Del",
            vec![Value::Sym("d1".into())],
            Value::Sym("d2".into()),
        );
        assert_eq!(env.lookup("Del", &[Value::Sym("d2".into())]).unwrap(), None);
        assert!(env.check().is_empty());
    }

    #[test]
    fn sort_violation_and_arity_are_reported() {
        let mut env = Environment::new();
        env.add_domain("DN", &["d1"]);
        env.declare("Del", SymbolDecl::function(vec![dn()], dn()));
        env.set(
            "Del",
            vec![Value::Sym("d1".into())],
            Value::Sym("d9".into()),
        );
        let errs = env.check();
        assert!(matches!(errs[0], EnvError::SortViolation { .. }));
        assert!(matches!(
            env.lookup("Del", &[]),
            Err(EnvError::Arity {
                expected: 1,
                got: 0,
                ..
            })
        ));
    }

    #[test]
    fn total_predicate_without_default_must_cover_domain() {
        let mut env = Environment::new();
        env.add_domain("DN", &["d1", "d2"]);
        env.declare("ok", SymbolDecl::predicate(vec![dn()]));
        env.tables.get_mut("ok").unwrap().default = None;
        env.set("ok", vec![Value::Sym("d1".into())], Value::Bool(true));
        assert!(matches!(env.check()[0], EnvError::NotTotal { .. }));
    }
}
