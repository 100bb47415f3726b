//! Query/guard formulas and their evaluation over finite states.
//!
//! The grammar is membership atoms closed under `not`, `and`, `or` and
//! `exists` over a declared sort. Mapping programs additionally use
//! `query` atoms, which consult a target-system query instead of a raw
//! relation.

use serde_json::{json, Value};

use crate::atom::{derived_name, sym, Sym};
use crate::error::SchemaError;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Term {
    Var(Sym),
    Const(Sym),
    Derived(Sym, Vec<Term>),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Formula {
    Member(Sym, Vec<Term>),
    Query(Sym, Vec<Term>),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Exists(Sym, Sym, Box<Formula>),
}

impl Formula {
    pub fn truth() -> Self {
        Formula::And(Vec::new())
    }

    pub fn member(rel: &str, vars: &[&str]) -> Self {
        Formula::Member(sym(rel), vars.iter().map(|v| Term::Var(sym(v))).collect())
    }

    pub fn query(name: &str, vars: &[&str]) -> Self {
        Formula::Query(sym(name), vars.iter().map(|v| Term::Var(sym(v))).collect())
    }

    pub fn contains_negation(&self) -> bool {
        match self {
            Formula::Member(..) | Formula::Query(..) => false,
            Formula::Not(_) => true,
            Formula::And(fs) | Formula::Or(fs) => fs.iter().any(Formula::contains_negation),
            Formula::Exists(_, _, b) => b.contains_negation(),
        }
    }

    pub fn contains_exists(&self) -> bool {
        match self {
            Formula::Member(..) | Formula::Query(..) => false,
            Formula::Not(b) => b.contains_exists(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().any(Formula::contains_exists),
            Formula::Exists(..) => true,
        }
    }

    pub fn contains_member(&self) -> bool {
        match self {
            Formula::Member(..) => true,
            Formula::Query(..) => false,
            Formula::Not(b) | Formula::Exists(_, _, b) => b.contains_member(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().any(Formula::contains_member),
        }
    }

    pub fn contains_query(&self) -> bool {
        match self {
            Formula::Member(..) => false,
            Formula::Query(..) => true,
            Formula::Not(b) | Formula::Exists(_, _, b) => b.contains_query(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().any(Formula::contains_query),
        }
    }

    /// Number of query/member atoms.
    pub fn atom_count(&self) -> usize {
        match self {
            Formula::Member(..) | Formula::Query(..) => 1,
            Formula::Not(b) | Formula::Exists(_, _, b) => b.atom_count(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().map(Formula::atom_count).sum(),
        }
    }

    pub fn from_json(v: &Value) -> Result<Formula, String> {
        let obj = v
            .as_object()
            .ok_or_else(|| format!("formula must be an object, got {v}"))?;
        if obj.len() != 1 {
            return Err(format!("formula node must have exactly one key, got {v}"));
        }
        let (key, body) = obj.iter().next().expect("one key");
        match key.as_str() {
            "member" | "query" => {
                let items = body
                    .as_array()
                    .ok_or_else(|| format!("`{key}` expects [name, terms...]"))?;
                let name = items
                    .first()
                    .and_then(Value::as_str)
                    .ok_or_else(|| format!("`{key}` expects a name first"))?;
                let terms = items[1..].iter().map(Term::from_json).collect::<Result<Vec<_>, _>>()?;
                Ok(if key == "member" {
                    Formula::Member(sym(name), terms)
                } else {
                    Formula::Query(sym(name), terms)
                })
            }
            "not" => Ok(Formula::Not(Box::new(Formula::from_json(body)?))),
            "and" | "or" => {
                let items = body.as_array().ok_or_else(|| format!("`{key}` expects a list"))?;
                let fs = items.iter().map(Formula::from_json).collect::<Result<Vec<_>, _>>()?;
                Ok(if key == "and" { Formula::And(fs) } else { Formula::Or(fs) })
            }
            "exists" => {
                let items = body.as_array().filter(|a| a.len() == 3).ok_or_else(|| {
                    "`exists` expects [var, sort, body]".to_string()
                })?;
                let var = items[0].as_str().ok_or("`exists` variable must be a string")?;
                let sort = items[1].as_str().ok_or("`exists` sort must be a string")?;
                Ok(Formula::Exists(sym(var), sym(sort), Box::new(Formula::from_json(&items[2])?)))
            }
            other => Err(format!("unknown formula node `{other}`")),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Formula::Member(r, ts) | Formula::Query(r, ts) => {
                let key = if matches!(self, Formula::Member(..)) { "member" } else { "query" };
                let mut items = vec![Value::String(r.to_string())];
                items.extend(ts.iter().map(Term::to_json));
                json!({ key: items })
            }
            Formula::Not(b) => json!({ "not": b.to_json() }),
            Formula::And(fs) => json!({ "and": fs.iter().map(Formula::to_json).collect::<Vec<_>>() }),
            Formula::Or(fs) => json!({ "or": fs.iter().map(Formula::to_json).collect::<Vec<_>>() }),
            Formula::Exists(v, s, b) => json!({ "exists": [v.as_ref(), s.as_ref(), b.to_json()] }),
        }
    }
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(sym(name))
    }

    pub fn from_json(v: &Value) -> Result<Term, String> {
        match v {
            Value::String(s) => Ok(Term::Var(sym(s))),
            Value::Object(o) if o.len() == 1 => {
                if let Some(c) = o.get("const") {
                    let c = c.as_str().ok_or("`const` expects a string")?;
                    Ok(Term::Const(sym(c)))
                } else if let Some(d) = o.get("derive") {
                    let items = d.as_array().ok_or("`derive` expects [tag, terms...]")?;
                    let tag = items
                        .first()
                        .and_then(Value::as_str)
                        .ok_or("`derive` expects a tag first")?;
                    let args = items[1..].iter().map(Term::from_json).collect::<Result<Vec<_>, _>>()?;
                    Ok(Term::Derived(sym(tag), args))
                } else {
                    Err(format!("unknown term {v}"))
                }
            }
            _ => Err(format!("unknown term {v}")),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Term::Var(v) => Value::String(v.to_string()),
            Term::Const(c) => json!({ "const": c.as_ref() }),
            Term::Derived(tag, args) => {
                let mut items = vec![Value::String(tag.to_string())];
                items.extend(args.iter().map(Term::to_json));
                json!({ "derive": items })
            }
        }
    }

    pub fn vars(&self, out: &mut Vec<Sym>) {
        match self {
            Term::Var(v) => out.push(v.clone()),
            Term::Const(_) => {}
            Term::Derived(_, args) => args.iter().for_each(|a| a.vars(out)),
        }
    }
}

/// Variable environment: a stack of (name, atom name) bindings.
#[derive(Clone, Debug, Default)]
pub struct Env {
    vars: Vec<(Sym, Sym)>,
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, var: Sym, val: Sym) {
        self.vars.push((var, val));
    }

    pub fn pop(&mut self) {
        self.vars.pop();
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn truncate(&mut self, len: usize) {
        self.vars.truncate(len);
    }

    pub fn get(&self, var: &str) -> Option<&Sym> {
        self.vars.iter().rev().find(|(n, _)| n.as_ref() == var).map(|(_, v)| v)
    }

    pub fn is_bound(&self, var: &str) -> bool {
        self.get(var).is_some()
    }
}

/// Evaluates a term to an atom name. Variables are resolved statically by
/// validation, so an unbound variable here is a programming error.
pub fn eval_term(t: &Term, env: &Env) -> Sym {
    match t {
        Term::Var(v) => env
            .get(v)
            .cloned()
            .unwrap_or_else(|| panic!("unbound variable `{v}` survived validation")),
        Term::Const(c) => c.clone(),
        Term::Derived(tag, args) => {
            let names: Vec<Sym> = args.iter().map(|a| eval_term(a, env)).collect();
            derived_name(tag, &names)
        }
    }
}

pub fn eval_terms(ts: &[Term], env: &Env) -> Vec<Sym> {
    ts.iter().map(|t| eval_term(t, env)).collect()
}

/// Source of truth for the atoms of a formula.
pub trait Interp {
    fn member(&mut self, rel: &str, tuple: &[Sym]) -> bool;
    fn query(&mut self, name: &str, args: &[Sym]) -> bool;
    fn universe(&mut self, sort: &str) -> Vec<Sym>;
}

pub fn eval<I: Interp + ?Sized>(f: &Formula, env: &mut Env, interp: &mut I) -> bool {
    match f {
        Formula::Member(rel, ts) => {
            let tuple = eval_terms(ts, env);
            interp.member(rel, &tuple)
        }
        Formula::Query(name, ts) => {
            let args = eval_terms(ts, env);
            interp.query(name, &args)
        }
        Formula::Not(b) => !eval(b, env, interp),
        Formula::And(fs) => fs.iter().all(|g| eval(g, env, interp)),
        Formula::Or(fs) => fs.iter().any(|g| eval(g, env, interp)),
        Formula::Exists(var, sort, body) => {
            for atom in interp.universe(sort) {
                env.bind(var.clone(), atom);
                let hit = eval(body, env, interp);
                env.pop();
                if hit {
                    return true;
                }
            }
            false
        }
    }
}

/// Names and signatures visible to a formula during validation.
pub(crate) trait Signature {
    fn has_sort(&self, sort: &str) -> bool;
    fn relation_sorts(&self, rel: &str) -> Option<Vec<Sym>>;
    fn query_sorts(&self, name: &str) -> Option<Vec<Sym>>;
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Allow {
    pub member: bool,
    pub query: bool,
    pub exists: bool,
}

/// Typed variable scope used while validating.
#[derive(Clone, Debug, Default)]
pub(crate) struct Scope {
    vars: Vec<(Sym, Sym)>,
}

impl Scope {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, var: Sym, sort: Sym) {
        self.vars.push((var, sort));
    }

    pub fn pop(&mut self) {
        self.vars.pop();
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn truncate(&mut self, len: usize) {
        self.vars.truncate(len);
    }

    pub fn sort_of(&self, var: &str) -> Option<&Sym> {
        self.vars.iter().rev().find(|(n, _)| n.as_ref() == var).map(|(_, s)| s)
    }
}

pub(crate) fn check_term(
    t: &Term,
    expected: Option<&str>,
    scope: &Scope,
    context: &str,
    errors: &mut Vec<SchemaError>,
) {
    match t {
        Term::Var(v) => match scope.sort_of(v) {
            None => errors.push(SchemaError::UnboundVariable {
                context: context.to_string(),
                var: v.to_string(),
            }),
            Some(found) => {
                if let Some(exp) = expected {
                    if found.as_ref() != exp {
                        errors.push(SchemaError::SortMismatch {
                            context: context.to_string(),
                            var: v.to_string(),
                            expected: exp.to_string(),
                            found: found.to_string(),
                        });
                    }
                }
            }
        },
        Term::Const(_) => {}
        Term::Derived(_, args) => {
            for a in args {
                check_term(a, None, scope, context, errors);
            }
        }
    }
}

pub(crate) fn check_terms(
    ts: &[Term],
    name: &str,
    sorts: &[Sym],
    scope: &Scope,
    context: &str,
    errors: &mut Vec<SchemaError>,
) {
    if ts.len() != sorts.len() {
        errors.push(SchemaError::ArityMismatch {
            context: context.to_string(),
            name: name.to_string(),
            expected: sorts.len(),
            found: ts.len(),
        });
        return;
    }
    for (t, s) in ts.iter().zip(sorts) {
        check_term(t, Some(s), scope, context, errors);
    }
}

pub(crate) fn check_formula<S: Signature + ?Sized>(
    f: &Formula,
    sig: &S,
    allow: Allow,
    scope: &mut Scope,
    context: &str,
    errors: &mut Vec<SchemaError>,
) {
    match f {
        Formula::Member(rel, ts) => {
            if !allow.member {
                errors.push(SchemaError::Malformed {
                    context: context.to_string(),
                    message: format!("relation membership `{rel}` is not allowed here"),
                });
            }
            match sig.relation_sorts(rel) {
                None => errors.push(SchemaError::UnknownRelation {
                    context: context.to_string(),
                    name: rel.to_string(),
                }),
                Some(sorts) => check_terms(ts, rel, &sorts, scope, context, errors),
            }
        }
        Formula::Query(name, ts) => {
            if !allow.query {
                errors.push(SchemaError::Malformed {
                    context: context.to_string(),
                    message: format!("query atom `{name}` is not allowed here"),
                });
            }
            match sig.query_sorts(name) {
                None => errors.push(SchemaError::UnknownQuery {
                    context: context.to_string(),
                    name: name.to_string(),
                }),
                Some(sorts) => check_terms(ts, name, &sorts, scope, context, errors),
            }
        }
        Formula::Not(b) => check_formula(b, sig, allow, scope, context, errors),
        Formula::And(fs) | Formula::Or(fs) => {
            for g in fs {
                check_formula(g, sig, allow, scope, context, errors);
            }
        }
        Formula::Exists(var, sort, body) => {
            if !allow.exists {
                errors.push(SchemaError::Malformed {
                    context: context.to_string(),
                    message: "quantifiers are not allowed here".to_string(),
                });
            }
            if !sig.has_sort(sort) {
                errors.push(SchemaError::UnknownSort {
                    context: context.to_string(),
                    sort: sort.to_string(),
                });
            }
            scope.push(var.clone(), sort.clone());
            check_formula(body, sig, allow, scope, context, errors);
            scope.pop();
        }
    }
}
