//! JSON rule language for mappings and its loader.
//!
//! ```json
//! {
//!   "source": "acl", "target": "rbac",
//!   "sort_map": {"O": "P"},
//!   "state_rules": [
//!     {"match": [{"relation": ["ACL", "u", "o"]}],
//!      "emit": [{"tuple": ["PA", {"derive": ["role", "u"]}, "o"]}]}
//!   ],
//!   "command_rules": [
//!     {"command": "grant", "params": ["a", "u", "o"],
//!      "body": [{"emit": ["assignPerm", "a", {"derive": ["role", "u"]}, "o"]}]}
//!   ],
//!   "query_rules": [
//!     {"query": "auth", "params": ["u", "o"], "decide": {"formula": {"query": ["auth", "u", "o"]}}}
//!   ]
//! }
//! ```
//!
//! Strings in term position are variables. In `match` and `foreach`
//! patterns an unbound variable becomes a binder; a bound one filters.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::atom::{sym, Sym};
use crate::error::{MappingError, SchemaError, SchemaErrors};
use crate::formula::{check_formula, check_term, check_terms, Allow, Formula, Scope, Signature, Term};
use crate::system::SystemDef;

use super::{
    Binding, CommandRule, Cond, Decider, Emit, MappingDef, MatchClause, Pat, QueryRule, StateRule, Step,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMapping {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub source: String,
    pub target: String,
    #[serde(default)]
    pub sort_map: BTreeMap<String, String>,
    #[serde(default)]
    pub state_rules: Vec<RawStateRule>,
    #[serde(default)]
    pub command_rules: Vec<RawCommandRule>,
    #[serde(default)]
    pub query_rules: Vec<RawQueryRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_transform: Option<BTreeMap<String, String>>,
}

impl RawMapping {
    pub fn from_json_str(text: &str) -> Result<RawMapping, crate::Error> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawStateRule {
    #[serde(rename = "match", default)]
    pub matches: Vec<Value>,
    pub emit: Vec<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCommandRule {
    pub command: String,
    #[serde(default)]
    pub params: Vec<String>,
    #[serde(default)]
    pub body: Vec<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawQueryRule {
    pub query: String,
    #[serde(default)]
    pub params: Vec<String>,
    pub decide: Value,
}

struct Sig<'a>(&'a SystemDef);

impl Signature for Sig<'_> {
    fn has_sort(&self, sort: &str) -> bool {
        self.0.has_sort(sort)
    }
    fn relation_sorts(&self, rel: &str) -> Option<Vec<Sym>> {
        self.0.relation_sorts(rel).map(<[Sym]>::to_vec)
    }
    fn query_sorts(&self, name: &str) -> Option<Vec<Sym>> {
        self.0.query(name).map(|q| q.param_sorts())
    }
}

fn single_key<'v>(v: &'v Value, what: &str) -> Result<(&'v str, &'v Value), String> {
    let obj = v
        .as_object()
        .filter(|o| o.len() == 1)
        .ok_or_else(|| format!("{what} must be a single-key object, got {v}"))?;
    let (k, b) = obj.iter().next().expect("one key");
    Ok((k.as_str(), b))
}

fn head_and_terms<'v>(body: &'v Value, key: &str) -> Result<(Sym, &'v [Value]), String> {
    let items = body.as_array().ok_or_else(|| format!("`{key}` expects [name, ...]"))?;
    let name = items
        .first()
        .and_then(Value::as_str)
        .ok_or_else(|| format!("`{key}` expects a name first"))?;
    Ok((sym(name), &items[1..]))
}

fn terms(values: &[Value]) -> Result<Vec<Term>, String> {
    values.iter().map(Term::from_json).collect()
}

struct Loader<'a> {
    src: &'a SystemDef,
    tgt: &'a SystemDef,
    sort_map: &'a BTreeMap<Sym, Sym>,
    errors: Vec<SchemaError>,
    unknown_emit: Option<String>,
}

impl Loader<'_> {
    fn tsort(&self, s: &Sym) -> Sym {
        self.sort_map.get(s).cloned().unwrap_or_else(|| s.clone())
    }

    fn malformed(&mut self, context: &str, message: String) {
        self.errors.push(SchemaError::Malformed { context: context.to_string(), message });
    }

    /// Turns pattern terms into binders or filters, extending the scope.
    fn pats(&mut self, values: &[Value], sorts: &[Sym], scope: &mut Scope, context: &str) -> Option<Vec<Pat>> {
        if values.len() != sorts.len() {
            self.errors.push(SchemaError::ArityMismatch {
                context: context.to_string(),
                name: "pattern".to_string(),
                expected: sorts.len(),
                found: values.len(),
            });
            return None;
        }
        let mut out = Vec::new();
        for (v, sort) in values.iter().zip(sorts) {
            let t = match Term::from_json(v) {
                Ok(t) => t,
                Err(e) => {
                    self.malformed(context, e);
                    return None;
                }
            };
            match t {
                Term::Var(name) if scope.sort_of(&name).is_none() => {
                    scope.push(name.clone(), sort.clone());
                    out.push(Pat::Bind(name));
                }
                t => {
                    check_term(&t, Some(sort), scope, context, &mut self.errors);
                    out.push(Pat::Term(t));
                }
            }
        }
        Some(out)
    }

    fn state_rule(&mut self, raw: &RawStateRule, idx: usize) -> Option<StateRule> {
        let context = format!("state rule {idx}");
        let mut scope = Scope::new();
        let mut matches = Vec::new();
        for m in &raw.matches {
            let (key, body) = match single_key(m, "match clause") {
                Ok(x) => x,
                Err(e) => {
                    self.malformed(&context, e);
                    return None;
                }
            };
            match key {
                "sort" => {
                    let items = body.as_array().filter(|a| a.len() == 2);
                    let Some((sort, var)) = items.and_then(|a| Some((a[0].as_str()?, &a[1]))) else {
                        self.malformed(&context, "`sort` expects [sort, variable]".into());
                        return None;
                    };
                    if !self.src.has_sort(sort) {
                        self.errors.push(SchemaError::UnknownSort { context: context.clone(), sort: sort.into() });
                        return None;
                    }
                    let tsort = self.tsort(&sym(sort));
                    let mut pats = self.pats(std::slice::from_ref(var), &[tsort], &mut scope, &context)?;
                    matches.push(MatchClause::Sort { sort: sym(sort), pat: pats.remove(0) });
                }
                "relation" => {
                    let (rel, ts) = match head_and_terms(body, key) {
                        Ok(x) => x,
                        Err(e) => {
                            self.malformed(&context, e);
                            return None;
                        }
                    };
                    let Some(cols) = self.src.relation_sorts(&rel) else {
                        self.errors.push(SchemaError::UnknownRelation { context, name: rel.to_string() });
                        return None;
                    };
                    let tcols: Vec<Sym> = cols.iter().map(|c| self.tsort(c)).collect();
                    let pats = self.pats(ts, &tcols, &mut scope, &context)?;
                    matches.push(MatchClause::Relation { rel, pats });
                }
                other => {
                    self.malformed(&context, format!("unknown match clause `{other}`"));
                    return None;
                }
            }
        }
        let mut emits = Vec::new();
        for e in &raw.emit {
            let (key, body) = match single_key(e, "emission") {
                Ok(x) => x,
                Err(err) => {
                    self.malformed(&context, err);
                    return None;
                }
            };
            let (name, ts) = match head_and_terms(body, key) {
                Ok(x) => x,
                Err(err) => {
                    self.malformed(&context, err);
                    return None;
                }
            };
            let ts = match terms(ts) {
                Ok(t) => t,
                Err(err) => {
                    self.malformed(&context, err);
                    return None;
                }
            };
            match key {
                "atom" => {
                    if !self.tgt.has_sort(&name) {
                        self.unknown_emit.get_or_insert_with(|| name.to_string());
                        return None;
                    }
                    if ts.len() != 1 {
                        self.malformed(&context, "`atom` expects [sort, term]".into());
                        return None;
                    }
                    check_term(&ts[0], Some(&name), &scope, &context, &mut self.errors);
                    emits.push(Emit::Atom { sort: name, term: ts.into_iter().next().expect("one term") });
                }
                "tuple" => {
                    let Some(cols) = self.tgt.relation_sorts(&name) else {
                        self.unknown_emit.get_or_insert_with(|| name.to_string());
                        return None;
                    };
                    check_terms(&ts, &name, cols, &scope, &context, &mut self.errors);
                    emits.push(Emit::Tuple { rel: name, terms: ts });
                }
                other => {
                    self.malformed(&context, format!("unknown emission `{other}`"));
                    return None;
                }
            }
        }
        Some(StateRule { matches, emits })
    }

    fn steps(&mut self, values: &[Value], scope: &mut Scope, context: &str) -> Vec<Step> {
        values.iter().filter_map(|v| self.step(v, scope, context)).collect()
    }

    fn step(&mut self, v: &Value, scope: &mut Scope, context: &str) -> Option<Step> {
        let (key, body) = match single_key(v, "step") {
            Ok(x) => x,
            Err(e) => {
                self.malformed(context, e);
                return None;
            }
        };
        match key {
            "emit" => {
                let (command, ts) = head_and_terms(body, key).map_err(|e| self.malformed(context, e)).ok()?;
                let args = terms(ts).map_err(|e| self.malformed(context, e)).ok()?;
                match self.tgt.command(&command) {
                    None => self.errors.push(SchemaError::UnknownCommand {
                        context: context.to_string(),
                        name: command.to_string(),
                    }),
                    Some(c) => check_terms(&args, &command, &c.param_sorts(), scope, context, &mut self.errors),
                }
                Some(Step::Emit { command, args })
            }
            "foreach" => {
                let obj = body.as_object().filter(|o| o.len() == 2 && o.contains_key("body"));
                let Some(obj) = obj else {
                    self.malformed(context, "`foreach` expects {binding, body}".into());
                    return None;
                };
                let mark = scope.len();
                let (bkey, bval) = obj.iter().find(|(k, _)| k.as_str() != "body").expect("two keys");
                let binding = match bkey.as_str() {
                    "query" | "relation" => {
                        let (name, ts) = head_and_terms(bval, bkey).map_err(|e| self.malformed(context, e)).ok()?;
                        let sorts = if bkey == "query" {
                            self.tgt.query(&name).map(|q| q.param_sorts())
                        } else {
                            self.tgt.relation_sorts(&name).map(<[Sym]>::to_vec)
                        };
                        let Some(sorts) = sorts else {
                            self.errors.push(if bkey == "query" {
                                SchemaError::UnknownQuery { context: context.to_string(), name: name.to_string() }
                            } else {
                                SchemaError::UnknownRelation { context: context.to_string(), name: name.to_string() }
                            });
                            return None;
                        };
                        let pats = self.pats(ts, &sorts, scope, context)?;
                        if bkey == "query" {
                            Binding::Query { name, pats }
                        } else {
                            Binding::Relation { rel: name, pats }
                        }
                    }
                    "sort" => {
                        let items = bval.as_array().filter(|a| a.len() == 2);
                        let Some((sort, var)) = items.and_then(|a| Some((a[0].as_str()?, &a[1]))) else {
                            self.malformed(context, "`sort` expects [sort, variable]".into());
                            return None;
                        };
                        if !self.tgt.has_sort(sort) {
                            self.errors.push(SchemaError::UnknownSort { context: context.to_string(), sort: sort.into() });
                            return None;
                        }
                        let mut pats = self.pats(std::slice::from_ref(var), &[sym(sort)], scope, context)?;
                        Binding::Sort { sort: sym(sort), pat: pats.remove(0) }
                    }
                    other => {
                        self.malformed(context, format!("unknown foreach binding `{other}`"));
                        return None;
                    }
                };
                let body = match obj["body"].as_array() {
                    Some(b) => self.steps(b, scope, context),
                    None => {
                        self.malformed(context, "`body` must be a list".into());
                        Vec::new()
                    }
                };
                scope.truncate(mark);
                Some(Step::Foreach { binding, body })
            }
            "when" => {
                let Some(obj) = body.as_object() else {
                    self.malformed(context, "`when` expects an object".into());
                    return None;
                };
                let known = ["holds", "state", "body", "else"];
                if let Some(k) = obj.keys().find(|k| !known.contains(&k.as_str())) {
                    self.malformed(context, format!("unknown `when` field `{k}`"));
                    return None;
                }
                let (cond_key, allow) = match (obj.get("holds"), obj.get("state")) {
                    (Some(_), None) => ("holds", Allow { member: false, query: true, exists: true }),
                    (None, Some(_)) => ("state", Allow { member: true, query: false, exists: true }),
                    _ => {
                        self.malformed(context, "`when` needs exactly one of `holds` or `state`".into());
                        return None;
                    }
                };
                let f = Formula::from_json(&obj[cond_key]).map_err(|e| self.malformed(context, e)).ok()?;
                check_formula(&f, &Sig(self.tgt), allow, scope, context, &mut self.errors);
                let mut branch = |key: &str, this: &mut Self| match obj.get(key) {
                    None => Vec::new(),
                    Some(Value::Array(b)) => this.steps(b, scope, context),
                    Some(_) => {
                        this.malformed(context, format!("`{key}` must be a list"));
                        Vec::new()
                    }
                };
                let then = branch("body", self);
                let otherwise = branch("else", self);
                let cond = if cond_key == "holds" { Cond::Holds(f) } else { Cond::State(f) };
                Some(Step::When { cond, then, otherwise })
            }
            other => {
                self.malformed(context, format!("unknown step `{other}`"));
                None
            }
        }
    }

    fn command_rule(&mut self, raw: &RawCommandRule) -> Option<CommandRule> {
        let context = format!("command rule `{}`", raw.command);
        let src = self.src.command(&raw.command)?;
        if src.params.len() != raw.params.len() {
            self.errors.push(SchemaError::ArityMismatch {
                context: context.clone(),
                name: raw.command.clone(),
                expected: src.params.len(),
                found: raw.params.len(),
            });
            return None;
        }
        let mut scope = Scope::new();
        for (p, name) in src.params.iter().zip(&raw.params) {
            scope.push(sym(name), self.tsort(&p.sort));
        }
        let body = self.steps(&raw.body, &mut scope, &context);
        Some(CommandRule {
            command: src.name.clone(),
            params: raw.params.iter().map(|p| sym(p)).collect(),
            body,
        })
    }

    fn query_rule(&mut self, raw: &RawQueryRule) -> Option<QueryRule> {
        let context = format!("query rule `{}`", raw.query);
        let src = self.src.query(&raw.query)?;
        if src.params.len() != raw.params.len() {
            self.errors.push(SchemaError::ArityMismatch {
                context: context.clone(),
                name: raw.query.clone(),
                expected: src.params.len(),
                found: raw.params.len(),
            });
            return None;
        }
        let mut scope = Scope::new();
        for (p, name) in src.params.iter().zip(&raw.params) {
            scope.push(sym(name), self.tsort(&p.sort));
        }
        let (key, body) = single_key(&raw.decide, "decider").map_err(|e| self.malformed(&context, e)).ok()?;
        let f = Formula::from_json(body).map_err(|e| self.malformed(&context, e)).ok()?;
        let (decider, allow) = match key {
            "formula" => (Decider::Formula(f.clone()), Allow { member: false, query: true, exists: false }),
            "theory" => (Decider::Theory(f.clone()), Allow { member: false, query: true, exists: true }),
            "state" => (Decider::State(f.clone()), Allow { member: true, query: false, exists: true }),
            other => {
                self.malformed(&context, format!("unknown decider `{other}`"));
                return None;
            }
        };
        check_formula(&f, &Sig(self.tgt), allow, &mut scope, &context, &mut self.errors);
        Some(QueryRule {
            query: src.name.clone(),
            params: raw.params.iter().map(|p| sym(p)).collect(),
            decider,
        })
    }
}

/// Checks a raw mapping against its systems: rule coverage first, then
/// every rule body.
pub fn load_mapping(
    raw: &RawMapping,
    src: Arc<SystemDef>,
    tgt: Arc<SystemDef>,
) -> Result<MappingDef, MappingError> {
    let mut errors = Vec::new();

    let mut sort_map = BTreeMap::new();
    for (s, t) in &raw.sort_map {
        if !src.has_sort(s) {
            errors.push(SchemaError::UnknownSort { context: "sort_map".into(), sort: s.clone() });
        }
        if !tgt.has_sort(t) {
            errors.push(SchemaError::UnknownSort { context: "sort_map".into(), sort: t.clone() });
        }
        sort_map.insert(sym(s), sym(t));
    }

    let mut seen = BTreeSet::new();
    for r in &raw.command_rules {
        if !seen.insert(("command", r.command.as_str())) {
            return Err(MappingError::DuplicateRule(r.command.clone()));
        }
        if src.command(&r.command).is_none() {
            errors.push(SchemaError::UnknownCommand { context: "command_rules".into(), name: r.command.clone() });
        }
    }
    for r in &raw.query_rules {
        if !seen.insert(("query", r.query.as_str())) {
            return Err(MappingError::DuplicateRule(r.query.clone()));
        }
        if src.query(&r.query).is_none() {
            errors.push(SchemaError::UnknownQuery { context: "query_rules".into(), name: r.query.clone() });
        }
    }
    for c in src.commands() {
        if !seen.contains(&("command", c.name.as_ref())) {
            return Err(MappingError::MissingCommandRule(c.name.to_string()));
        }
    }
    for q in src.queries() {
        if !seen.contains(&("query", q.name.as_ref())) {
            return Err(MappingError::MissingQueryRule(q.name.to_string()));
        }
    }

    let request_transform = raw.request_transform.as_ref().map(|f| {
        f.iter()
            .map(|(s, t)| {
                if !src.query(s).is_some_and(|q| q.is_request) {
                    errors.push(SchemaError::Malformed {
                        context: "request_transform".into(),
                        message: format!("`{s}` is not a source request"),
                    });
                }
                if !tgt.query(t).is_some_and(|q| q.is_request) {
                    errors.push(SchemaError::Malformed {
                        context: "request_transform".into(),
                        message: format!("`{t}` is not a target request"),
                    });
                }
                (sym(s), sym(t))
            })
            .collect::<BTreeMap<_, _>>()
    });

    let mut loader = Loader { src: &src, tgt: &tgt, sort_map: &sort_map, errors, unknown_emit: None };
    let state_rules: Vec<StateRule> = raw
        .state_rules
        .iter()
        .enumerate()
        .filter_map(|(i, r)| loader.state_rule(r, i))
        .collect();
    if let Some(name) = loader.unknown_emit.take() {
        return Err(MappingError::RuleEmitsUnknownRelation(name));
    }
    let command_rules: Vec<CommandRule> = raw.command_rules.iter().filter_map(|r| loader.command_rule(r)).collect();
    let query_rules: Vec<QueryRule> = raw.query_rules.iter().filter_map(|r| loader.query_rule(r)).collect();
    if !loader.errors.is_empty() {
        return Err(MappingError::Schema(SchemaErrors(loader.errors)));
    }

    Ok(MappingDef {
        name: format!("{}-to-{}", raw.source, raw.target),
        raw: raw.clone(),
        source: src,
        target: tgt,
        sort_map,
        state_rules,
        command_rules,
        query_rules,
        request_transform,
    })
}

/// Raw form of the identity mapping of `sys`.
pub(crate) fn identity_raw(sys: &SystemDef) -> RawMapping {
    let vars = |n: usize| (0..n).map(|i| format!("x{i}")).collect::<Vec<_>>();
    let mut state_rules = Vec::new();
    for s in sys.sorts() {
        state_rules.push(RawStateRule {
            matches: vec![json!({ "sort": [s.as_ref(), "x"] })],
            emit: vec![json!({ "atom": [s.as_ref(), "x"] })],
        });
    }
    for (rel, cols) in sys.relations() {
        let mut items = vec![Value::String(rel.to_string())];
        items.extend(vars(cols.len()).into_iter().map(Value::String));
        state_rules.push(RawStateRule {
            matches: vec![json!({ "relation": items.clone() })],
            emit: vec![json!({ "tuple": items })],
        });
    }
    let command_rules = sys
        .commands()
        .iter()
        .map(|c| {
            let params = vars(c.params.len());
            let mut items = vec![Value::String(c.name.to_string())];
            items.extend(params.iter().cloned().map(Value::String));
            RawCommandRule { command: c.name.to_string(), params, body: vec![json!({ "emit": items })] }
        })
        .collect();
    let query_rules = sys
        .queries()
        .iter()
        .map(|q| {
            let params = vars(q.params.len());
            let mut items = vec![Value::String(q.name.to_string())];
            items.extend(params.iter().cloned().map(Value::String));
            RawQueryRule { query: q.name.to_string(), params, decide: json!({ "formula": { "query": items } }) }
        })
        .collect();
    RawMapping {
        description: Some(format!("identity mapping of {}", sys.name())),
        source: sys.name().to_string(),
        target: sys.name().to_string(),
        sort_map: BTreeMap::new(),
        state_rules,
        command_rules,
        query_rules,
        request_transform: None,
    }
}
