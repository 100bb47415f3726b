//! Access control systems: schema, queries and requests, guarded commands.
//!
//! A system description is loaded from JSON ([`RawSystem`]) and checked by
//! [`validate_system`]. The checked [`SystemDef`] then provides entailment,
//! command execution, traces, theories and allowed-request sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::atom::{derived_name, fmt_application, sym, Atom, Sym};
use crate::error::{EvalError, SchemaError, SchemaErrors};
use crate::formula::{
    check_formula, check_terms, eval, eval_terms, Allow, Env, Formula, Interp, Scope, Signature, Term,
};
use crate::state::{State, Tuple};

// ---------------------------------------------------------------------------
// JSON description
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSystem {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub sorts: Vec<String>,
    #[serde(default)]
    pub relations: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub queries: Vec<RawQuery>,
    /// Alternative way to flag requests by name; every entry must name a query.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requests: Option<Vec<String>>,
    #[serde(default)]
    pub commands: Vec<RawCommand>,
    #[serde(default)]
    pub init: State,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admins: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawQuery {
    pub name: String,
    #[serde(default)]
    pub params: Vec<(String, String)>,
    #[serde(default)]
    pub request: bool,
    pub body: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCommand {
    pub name: String,
    #[serde(default)]
    pub params: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actor: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<Value>,
    #[serde(default)]
    pub effects: Vec<Value>,
}

// ---------------------------------------------------------------------------
// Checked definitions
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: Sym,
    pub sort: Sym,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryDef {
    pub name: Sym,
    pub params: Vec<Param>,
    pub body: Formula,
    pub is_request: bool,
}

impl QueryDef {
    pub fn param_sorts(&self) -> Vec<Sym> {
        self.params.iter().map(|p| p.sort.clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Effect {
    Add(Sym, Vec<Term>),
    Remove(Sym, Vec<Term>),
    /// Binds `var` to the derived atom `tag(args)` of `sort`, adding it to
    /// the universe.
    Fresh { var: Sym, sort: Sym, tag: Sym, args: Vec<Term> },
}

impl Effect {
    fn from_json(v: &Value) -> Result<Effect, String> {
        let obj = v
            .as_object()
            .filter(|o| o.len() == 1)
            .ok_or_else(|| format!("effect must be a single-key object, got {v}"))?;
        let (key, body) = obj.iter().next().expect("one key");
        let items = body.as_array().ok_or_else(|| format!("`{key}` expects a list"))?;
        let name_at = |i: usize| -> Result<Sym, String> {
            items
                .get(i)
                .and_then(Value::as_str)
                .map(sym)
                .ok_or_else(|| format!("`{key}` expects a name at position {i}"))
        };
        match key.as_str() {
            "add" | "remove" => {
                let rel = name_at(0)?;
                let terms = items[1..].iter().map(Term::from_json).collect::<Result<Vec<_>, _>>()?;
                Ok(if key == "add" { Effect::Add(rel, terms) } else { Effect::Remove(rel, terms) })
            }
            "fresh" => {
                let (var, sort, tag) = (name_at(0)?, name_at(1)?, name_at(2)?);
                let args = items[3..].iter().map(Term::from_json).collect::<Result<Vec<_>, _>>()?;
                Ok(Effect::Fresh { var, sort, tag, args })
            }
            other => Err(format!("unknown effect `{other}`")),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Effect::Add(r, ts) | Effect::Remove(r, ts) => {
                let key = if matches!(self, Effect::Add(..)) { "add" } else { "remove" };
                let mut items = vec![Value::String(r.to_string())];
                items.extend(ts.iter().map(Term::to_json));
                json!({ key: items })
            }
            Effect::Fresh { var, sort, tag, args } => {
                let mut items = vec![json!(var.as_ref()), json!(sort.as_ref()), json!(tag.as_ref())];
                items.extend(args.iter().map(Term::to_json));
                json!({ "fresh": items })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommandDef {
    pub name: Sym,
    pub params: Vec<Param>,
    pub actor: Option<usize>,
    pub guard: Formula,
    pub effects: Vec<Effect>,
}

impl CommandDef {
    pub fn param_sorts(&self) -> Vec<Sym> {
        self.params.iter().map(|p| p.sort.clone()).collect()
    }
}

/// A command applied to concrete atoms (by name; sorts come from the
/// command's signature).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct GroundCommand {
    pub command: Sym,
    pub args: Vec<Sym>,
}

impl GroundCommand {
    pub fn new(command: &str, args: &[&str]) -> Self {
        GroundCommand {
            command: sym(command),
            args: args.iter().map(|a| sym(a)).collect(),
        }
    }
}

impl fmt::Display for GroundCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_application(f, &self.command, &self.args)
    }
}

/// A query applied to concrete atoms.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct GroundQuery {
    pub query: Sym,
    pub args: Vec<Sym>,
}

impl GroundQuery {
    pub fn new(query: &str, args: &[&str]) -> Self {
        GroundQuery {
            query: sym(query),
            args: args.iter().map(|a| sym(a)).collect(),
        }
    }
}

impl fmt::Display for GroundQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_application(f, &self.query, &self.args)
    }
}

/// Values of every ground query instance in a state.
pub type Theory = BTreeMap<GroundQuery, bool>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemDef {
    name: String,
    description: Option<String>,
    sorts: Vec<Sym>,
    relations: BTreeMap<Sym, Vec<Sym>>,
    queries: Vec<QueryDef>,
    commands: Vec<CommandDef>,
    init: State,
    admins: Option<Sym>,
    warnings: Vec<String>,
}

struct RawSignature<'a> {
    sorts: &'a [Sym],
    relations: &'a BTreeMap<Sym, Vec<Sym>>,
}

impl Signature for RawSignature<'_> {
    fn has_sort(&self, sort: &str) -> bool {
        self.sorts.iter().any(|s| s.as_ref() == sort)
    }
    fn relation_sorts(&self, rel: &str) -> Option<Vec<Sym>> {
        self.relations.get(rel).cloned()
    }
    fn query_sorts(&self, _: &str) -> Option<Vec<Sym>> {
        None
    }
}

fn check_params(
    params: &[(String, String)],
    sorts: &[Sym],
    context: &str,
    errors: &mut Vec<SchemaError>,
) -> Vec<Param> {
    let mut seen = BTreeSet::new();
    params
        .iter()
        .map(|(name, sort)| {
            if !seen.insert(name.clone()) {
                errors.push(SchemaError::DuplicateName {
                    kind: "parameter",
                    name: format!("{context}: {name}"),
                });
            }
            if !sorts.iter().any(|s| s.as_ref() == sort) {
                errors.push(SchemaError::UnknownSort {
                    context: context.to_string(),
                    sort: sort.clone(),
                });
            }
            Param { name: sym(name), sort: sym(sort) }
        })
        .collect()
}

/// Checks a raw description and produces a [`SystemDef`], or every schema
/// error found.
pub fn validate_system(raw: &RawSystem) -> Result<SystemDef, SchemaErrors> {
    validate_named(raw, "system")
}

pub fn validate_named(raw: &RawSystem, name: &str) -> Result<SystemDef, SchemaErrors> {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();

    let mut sorts: Vec<Sym> = Vec::new();
    for s in &raw.sorts {
        if sorts.iter().any(|x| x.as_ref() == s) {
            errors.push(SchemaError::DuplicateName { kind: "sort", name: s.clone() });
        } else {
            sorts.push(sym(s));
        }
    }

    let mut relations = BTreeMap::new();
    for (rel, cols) in &raw.relations {
        if sorts.iter().any(|s| s.as_ref() == rel) {
            errors.push(SchemaError::DuplicateName { kind: "relation", name: rel.clone() });
        }
        for c in cols {
            if !sorts.iter().any(|s| s.as_ref() == c) {
                errors.push(SchemaError::UnknownSort {
                    context: format!("relation `{rel}`"),
                    sort: c.clone(),
                });
            }
        }
        relations.insert(sym(rel), cols.iter().map(|c| sym(c)).collect::<Vec<_>>());
    }

    let sig = RawSignature { sorts: &sorts, relations: &relations };
    let system_allow = Allow { member: true, query: false, exists: true };

    let mut queries = Vec::new();
    for q in &raw.queries {
        let context = format!("query `{}`", q.name);
        if queries.iter().any(|x: &QueryDef| x.name.as_ref() == q.name) {
            errors.push(SchemaError::DuplicateName { kind: "query", name: q.name.clone() });
        }
        let params = check_params(&q.params, &sorts, &context, &mut errors);
        let body = match Formula::from_json(&q.body) {
            Ok(f) => f,
            Err(message) => {
                errors.push(SchemaError::Malformed { context, message });
                continue;
            }
        };
        let mut scope = Scope::new();
        for p in &params {
            scope.push(p.name.clone(), p.sort.clone());
        }
        check_formula(&body, &sig, system_allow, &mut scope, &context, &mut errors);
        queries.push(QueryDef {
            name: sym(&q.name),
            params,
            body,
            is_request: q.request,
        });
    }
    if let Some(reqs) = &raw.requests {
        for r in reqs {
            match queries.iter_mut().find(|q| q.name.as_ref() == r) {
                Some(q) => q.is_request = true,
                None => errors.push(SchemaError::RequestNotQuery(r.clone())),
            }
        }
    }
    for q in &queries {
        if q.is_request && q.body.contains_negation() {
            warnings.push(format!("request `{}` uses negation", q.name));
        }
    }

    let mut commands: Vec<CommandDef> = Vec::new();
    for c in &raw.commands {
        let context = format!("command `{}`", c.name);
        if commands.iter().any(|x| x.name.as_ref() == c.name) {
            errors.push(SchemaError::DuplicateName { kind: "command", name: c.name.clone() });
        }
        let params = check_params(&c.params, &sorts, &context, &mut errors);
        if let Some(i) = c.actor {
            if i >= params.len() {
                errors.push(SchemaError::BadActor { command: c.name.clone(), index: i });
            }
        }
        let guard = match c.guard.as_ref().map(Formula::from_json).transpose() {
            Ok(g) => g.unwrap_or_else(Formula::truth),
            Err(message) => {
                errors.push(SchemaError::Malformed { context, message });
                continue;
            }
        };
        let mut scope = Scope::new();
        for p in &params {
            scope.push(p.name.clone(), p.sort.clone());
        }
        check_formula(&guard, &sig, system_allow, &mut scope, &context, &mut errors);
        let mut effects = Vec::new();
        for e in &c.effects {
            let effect = match Effect::from_json(e) {
                Ok(e) => e,
                Err(message) => {
                    errors.push(SchemaError::Malformed { context: context.clone(), message });
                    continue;
                }
            };
            match &effect {
                Effect::Add(rel, ts) | Effect::Remove(rel, ts) => match relations.get(rel) {
                    None => errors.push(SchemaError::UnknownRelation {
                        context: context.clone(),
                        name: rel.to_string(),
                    }),
                    Some(cols) => check_terms(ts, rel, cols, &scope, &context, &mut errors),
                },
                Effect::Fresh { var, sort, args, .. } => {
                    if !sig.has_sort(sort) {
                        errors.push(SchemaError::UnknownSort {
                            context: context.clone(),
                            sort: sort.to_string(),
                        });
                    }
                    for a in args {
                        crate::formula::check_term(a, None, &scope, &context, &mut errors);
                    }
                    scope.push(var.clone(), sort.clone());
                }
            }
            effects.push(effect);
        }
        commands.push(CommandDef {
            name: sym(&c.name),
            params,
            actor: c.actor,
            guard,
            effects,
        });
    }

    // Initial state: declared keys only, arities, components in universes.
    let mut init = State::with_schema(&sorts, relations.keys());
    for (sort, atoms) in raw.init.universes() {
        if !sorts.contains(sort) {
            errors.push(SchemaError::InvalidInit(format!("undeclared sort `{sort}`")));
            continue;
        }
        for a in atoms {
            init.insert_atom(sort, a.clone());
        }
    }
    for (rel, tuples) in raw.init.relations() {
        let Some(cols) = relations.get(rel) else {
            errors.push(SchemaError::InvalidInit(format!("undeclared relation `{rel}`")));
            continue;
        };
        for t in tuples {
            if t.len() != cols.len() {
                errors.push(SchemaError::InvalidInit(format!(
                    "tuple in `{rel}` has {} components, expected {}",
                    t.len(),
                    cols.len()
                )));
                continue;
            }
            for (a, s) in t.iter().zip(cols) {
                if !raw.init.has_atom(s, a) {
                    errors.push(SchemaError::InvalidInit(format!(
                        "`{a}` in `{rel}` is not in the universe of `{s}`"
                    )));
                }
            }
            init.insert_tuple(rel, t.clone());
        }
    }

    let admins = raw.admins.as_ref().map(|a| sym(a));
    if let Some(a) = &admins {
        if relations.get(a).map(Vec::len) != Some(1) {
            errors.push(SchemaError::BadAdmins(a.to_string()));
        }
    }

    if !errors.is_empty() {
        return Err(SchemaErrors(errors));
    }
    Ok(SystemDef {
        name: name.to_string(),
        description: raw.description.clone(),
        sorts,
        relations,
        queries,
        commands,
        init,
        admins,
        warnings,
    })
}

struct StateView<'a>(&'a State);

impl Interp for StateView<'_> {
    fn member(&mut self, rel: &str, tuple: &[Sym]) -> bool {
        self.0.has_tuple(rel, tuple)
    }
    fn query(&mut self, name: &str, _: &[Sym]) -> bool {
        unreachable!("query atom `{name}` inside a system formula")
    }
    fn universe(&mut self, sort: &str) -> Vec<Sym> {
        self.0.universe(sort).map(|u| u.iter().cloned().collect()).unwrap_or_default()
    }
}

/// All tuples over the given sorts drawn from the state's universes, in
/// canonical (lexicographic) order.
pub fn ground_tuples(s: &State, sorts: &[Sym]) -> Vec<Vec<Sym>> {
    let mut out: Vec<Vec<Sym>> = vec![Vec::new()];
    for sort in sorts {
        let atoms: Vec<Sym> = s.universe(sort).map(|u| u.iter().cloned().collect()).unwrap_or_default();
        let mut next = Vec::with_capacity(out.len() * atoms.len());
        for prefix in &out {
            for a in &atoms {
                let mut t = prefix.clone();
                t.push(a.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

impl SystemDef {
    pub fn from_json_str(text: &str, name: &str) -> crate::Result<SystemDef> {
        let raw: RawSystem = serde_json::from_str(text)?;
        Ok(validate_named(&raw, name)?)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: &str) {
        self.name = name.to_string();
    }

    pub fn description(&self) -> Option<&str> {
        self.description.as_deref()
    }

    pub fn sorts(&self) -> &[Sym] {
        &self.sorts
    }

    pub fn relations(&self) -> &BTreeMap<Sym, Vec<Sym>> {
        &self.relations
    }

    pub fn relation_sorts(&self, rel: &str) -> Option<&[Sym]> {
        self.relations.get(rel).map(Vec::as_slice)
    }

    pub fn has_sort(&self, sort: &str) -> bool {
        self.sorts.iter().any(|s| s.as_ref() == sort)
    }

    pub fn queries(&self) -> &[QueryDef] {
        &self.queries
    }

    pub fn requests(&self) -> impl Iterator<Item = &QueryDef> {
        self.queries.iter().filter(|q| q.is_request)
    }

    pub fn commands(&self) -> &[CommandDef] {
        &self.commands
    }

    pub fn init(&self) -> &State {
        &self.init
    }

    pub fn admins(&self) -> Option<&Sym> {
        self.admins.as_ref()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn query(&self, name: &str) -> Option<&QueryDef> {
        self.queries.iter().find(|q| q.name.as_ref() == name)
    }

    pub fn command(&self, name: &str) -> Option<&CommandDef> {
        self.commands.iter().find(|c| c.name.as_ref() == name)
    }

    /// An empty state carrying every declared sort and relation.
    pub fn empty_state(&self) -> State {
        State::with_schema(&self.sorts, self.relations.keys())
    }

    /// Checks the schema invariants of a state for this system.
    pub fn check_state(&self, s: &State) -> Result<(), String> {
        for sort in s.universes().keys() {
            if !self.has_sort(sort) {
                return Err(format!("undeclared sort `{sort}`"));
            }
        }
        for (rel, tuples) in s.relations() {
            let cols = self.relations.get(rel).ok_or_else(|| format!("undeclared relation `{rel}`"))?;
            for t in tuples {
                if t.len() != cols.len() {
                    return Err(format!("tuple arity mismatch in `{rel}`"));
                }
                for (a, sort) in t.iter().zip(cols) {
                    if !s.has_atom(sort, a) {
                        return Err(format!("`{a}` in `{rel}` is missing from universe `{sort}`"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Canonical raw form; validating it again yields an equal definition.
    pub fn to_raw(&self) -> RawSystem {
        let params = |ps: &[Param]| ps.iter().map(|p| (p.name.to_string(), p.sort.to_string())).collect();
        RawSystem {
            description: self.description.clone(),
            sorts: self.sorts.iter().map(|s| s.to_string()).collect(),
            relations: self
                .relations
                .iter()
                .map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect()))
                .collect(),
            queries: self
                .queries
                .iter()
                .map(|q| RawQuery {
                    name: q.name.to_string(),
                    params: params(&q.params),
                    request: q.is_request,
                    body: q.body.to_json(),
                })
                .collect(),
            requests: None,
            commands: self
                .commands
                .iter()
                .map(|c| RawCommand {
                    name: c.name.to_string(),
                    params: params(&c.params),
                    actor: c.actor,
                    guard: Some(c.guard.to_json()),
                    effects: c.effects.iter().map(Effect::to_json).collect(),
                })
                .collect(),
            init: self.init.clone(),
            admins: self.admins.as_ref().map(|a| a.to_string()),
        }
    }

    pub fn to_canonical_json(&self) -> String {
        crate::canonical_json(&self.to_raw())
    }

    fn check_args(&self, name: &str, params: &[Param], args: &[Atom]) -> Result<Vec<Sym>, EvalError> {
        if params.len() != args.len() {
            return Err(EvalError::ArityMismatch {
                name: name.to_string(),
                expected: params.len(),
                found: args.len(),
            });
        }
        for (i, (p, a)) in params.iter().zip(args).enumerate() {
            if p.sort.as_ref() != a.sort() {
                return Err(EvalError::SortMismatch {
                    name: name.to_string(),
                    index: i,
                    atom: a.name().to_string(),
                    expected: p.sort.to_string(),
                    found: a.sort().to_string(),
                });
            }
        }
        Ok(args.iter().map(|a| a.name_sym().clone()).collect())
    }

    /// `s ⊢ q(args)`.
    pub fn entails(&self, s: &State, query: &str, args: &[Atom]) -> Result<bool, EvalError> {
        let q = self.query(query).ok_or_else(|| EvalError::UnknownQuery(query.to_string()))?;
        let names = self.check_args(query, &q.params, args)?;
        Ok(eval_query(q, s, &names))
    }

    /// Entailment of a ground query given by atom names.
    pub fn entails_ground(&self, s: &State, gq: &GroundQuery) -> Result<bool, EvalError> {
        let q = self.query(&gq.query).ok_or_else(|| EvalError::UnknownQuery(gq.query.to_string()))?;
        if q.params.len() != gq.args.len() {
            return Err(EvalError::ArityMismatch {
                name: gq.query.to_string(),
                expected: q.params.len(),
                found: gq.args.len(),
            });
        }
        Ok(eval_query(q, s, &gq.args))
    }

    /// `next(s, cmd(args))`. A false guard leaves the state unchanged.
    pub fn step(&self, s: &State, command: &str, args: &[Atom]) -> Result<State, EvalError> {
        let c = self.command(command).ok_or_else(|| EvalError::UnknownCommand(command.to_string()))?;
        let names = self.check_args(command, &c.params, args)?;
        Ok(exec_command(self, c, s, &names))
    }

    pub fn step_ground(&self, s: &State, gc: &GroundCommand) -> Result<State, EvalError> {
        let c = self
            .command(&gc.command)
            .ok_or_else(|| EvalError::UnknownCommand(gc.command.to_string()))?;
        if c.params.len() != gc.args.len() {
            return Err(EvalError::ArityMismatch {
                name: gc.command.to_string(),
                expected: c.params.len(),
                found: gc.args.len(),
            });
        }
        Ok(exec_command(self, c, s, &gc.args))
    }

    /// Applies each command in order; returns the final state and one
    /// intermediate state per command.
    pub fn run_trace(&self, s: &State, cmds: &[GroundCommand]) -> Result<(State, Vec<State>), EvalError> {
        let mut states = Vec::with_capacity(cmds.len());
        let mut cur = s.clone();
        for gc in cmds {
            cur = self.step_ground(&cur, gc)?;
            states.push(cur.clone());
        }
        Ok((cur, states))
    }

    /// The actor atom name of a ground command, if the command declares one.
    pub fn actor_of<'a>(&self, gc: &'a GroundCommand) -> Option<&'a Sym> {
        let c = self.command(&gc.command)?;
        c.actor.and_then(|i| gc.args.get(i))
    }

    pub fn is_admin(&self, s: &State, atom: &str) -> bool {
        match &self.admins {
            Some(rel) => s.has_tuple(rel, &[sym(atom)]),
            None => false,
        }
    }

    /// Every ground instance of every command over the state's universes.
    pub fn ground_commands(&self, s: &State) -> Vec<GroundCommand> {
        let mut out = Vec::new();
        for c in &self.commands {
            for args in ground_tuples(s, &c.param_sorts()) {
                out.push(GroundCommand { command: c.name.clone(), args });
            }
        }
        out
    }

    /// Ground query instances over the state's universes.
    pub fn query_instances(&self, s: &State, requests_only: bool) -> Vec<GroundQuery> {
        let mut out = Vec::new();
        for q in self.queries.iter().filter(|q| q.is_request || !requests_only) {
            for args in ground_tuples(s, &q.param_sorts()) {
                out.push(GroundQuery { query: q.name.clone(), args });
            }
        }
        out
    }

    /// Th(s): the value of every ground query instance.
    pub fn theory(&self, s: &State) -> Theory {
        let mut out = Theory::new();
        for q in &self.queries {
            for args in ground_tuples(s, &q.param_sorts()) {
                let v = eval_query(q, s, &args);
                out.insert(GroundQuery { query: q.name.clone(), args }, v);
            }
        }
        out
    }

    /// Allowed(s): ground requests that hold.
    pub fn allowed(&self, s: &State) -> BTreeSet<GroundQuery> {
        let mut out = BTreeSet::new();
        for q in self.requests() {
            for args in ground_tuples(s, &q.param_sorts()) {
                if eval_query(q, s, &args) {
                    out.insert(GroundQuery { query: q.name.clone(), args });
                }
            }
        }
        out
    }
}

pub(crate) fn eval_query(q: &QueryDef, s: &State, args: &[Sym]) -> bool {
    let mut env = Env::new();
    for (p, a) in q.params.iter().zip(args) {
        env.bind(p.name.clone(), a.clone());
    }
    eval(&q.body, &mut env, &mut StateView(s))
}

fn exec_command(sys: &SystemDef, c: &CommandDef, s: &State, args: &[Sym]) -> State {
    let mut env = Env::new();
    for (p, a) in c.params.iter().zip(args) {
        env.bind(p.name.clone(), a.clone());
    }
    if !eval(&c.guard, &mut env, &mut StateView(s)) {
        return s.clone();
    }
    let mut next = s.clone();
    for e in &c.effects {
        match e {
            Effect::Add(rel, ts) => {
                let tuple: Tuple = eval_terms(ts, &env);
                if let Some(cols) = sys.relations.get(rel) {
                    for (a, sort) in tuple.iter().zip(cols) {
                        next.insert_atom(sort, a.clone());
                    }
                }
                next.insert_tuple(rel, tuple);
            }
            Effect::Remove(rel, ts) => {
                let tuple = eval_terms(ts, &env);
                next.remove_tuple(rel, &tuple);
            }
            Effect::Fresh { var, sort, tag, args } => {
                let names = eval_terms(args, &env);
                let atom = derived_name(tag, &names);
                next.insert_atom(sort, atom.clone());
                env.bind(var.clone(), atom);
            }
        }
    }
    next
}

/// Free-function forms mirroring the methods.
pub fn entails(sys: &SystemDef, s: &State, query: &str, args: &[Atom]) -> Result<bool, EvalError> {
    sys.entails(s, query, args)
}

pub fn step(sys: &SystemDef, s: &State, command: &str, args: &[Atom]) -> Result<State, EvalError> {
    sys.step(s, command, args)
}

pub fn run_trace(
    sys: &SystemDef,
    s: &State,
    cmds: &[GroundCommand],
) -> Result<(State, Vec<State>), EvalError> {
    sys.run_trace(s, cmds)
}

pub fn theory(sys: &SystemDef, s: &State) -> Theory {
    sys.theory(s)
}

pub fn allowed(sys: &SystemDef, s: &State) -> BTreeSet<GroundQuery> {
    sys.allowed(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GROUPS: &str = r#"{
        "sorts": ["U", "G"],
        "relations": {"Member": ["U", "G"], "Boss": ["U"]},
        "queries": [
            {"name": "in", "params": [["u", "U"], ["g", "G"]], "request": true, "body": {"member": ["Member", "u", "g"]}},
            {"name": "boss", "params": [["u", "U"]], "body": {"member": ["Boss", "u"]}}
        ],
        "commands": [
            {"name": "create", "params": [["u", "U"]], "actor": 0,
             "effects": [{"fresh": ["g", "G", "grp", "u"]}, {"add": ["Member", "u", "g"]}]},
            {"name": "promote", "params": [["a", "U"], ["u", "U"]], "actor": 0,
             "guard": {"member": ["Boss", "a"]}, "effects": [{"add": ["Boss", "u"]}]}
        ],
        "init": {"universes": {"U": ["alice", "bob"], "G": []}, "relations": {"Boss": [["alice"]]}},
        "admins": "Boss"
    }"#;

    fn groups() -> SystemDef {
        SystemDef::from_json_str(GROUPS, "groups").unwrap()
    }

    fn schema_errors(text: &str) -> Vec<SchemaError> {
        match SystemDef::from_json_str(text, "bad") {
            Err(crate::Error::Schema(SchemaErrors(es))) => es,
            other => panic!("expected schema errors, got {other:?}"),
        }
    }

    #[test]
    fn fresh_creates_a_derived_atom() {
        let sys = groups();
        let s = sys.step_ground(sys.init(), &GroundCommand::new("create", &["bob"])).unwrap();
        assert!(s.has_atom("G", "grp(bob)"));
        assert!(s.has_tuple("Member", &[sym("bob"), sym("grp(bob)")]));
        assert_eq!(sys.allowed(&s).len(), 1);
    }

    #[test]
    fn false_guard_leaves_state_unchanged() {
        let sys = groups();
        let init = sys.init().clone();
        let s = sys.step_ground(&init, &GroundCommand::new("promote", &["bob", "bob"])).unwrap();
        assert_eq!(s, init);
        let s = sys.step_ground(&init, &GroundCommand::new("promote", &["alice", "bob"])).unwrap();
        assert!(sys.is_admin(&s, "bob"));
    }

    #[test]
    fn entails_checks_sorts_and_arity() {
        let sys = groups();
        let init = sys.init();
        assert!(sys.entails(init, "boss", &[Atom::new("U", "alice")]).unwrap());
        assert!(matches!(
            sys.entails(init, "boss", &[Atom::new("G", "alice")]),
            Err(EvalError::SortMismatch { .. })
        ));
        assert!(matches!(sys.entails(init, "boss", &[]), Err(EvalError::ArityMismatch { .. })));
        assert!(matches!(sys.entails(init, "nope", &[]), Err(EvalError::UnknownQuery(_))));
    }

    #[test]
    fn theory_covers_every_instance() {
        let sys = groups();
        let th = sys.theory(sys.init());
        // in(u, g) has no instances without groups; boss has one per user.
        assert_eq!(th.len(), 2);
        assert!(th[&GroundQuery::new("boss", &["alice"])]);
        assert!(!th[&GroundQuery::new("boss", &["bob"])]);
    }

    #[test]
    fn run_trace_returns_intermediates() {
        let sys = groups();
        let cmds = [GroundCommand::new("create", &["alice"]), GroundCommand::new("create", &["bob"])];
        let (end, mids) = sys.run_trace(sys.init(), &cmds).unwrap();
        assert_eq!(mids.len(), 2);
        assert_eq!(mids[1], end);
        assert_eq!(end.universe_len("G"), 2);
    }

    #[test]
    fn validation_reports_each_problem() {
        let es = schema_errors(
            r#"{"sorts": ["U", "U"], "relations": {"R": ["X"]},
                "queries": [{"name": "q", "params": [["u", "U"]], "body": {"member": ["R", "u", "u"]}}],
                "commands": [{"name": "c", "params": [], "actor": 3, "effects": [{"add": ["S", "v"]}]}],
                "admins": "Nope"}"#,
        );
        let has = |f: fn(&SchemaError) -> bool| es.iter().any(f);
        assert!(has(|e| matches!(e, SchemaError::DuplicateName { kind: "sort", .. })));
        assert!(has(|e| matches!(e, SchemaError::UnknownSort { .. })));
        assert!(has(|e| matches!(e, SchemaError::ArityMismatch { .. })));
        assert!(has(|e| matches!(e, SchemaError::BadActor { index: 3, .. })));
        assert!(has(|e| matches!(e, SchemaError::UnknownRelation { .. })));
        assert!(has(|e| matches!(e, SchemaError::BadAdmins(_))));
    }

    #[test]
    fn init_tuples_need_declared_atoms() {
        let es = schema_errors(
            r#"{"sorts": ["U"], "relations": {"R": ["U"]}, "init": {"universes": {"U": []}, "relations": {"R": [["ghost"]]}}}"#,
        );
        assert!(matches!(&es[0], SchemaError::InvalidInit(m) if m.contains("ghost")));
    }

    #[test]
    fn negated_requests_warn() {
        let sys = SystemDef::from_json_str(
            r#"{"sorts": ["U"], "relations": {"Ban": ["U"]},
                "queries": [{"name": "ok", "params": [["u", "U"]], "request": true, "body": {"not": {"member": ["Ban", "u"]}}}]}"#,
            "neg",
        )
        .unwrap();
        assert_eq!(sys.warnings().len(), 1);
    }

    #[test]
    fn raw_round_trip_is_stable() {
        let sys = groups();
        let again = validate_named(&sys.to_raw(), "groups").unwrap();
        assert_eq!(again.to_canonical_json(), sys.to_canonical_json());
    }
}
