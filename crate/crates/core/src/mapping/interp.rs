use crate::atom::Sym;
use crate::error::{EvalError, MappingError};
use crate::formula::{eval, eval_term, eval_terms, Env, Formula, Interp};
use crate::state::State;
use crate::system::{eval_query, GroundCommand, GroundQuery, SystemDef};

use super::{Binding, Cond, CostCounter, Decision, Emit, MappedCommand, MappingDef, MatchClause, Pat, Step};

/// Target-state view that charges every consultation to a counter.
struct Metered<'a> {
    sys: &'a SystemDef,
    state: &'a State,
    cost: &'a mut CostCounter,
}

impl Interp for Metered<'_> {
    fn member(&mut self, rel: &str, tuple: &[Sym]) -> bool {
        self.cost.state_items_inspected += 1;
        self.state.has_tuple(rel, tuple)
    }

    fn query(&mut self, name: &str, args: &[Sym]) -> bool {
        self.cost.queries_consulted += 1;
        let q = self.sys.query(name).expect("decider queries are validated");
        eval_query(q, self.state, args)
    }

    fn universe(&mut self, sort: &str) -> Vec<Sym> {
        let atoms: Vec<Sym> = universe(self.state, sort);
        self.cost.bindings_enumerated += atoms.len() as u64;
        atoms
    }
}

fn universe(s: &State, sort: &str) -> Vec<Sym> {
    s.universe(sort).map(|u| u.iter().cloned().collect()).unwrap_or_default()
}

fn bind_pat(p: &Pat, atom: &Sym, env: &mut Env) -> bool {
    match p {
        Pat::Bind(v) => {
            env.bind(v.clone(), atom.clone());
            true
        }
        Pat::Term(t) => eval_term(t, env) == *atom,
    }
}

fn bind_tuple(pats: &[Pat], tuple: &[Sym], env: &mut Env) -> bool {
    pats.iter().zip(tuple).all(|(p, a)| bind_pat(p, a, env))
}

fn run_matches(clauses: &[MatchClause], s: &State, env: &mut Env, emit: &mut dyn FnMut(&Env)) {
    let Some((first, rest)) = clauses.split_first() else {
        emit(env);
        return;
    };
    let mark = env.len();
    match first {
        MatchClause::Sort { sort, pat } => {
            for a in universe(s, sort) {
                if bind_pat(pat, &a, env) {
                    run_matches(rest, s, env, emit);
                }
                env.truncate(mark);
            }
        }
        MatchClause::Relation { rel, pats } => {
            if let Some(tuples) = s.relation(rel) {
                for t in tuples {
                    if bind_tuple(pats, t, env) {
                        run_matches(rest, s, env, emit);
                    }
                    env.truncate(mark);
                }
            }
        }
    }
}

pub(super) fn map_state(m: &MappingDef, s: &State) -> State {
    let tgt = &*m.target;
    let mut out = tgt.empty_state();
    for rule in &m.state_rules {
        run_matches(&rule.matches, s, &mut Env::new(), &mut |env| {
            for e in &rule.emits {
                match e {
                    Emit::Atom { sort, term } => {
                        out.insert_atom(sort, eval_term(term, env));
                    }
                    Emit::Tuple { rel, terms } => {
                        let tuple = eval_terms(terms, env);
                        let cols = tgt.relation_sorts(rel).expect("emitted relations are validated");
                        for (a, sort) in tuple.iter().zip(cols) {
                            out.insert_atom(sort, a.clone());
                        }
                        out.insert_tuple(rel, tuple);
                    }
                }
            }
        });
    }
    out
}

struct Run<'a> {
    sys: &'a SystemDef,
    state: &'a State,
    cost: CostCounter,
    out: Vec<GroundCommand>,
}

impl Run<'_> {
    fn steps(&mut self, steps: &[Step], env: &mut Env) {
        for s in steps {
            self.step(s, env);
        }
    }

    fn step(&mut self, step: &Step, env: &mut Env) {
        let mark = env.len();
        match step {
            Step::Emit { command, args } => {
                self.cost.commands_emitted += 1;
                self.out.push(GroundCommand { command: command.clone(), args: eval_terms(args, env) });
            }
            Step::Foreach { binding, body } => match binding {
                Binding::Relation { rel, pats } => {
                    let tuples: Vec<Vec<Sym>> =
                        self.state.relation(rel).map(|r| r.iter().cloned().collect()).unwrap_or_default();
                    for t in tuples {
                        self.cost.state_items_inspected += 1;
                        if bind_tuple(pats, &t, env) {
                            self.cost.bindings_enumerated += 1;
                            self.steps(body, env);
                        }
                        env.truncate(mark);
                    }
                }
                Binding::Sort { sort, pat } => {
                    for a in universe(self.state, sort) {
                        self.cost.state_items_inspected += 1;
                        if bind_pat(pat, &a, env) {
                            self.cost.bindings_enumerated += 1;
                            self.steps(body, env);
                        }
                        env.truncate(mark);
                    }
                }
                Binding::Query { name, pats } => {
                    let q = self.sys.query(name).expect("foreach queries are validated");
                    let sorts = q.param_sorts();
                    let mut args = Vec::with_capacity(pats.len());
                    self.foreach_query(name, pats, &sorts, &mut args, body, env);
                }
            },
            Step::When { cond, then, otherwise } => {
                let f: &Formula = match cond {
                    Cond::Holds(f) | Cond::State(f) => f,
                };
                let hit = eval(f, env, &mut Metered { sys: self.sys, state: self.state, cost: &mut self.cost });
                self.steps(if hit { then } else { otherwise }, env);
            }
        }
        env.truncate(mark);
    }

    fn foreach_query(
        &mut self,
        name: &str,
        pats: &[Pat],
        sorts: &[Sym],
        args: &mut Vec<Sym>,
        body: &[Step],
        env: &mut Env,
    ) {
        let i = args.len();
        if i == pats.len() {
            self.cost.bindings_enumerated += 1;
            self.cost.queries_consulted += 1;
            let q = self.sys.query(name).expect("validated");
            if eval_query(q, self.state, args) {
                self.steps(body, env);
            }
            return;
        }
        match &pats[i] {
            Pat::Bind(v) => {
                for a in universe(self.state, &sorts[i]) {
                    env.bind(v.clone(), a.clone());
                    args.push(a);
                    self.foreach_query(name, pats, sorts, args, body, env);
                    args.pop();
                    env.pop();
                }
            }
            Pat::Term(t) => {
                args.push(eval_term(t, env));
                self.foreach_query(name, pats, sorts, args, body, env);
                args.pop();
            }
        }
    }
}

pub(super) fn map_command(m: &MappingDef, cmd: &GroundCommand, t: &State) -> Result<MappedCommand, MappingError> {
    let rule = m
        .command_rule(&cmd.command)
        .ok_or_else(|| MappingError::MissingCommandRule(cmd.command.to_string()))?;
    if rule.params.len() != cmd.args.len() {
        return Err(EvalError::ArityMismatch {
            name: cmd.command.to_string(),
            expected: rule.params.len(),
            found: cmd.args.len(),
        }
        .into());
    }
    let mut env = Env::new();
    for (p, a) in rule.params.iter().zip(&cmd.args) {
        env.bind(p.clone(), a.clone());
    }
    let mut run = Run { sys: &m.target, state: t, cost: CostCounter::default(), out: Vec::new() };
    run.steps(&rule.body, &mut env);
    Ok(MappedCommand { commands: run.out, cost: run.cost, dependence: rule.dependence() })
}

pub(super) fn decide_query(m: &MappingDef, q: &GroundQuery, t: &State) -> Result<Decision, MappingError> {
    let rule = m.query_rule(&q.query).ok_or_else(|| MappingError::MissingQueryRule(q.query.to_string()))?;
    let def = m.source.query(&q.query).ok_or_else(|| EvalError::UnknownQuery(q.query.to_string()))?;
    if def.params.len() != q.args.len() {
        return Err(EvalError::ArityMismatch {
            name: q.query.to_string(),
            expected: def.params.len(),
            found: q.args.len(),
        }
        .into());
    }
    let mut env = Env::new();
    for ((p, a), name) in def.params.iter().zip(&q.args).zip(&rule.params) {
        let sort = m.target_sort(&p.sort);
        if m.target.has_sort(&sort) && !t.has_atom(&sort, a) {
            return Err(MappingError::UntranslatableAtom { sort: sort.to_string(), atom: a.to_string() });
        }
        env.bind(name.clone(), a.clone());
    }
    let mut cost = CostCounter::default();
    let value = eval(rule.formula(), &mut env, &mut Metered { sys: &m.target, state: t, cost: &mut cost });
    Ok(Decision { value, cost, dependence: rule.dependence() })
}
