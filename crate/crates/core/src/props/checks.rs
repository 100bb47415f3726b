use std::cell::OnceCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::atom::Sym;
use crate::error::{CheckError, MappingError};
use crate::explore::{self, Exploration};
use crate::lattice::PropertyTag as T;
use crate::lattice::PropertyTag;
use crate::mapping::{CostCounter, MappedCommand, MappingDef, QueryDependence, SimulationDef};
use crate::state::State;
use crate::system::{GroundCommand, GroundQuery, SystemDef, Theory};

use super::result::{CheckResult, Counterexample, CounterexampleKind as K, Evidence, Sample};
use super::sampling::{scaling_series, SeriesPair, FIT_LEVELS};

/// Shared inputs and lazily computed tables for one checking run.
pub(crate) struct Ctx<'a> {
    pub sim: &'a SimulationDef,
    pub ex: &'a Exploration,
    commands: Vec<GroundCommand>,
    outputs: OnceCell<Result<Vec<Vec<MappedCommand>>, MappingError>>,
    theories: OnceCell<Vec<Theory>>,
    series: OnceCell<Result<Vec<SeriesPair>, MappingError>>,
}

impl<'a> Ctx<'a> {
    pub fn new(sim: &'a SimulationDef, ex: &'a Exploration) -> Self {
        let commands = sim.mapping.source().ground_commands(&ex.source_domain());
        Ctx { sim, ex, commands, outputs: OnceCell::new(), theories: OnceCell::new(), series: OnceCell::new() }
    }

    fn m(&self) -> &MappingDef {
        &self.sim.mapping
    }

    fn bound(&self) -> explore::Bound {
        self.ex.bound
    }

    /// Command mapping of every source ground command on every explored
    /// target state, indexed `[command][state]`.
    fn outputs(&self) -> Result<&Vec<Vec<MappedCommand>>, MappingError> {
        self.outputs
            .get_or_init(|| {
                self.commands
                    .iter()
                    .map(|gc| self.ex.target_states.iter().map(|t| self.m().map_command(gc, t)).collect())
                    .collect()
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn theories(&self) -> &Vec<Theory> {
        self.theories
            .get_or_init(|| self.ex.target_states.iter().map(|t| self.m().target().theory(t)).collect())
    }

    fn series(&self) -> Result<&Vec<SeriesPair>, MappingError> {
        self.series.get_or_init(|| scaling_series(self.m())).as_ref().map_err(Clone::clone)
    }

    /// Groups of target-state indices with equal theories.
    fn theory_classes(&self) -> Vec<Vec<usize>> {
        let mut groups: HashMap<&Theory, Vec<usize>> = HashMap::new();
        for (i, th) in self.theories().iter().enumerate() {
            groups.entry(th).or_default().push(i);
        }
        let mut v: Vec<Vec<usize>> = groups.into_values().filter(|g| g.len() > 1).collect();
        v.sort();
        v
    }

    fn warn(&self, r: CheckResult) -> CheckResult {
        r.warn(self.ex.truncation_warning())
    }
}

fn trivial(tag: PropertyTag, b: explore::Bound) -> CheckResult {
    CheckResult::holds(tag, b, "weakest level: places no restriction")
}

pub(crate) fn check(ctx: &Ctx<'_>, tag: PropertyTag) -> CheckResult {
    let b = ctx.bound();
    match tag {
        T::SCs | T::SCq | T::SCa => check_sc(ctx, tag),
        T::SSl | T::SSp => check_ss(ctx, tag),
        T::CDi | T::CDt => check_cd(ctx, tag),
        T::CCc | T::CCl => check_cc(ctx, tag),
        T::CS1 | T::CSc => check_cs(ctx, tag),
        T::CT1 => check_ct1(ctx),
        T::CTq | T::CTa | T::CTs => check_ct(ctx, tag),
        T::CATop | T::CAa => check_ca(ctx, tag),
        T::QD1 | T::QDi | T::QDt => check_qd(ctx, tag),
        T::QCc => check_qc(ctx),
        T::QPf | T::QPa | T::QPw => check_qp(ctx, tag),
        T::RFwd => explore::check_forward(ctx.sim, ctx.ex),
        T::RBi => explore::check_bidirectional(ctx.sim, ctx.ex),
        T::SSInf | T::CDs | T::CCInf | T::CSInf | T::QDs | T::QCInf => trivial(tag, b),
    }
}

// ---------------------------------------------------------------------------
// Correspondence
// ---------------------------------------------------------------------------

/// Names the first set or relation that differs between a source state and
/// its image.
pub(crate) fn structural_difference(m: &MappingDef, s: &State, t: &State) -> String {
    for (sort, atoms) in s.universes() {
        let ts = m.target_sort(sort);
        if t.universe(&ts) != Some(atoms) && !(atoms.is_empty() && t.universe(&ts).is_none()) {
            return format!("set {sort} is not reproduced verbatim by target set {ts}");
        }
    }
    for (rel, tuples) in s.relations() {
        if t.relation(rel) != Some(tuples) && !(tuples.is_empty() && t.relation(rel).is_none()) {
            return format!("relation {rel} is not reproduced verbatim in the target");
        }
    }
    "states differ".to_string()
}

fn check_sc(ctx: &Ctx<'_>, level: PropertyTag) -> CheckResult {
    let (m, b) = (ctx.m(), ctx.bound());
    for s in &ctx.ex.source.states {
        let t = match m.map_state(s) {
            Ok(t) => t,
            Err(e) => return CheckResult::error(level, b, e.to_string()),
        };
        if m.corresponds(level, s, &t) {
            continue;
        }
        let (query, message) = if level == T::SCs {
            (None, structural_difference(m, s, &t))
        } else {
            let q = m.disagreement(s, &t, level == T::SCa);
            let msg = match &q {
                Some(q) => format!("source state and its image disagree on {q}"),
                None => "source state and its image disagree".to_string(),
            };
            (q, msg)
        };
        let cx = Counterexample {
            kind: K::Correspondence,
            correspondence: Some(level),
            source_state: Some(s.clone()),
            target_state: Some(t),
            query,
            message,
            ..Default::default()
        };
        return CheckResult::fails(level, b, cx).with_cases(ctx.ex.source.len() as u64);
    }
    ctx.warn(
        CheckResult::holds(
            level,
            b,
            format!("every explored source state corresponds to its image ({} states)", ctx.ex.source.len()),
        )
        .with_cases(ctx.ex.source.len() as u64),
    )
}

// ---------------------------------------------------------------------------
// State size
// ---------------------------------------------------------------------------

struct SizeSample {
    level: usize,
    source: State,
    size: usize,
    image: usize,
}

fn check_ss(ctx: &Ctx<'_>, level: PropertyTag) -> CheckResult {
    let (m, b) = (ctx.m(), ctx.bound());
    let series = match ctx.series() {
        Ok(s) => s,
        Err(e) => return CheckResult::error(level, b, e.to_string()),
    };
    let mut samples = Vec::new();
    let explored = ctx.ex.source.states.iter().map(|s| (0, s));
    for (lvl, s) in explored.chain(series.iter().map(|p| (p.level, &p.source))) {
        let image = match m.map_state(s) {
            Ok(t) => t.size(),
            Err(e) => return CheckResult::error(level, b, e.to_string()),
        };
        if s.size() > 0 {
            samples.push(SizeSample { level: lvl, source: s.clone(), size: s.size(), image });
        }
    }
    let sizes: BTreeSet<usize> = samples.iter().map(|x| x.size).collect();
    let threshold = sizes.iter().next().copied().unwrap_or(1);
    let degree = m.static_degree();
    let mut fitted = BTreeMap::new();
    fitted.insert("s".to_string(), threshold as f64);
    fitted.insert("static_degree".to_string(), degree as f64);

    let mut by_size: BTreeMap<usize, usize> = BTreeMap::new();
    for x in &samples {
        let e = by_size.entry(x.size).or_default();
        *e = (*e).max(x.image);
    }
    let ev_samples: Vec<Sample> = by_size
        .iter()
        .map(|(&size, &image)| Sample { level: 0, size, measured: image as f64 })
        .collect();

    if level == T::SSp {
        let fit: Vec<usize> = sizes.iter().copied().filter(|&s| s >= 2).take(2).collect();
        let k_fit = samples
            .iter()
            .filter(|x| fit.contains(&x.size) && x.image > 0)
            .map(|x| (x.image as f64).ln() / (x.size as f64).ln())
            .fold(0.0, f64::max);
        fitted.insert("k_fit".to_string(), k_fit);
        fitted.insert("k".to_string(), degree.max(1) as f64);
        let evidence = Evidence { method: "image size versus source size".into(), samples: ev_samples, fitted };
        let mut r = CheckResult::holds(
            level,
            b,
            format!(
                "state rules have static degree {degree}: |σ(γ)| = O(|γ|^{})",
                degree.max(1)
            ),
        );
        r.evidence = Some(evidence);
        return r.with_cases(samples.len() as u64);
    }

    let fit: Vec<usize> = sizes.iter().copied().take(2).collect();
    let c = samples
        .iter()
        .filter(|x| fit.contains(&x.size))
        .map(|x| x.image as f64 / x.size as f64)
        .fold(0.0, f64::max);
    fitted.insert("c".to_string(), c);
    let evidence = Evidence { method: "image size versus source size".into(), samples: ev_samples, fitted };
    if degree <= 1 {
        let mut r = CheckResult::holds(
            level,
            b,
            format!("state rules have static degree {degree} (at most linear); fitted c = {c:.3}"),
        );
        r.evidence = Some(evidence);
        return r.with_cases(samples.len() as u64);
    }
    let violation = samples.iter().find(|x| x.image as f64 > c * x.size as f64 + 1e-9);
    match violation {
        None => CheckResult::evidence(
            level,
            b,
            true,
            format!("|σ(γ)| ≤ {c:.3}·|γ| on all {} samples (static degree {degree})", samples.len()),
            evidence,
            None,
        ),
        Some(x) => {
            let cx = Counterexample {
                kind: K::Storage,
                source_state: Some(x.source.clone()),
                measured: Some(x.image as f64),
                allowed: Some(c * x.size as f64),
                message: format!(
                    "image of a size-{} state has size {} > {c:.3}·{} (level {})",
                    x.size, x.image, x.size, x.level
                ),
                ..Default::default()
            };
            CheckResult::evidence(level, b, false, cx.message.clone(), evidence, Some(cx))
        }
    }
    .with_cases(samples.len() as u64)
}

// ---------------------------------------------------------------------------
// Command dependence, stuttering
// ---------------------------------------------------------------------------

fn check_cd(ctx: &Ctx<'_>, level: PropertyTag) -> CheckResult {
    let (m, b) = (ctx.m(), ctx.bound());
    let outputs = match ctx.outputs() {
        Ok(o) => o,
        Err(e) => return CheckResult::error(level, b, e.to_string()),
    };
    let syntactic = m.command_dependence();
    let groups: Vec<Vec<usize>> = if level == T::CDi {
        vec![(0..ctx.ex.target_states.len()).collect()]
    } else {
        ctx.theory_classes()
    };
    let mut cases = 0u64;
    for (ci, gc) in ctx.commands.iter().enumerate() {
        for g in &groups {
            let first = g[0];
            for &j in &g[1..] {
                cases += 1;
                if outputs[ci][j].commands != outputs[ci][first].commands {
                    let cx = Counterexample {
                        kind: K::CommandOutputs,
                        source_command: Some(gc.clone()),
                        target_state: Some(ctx.ex.target_states[first].clone()),
                        other_target_state: Some(ctx.ex.target_states[j].clone()),
                        target_commands: outputs[ci][first].commands.clone(),
                        other_target_commands: outputs[ci][j].commands.clone(),
                        message: format!(
                            "{gc} maps differently on two {}target states (rules classified {})",
                            if level == T::CDt { "theory-equal " } else { "" },
                            syntactic.tag()
                        ),
                        ..Default::default()
                    };
                    return CheckResult::fails(level, b, cx).with_cases(cases);
                }
            }
        }
    }
    let note = if syntactic.tag() <= level {
        format!("rules are syntactically {}", syntactic.tag())
    } else {
        format!("rules are syntactically {} but outputs agree at this bound", syntactic.tag())
    };
    let n = ctx.ex.target_states.len();
    let scope = if level == T::CDi {
        format!("all {n} target states")
    } else {
        format!("each theory-equal group of the {n} target states")
    };
    ctx.warn(
        CheckResult::holds(level, b, format!("identical command sequences across {scope}; {note}"))
        .with_cases(cases),
    )
}

fn check_cs(ctx: &Ctx<'_>, level: PropertyTag) -> CheckResult {
    let b = ctx.bound();
    let outputs = match ctx.outputs() {
        Ok(o) => o,
        Err(e) => return CheckResult::error(level, b, e.to_string()),
    };
    let mut longest = 0;
    let mut cost = CostCounter::default();
    for (ci, gc) in ctx.commands.iter().enumerate() {
        for (ti, out) in outputs[ci].iter().enumerate() {
            cost.add(&out.cost);
            longest = longest.max(out.commands.len());
            if level == T::CS1 && out.commands.len() > 1 {
                let cx = Counterexample {
                    kind: K::Stutter,
                    source_command: Some(gc.clone()),
                    target_state: Some(ctx.ex.target_states[ti].clone()),
                    target_commands: out.commands.clone(),
                    measured: Some(out.commands.len() as f64),
                    allowed: Some(1.0),
                    message: format!("{gc} is simulated by {} target commands", out.commands.len()),
                    ..Default::default()
                };
                return CheckResult::fails(level, b, cx);
            }
        }
    }
    let cases = (ctx.commands.len() * ctx.ex.target_states.len()) as u64;
    let detail = if level == T::CS1 {
        format!("every mapped trace has at most one command (longest {longest})")
    } else {
        format!("every mapped trace has at most c = {longest} commands")
    };
    ctx.warn(CheckResult::holds(level, b, detail).with_cases(cases).with_cost(cost))
}

// ---------------------------------------------------------------------------
// Trace structure
// ---------------------------------------------------------------------------

/// [T0, T1, ..., Tm] for a command sequence.
pub(crate) fn trace_states(sys: &SystemDef, t0: &State, cmds: &[GroundCommand]) -> Vec<State> {
    let (_, mut states) = sys.run_trace(t0, cmds).expect("mapped commands are declared");
    states.insert(0, t0.clone());
    states
}

/// Whether the intermediate states admit a lock-step split.
pub(crate) fn lock_step_ok(sim: &SimulationDef, s0: &State, s1: &State, trace: &[State]) -> bool {
    let m = trace.len() - 1;
    if m <= 1 {
        return true;
    }
    let inner = &trace[1..m];
    let before: Vec<bool> = inner.iter().map(|t| sim.corresponds(s0, t)).collect();
    let after: Vec<bool> = inner.iter().map(|t| sim.corresponds(s1, t)).collect();
    (0..=inner.len()).any(|k| before[..k].iter().all(|&x| x) && after[k..].iter().all(|&x| x))
}

fn check_ct1(ctx: &Ctx<'_>) -> CheckResult {
    let (sim, m, b) = (ctx.sim, ctx.m(), ctx.bound());
    let (src, tgt) = (m.source(), m.target());
    let mut cases = 0u64;
    for p in &ctx.ex.pairs {
        if !sim.corresponds(&p.source, &p.target) {
            continue;
        }
        for gc in src.ground_commands(&p.source) {
            cases += 1;
            let out = match m.map_command(&gc, &p.target) {
                Ok(o) => o,
                Err(e) => return CheckResult::error(T::CT1, b, e.to_string()),
            };
            if out.commands.len() <= 1 {
                continue;
            }
            let s1 = src.step_ground(&p.source, &gc).expect("well-formed");
            let trace = trace_states(tgt, &p.target, &out.commands);
            if !lock_step_ok(sim, &p.source, &s1, &trace) {
                let cx = Counterexample {
                    kind: K::LockStep,
                    correspondence: Some(sim.correspondence),
                    source_state: Some(p.source.clone()),
                    target_state: Some(p.target.clone()),
                    source_command: Some(gc.clone()),
                    target_commands: out.commands,
                    message: format!(
                        "intermediate states of the trace for {gc} cannot be split into start- then end-corresponding runs"
                    ),
                    ..Default::default()
                };
                return CheckResult::fails(T::CT1, b, cx).with_cases(cases);
            }
        }
    }
    ctx.warn(
        CheckResult::holds(
            T::CT1,
            b,
            format!("every intermediate trace state corresponds to the start or end source state ({})", sim.correspondence),
        )
        .with_cases(cases),
    )
}

fn union_domain(states: &[State]) -> State {
    let mut out = State::new();
    for s in states {
        for (sort, atoms) in s.universes() {
            out.ensure_sort(sort);
            for a in atoms {
                out.insert_atom(sort, a.clone());
            }
        }
    }
    out
}

/// First (index, query) at which the trace is not monotonic.
pub(crate) fn monotonic_violation(
    sys: &SystemDef,
    trace: &[State],
    requests_only: bool,
) -> Option<(usize, GroundQuery)> {
    let m = trace.len() - 1;
    if m <= 1 {
        return None;
    }
    let instances = sys.query_instances(&union_domain(trace), requests_only);
    for g in instances {
        let v: Vec<bool> = trace.iter().map(|t| sys.entails_ground(t, &g).expect("declared")).collect();
        for i in 1..m {
            if v[i] != v[i - 1] && v[i] != v[m] {
                return Some((i, g));
            }
        }
    }
    None
}

/// First intermediate index whose Allowed set is contained in neither the
/// start's nor the end's.
pub(crate) fn contamination(sys: &SystemDef, trace: &[State]) -> Option<usize> {
    let m = trace.len() - 1;
    if m <= 1 {
        return None;
    }
    let start = sys.allowed(&trace[0]);
    let end = sys.allowed(&trace[m]);
    (1..m).find(|&i| {
        let a = sys.allowed(&trace[i]);
        !a.is_subset(&start) && !a.is_subset(&end)
    })
}

fn check_ct(ctx: &Ctx<'_>, level: PropertyTag) -> CheckResult {
    let (m, b) = (ctx.m(), ctx.bound());
    let tgt = m.target();
    let outputs = match ctx.outputs() {
        Ok(o) => o,
        Err(e) => return CheckResult::error(level, b, e.to_string()),
    };
    let mut cases = 0u64;
    for (ci, gc) in ctx.commands.iter().enumerate() {
        for (ti, t) in ctx.ex.target_states.iter().enumerate() {
            let out = &outputs[ci][ti];
            cases += 1;
            if out.commands.len() <= 1 {
                continue;
            }
            let trace = trace_states(tgt, t, &out.commands);
            let found = match level {
                T::CTs => contamination(tgt, &trace).map(|i| (i, None)),
                _ => monotonic_violation(tgt, &trace, level == T::CTa).map(|(i, g)| (i, Some(g))),
            };
            if let Some((i, g)) = found {
                let message = match &g {
                    None => format!(
                        "after step {i} of the trace for {gc} the allowed set is contained in neither the start's nor the end's"
                    ),
                    Some(g) => format!("step {i} of the trace for {gc} flips {g} against both its predecessor and the final state"),
                };
                let cx = Counterexample {
                    kind: if level == T::CTs { K::Contaminating } else { K::Monotonic },
                    source_command: Some(gc.clone()),
                    target_state: Some(t.clone()),
                    target_commands: out.commands.clone(),
                    target_query: g,
                    witness_states: vec![trace[i].clone()],
                    index: Some(i),
                    message,
                    ..Default::default()
                };
                return CheckResult::fails(level, b, cx).with_cases(cases);
            }
        }
    }
    let what = match level {
        T::CTs => "no intermediate state allows more than the start or the end state",
        T::CTa => "every intermediate request value agrees with its predecessor or the final state",
        _ => "every intermediate query value agrees with its predecessor or the final state",
    };
    ctx.warn(CheckResult::holds(level, b, what).with_cases(cases))
}

// ---------------------------------------------------------------------------
// Actors
// ---------------------------------------------------------------------------

fn admin_atoms(sys: &SystemDef, states: &[&State]) -> BTreeSet<Sym> {
    let Some(rel) = sys.admins() else { return BTreeSet::new() };
    states
        .iter()
        .filter_map(|s| s.relation(rel))
        .flat_map(|r| r.iter().filter_map(|t| t.first().cloned()))
        .collect()
}

/// The administrator set: every atom named by either system's admin
/// relation in any explored state.
pub(crate) fn administrators(m: &MappingDef, ex: &Exploration) -> BTreeSet<Sym> {
    let mut src_states: Vec<&State> = ex.source.states.iter().collect();
    src_states.extend(ex.pairs.iter().map(|p| &p.source));
    let tgt_states: Vec<&State> = ex.target_states.iter().collect();
    let mut a = admin_atoms(m.source(), &src_states);
    a.extend(admin_atoms(m.target(), &tgt_states));
    a
}

pub(crate) fn actors_declared(m: &MappingDef) -> Result<(), CheckError> {
    for c in m.source().commands().iter().chain(m.target().commands()) {
        if c.actor.is_none() {
            return Err(CheckError::NoActorDeclared(c.name.to_string()));
        }
    }
    Ok(())
}

/// Index of the first emitted command violating the actor level.
pub(crate) fn actor_violation(
    m: &MappingDef,
    level: PropertyTag,
    gc: &GroundCommand,
    emitted: &[GroundCommand],
    admins: &BTreeSet<Sym>,
) -> Option<usize> {
    let a = m.source().actor_of(gc);
    emitted.iter().position(|tc| {
        let b = m.target().actor_of(tc);
        match level {
            T::CATop => a != b,
            _ => b.is_some_and(|b| admins.contains(b)) && !a.is_some_and(|a| admins.contains(a)),
        }
    })
}

fn check_ca(ctx: &Ctx<'_>, level: PropertyTag) -> CheckResult {
    let (m, b) = (ctx.m(), ctx.bound());
    if let Err(e) = actors_declared(m) {
        return CheckResult::inapplicable(level, b, e.to_string());
    }
    let outputs = match ctx.outputs() {
        Ok(o) => o,
        Err(e) => return CheckResult::error(level, b, e.to_string()),
    };
    let admins = administrators(m, ctx.ex);
    let mut cases = 0u64;
    for (ci, gc) in ctx.commands.iter().enumerate() {
        for (ti, out) in outputs[ci].iter().enumerate() {
            cases += 1;
            if let Some(k) = actor_violation(m, level, gc, &out.commands, &admins) {
                let cx = Counterexample {
                    kind: K::Actor,
                    source_command: Some(gc.clone()),
                    target_state: Some(ctx.ex.target_states[ti].clone()),
                    target_commands: out.commands.clone(),
                    index: Some(k),
                    admins: (level == T::CAa).then(|| admins.iter().cloned().collect()),
                    message: if level == T::CATop {
                        format!("{} does not run under the actor of {gc}", out.commands[k])
                    } else {
                        format!("{} runs as an administrator although {gc} does not", out.commands[k])
                    },
                    ..Default::default()
                };
                return CheckResult::fails(level, b, cx).with_cases(cases);
            }
        }
    }
    let detail = if level == T::CATop {
        "every emitted command runs under the source command's actor".to_string()
    } else {
        format!("no emitted command escalates to an administrator (administrators: {})", admins.len())
    };
    ctx.warn(CheckResult::holds(level, b, detail).with_cases(cases))
}

// ---------------------------------------------------------------------------
// Query dependence
// ---------------------------------------------------------------------------

/// Instances, their decisions per explored target state (`None` where an
/// argument has no image in that state) and the total cost.
type Decisions = (Vec<GroundQuery>, Vec<Vec<Option<bool>>>, CostCounter);

fn decisions(ctx: &Ctx<'_>) -> Result<Decisions, MappingError> {
    let m = ctx.m();
    let instances = m.source().query_instances(&ctx.ex.source_domain(), false);
    let mut cost = CostCounter::default();
    let mut table = Vec::new();
    for q in &instances {
        let mut row = Vec::new();
        for t in &ctx.ex.target_states {
            match m.decide_query(q, t) {
                Ok(d) => {
                    cost.add(&d.cost);
                    row.push(Some(d.value));
                }
                Err(MappingError::UntranslatableAtom { .. }) => row.push(None),
                Err(e) => return Err(e),
            }
        }
        table.push(row);
    }
    Ok((instances, table, cost))
}

/// Candidate target ground queries for the unitary search.
pub(crate) fn unitary_candidates(sys: &SystemDef, states: &[State]) -> Vec<GroundQuery> {
    sys.query_instances(&union_domain(states), false)
}

fn check_qd(ctx: &Ctx<'_>, level: PropertyTag) -> CheckResult {
    let (m, b) = (ctx.m(), ctx.bound());
    let syntactic = m.query_dependence();
    if level == T::QDi && syntactic <= QueryDependence::Formula {
        return CheckResult::holds(
            level,
            b,
            format!("every decider is a fixed boolean expression over target queries (syntactically {})", syntactic.tag()),
        );
    }
    let (instances, table, cost) = match decisions(ctx) {
        Ok(x) => x,
        Err(e) => return CheckResult::error(level, b, e.to_string()),
    };
    let states = &ctx.ex.target_states;
    let mut cases = 0u64;
    if level == T::QD1 {
        let tgt = m.target();
        let candidates = unitary_candidates(tgt, states);
        let truth: Vec<Vec<bool>> = candidates
            .iter()
            .map(|g| states.iter().map(|t| tgt.entails_ground(t, g).expect("declared")).collect())
            .collect();
        for (qi, q) in instances.iter().enumerate() {
            let row = &table[qi];
            let mut witnesses: BTreeSet<usize> = BTreeSet::new();
            let mut matched = false;
            for tv in &truth {
                cases += 1;
                match (0..states.len()).find(|&j| row[j].is_some_and(|d| d != tv[j])) {
                    None => {
                        matched = true;
                        break;
                    }
                    Some(j) => {
                        witnesses.insert(j);
                    }
                }
            }
            if !matched {
                let cx = Counterexample {
                    kind: K::UnitaryDecider,
                    query: Some(q.clone()),
                    witness_states: witnesses.iter().map(|&j| states[j].clone()).collect(),
                    message: format!(
                        "no single target query reproduces the decisions for {q} on {} witness states",
                        witnesses.len()
                    ),
                    ..Default::default()
                };
                return CheckResult::fails(level, b, cx).with_cases(cases).with_cost(cost);
            }
        }
        return ctx.warn(
            CheckResult::holds(
                level,
                b,
                format!(
                    "each source query instance is decided by one target query on all explored states (syntactically {})",
                    syntactic.tag()
                ),
            )
            .with_cases(cases)
            .with_cost(cost),
        );
    }
    // QDt, and QDi for deciders outside the formula class.
    for g in ctx.theory_classes() {
        for (qi, q) in instances.iter().enumerate() {
            let row = &table[qi];
            let defined: Vec<usize> = g.iter().copied().filter(|&j| row[j].is_some()).collect();
            for w in defined.windows(2) {
                cases += 1;
                if row[w[0]] != row[w[1]] {
                    let cx = Counterexample {
                        kind: K::QueryDecisions,
                        query: Some(q.clone()),
                        target_state: Some(states[w[0]].clone()),
                        other_target_state: Some(states[w[1]].clone()),
                        message: format!("two target states with equal theories decide {q} differently"),
                        ..Default::default()
                    };
                    return CheckResult::fails(level, b, cx).with_cases(cases).with_cost(cost);
                }
            }
        }
    }
    ctx.warn(
        CheckResult::holds(
            level,
            b,
            format!(
                "decisions are a function of the target theory on all explored states (syntactically {})",
                syntactic.tag()
            ),
        )
        .with_cases(cases)
        .with_cost(cost),
    )
}

// ---------------------------------------------------------------------------
// Query preservation
// ---------------------------------------------------------------------------

/// Source query instances whose arguments are drawn from a target state's
/// universes through the sort map.
pub(crate) fn translated_instances(m: &MappingDef, t: &State, requests_only: bool) -> Vec<GroundQuery> {
    let mut out = Vec::new();
    for q in m.source().queries().iter().filter(|q| q.is_request || !requests_only) {
        let sorts: Vec<Sym> = q.params.iter().map(|p| m.target_sort(&p.sort)).collect();
        for args in crate::system::ground_tuples(t, &sorts) {
            out.push(GroundQuery { query: q.name.clone(), args });
        }
    }
    out
}

fn signature_matches(m: &MappingDef, src_name: &str, tgt_name: &str, need_request: bool) -> bool {
    let (Some(sq), Some(tq)) = (m.source().query(src_name), m.target().query(tgt_name)) else {
        return false;
    };
    let mapped: Vec<Sym> = sq.params.iter().map(|p| m.target_sort(&p.sort)).collect();
    mapped == tq.param_sorts() && (!need_request || tq.is_request)
}

/// The request transformation: explicit, or identity on same-named requests.
pub(crate) fn request_function(m: &MappingDef) -> Result<BTreeMap<Sym, Sym>, CheckError> {
    let mut f = BTreeMap::new();
    for r in m.source().requests() {
        let image = match m.request_transform().and_then(|f| f.get(&r.name)) {
            Some(t) => t.clone(),
            None if m.target().query(&r.name).is_some_and(|q| q.is_request) => r.name.clone(),
            None => return Err(CheckError::MissingRequestTransform(r.name.to_string())),
        };
        if !signature_matches(m, &r.name, &image, true) {
            return Err(CheckError::SignatureMismatch(r.name.to_string()));
        }
        f.insert(r.name.clone(), image);
    }
    Ok(f)
}

/// First weak-preservation violation in a target state: `(source instance,
/// target instance)`; the source side is absent for the second condition.
pub(crate) fn weak_violation(
    m: &MappingDef,
    f: &BTreeMap<Sym, Sym>,
    t: &State,
) -> Result<Option<(Option<GroundQuery>, GroundQuery)>, MappingError> {
    let tgt = m.target();
    let mut granted_by_source = BTreeSet::new();
    for q in translated_instances(m, t, true) {
        let image = GroundQuery { query: f[&q.query].clone(), args: q.args.clone() };
        if m.decide_query(&q, t)?.value {
            if !tgt.entails_ground(t, &image)? {
                return Ok(Some((Some(q), image)));
            }
            granted_by_source.insert(image);
        }
    }
    for g in tgt.allowed(t) {
        if !granted_by_source.contains(&g) {
            return Ok(Some((None, g)));
        }
    }
    Ok(None)
}

fn check_qp(ctx: &Ctx<'_>, level: PropertyTag) -> CheckResult {
    let (m, b) = (ctx.m(), ctx.bound());
    let tgt = m.target();
    let mut cases = 0u64;
    if level == T::QPw {
        let f = match request_function(m) {
            Ok(f) => f,
            Err(e) => return CheckResult::inapplicable(level, b, e.to_string()),
        };
        for t in &ctx.ex.target_states {
            cases += 1;
            match weak_violation(m, &f, t) {
                Err(e) => return CheckResult::error(level, b, e.to_string()),
                Ok(None) => {}
                Ok(Some((q, g))) => {
                    let message = match &q {
                        Some(q) => format!("decider grants {q} but the target denies {g} (condition 1)"),
                        None => format!("target grants {g}, which no granted source request maps to (condition 2)"),
                    };
                    let cx = Counterexample {
                        kind: K::Preservation,
                        target_state: Some(t.clone()),
                        query: q,
                        target_query: Some(g),
                        message,
                        ..Default::default()
                    };
                    return CheckResult::fails(level, b, cx).with_cases(cases);
                }
            }
        }
        let shown: Vec<String> = f.iter().map(|(k, v)| format!("{k}->{v}")).collect();
        return ctx.warn(
            CheckResult::holds(
                level,
                b,
                format!("both weak-preservation conditions hold with f = {{{}}}", shown.join(", ")),
            )
            .with_cases(cases),
        );
    }
    let requests_only = level == T::QPa;
    for q in m.source().queries().iter().filter(|q| q.is_request || !requests_only) {
        if !signature_matches(m, &q.name, &q.name, requests_only) {
            return CheckResult::inapplicable(level, b, CheckError::SignatureMismatch(q.name.to_string()).to_string());
        }
    }
    for t in &ctx.ex.target_states {
        for q in translated_instances(m, t, requests_only) {
            cases += 1;
            let d = match m.decide_query(&q, t) {
                Ok(d) => d.value,
                Err(e) => return CheckResult::error(level, b, e.to_string()),
            };
            let native = tgt.entails_ground(t, &q).expect("signature checked");
            if d != native {
                let cx = Counterexample {
                    kind: K::Preservation,
                    target_state: Some(t.clone()),
                    query: Some(q.clone()),
                    message: format!("decider answers {d} for {q} but the target's own query answers {native}"),
                    ..Default::default()
                };
                return CheckResult::fails(level, b, cx).with_cases(cases);
            }
        }
    }
    let what = if requests_only { "request" } else { "query" };
    ctx.warn(
        CheckResult::holds(level, b, format!("every source {what} is decided exactly as the identical target {what}"))
            .with_cases(cases),
    )
}

// ---------------------------------------------------------------------------
// Complexity
// ---------------------------------------------------------------------------

struct CostSample {
    level: usize,
    size: usize,
    cost: u64,
    source_command: Option<GroundCommand>,
    query: Option<GroundQuery>,
    target: State,
}

fn per_level(samples: &[CostSample]) -> Vec<Sample> {
    let mut by: BTreeMap<usize, (usize, u64)> = BTreeMap::new();
    for s in samples {
        let e = by.entry(s.level).or_default();
        e.0 = e.0.max(s.size);
        e.1 = e.1.max(s.cost);
    }
    by.into_iter()
        .map(|(level, (size, cost))| Sample { level, size, measured: cost as f64 })
        .collect()
}

fn fit_constant(samples: &[CostSample]) -> f64 {
    samples
        .iter()
        .filter(|s| FIT_LEVELS.contains(&s.level))
        .map(|s| s.cost as f64)
        .fold(0.0, f64::max)
}

fn fit_linear(samples: &[CostSample]) -> f64 {
    samples
        .iter()
        .filter(|s| FIT_LEVELS.contains(&s.level))
        .map(|s| s.cost as f64 / s.size.max(1) as f64)
        .fold(0.0, f64::max)
}

/// Allowed cost for a sample under a level with fitted constants.
pub(crate) fn allowed_cost(level: PropertyTag, c0: f64, c: f64, size: usize) -> f64 {
    match level {
        T::CCl => c0.max(c * size as f64),
        _ => c0,
    }
}

fn complexity_result(
    level: PropertyTag,
    b: explore::Bound,
    samples: Vec<CostSample>,
    what: &str,
) -> CheckResult {
    let c0 = fit_constant(&samples);
    let c = fit_linear(&samples);
    let mut fitted = BTreeMap::from([("c0".to_string(), c0)]);
    if level == T::CCl {
        fitted.insert("c".to_string(), c);
    }
    let evidence = Evidence {
        method: format!("{what} cost on a scaling series, constants fitted on levels {FIT_LEVELS:?}"),
        samples: per_level(&samples),
        fitted,
    };
    let n = samples.len() as u64;
    let violation = samples.iter().find(|s| s.cost as f64 > allowed_cost(level, c0, c, s.size) + 1e-9);
    let r = match violation {
        None => CheckResult::evidence(
            level,
            b,
            true,
            if level == T::CCl {
                format!("{what} cost ≤ max({c0}, {c:.3}·|γ|) on all {n} samples")
            } else {
                format!("{what} cost ≤ {c0} on all {n} samples")
            },
            evidence,
            None,
        ),
        Some(s) => {
            let allowed = allowed_cost(level, c0, c, s.size);
            let cx = Counterexample {
                kind: K::Cost,
                source_command: s.source_command.clone(),
                query: s.query.clone(),
                target_state: Some(s.target.clone()),
                measured: Some(s.cost as f64),
                allowed: Some(allowed),
                message: format!(
                    "{what} cost {} exceeds the fitted allowance {allowed:.3} at level {} (|γ| = {})",
                    s.cost, s.level, s.size
                ),
                ..Default::default()
            };
            CheckResult::evidence(level, b, false, cx.message.clone(), evidence, Some(cx))
        }
    };
    r.with_cases(n)
}

fn check_cc(ctx: &Ctx<'_>, level: PropertyTag) -> CheckResult {
    let (m, b) = (ctx.m(), ctx.bound());
    let series = match ctx.series() {
        Ok(s) => s,
        Err(e) => return CheckResult::error(level, b, e.to_string()),
    };
    let mut samples = Vec::new();
    let mut total = CostCounter::default();
    for p in series {
        for gc in m.source().ground_commands(&p.source) {
            let out = match m.map_command(&gc, &p.target) {
                Ok(o) => o,
                Err(e) => return CheckResult::error(level, b, e.to_string()),
            };
            total.add(&out.cost);
            samples.push(CostSample {
                level: p.level,
                size: p.target.size(),
                cost: out.cost.work(),
                source_command: Some(gc),
                query: None,
                target: p.target.clone(),
            });
        }
    }
    complexity_result(level, b, samples, "command mapping").with_cost(total)
}

fn check_qc(ctx: &Ctx<'_>) -> CheckResult {
    let (m, b) = (ctx.m(), ctx.bound());
    let series = match ctx.series() {
        Ok(s) => s,
        Err(e) => return CheckResult::error(T::QCc, b, e.to_string()),
    };
    let mut samples = Vec::new();
    let mut total = CostCounter::default();
    for p in series {
        for q in m.source().query_instances(&p.source, false) {
            let d = match m.decide_query(&q, &p.target) {
                Ok(d) => d,
                Err(MappingError::UntranslatableAtom { .. }) => continue,
                Err(e) => return CheckResult::error(T::QCc, b, e.to_string()),
            };
            total.add(&d.cost);
            samples.push(CostSample {
                level: p.level,
                size: p.target.size(),
                cost: d.cost.work(),
                source_command: None,
                query: Some(q),
                target: p.target.clone(),
            });
        }
    }
    complexity_result(T::QCc, b, samples, "query decider").with_cost(total)
}
