//! Bounded exhaustive exploration.
//!
//! [`reachable`] runs a breadth-first search over every ground command
//! instance. [`Exploration`] builds the shared state space the property
//! checkers work on: the source reach set, the closure of corresponding
//! (source, target) pairs under simulated steps, and the target reach set.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::atom::{sym, Sym};
use crate::error::{Error, MappingError};
use crate::lattice::PropertyTag;
use crate::mapping::{MappingDef, SimulationDef};
use crate::props::{CheckResult, Counterexample, CounterexampleKind, Verdict};
use crate::state::State;
use crate::system::{GroundCommand, SystemDef};

/// Finitization parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bound {
    /// Atoms seeded into every sort before exploring.
    pub atoms_per_sort: usize,
    /// Atoms a sort may gain beyond its seeded size.
    pub max_fresh: usize,
    /// Command applications from the initial state.
    pub max_depth: usize,
}

impl Bound {
    pub const fn new(atoms_per_sort: usize, max_fresh: usize, max_depth: usize) -> Self {
        Bound { atoms_per_sort, max_fresh, max_depth }
    }
}

impl Default for Bound {
    fn default() -> Self {
        Bound::new(2, 1, 6)
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.atoms_per_sort, self.max_fresh, self.max_depth)
    }
}

impl FromStr for Bound {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let nums = parts
            .iter()
            .map(|p| p.parse::<usize>().map_err(|_| format!("`{p}` is not a non-negative integer")))
            .collect::<Result<Vec<_>, _>>()?;
        let b = match nums[..] {
            [a, f, d] => Bound::new(a, f, d),
            [a, d] => Bound::new(a, Bound::default().max_fresh, d),
            _ => return Err(format!("bound `{s}` must be A,S,D (atoms per sort, new atoms, depth)")),
        };
        if b.atoms_per_sort == 0 || b.max_depth == 0 {
            return Err(format!("bound `{s}` needs at least one atom per sort and depth at least 1"));
        }
        Ok(b)
    }
}

/// Adds `{sort}{i}` atoms (lowercased sort name) until every declared sort
/// has at least `n` atoms.
pub fn seed_state(sys: &SystemDef, start: &State, n: usize) -> State {
    let mut s = start.clone();
    for sort in sys.sorts() {
        s.ensure_sort(sort);
        let prefix = sort.to_lowercase();
        let mut i = 1;
        while s.universe_len(sort) < n {
            s.insert_atom(sort, sym(&format!("{prefix}{i}")));
            i += 1;
        }
    }
    s
}

/// Per-sort universe limits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Caps {
    per_sort: BTreeMap<Sym, usize>,
    other: usize,
}

impl Caps {
    /// Each sort may hold max(start size, atoms per sort) + max_fresh atoms.
    pub fn for_state(start: &State, bound: &Bound) -> Caps {
        Caps {
            per_sort: start
                .universes()
                .iter()
                .map(|(s, u)| (s.clone(), u.len().max(bound.atoms_per_sort) + bound.max_fresh))
                .collect(),
            other: bound.atoms_per_sort + bound.max_fresh,
        }
    }

    pub fn within(&self, s: &State) -> bool {
        s.universes()
            .iter()
            .all(|(sort, u)| u.len() <= self.per_sort.get(sort).copied().unwrap_or(self.other))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub command: GroundCommand,
    pub to: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReachSet {
    /// States in discovery order; index 0 is the start state.
    pub states: Vec<State>,
    pub depth: Vec<usize>,
    pub edges: Vec<Edge>,
    /// Set when some successor was dropped by the depth or atom bound.
    pub truncated: bool,
}

impl ReachSet {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn contains(&self, s: &State) -> bool {
        self.states.contains(s)
    }
}

/// All states reachable from `start` within the bound.
pub fn reachable(sys: &SystemDef, start: &State, b: Bound) -> ReachSet {
    reachable_capped(sys, start, b.max_depth, &Caps::for_state(start, &b))
}

pub(crate) fn reachable_capped(sys: &SystemDef, start: &State, max_depth: usize, caps: &Caps) -> ReachSet {
    let mut index: HashMap<State, usize> = HashMap::new();
    let mut rs = ReachSet::default();
    index.insert(start.clone(), 0);
    rs.states.push(start.clone());
    rs.depth.push(0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let d = rs.depth[i];
        let cur = rs.states[i].clone();
        for gc in sys.ground_commands(&cur) {
            let next = sys.step_ground(&cur, &gc).expect("ground instances are well-formed");
            if !caps.within(&next) {
                rs.truncated = true;
                continue;
            }
            if let Some(&j) = index.get(&next) {
                if d < max_depth {
                    rs.edges.push(Edge { from: i, command: gc, to: j });
                }
                continue;
            }
            if d >= max_depth {
                rs.truncated = true;
                continue;
            }
            let j = rs.states.len();
            index.insert(next.clone(), j);
            rs.states.push(next);
            rs.depth.push(d + 1);
            rs.edges.push(Edge { from: i, command: gc, to: j });
            queue.push_back(j);
        }
    }
    rs
}

/// A source state together with a target state produced by the mapping.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pair {
    pub source: State,
    pub target: State,
    pub depth: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationStats {
    pub source_states: usize,
    pub source_edges: usize,
    pub pairs: usize,
    pub target_states: usize,
    pub truncated: bool,
}

/// State space shared by all checks of one mapping at one bound.
#[derive(Clone, Debug)]
pub struct Exploration {
    pub bound: Bound,
    pub source_init: State,
    pub target_init: State,
    pub source_caps: Caps,
    pub target_caps: Caps,
    pub source: ReachSet,
    pub pairs: Vec<Pair>,
    pub pairs_truncated: bool,
    pub target: ReachSet,
    /// Target reach set plus every pair target, deduplicated.
    pub target_states: Vec<State>,
}

impl Exploration {
    pub fn new(m: &MappingDef, bound: Bound) -> Result<Exploration, MappingError> {
        let src = m.source();
        let tgt = m.target();
        let source_init = seed_state(src, src.init(), bound.atoms_per_sort);
        let source_caps = Caps::for_state(&source_init, &bound);
        let source = reachable_capped(src, &source_init, bound.max_depth, &source_caps);

        let target_init = m.map_state(&source_init)?;
        let target_caps = Caps::for_state(&target_init, &bound);

        let mut pairs = vec![Pair { source: source_init.clone(), target: target_init.clone(), depth: 0 }];
        let mut seen: HashSet<(State, State)> = HashSet::from([(source_init.clone(), target_init.clone())]);
        let mut pairs_truncated = false;
        let mut i = 0;
        while i < pairs.len() {
            let Pair { source: s, target: t, depth } = pairs[i].clone();
            i += 1;
            for gc in src.ground_commands(&s) {
                let s1 = src.step_ground(&s, &gc)?;
                let mapped = m.map_command(&gc, &t)?;
                let (t1, _) = tgt.run_trace(&t, &mapped.commands)?;
                if !source_caps.within(&s1) || !target_caps.within(&t1) {
                    pairs_truncated = true;
                    continue;
                }
                if seen.contains(&(s1.clone(), t1.clone())) {
                    continue;
                }
                if depth >= bound.max_depth {
                    pairs_truncated = true;
                    continue;
                }
                seen.insert((s1.clone(), t1.clone()));
                pairs.push(Pair { source: s1, target: t1, depth: depth + 1 });
            }
        }

        let target = reachable_capped(tgt, &target_init, bound.max_depth, &target_caps);
        let mut target_states = target.states.clone();
        let mut known: HashSet<&State> = target.states.iter().collect();
        let mut extra = Vec::new();
        for p in &pairs {
            if known.insert(&p.target) {
                extra.push(p.target.clone());
            }
        }
        target_states.extend(extra);

        Ok(Exploration {
            bound,
            source_init,
            target_init,
            source_caps,
            target_caps,
            source,
            pairs,
            pairs_truncated,
            target,
            target_states,
        })
    }

    pub fn truncated(&self) -> bool {
        self.source.truncated || self.pairs_truncated || self.target.truncated
    }

    pub fn stats(&self) -> ExplorationStats {
        ExplorationStats {
            source_states: self.source.len(),
            source_edges: self.source.edges.len(),
            pairs: self.pairs.len(),
            target_states: self.target_states.len(),
            truncated: self.truncated(),
        }
    }

    /// A state holding the union of every source universe seen while
    /// exploring (no relation contents); used to enumerate ground instances.
    pub fn source_domain(&self) -> State {
        union_domain(self.source.states.iter().chain(self.pairs.iter().map(|p| &p.source)))
    }

    pub fn truncation_warning(&self) -> Option<String> {
        self.truncated().then(|| {
            format!(
                "exploration was truncated at bound {}; verdicts hold only for the explored space",
                self.bound
            )
        })
    }
}

fn union_domain<'a>(states: impl Iterator<Item = &'a State>) -> State {
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

pub fn corresponds(sim: &SimulationDef, s: &State, t: &State) -> bool {
    sim.corresponds(s, t)
}

/// R→ over the explored corresponding pairs.
pub(crate) fn check_forward(sim: &SimulationDef, ex: &Exploration) -> CheckResult {
    let m = &sim.mapping;
    let (src, tgt) = (m.source(), m.target());
    let mut cases = 0u64;
    for p in &ex.pairs {
        if !sim.corresponds(&p.source, &p.target) {
            continue;
        }
        for gc in src.ground_commands(&p.source) {
            cases += 1;
            let s1 = src.step_ground(&p.source, &gc).expect("well-formed");
            let mapped = match m.map_command(&gc, &p.target) {
                Ok(x) => x,
                Err(e) => return CheckResult::error(PropertyTag::RFwd, ex.bound, e.to_string()),
            };
            let (t1, _) = tgt.run_trace(&p.target, &mapped.commands).expect("mapped commands are declared");
            if !sim.corresponds(&s1, &t1) {
                let cx = Counterexample {
                    kind: CounterexampleKind::ForwardStep,
                    correspondence: Some(sim.correspondence),
                    source_state: Some(p.source.clone()),
                    target_state: Some(p.target.clone()),
                    source_command: Some(gc.clone()),
                    target_commands: mapped.commands,
                    message: format!(
                        "after {gc} the mapped trace ends in a target state that does not correspond ({})",
                        sim.correspondence
                    ),
                    ..Default::default()
                };
                return CheckResult::fails(PropertyTag::RFwd, ex.bound, cx).with_cases(cases);
            }
        }
    }
    let mut r = CheckResult::holds(
        PropertyTag::RFwd,
        ex.bound,
        format!("every source step from {} corresponding pairs is tracked ({})", ex.pairs.len(), sim.correspondence),
    )
    .with_cases(cases);
    if let Some(w) = ex.truncation_warning() {
        r.warnings.push(w);
    }
    r
}

/// Lazily explored source graph used to search for backward witnesses.
struct SourceGraph<'a> {
    sys: &'a SystemDef,
    caps: &'a Caps,
    states: Vec<State>,
    index: HashMap<State, usize>,
    succ: Vec<Option<Vec<usize>>>,
}

impl<'a> SourceGraph<'a> {
    fn new(sys: &'a SystemDef, caps: &'a Caps) -> Self {
        SourceGraph { sys, caps, states: Vec::new(), index: HashMap::new(), succ: Vec::new() }
    }

    fn intern(&mut self, s: &State) -> usize {
        if let Some(&i) = self.index.get(s) {
            return i;
        }
        let i = self.states.len();
        self.states.push(s.clone());
        self.index.insert(s.clone(), i);
        self.succ.push(None);
        i
    }

    fn successors(&mut self, i: usize) -> Vec<usize> {
        if let Some(v) = &self.succ[i] {
            return v.clone();
        }
        let cur = self.states[i].clone();
        let mut out = Vec::new();
        for gc in self.sys.ground_commands(&cur) {
            let next = self.sys.step_ground(&cur, &gc).expect("well-formed");
            if self.caps.within(&next) {
                let j = self.intern(&next);
                if !out.contains(&j) {
                    out.push(j);
                }
            }
        }
        self.succ[i] = Some(out.clone());
        out
    }
}

/// Searches for a state reachable from `from` (reflexively, at most
/// `depth` steps) that corresponds to `target`.
pub(crate) fn backward_witness(
    sim: &SimulationDef,
    caps: &Caps,
    from: &State,
    target: &State,
    depth: usize,
) -> Option<State> {
    let mut g = SourceGraph::new(sim.mapping.source(), caps);
    let start = g.intern(from);
    search_witness(sim, &mut g, start, target, depth, &mut HashMap::new(), usize::MAX)
}

fn search_witness(
    sim: &SimulationDef,
    g: &mut SourceGraph<'_>,
    start: usize,
    target: &State,
    depth: usize,
    memo: &mut HashMap<(usize, usize), bool>,
    target_id: usize,
) -> Option<State> {
    let mut seen = HashSet::from([start]);
    let mut frontier = vec![start];
    for level in 0..=depth {
        for &i in &frontier {
            let hit = if target_id == usize::MAX {
                sim.corresponds(&g.states[i], target)
            } else {
                *memo
                    .entry((i, target_id))
                    .or_insert_with(|| sim.corresponds(&g.states[i], target))
            };
            if hit {
                return Some(g.states[i].clone());
            }
        }
        if level == depth {
            break;
        }
        let mut next = Vec::new();
        for &i in &frontier {
            for j in g.successors(i) {
                if seen.insert(j) {
                    next.push(j);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    None
}

/// R↔: R→ plus a source witness for every native target step taken from a
/// corresponding pair.
pub(crate) fn check_bidirectional(sim: &SimulationDef, ex: &Exploration) -> CheckResult {
    let fwd = check_forward(sim, ex);
    if fwd.verdict != Verdict::Holds {
        let mut r = fwd;
        r.property = PropertyTag::RBi;
        r.detail = format!("forward part fails: {}", r.detail);
        return r;
    }
    let m = &sim.mapping;
    let tgt = m.target();
    let mut g = SourceGraph::new(m.source(), &ex.source_caps);
    let mut targets: HashMap<State, usize> = HashMap::new();
    let mut memo = HashMap::new();
    let mut cases = fwd.stats.cases;
    for p in &ex.pairs {
        if !sim.corresponds(&p.source, &p.target) {
            continue;
        }
        let start = g.intern(&p.source);
        for gc in tgt.ground_commands(&p.target) {
            cases += 1;
            let t1 = tgt.step_ground(&p.target, &gc).expect("well-formed");
            let n = targets.len();
            let tid = *targets.entry(t1.clone()).or_insert(n);
            if search_witness(sim, &mut g, start, &t1, ex.bound.max_depth, &mut memo, tid).is_none() {
                let cx = Counterexample {
                    kind: CounterexampleKind::BackwardStep,
                    correspondence: Some(sim.correspondence),
                    source_state: Some(p.source.clone()),
                    target_state: Some(p.target.clone()),
                    target_commands: vec![gc.clone()],
                    depth: Some(ex.bound.max_depth),
                    message: format!(
                        "target step {gc} reaches a state with no corresponding source state within {} steps (bounded search)",
                        ex.bound.max_depth
                    ),
                    ..Default::default()
                };
                return CheckResult::fails(PropertyTag::RBi, ex.bound, cx).with_cases(cases);
            }
        }
    }
    let mut r = CheckResult::holds(
        PropertyTag::RBi,
        ex.bound,
        format!(
            "forward tracking holds and every native target step has a source witness within {} steps ({})",
            ex.bound.max_depth, sim.correspondence
        ),
    )
    .with_cases(cases);
    r.warnings.push("source witnesses are searched only up to the depth bound".to_string());
    if let Some(w) = ex.truncation_warning() {
        r.warnings.push(w);
    }
    r
}

/// Standalone reachability check for one variant.
pub fn check_reachability(sim: &SimulationDef, b: Bound, variant: PropertyTag) -> Result<CheckResult, Error> {
    let ex = Exploration::new(&sim.mapping, b)?;
    match variant {
        PropertyTag::RFwd => Ok(check_forward(sim, &ex)),
        PropertyTag::RBi => Ok(check_bidirectional(sim, &ex)),
        other => Err(Error::UnknownTag(format!("{other} is not a reachability level"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::builtin_system;

    #[test]
    fn bound_syntax() {
        assert_eq!("2,1,6".parse::<Bound>().unwrap(), Bound::default());
        assert_eq!("3,5".parse::<Bound>().unwrap(), Bound::new(3, 1, 5));
        assert!("0,1,6".parse::<Bound>().is_err());
        assert!("2,x,6".parse::<Bound>().is_err());
        assert_eq!(Bound::default().to_string(), "2,1,6");
    }

    #[test]
    fn seeding_tops_up_each_sort() {
        let sys = builtin_system("rbac").unwrap();
        let s = seed_state(&sys, sys.init(), 2);
        assert_eq!(s.universe_len("U"), 2);
        assert!(s.has_atom("R", "r1") && s.has_atom("P", "p2"));
        assert_eq!(seed_state(&sys, &s, 1), s);
    }

    #[test]
    fn caps_bound_fresh_growth() {
        let sys = builtin_system("acl").unwrap();
        let s = seed_state(&sys, sys.init(), 2);
        let caps = Caps::for_state(&s, &Bound::new(2, 1, 3));
        let mut bigger = s.clone();
        bigger.insert_atom(&sym("U"), sym("u3"));
        assert!(caps.within(&bigger));
        bigger.insert_atom(&sym("U"), sym("u4"));
        assert!(!caps.within(&bigger));
    }

    #[test]
    fn depth_zero_neighbourhood() {
        let sys = builtin_system("acl").unwrap();
        let s = seed_state(&sys, sys.init(), 1);
        let r = reachable(&sys, &s, Bound::new(1, 0, 1));
        // grant(u1,u1,o1) is the only change available with one atom each.
        assert_eq!(r.len(), 2);
        assert!(!r.truncated);
        assert_eq!(r.depth, vec![0, 1]);
    }
}
