//! Mappings between systems and the simulation wrapper.
//!
//! A [`MappingDef`] bundles a state mapping, a command mapping and a query
//! decider, each written as rules in a small JSON language (see [`dsl`]).
//! Interpretation is instrumented with a [`CostCounter`] and reports the
//! syntactic dependence class of the rule that ran.

pub mod dsl;
mod interp;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::atom::Sym;
use crate::error::{Error, MappingError};
use crate::formula::{Formula, Term};
use crate::lattice::{Dimension, PropertyTag};
use crate::state::State;
use crate::system::{GroundCommand, GroundQuery, SystemDef};

pub use dsl::{load_mapping, RawMapping};

/// Work done by one interpretation call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostCounter {
    pub bindings_enumerated: u64,
    pub state_items_inspected: u64,
    pub commands_emitted: u64,
    pub queries_consulted: u64,
}

impl CostCounter {
    /// Cost used by the complexity checks: enumeration plus inspection.
    pub fn work(&self) -> u64 {
        self.bindings_enumerated + self.state_items_inspected
    }

    pub fn add(&mut self, other: &CostCounter) {
        self.bindings_enumerated += other.bindings_enumerated;
        self.state_items_inspected += other.state_items_inspected;
        self.commands_emitted += other.commands_emitted;
        self.queries_consulted += other.queries_consulted;
    }
}

/// What a command rule may consult, ordered from least to most.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandDependence {
    Independent,
    Theory,
    State,
}

impl CommandDependence {
    pub fn tag(self) -> PropertyTag {
        match self {
            CommandDependence::Independent => PropertyTag::CDi,
            CommandDependence::Theory => PropertyTag::CDt,
            CommandDependence::State => PropertyTag::CDs,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryDependence {
    Single,
    Formula,
    Theory,
    State,
}

impl QueryDependence {
    pub fn tag(self) -> PropertyTag {
        match self {
            QueryDependence::Single => PropertyTag::QD1,
            QueryDependence::Formula => PropertyTag::QDi,
            QueryDependence::Theory => PropertyTag::QDt,
            QueryDependence::State => PropertyTag::QDs,
        }
    }
}

/// A pattern position: binds a fresh variable or must equal a term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pat {
    Bind(Sym),
    Term(Term),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MatchClause {
    Sort { sort: Sym, pat: Pat },
    Relation { rel: Sym, pats: Vec<Pat> },
}

impl MatchClause {
    fn binds(&self) -> bool {
        match self {
            MatchClause::Sort { pat, .. } => matches!(pat, Pat::Bind(_)),
            MatchClause::Relation { pats, .. } => pats.iter().any(|p| matches!(p, Pat::Bind(_))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Emit {
    Atom { sort: Sym, term: Term },
    Tuple { rel: Sym, terms: Vec<Term> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateRule {
    pub matches: Vec<MatchClause>,
    pub emits: Vec<Emit>,
}

impl StateRule {
    /// Number of match clauses that introduce new variables; the rule's
    /// output grows at most like |γ|^degree.
    pub fn degree(&self) -> usize {
        self.matches.iter().filter(|m| m.binds()).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Binding {
    Query { name: Sym, pats: Vec<Pat> },
    Relation { rel: Sym, pats: Vec<Pat> },
    Sort { sort: Sym, pat: Pat },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cond {
    /// Formula over target queries.
    Holds(Formula),
    /// Formula over raw target relations.
    State(Formula),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Emit { command: Sym, args: Vec<Term> },
    Foreach { binding: Binding, body: Vec<Step> },
    When { cond: Cond, then: Vec<Step>, otherwise: Vec<Step> },
}

fn steps_dependence(steps: &[Step]) -> CommandDependence {
    steps
        .iter()
        .map(|s| match s {
            Step::Emit { .. } => CommandDependence::Independent,
            Step::Foreach { binding, body } => {
                let own = match binding {
                    Binding::Query { .. } => CommandDependence::Theory,
                    _ => CommandDependence::State,
                };
                own.max(steps_dependence(body))
            }
            Step::When { cond, then, otherwise } => {
                let own = match cond {
                    Cond::Holds(_) => CommandDependence::Theory,
                    Cond::State(_) => CommandDependence::State,
                };
                own.max(steps_dependence(then)).max(steps_dependence(otherwise))
            }
        })
        .max()
        .unwrap_or(CommandDependence::Independent)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommandRule {
    pub command: Sym,
    pub params: Vec<Sym>,
    pub body: Vec<Step>,
}

impl CommandRule {
    pub fn dependence(&self) -> CommandDependence {
        steps_dependence(&self.body)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decider {
    /// Boolean expression over target ground queries.
    Formula(Formula),
    /// Formula over the target theory (may quantify).
    Theory(Formula),
    /// Formula over raw target relations.
    State(Formula),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryRule {
    pub query: Sym,
    pub params: Vec<Sym>,
    pub decider: Decider,
}

impl QueryRule {
    pub fn dependence(&self) -> QueryDependence {
        match &self.decider {
            Decider::Formula(Formula::Query(..)) => QueryDependence::Single,
            Decider::Formula(_) => QueryDependence::Formula,
            Decider::Theory(_) => QueryDependence::Theory,
            Decider::State(_) => QueryDependence::State,
        }
    }

    pub fn formula(&self) -> &Formula {
        match &self.decider {
            Decider::Formula(f) | Decider::Theory(f) | Decider::State(f) => f,
        }
    }
}

/// Output of the command mapping for one source command.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MappedCommand {
    pub commands: Vec<GroundCommand>,
    pub cost: CostCounter,
    pub dependence: CommandDependence,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decision {
    pub value: bool,
    pub cost: CostCounter,
    pub dependence: QueryDependence,
}

#[derive(Clone, Debug)]
pub struct MappingDef {
    pub(crate) name: String,
    pub(crate) raw: RawMapping,
    pub(crate) source: Arc<SystemDef>,
    pub(crate) target: Arc<SystemDef>,
    pub(crate) sort_map: BTreeMap<Sym, Sym>,
    pub(crate) state_rules: Vec<StateRule>,
    pub(crate) command_rules: Vec<CommandRule>,
    pub(crate) query_rules: Vec<QueryRule>,
    pub(crate) request_transform: Option<BTreeMap<Sym, Sym>>,
}

impl MappingDef {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: &str) {
        self.name = name.to_string();
    }

    pub fn raw(&self) -> &RawMapping {
        &self.raw
    }

    pub fn source(&self) -> &SystemDef {
        &self.source
    }

    pub fn target(&self) -> &SystemDef {
        &self.target
    }

    pub fn source_arc(&self) -> Arc<SystemDef> {
        self.source.clone()
    }

    pub fn target_arc(&self) -> Arc<SystemDef> {
        self.target.clone()
    }

    pub fn state_rules(&self) -> &[StateRule] {
        &self.state_rules
    }

    pub fn command_rules(&self) -> &[CommandRule] {
        &self.command_rules
    }

    pub fn query_rules(&self) -> &[QueryRule] {
        &self.query_rules
    }

    /// Target sort that atoms of a source sort are translated to.
    pub fn target_sort(&self, source_sort: &Sym) -> Sym {
        self.sort_map.get(source_sort).cloned().unwrap_or_else(|| source_sort.clone())
    }

    /// Source sorts whose atoms keep their names in the target.
    pub fn mapped_sorts(&self) -> impl Iterator<Item = (Sym, Sym)> + '_ {
        self.source
            .sorts()
            .iter()
            .map(|s| (s.clone(), self.target_sort(s)))
            .filter(|(_, t)| self.target.has_sort(t))
    }

    pub fn request_transform(&self) -> Option<&BTreeMap<Sym, Sym>> {
        self.request_transform.as_ref()
    }

    pub fn command_rule(&self, name: &str) -> Option<&CommandRule> {
        self.command_rules.iter().find(|r| r.command.as_ref() == name)
    }

    pub fn query_rule(&self, name: &str) -> Option<&QueryRule> {
        self.query_rules.iter().find(|r| r.query.as_ref() == name)
    }

    /// Strongest syntactic command-dependence class across all rules.
    pub fn command_dependence(&self) -> CommandDependence {
        self.command_rules
            .iter()
            .map(CommandRule::dependence)
            .max()
            .unwrap_or(CommandDependence::Independent)
    }

    pub fn query_dependence(&self) -> QueryDependence {
        self.query_rules
            .iter()
            .map(QueryRule::dependence)
            .max()
            .unwrap_or(QueryDependence::Single)
    }

    /// Largest state-rule degree.
    pub fn static_degree(&self) -> usize {
        self.state_rules.iter().map(StateRule::degree).max().unwrap_or(0)
    }

    /// σ_Γ.
    pub fn map_state(&self, s: &State) -> Result<State, MappingError> {
        Ok(interp::map_state(self, s))
    }

    /// σ_Ψ for one ground source command against a target state.
    pub fn map_command(&self, cmd: &GroundCommand, t: &State) -> Result<MappedCommand, MappingError> {
        interp::map_command(self, cmd, t)
    }

    /// σ_Q for one ground source query against a target state.
    pub fn decide_query(&self, q: &GroundQuery, t: &State) -> Result<Decision, MappingError> {
        interp::decide_query(self, q, t)
    }

    /// Correspondence of a source and a target state at one SC level.
    pub fn corresponds(&self, level: PropertyTag, s: &State, t: &State) -> bool {
        match level {
            PropertyTag::SCs => self.structurally_contained(s, t),
            PropertyTag::SCq => self.agrees(s, t, false),
            PropertyTag::SCa => self.agrees(s, t, true),
            other => panic!("{other} is not a correspondence level"),
        }
    }

    /// Every source set and relation appears in the target with identical
    /// contents (sets are looked up through the sort map).
    fn structurally_contained(&self, s: &State, t: &State) -> bool {
        let empty_u = Default::default();
        let empty_r = Default::default();
        s.universes().iter().all(|(sort, atoms)| {
            atoms == t.universe(&self.target_sort(sort)).unwrap_or(&empty_u)
        }) && s
            .relations()
            .iter()
            .all(|(rel, tuples)| tuples == t.relation(rel).unwrap_or(&empty_r))
    }

    /// First source query instance on which source entailment and the
    /// decider disagree (or the decider cannot run).
    pub fn disagreement(&self, s: &State, t: &State, requests_only: bool) -> Option<GroundQuery> {
        for gq in self.source.query_instances(s, requests_only) {
            let expected = self.source.entails_ground(s, &gq).expect("instance of a declared query");
            match self.decide_query(&gq, t) {
                Ok(d) if d.value == expected => {}
                _ => return Some(gq),
            }
        }
        None
    }

    fn agrees(&self, s: &State, t: &State, requests_only: bool) -> bool {
        self.disagreement(s, t, requests_only).is_none()
    }

    /// The identity mapping of a system onto itself.
    pub fn identity(sys: Arc<SystemDef>) -> MappingDef {
        let raw = dsl::identity_raw(&sys);
        let mut m = load_mapping(&raw, sys.clone(), sys).expect("identity mapping is always well-formed");
        m.name = format!("identity-{}", m.source.name());
        m
    }
}

impl fmt::Display for MappingDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} -> {})", self.name, self.source.name(), self.target.name())
    }
}

/// A mapping with its correspondence and reachability levels.
#[derive(Clone, Debug)]
pub struct SimulationDef {
    pub mapping: Arc<MappingDef>,
    pub correspondence: PropertyTag,
    pub reachability: PropertyTag,
}

impl SimulationDef {
    pub fn new(
        mapping: Arc<MappingDef>,
        correspondence: PropertyTag,
        reachability: PropertyTag,
    ) -> Result<Self, Error> {
        if correspondence.dimension() != Dimension::SC {
            return Err(Error::UnknownTag(format!("{correspondence} is not a correspondence level")));
        }
        if reachability.dimension() != Dimension::R {
            return Err(Error::UnknownTag(format!("{reachability} is not a reachability level")));
        }
        Ok(SimulationDef { mapping, correspondence, reachability })
    }

    pub fn corresponds(&self, s: &State, t: &State) -> bool {
        self.mapping.corresponds(self.correspondence, s, t)
    }
}

/// Free-function forms of the interpretation entry points.
pub fn map_state(m: &MappingDef, s: &State) -> Result<State, MappingError> {
    m.map_state(s)
}

pub fn map_command(m: &MappingDef, cmd: &GroundCommand, t: &State) -> Result<MappedCommand, MappingError> {
    m.map_command(cmd, t)
}

pub fn decide_query(m: &MappingDef, q: &GroundQuery, t: &State) -> Result<Decision, MappingError> {
    m.decide_query(q, t)
}

pub fn corresponds(sim: &SimulationDef, s: &State, t: &State) -> bool {
    sim.corresponds(s, t)
}
