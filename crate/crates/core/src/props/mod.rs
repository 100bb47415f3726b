//! Property checkers over a bounded exploration.
//!
//! [`check_mapping`] explores once and runs every requested checker against
//! the shared state space. Correspondence checks run first; the strongest
//! requested level that holds becomes the correspondence used by the
//! reachability and lock-step checks.

mod checks;
pub mod replay;
mod result;
pub mod sampling;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::explore::{Bound, Exploration, ExplorationStats};
use crate::lattice::{PropertySet, PropertyTag};
use crate::mapping::{MappingDef, SimulationDef};

pub use replay::replay;
pub use result::{CheckResult, CheckStats, Counterexample, CounterexampleKind, Evidence, Sample, Verdict};

pub(crate) use checks::{
    actor_violation, actors_declared, allowed_cost, contamination, lock_step_ok, monotonic_violation,
    request_function, trace_states, unitary_candidates, weak_violation,
};

/// Outcome of checking one property set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRun {
    pub bound: Bound,
    /// Correspondence used by the reachability and lock-step checks.
    pub correspondence: PropertyTag,
    pub exploration: ExplorationStats,
    pub results: Vec<CheckResult>,
}

impl CheckRun {
    pub fn result(&self, tag: PropertyTag) -> Option<&CheckResult> {
        self.results.iter().find(|r| r.property == tag)
    }

    pub fn all_succeed(&self) -> bool {
        self.results.iter().all(|r| r.verdict.is_success())
    }
}

/// Checks a property set with a fixed correspondence.
pub fn check_property_set(sim: &SimulationDef, bound: Bound, props: &PropertySet) -> Result<CheckRun, Error> {
    let ex = Exploration::new(&sim.mapping, bound)?;
    let ctx = checks::Ctx::new(sim, &ex);
    let results = props.iter().map(|&t| checks::check(&ctx, t)).collect();
    Ok(CheckRun { bound, correspondence: sim.correspondence, exploration: ex.stats(), results })
}

/// Checks a property set, choosing the correspondence from the SC results.
pub fn check_mapping(m: Arc<MappingDef>, bound: Bound, props: &PropertySet) -> Result<CheckRun, Error> {
    let ex = Exploration::new(&m, bound)?;
    let provisional = SimulationDef::new(m.clone(), PropertyTag::SCa, PropertyTag::RFwd)?;
    let sc: Vec<CheckResult> = {
        let ctx = checks::Ctx::new(&provisional, &ex);
        props
            .iter()
            .filter(|t| t.dimension() == crate::lattice::Dimension::SC)
            .map(|&t| checks::check(&ctx, t))
            .collect()
    };
    let correspondence = sc
        .iter()
        .find(|r| r.verdict.is_success())
        .map(|r| r.property)
        .unwrap_or(PropertyTag::SCa);
    let sim = SimulationDef::new(m, correspondence, PropertyTag::RFwd)?;
    let ctx = checks::Ctx::new(&sim, &ex);
    let mut results = sc;
    results.extend(
        props
            .iter()
            .filter(|t| t.dimension() != crate::lattice::Dimension::SC)
            .map(|&t| checks::check(&ctx, t)),
    );
    results.sort_by_key(|r| r.property);
    Ok(CheckRun { bound, correspondence, exploration: ex.stats(), results })
}

/// Checks a single property.
pub fn check_property(m: Arc<MappingDef>, bound: Bound, tag: PropertyTag) -> Result<CheckResult, Error> {
    let run = check_mapping(m, bound, &PropertySet::from([tag]))?;
    Ok(run.results.into_iter().next().expect("one result per requested tag"))
}
