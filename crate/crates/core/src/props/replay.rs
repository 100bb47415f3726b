//! Independent re-execution of counterexamples.
//!
//! [`replay`] recomputes a violation from the data stored in a
//! counterexample alone, so a report can be re-verified without
//! re-exploring.

use std::sync::Arc;

use crate::explore::{backward_witness, seed_state, Caps};
use crate::lattice::PropertyTag;
use crate::mapping::{MappingDef, SimulationDef};
use crate::state::State;
use crate::system::GroundQuery;

use super::result::{CheckResult, Counterexample, CounterexampleKind as K};
use super::{
    actor_violation, actors_declared, allowed_cost, contamination, lock_step_ok, monotonic_violation,
    request_function, trace_states, unitary_candidates, weak_violation,
};

fn need<'a, T>(v: &'a Option<T>, field: &str) -> Result<&'a T, String> {
    v.as_ref().ok_or_else(|| format!("counterexample lacks `{field}`"))
}

fn sim_for(m: &MappingDef, cx: &Counterexample, fallback: PropertyTag) -> Result<SimulationDef, String> {
    let level = cx.correspondence.unwrap_or(fallback);
    SimulationDef::new(Arc::new(m.clone()), level, PropertyTag::RFwd).map_err(|e| e.to_string())
}

/// Re-verifies the counterexample attached to a failed result. Returns
/// `Ok(true)` when the violation is reproduced and `Ok(false)` when the
/// recorded data does not exhibit it.
pub fn replay(m: &MappingDef, r: &CheckResult) -> Result<bool, String> {
    let cx = r.counterexample.as_ref().ok_or("result has no counterexample")?;
    let (src, tgt) = (m.source(), m.target());
    let err = |e: &dyn std::fmt::Display| e.to_string();
    match cx.kind {
        K::Correspondence => {
            let s = need(&cx.source_state, "source_state")?;
            let level = cx.correspondence.unwrap_or(r.property);
            let t = m.map_state(s).map_err(|e| err(&e))?;
            let recorded = cx.target_state.as_ref().is_none_or(|x| *x == t);
            Ok(recorded && !m.corresponds(level, s, &t))
        }
        K::ForwardStep => {
            let sim = sim_for(m, cx, PropertyTag::SCa)?;
            let s = need(&cx.source_state, "source_state")?;
            let t = need(&cx.target_state, "target_state")?;
            let gc = need(&cx.source_command, "source_command")?;
            let s1 = src.step_ground(s, gc).map_err(|e| err(&e))?;
            let out = m.map_command(gc, t).map_err(|e| err(&e))?;
            let (t1, _) = tgt.run_trace(t, &out.commands).map_err(|e| err(&e))?;
            Ok(sim.corresponds(s, t) && !sim.corresponds(&s1, &t1))
        }
        K::BackwardStep => {
            let sim = sim_for(m, cx, PropertyTag::SCa)?;
            let s = need(&cx.source_state, "source_state")?;
            let t = need(&cx.target_state, "target_state")?;
            let gc = cx.target_commands.first().ok_or("counterexample lacks the target step")?;
            let depth = cx.depth.unwrap_or(r.bound.max_depth);
            let t1 = tgt.step_ground(t, gc).map_err(|e| err(&e))?;
            let init = seed_state(src, src.init(), r.bound.atoms_per_sort);
            let caps = Caps::for_state(&init, &r.bound);
            Ok(sim.corresponds(s, t) && backward_witness(&sim, &caps, s, &t1, depth).is_none())
        }
        K::CommandOutputs => {
            let gc = need(&cx.source_command, "source_command")?;
            let t = need(&cx.target_state, "target_state")?;
            let u = need(&cx.other_target_state, "other_target_state")?;
            if r.property == PropertyTag::CDt && tgt.theory(t) != tgt.theory(u) {
                return Ok(false);
            }
            let a = m.map_command(gc, t).map_err(|e| err(&e))?;
            let b = m.map_command(gc, u).map_err(|e| err(&e))?;
            Ok(a.commands != b.commands)
        }
        K::QueryDecisions => {
            let q = need(&cx.query, "query")?;
            let t = need(&cx.target_state, "target_state")?;
            let u = need(&cx.other_target_state, "other_target_state")?;
            if tgt.theory(t) != tgt.theory(u) {
                return Ok(false);
            }
            let a = m.decide_query(q, t).map_err(|e| err(&e))?;
            let b = m.decide_query(q, u).map_err(|e| err(&e))?;
            Ok(a.value != b.value)
        }
        K::UnitaryDecider => {
            let q = need(&cx.query, "query")?;
            if cx.witness_states.is_empty() {
                return Err("counterexample lacks witness states".into());
            }
            let decided: Vec<(&State, bool)> = cx
                .witness_states
                .iter()
                .map(|w| m.decide_query(q, w).map(|d| (w, d.value)))
                .collect::<Result<_, _>>()
                .map_err(|e| err(&e))?;
            let refuted = |g: &GroundQuery| decided.iter().any(|(w, d)| tgt.entails_ground(w, g).ok() != Some(*d));
            Ok(unitary_candidates(tgt, &cx.witness_states).iter().all(refuted))
        }
        K::Stutter => {
            let gc = need(&cx.source_command, "source_command")?;
            let t = need(&cx.target_state, "target_state")?;
            Ok(m.map_command(gc, t).map_err(|e| err(&e))?.commands.len() > 1)
        }
        K::LockStep => {
            let sim = sim_for(m, cx, PropertyTag::SCa)?;
            let s = need(&cx.source_state, "source_state")?;
            let t = need(&cx.target_state, "target_state")?;
            let gc = need(&cx.source_command, "source_command")?;
            let out = m.map_command(gc, t).map_err(|e| err(&e))?;
            let s1 = src.step_ground(s, gc).map_err(|e| err(&e))?;
            let trace = trace_states(tgt, t, &out.commands);
            Ok(sim.corresponds(s, t) && !lock_step_ok(&sim, s, &s1, &trace))
        }
        K::Monotonic | K::Contaminating => {
            let gc = need(&cx.source_command, "source_command")?;
            let t = need(&cx.target_state, "target_state")?;
            let out = m.map_command(gc, t).map_err(|e| err(&e))?;
            let trace = trace_states(tgt, t, &out.commands);
            Ok(match cx.kind {
                K::Contaminating => contamination(tgt, &trace).is_some(),
                _ => monotonic_violation(tgt, &trace, r.property == PropertyTag::CTa).is_some(),
            })
        }
        K::Actor => {
            actors_declared(m).map_err(|e| err(&e))?;
            let gc = need(&cx.source_command, "source_command")?;
            let t = need(&cx.target_state, "target_state")?;
            let admins = cx.admins.clone().unwrap_or_default().into_iter().collect();
            let out = m.map_command(gc, t).map_err(|e| err(&e))?;
            Ok(actor_violation(m, r.property, gc, &out.commands, &admins).is_some())
        }
        K::Preservation => {
            let t = need(&cx.target_state, "target_state")?;
            if r.property == PropertyTag::QPw {
                let f = request_function(m).map_err(|e| err(&e))?;
                return Ok(weak_violation(m, &f, t).map_err(|e| err(&e))?.is_some());
            }
            let q = need(&cx.query, "query")?;
            let d = m.decide_query(q, t).map_err(|e| err(&e))?.value;
            Ok(tgt.entails_ground(t, q).map_err(|e| err(&e))? != d)
        }
        K::Cost => {
            let t = need(&cx.target_state, "target_state")?;
            let allowed = *need(&cx.allowed, "allowed")?;
            let measured = match (&cx.source_command, &cx.query) {
                (Some(gc), _) => m.map_command(gc, t).map_err(|e| err(&e))?.cost.work(),
                (None, Some(q)) => m.decide_query(q, t).map_err(|e| err(&e))?.cost.work(),
                _ => return Err("counterexample names neither a command nor a query".into()),
            };
            let fitted = r.evidence.as_ref().map(|e| &e.fitted);
            let recomputed = fitted.map(|f| {
                let c0 = f.get("c0").copied().unwrap_or(0.0);
                let c = f.get("c").copied().unwrap_or(0.0);
                allowed_cost(r.property, c0, c, t.size())
            });
            let bound = recomputed.unwrap_or(allowed);
            Ok(measured as f64 > bound + 1e-9)
        }
        K::Storage => {
            let s = need(&cx.source_state, "source_state")?;
            let allowed = *need(&cx.allowed, "allowed")?;
            Ok(m.map_state(s).map_err(|e| err(&e))?.size() as f64 > allowed + 1e-9)
        }
    }
}
