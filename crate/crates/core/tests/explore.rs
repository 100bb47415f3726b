mod common;

use std::sync::Arc;

use acx_core::corpus::builtin_system;
use acx_core::explore::{check_reachability, Exploration};
use acx_core::props::{replay, CounterexampleKind, Verdict};
use acx_core::{Bound, MappingDef, PropertyTag as T, SimulationDef};
use common::{corpus_mapping, fixture_mapping, run, verdict};

fn sim(m: Arc<MappingDef>) -> SimulationDef {
    SimulationDef::new(m, T::SCa, T::RBi).unwrap()
}

#[test]
fn identity_holds_both_variants_at_several_bounds() {
    for id in acx_core::corpus::system_ids() {
        let m = Arc::new(MappingDef::identity(Arc::new(builtin_system(id).unwrap())));
        for b in [Bound::new(1, 1, 2), Bound::new(2, 1, 3)] {
            let s = sim(m.clone());
            for variant in [T::RFwd, T::RBi] {
                assert_eq!(check_reachability(&s, b, variant).unwrap().verdict, Verdict::Holds, "{id} {b} {variant}");
            }
        }
    }
}

#[test]
fn worked_example_reachability() {
    let r = run(&corpus_mapping("acl-to-rbac"), "Rfwd,Rbi");
    assert_eq!(verdict(&r, T::RFwd), Verdict::Holds);
    let bi = r.result(T::RBi).unwrap();
    assert_eq!(bi.verdict, Verdict::Holds);
    assert!(!bi.warnings.is_empty(), "bounded witness search should be flagged");
    assert_eq!(r.exploration.source_states, 16);
}

#[test]
fn silent_grant_breaks_forward_reachability() {
    let m = fixture_mapping("drop-grant");
    let r = run(&m, "Rfwd");
    let res = r.result(T::RFwd).unwrap();
    assert_eq!(res.verdict, Verdict::Fails);
    let cx = res.counterexample.as_ref().unwrap();
    assert_eq!(cx.kind, CounterexampleKind::ForwardStep);
    assert_eq!(cx.source_command.as_ref().unwrap().command.to_string(), "grant");
    // The source gains a right the unchanged target never grants.
    let s1 = m.source().step_ground(cx.source_state.as_ref().unwrap(), cx.source_command.as_ref().unwrap()).unwrap();
    assert_ne!(m.source().allowed(&s1), m.target().allowed(cx.target_state.as_ref().unwrap()));
}

#[test]
fn revocation_has_no_grant_only_witness() {
    let m = fixture_mapping("grow-only");
    let r = run(&m, "Rfwd,Rbi");
    assert_eq!(verdict(&r, T::RFwd), Verdict::Holds);
    let res = r.result(T::RBi).unwrap().clone();
    assert_eq!(res.verdict, Verdict::Fails);
    assert_eq!(res.counterexample.as_ref().unwrap().kind, CounterexampleKind::BackwardStep);
    assert_eq!(replay(&m, &res), Ok(true));
    // A missing witness stays missing at a larger bound.
    let mut bigger = res.clone();
    bigger.bound = Bound::new(3, 1, 8);
    bigger.counterexample.as_mut().unwrap().depth = Some(8);
    assert_eq!(replay(&m, &bigger), Ok(true));
}

#[test]
fn exploration_stats_are_consistent() {
    let m = corpus_mapping("acl-to-rbac");
    let ex = Exploration::new(&m, Bound::default()).unwrap();
    let st = ex.stats();
    assert_eq!(st.source_states, 16);
    assert!(st.pairs >= st.source_states);
    assert!(st.target_states >= 16);
    assert!(check_reachability(&sim(m), Bound::default(), T::SCa).is_err());
}
