mod common;

use acx_core::props::{replay, Verdict};
use acx_core::{PropertyTag as T, State};
use common::{corpus_mapping, fixture_mapping, run};

const FIXTURES: [&str; 15] = [
    "acl-access-to-rbac", "acl-access-own-role", "acl-to-rbac-own-role", "acl-to-rbac-conjunction",
    "acl-to-rbac-per-role", "acl-to-rbac-hidden-relation", "cost-linear", "cost-quadratic",
    "decider-linear", "no-op", "escalate", "identity-admin", "peers", "grow-only", "drop-grant",
];

#[test]
fn every_counterexample_replays() {
    let mut replayed = 0;
    let mappings = acx_core::corpus::mapping_ids()
        .into_iter()
        .map(corpus_mapping)
        .chain(FIXTURES.iter().map(|f| fixture_mapping(f)));
    for m in mappings {
        for r in run(&m, "all").results {
            if r.counterexample.is_none() {
                continue;
            }
            assert_eq!(replay(&m, &r), Ok(true), "{}: {} {}", m.name(), r.property, r.detail);
            if r.verdict == Verdict::Fails {
                replayed += 1;
            }
        }
    }
    assert!(replayed >= 15, "only {replayed} failures replayed");
}

#[test]
fn tampered_counterexamples_do_not_replay() {
    let m = corpus_mapping("acl-to-rbac");
    let mut r = run(&m, "SCs").results.remove(0);
    assert_eq!(replay(&m, &r), Ok(true));
    let cx = r.counterexample.as_mut().unwrap();
    cx.source_state = Some(State::new());
    cx.target_state = None;
    assert_eq!(replay(&m, &r), Ok(false));

    let m = corpus_mapping("acl-transfer-contaminating");
    let mut r = run(&m, "CTs").results.remove(0);
    assert_eq!(r.property, T::CTs);
    r.counterexample.as_mut().unwrap().source_command = Some(acx_core::GroundCommand::new("grant", &["u1", "u1", "o1"]));
    assert_eq!(replay(&m, &r), Ok(false));
}

#[test]
fn missing_fields_are_errors() {
    let m = corpus_mapping("acl-to-rbac");
    let mut r = run(&m, "SCs").results.remove(0);
    r.counterexample.as_mut().unwrap().source_state = None;
    assert!(replay(&m, &r).is_err());
    r.counterexample = None;
    assert!(replay(&m, &r).is_err());
}
