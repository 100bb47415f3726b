mod common;

use std::collections::BTreeSet;

use acx_core::lattice::Dimension;
use acx_core::props::{CounterexampleKind, Verdict as V};
use acx_core::{GroundCommand, GroundQuery, PropertyTag as T};
use common::{corpus_mapping, fixture_mapping, run, verdict};

fn expect(m: &str, fixture: bool, props: &str, expected: &[(T, V)]) {
    let mapping = if fixture { fixture_mapping(m) } else { corpus_mapping(m) };
    let r = run(&mapping, props);
    for &(tag, v) in expected {
        assert_eq!(verdict(&r, tag), v, "{m}: {tag}: {}", r.result(tag).unwrap().detail);
    }
}

#[test]
fn worked_example() {
    use V::*;
    expect(
        "acl-to-rbac",
        false,
        "SCs,SCq,SCa,QPa,QD1,CDi,CS1,Rfwd,Rbi",
        &[(T::SCa, Holds), (T::QPa, Holds), (T::QD1, Holds), (T::CDi, Holds), (T::CS1, Holds), (T::RFwd, Holds), (T::RBi, Holds), (T::SCs, Fails)],
    );
}

#[test]
fn worked_example_subset_holds() {
    let r = run(&corpus_mapping("acl-to-rbac"), "SCa,QPa,CS1,Rfwd");
    assert!(r.all_succeed());
    assert_eq!(r.correspondence, T::SCa);
}

#[test]
fn correspondence_is_the_strongest_holding_level() {
    let r = run(&corpus_mapping("acl-to-rbac"), "SCs,SCq,SCa,Rfwd");
    assert_eq!(r.correspondence, T::SCq);
    let r = run(&corpus_mapping("identity-acl"), "SCs,Rfwd");
    assert_eq!(r.correspondence, T::SCs);
}

/// Intermediate Allowed sets of the two transfer encodings, computed by
/// stepping the target directly.
#[test]
fn transfer_intermediates() {
    for (id, both_seen) in [("acl-transfer-clean", false), ("acl-transfer-contaminating", true)] {
        let m = corpus_mapping(id);
        let s = acx_core::explore::seed_state(m.source(), m.source().init(), 2);
        let s = m.source().step_ground(&s, &GroundCommand::new("grant", &["u1", "u1", "o1"])).unwrap();
        let t = m.map_state(&s).unwrap();
        let out = m.map_command(&GroundCommand::new("transfer", &["u1", "u1", "u2", "o1"]), &t).unwrap();
        let (_, mids) = m.target().run_trace(&t, &out.commands).unwrap();
        assert_eq!(mids.len(), 2);
        let both: BTreeSet<GroundQuery> =
            [GroundQuery::new("auth", &["u1", "o1"]), GroundQuery::new("auth", &["u2", "o1"])].into();
        assert_eq!(m.target().allowed(&mids[0]).is_superset(&both), both_seen, "{id}");
    }
}

#[test]
fn trace_fixtures() {
    use V::*;
    let r = run(&corpus_mapping("acl-transfer-contaminating"), "CTs,CTa");
    assert_eq!(verdict(&r, T::CTs), Fails);
    assert_eq!(verdict(&r, T::CTa), Holds);
    let cx = r.result(T::CTs).unwrap().counterexample.as_ref().unwrap();
    assert_eq!(cx.kind, CounterexampleKind::Contaminating);
    let m = corpus_mapping("acl-transfer-contaminating");
    let (_, mids) = m.target().run_trace(cx.target_state.as_ref().unwrap(), &cx.target_commands).unwrap();
    let mid = &mids[cx.index.unwrap() - 1];
    assert_eq!(mid, &cx.witness_states[0]);
    let allowed = m.target().allowed(mid);
    let objects: BTreeSet<_> = allowed.iter().map(|q| q.args[1].clone()).collect();
    assert!(objects.iter().any(|o| allowed.iter().filter(|q| &q.args[1] == o).count() >= 2));

    expect("acl-transfer-clean", false, "CTs,CTa,CT1,CDi,CS1,CSc", &[
        (T::CTs, Holds), (T::CTa, Holds), (T::CT1, Fails), (T::CDi, Fails), (T::CS1, Fails), (T::CSc, Holds),
    ]);
}

#[test]
fn single_step_fixture() {
    expect("no-op", true, "CS1,CT1,CTq,CTa,CTs", &[
        (T::CS1, V::Holds), (T::CT1, V::Holds), (T::CTq, V::Holds), (T::CTa, V::Holds), (T::CTs, V::Holds),
    ]);
}

#[test]
fn command_dependence_fixtures() {
    use V::*;
    expect("acl-to-rbac-per-role", true, "CDi,CDt,CDs", &[(T::CDi, Fails), (T::CDt, Holds), (T::CDs, Holds)]);
    expect("acl-to-rbac-hidden-relation", true, "CDi,CDt,CDs", &[(T::CDi, Fails), (T::CDt, Fails), (T::CDs, Holds)]);
}

#[test]
fn complexity_fixtures() {
    use V::*;
    expect("cost-linear", true, "CCc,CCl", &[(T::CCc, EvidenceFails), (T::CCl, EvidenceHolds)]);
    expect("cost-quadratic", true, "CCc,CCl", &[(T::CCc, EvidenceFails), (T::CCl, EvidenceFails)]);
    expect("decider-linear", true, "QCc,QDi,QDt", &[(T::QCc, EvidenceFails), (T::QDi, Holds), (T::QDt, Holds)]);
    expect("acl-to-rbac", false, "CCc,QCc", &[(T::CCc, EvidenceHolds), (T::QCc, EvidenceHolds)]);
}

#[test]
fn query_dependence_fixtures() {
    use V::*;
    expect("acl-to-rbac-own-role", true, "QD1,QDi,QDt,QDs,QCc", &[
        (T::QD1, Fails), (T::QDi, Fails), (T::QDt, Fails), (T::QDs, Holds), (T::QCc, EvidenceHolds),
    ]);
    expect("acl-to-rbac-conjunction", true, "QD1,QDi,QDt", &[(T::QD1, Fails), (T::QDi, Holds), (T::QDt, Holds)]);
}

#[test]
fn preservation_fixtures() {
    use V::*;
    expect("acl-access-to-rbac", true, "QPf,QPa,QPw", &[(T::QPf, Inapplicable), (T::QPa, Inapplicable), (T::QPw, Holds)]);
    let r = run(&fixture_mapping("acl-access-own-role"), "QPw");
    let res = r.result(T::QPw).unwrap();
    assert_eq!(res.verdict, Fails);
    assert!(res.counterexample.as_ref().unwrap().message.contains("condition 2"), "{}", res.detail);
    expect("identity-acl", false, "QPf,QPa,QPw", &[(T::QPf, Holds), (T::QPa, Holds), (T::QPw, Holds)]);
}

#[test]
fn actor_fixtures() {
    use V::*;
    expect("escalate", true, "CAtop,CAa", &[(T::CATop, Fails), (T::CAa, Fails)]);
    expect("identity-admin", true, "CAtop,CAa", &[(T::CATop, Holds), (T::CAa, Holds)]);
}

#[test]
fn storage_fixtures() {
    use V::*;
    expect("peers", true, "SSl,SSp", &[(T::SSl, EvidenceFails), (T::SSp, Holds)]);
    expect("acl-to-rbac", false, "SSl,SSp", &[(T::SSl, Holds), (T::SSp, Holds)]);
}

#[test]
fn trivial_levels_hold() {
    let r = run(&fixture_mapping("cost-quadratic"), "SSinf,CCinf,CSinf,QCinf,CDs,QDs");
    assert!(r.results.iter().all(|x| x.verdict == V::Holds));
}

fn all_mappings() -> Vec<(String, std::sync::Arc<acx_core::MappingDef>)> {
    let mut out: Vec<_> = acx_core::corpus::mapping_ids().into_iter().map(|id| (id.to_string(), corpus_mapping(id))).collect();
    for f in [
        "acl-access-to-rbac", "acl-access-own-role", "acl-to-rbac-own-role", "acl-to-rbac-conjunction",
        "acl-to-rbac-per-role", "acl-to-rbac-hidden-relation", "cost-linear", "cost-quadratic",
        "decider-linear", "no-op", "escalate", "identity-admin", "peers", "grow-only", "drop-grant",
    ] {
        out.push((f.to_string(), fixture_mapping(f)));
    }
    out
}

#[test]
fn dominance_on_every_mapping() {
    for (name, m) in all_mappings() {
        let r = run(&m, "all");
        for d in Dimension::ALL.iter().filter(|d| d.is_totally_ordered()) {
            let levels = d.levels();
            for (i, &strong) in levels.iter().enumerate() {
                for &weak in &levels[i + 1..] {
                    if verdict(&r, strong).is_success() {
                        assert!(verdict(&r, weak).is_success(), "{name}: {strong} holds but {weak} does not");
                    }
                }
            }
        }
        if verdict(&r, T::QPf).is_success() {
            assert!(verdict(&r, T::QPa).is_success(), "{name}");
        }
        if verdict(&r, T::QPa).is_success() && m.request_transform().is_none() {
            assert!(verdict(&r, T::QPw).is_success(), "{name}");
        }
    }
}

#[test]
fn fails_always_carry_counterexamples() {
    for (name, m) in all_mappings() {
        for res in run(&m, "all").results {
            if res.verdict == V::Fails {
                assert!(res.counterexample.is_some(), "{name}: {}", res.property);
            }
        }
    }
}
