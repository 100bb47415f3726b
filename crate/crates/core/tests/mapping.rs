mod common;

use std::sync::Arc;

use acx_core::corpus::{builtin_system, load_mapping_file};
use acx_core::error::MappingError;
use acx_core::explore::seed_state;
use acx_core::mapping::{CommandDependence, QueryDependence};
use acx_core::{sym, Error, GroundCommand, GroundQuery, MappingDef, PropertyTag as T, State};
use common::{corpus_mapping, fixture, fixture_mapping};
use proptest::prelude::*;

fn acl_state(n_users: usize, n_objects: usize, acl: &[(usize, usize)]) -> State {
    let sys = builtin_system("acl").unwrap();
    let mut s = sys.empty_state();
    for i in 1..=n_users {
        s.insert_atom(&sym("U"), sym(&format!("u{i}")));
    }
    for j in 1..=n_objects {
        s.insert_atom(&sym("O"), sym(&format!("o{j}")));
    }
    for (u, o) in acl {
        s.insert_tuple(&sym("ACL"), vec![sym(&format!("u{u}")), sym(&format!("o{o}"))]);
    }
    s
}

/// The RBAC image of an ACL state, built by hand: one role per user.
fn expected_rbac(n_users: usize, n_objects: usize, acl: &[(usize, usize)]) -> State {
    let rbac = builtin_system("rbac").unwrap();
    let mut t = rbac.empty_state();
    for i in 1..=n_users {
        let (u, r) = (format!("u{i}"), format!("r(u{i})"));
        t.insert_atom(&sym("U"), sym(&u));
        t.insert_atom(&sym("R"), sym(&r));
        t.insert_tuple(&sym("UR"), vec![sym(&u), sym(&r)]);
    }
    for j in 1..=n_objects {
        t.insert_atom(&sym("P"), sym(&format!("o{j}")));
    }
    for (u, o) in acl {
        t.insert_tuple(&sym("PA"), vec![sym(&format!("r(u{u})")), sym(&format!("o{o}"))]);
    }
    t
}

#[test]
fn acl_to_rbac_state_image() {
    let m = corpus_mapping("acl-to-rbac");
    let acl = [(1, 1), (2, 1), (2, 2)];
    assert_eq!(m.map_state(&acl_state(2, 2, &acl)).unwrap(), expected_rbac(2, 2, &acl));
    assert_eq!(m.map_state(&acl_state(0, 0, &[])).unwrap(), expected_rbac(0, 0, &[]));
}

#[test]
fn acl_to_rbac_commands_and_queries() {
    let m = corpus_mapping("acl-to-rbac");
    let t = m.map_state(&acl_state(2, 1, &[])).unwrap();
    let out = m.map_command(&GroundCommand::new("grant", &["u1", "u2", "o1"]), &t).unwrap();
    assert_eq!(out.commands, vec![GroundCommand::new("assignPerm", &["u1", "r(u2)", "o1"])]);
    assert_eq!(out.dependence, CommandDependence::Independent);
    let t1 = m.target().run_trace(&t, &out.commands).unwrap().0;
    let q = GroundQuery::new("auth", &["u2", "o1"]);
    let d = m.decide_query(&q, &t1).unwrap();
    assert!(d.value);
    assert_eq!(d.dependence, QueryDependence::Single);
    assert!(!m.decide_query(&GroundQuery::new("auth", &["u1", "o1"]), &t1).unwrap().value);
}

#[test]
fn correspondence_levels() {
    let m = corpus_mapping("acl-to-rbac");
    let s = acl_state(2, 1, &[(1, 1)]);
    let t = m.map_state(&s).unwrap();
    assert!(m.corresponds(T::SCa, &s, &t));
    assert!(m.corresponds(T::SCq, &s, &t));
    // RBAC has no ACL relation to contain the source tuples verbatim.
    assert!(!m.corresponds(T::SCs, &s, &t));
    let other = m.map_state(&acl_state(2, 1, &[(2, 1)])).unwrap();
    assert!(!m.corresponds(T::SCa, &s, &other));
    assert_eq!(m.disagreement(&s, &other, true), Some(GroundQuery::new("auth", &["u1", "o1"])));
}

#[test]
fn identity_mapping_is_the_identity() {
    for id in acx_core::corpus::system_ids() {
        let sys = Arc::new(builtin_system(id).unwrap());
        let m = MappingDef::identity(sys.clone());
        let s = seed_state(&sys, sys.init(), 2);
        assert_eq!(m.map_state(&s).unwrap(), s, "{id}");
        for gc in sys.ground_commands(&s) {
            assert_eq!(m.map_command(&gc, &s).unwrap().commands, vec![gc.clone()]);
        }
        for q in sys.query_instances(&s, false) {
            assert_eq!(m.decide_query(&q, &s).unwrap().value, sys.entails_ground(&s, &q).unwrap());
        }
    }
}

#[test]
fn missing_command_rule_is_rejected() {
    let err = load_mapping_file(&fixture("missing-rule.json")).unwrap_err();
    assert!(matches!(err, Error::Mapping(MappingError::MissingCommandRule(ref c)) if c == "revoke"), "{err}");
}

#[test]
fn malformed_json_is_rejected() {
    let err = load_mapping_file(&fixture("malformed.json")).unwrap_err();
    assert!(err.to_string().contains("line"), "{err}");
}

#[test]
fn dependence_classes_follow_the_rules() {
    assert_eq!(corpus_mapping("acl-to-rbac").command_dependence(), CommandDependence::Independent);
    assert!(fixture_mapping("cost-linear").command_dependence() > CommandDependence::Independent);
    assert_eq!(corpus_mapping("acl-to-rbac").static_degree(), 1);
    assert_eq!(fixture_mapping("peers").static_degree(), 2);
}

fn work_at(m: &MappingDef, users: usize) -> u64 {
    let t = m.map_state(&acl_state(users, users, &[])).unwrap();
    m.map_command(&GroundCommand::new("grant", &["u1", "u1", "o1"]), &t).unwrap().cost.work()
}

#[test]
fn command_cost_tracks_enumeration() {
    let constant = corpus_mapping("acl-to-rbac");
    let linear = fixture_mapping("cost-linear");
    let quadratic = fixture_mapping("cost-quadratic");
    let c: Vec<u64> = (1..6).map(|n| work_at(&constant, n)).collect();
    assert!(c.windows(2).all(|w| w[0] == w[1]), "{c:?}");
    let l: Vec<u64> = (1..6).map(|n| work_at(&linear, n)).collect();
    let dl: Vec<u64> = l.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(dl.iter().all(|d| *d == dl[0] && *d > 0), "{l:?}");
    let q: Vec<u64> = (1..6).map(|n| work_at(&quadratic, n)).collect();
    let dq: Vec<u64> = q.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(dq.windows(2).all(|w| w[1] > w[0]), "{q:?}");
}

proptest! {
    #[test]
    fn acl_to_rbac_image_matches_hand_construction(
        users in 0usize..4,
        objects in 0usize..4,
        cells in prop::collection::vec(any::<bool>(), 16),
    ) {
        let acl: Vec<(usize, usize)> = (1..=users)
            .flat_map(|u| (1..=objects).map(move |o| (u, o)))
            .filter(|(u, o)| cells[(u - 1) * 4 + (o - 1)])
            .collect();
        let m = corpus_mapping("acl-to-rbac");
        let s = acl_state(users, objects, &acl);
        let t = m.map_state(&s).unwrap();
        prop_assert_eq!(&t, &expected_rbac(users, objects, &acl));
        prop_assert!(m.corresponds(T::SCa, &s, &t));
    }
}
