mod common;

use std::collections::BTreeSet;

use acx_core::corpus::builtin_system;
use acx_core::explore::seed_state;
use acx_core::{reachable, state_size, sym, Atom, Bound, GroundCommand, GroundQuery, State, SystemDef};
use proptest::prelude::*;

fn state_of(universes: &[(&str, &[&str])], relations: &[(&str, &[&[&str]])]) -> State {
    let mut s = State::new();
    for (sort, atoms) in universes {
        s.ensure_sort(&sym(sort));
        for a in *atoms {
            s.insert_atom(&sym(sort), sym(a));
        }
    }
    for (rel, tuples) in relations {
        s.ensure_relation(&sym(rel));
        for t in *tuples {
            s.insert_tuple(&sym(rel), t.iter().map(|x| sym(x)).collect());
        }
    }
    s
}

fn acl_state(users: &[&str], objects: &[&str], acl: &[&[&str]]) -> State {
    state_of(&[("U", users), ("O", objects)], &[("ACL", acl)])
}

#[test]
fn published_size_example() {
    let s = state_of(&[("U", &["u1"]), ("R", &["r1", "r2"])], &[("UR", &[&["u1", "r1"], &["u1", "r2"]])]);
    assert_eq!(state_size(&s), 5);
}

#[test]
fn trivial_sizes() {
    assert_eq!(state_size(&State::new()), 0);
    assert_eq!(state_size(&acl_state(&["u1", "u2"], &["o1"], &[&["u1", "o1"], &["u2", "o1"]])), 5);
}

#[test]
fn acl_allowed_and_theory() {
    let acl = builtin_system("acl").unwrap();
    let empty = acl_state(&[], &[], &[]);
    assert!(acl.allowed(&empty).is_empty());
    let s = acl_state(&["u1", "u2"], &["o1"], &[&["u1", "o1"], &["u2", "o1"]]);
    let expected: BTreeSet<GroundQuery> =
        [GroundQuery::new("auth", &["u1", "o1"]), GroundQuery::new("auth", &["u2", "o1"])].into();
    assert_eq!(acl.allowed(&s), expected);
    let one = acl_state(&["u1"], &["o1"], &[]);
    assert_eq!(acl.theory(&one).len(), 1);
}

#[test]
fn rbac_theory_and_allowed() {
    let rbac = builtin_system("rbac").unwrap();
    let mut s = seed_state(&rbac, rbac.init(), 1);
    // auth(u,p) and member(u,r) over a 1x1 grid each.
    assert_eq!(rbac.theory(&s).len(), 2);
    s.insert_tuple(&sym("UR"), vec![sym("u1"), sym("r1")]);
    assert!(rbac.allowed(&s).is_empty());
}

#[test]
fn traces_compose_steps() {
    let acl = builtin_system("acl").unwrap();
    let s = acl_state(&["u1"], &["o1"], &[]);
    let (end, mids) = acl.run_trace(&s, &[]).unwrap();
    assert_eq!((end, mids.len()), (s.clone(), 0));
    let cmds = [GroundCommand::new("grant", &["u1", "u1", "o1"]), GroundCommand::new("revoke", &["u1", "u1", "o1"])];
    let (end, mids) = acl.run_trace(&s, &cmds).unwrap();
    assert_eq!(end, s);
    assert_eq!(mids.len(), 2);
    assert!(acl.entails(&mids[0], "auth", &[Atom::new("U", "u1"), Atom::new("O", "o1")]).unwrap());

    let rbac = builtin_system("rbac").unwrap();
    let s = seed_state(&rbac, rbac.init(), 1);
    let cmds = [GroundCommand::new("assignUser", &["u1", "u1", "r1"]), GroundCommand::new("assignPerm", &["u1", "r1", "p1"])];
    let (end, _) = rbac.run_trace(&s, &cmds).unwrap();
    assert!(rbac.entails_ground(&end, &GroundQuery::new("auth", &["u1", "p1"])).unwrap());
}

fn binomial(n: u64, k: u64) -> u64 {
    (1..=k).fold(1, |acc, i| acc * (n + 1 - i) / i)
}

/// ACL reachability is every ACL relation with at most `depth` tuples over
/// the seeded grid, since grant and revoke each touch one tuple.
#[test]
fn acl_reach_counts_match_enumeration() {
    let acl = builtin_system("acl").unwrap();
    for (n, depth) in [(1usize, 3usize), (2, 6), (2, 2), (3, 2)] {
        let start = seed_state(&acl, acl.init(), n);
        let r = reachable(&acl, &start, Bound::new(n, 1, depth));
        let cells = (n * n) as u64;
        let expected: u64 = (0..=depth.min(n * n) as u64).map(|k| binomial(cells, k)).sum();
        assert_eq!(r.len() as u64, expected, "n={n} depth={depth}");
        let distinct: BTreeSet<&State> = r.states.iter().collect();
        assert_eq!(distinct.len(), r.len());
    }
}

const GROUPS: &str = r#"{
    "sorts": ["U", "G"],
    "relations": {"M": ["U", "G"]},
    "queries": [{"name": "any", "params": [["u", "U"]], "body": {"exists": ["g", "G", {"member": ["M", "u", "g"]}]}}]
}"#;

fn groups() -> SystemDef {
    SystemDef::from_json_str(GROUPS, "groups").unwrap()
}

fn grid() -> impl Strategy<Value = (usize, usize, Vec<bool>)> {
    (1usize..4, 0usize..4).prop_flat_map(|(u, g)| (Just(u), Just(g), prop::collection::vec(any::<bool>(), u * g)))
}

fn grid_state(u: usize, g: usize, cells: &[bool]) -> State {
    let mut s = State::new();
    s.ensure_sort(&sym("U"));
    s.ensure_sort(&sym("G"));
    s.ensure_relation(&sym("M"));
    for i in 0..u {
        s.insert_atom(&sym("U"), sym(&format!("u{i}")));
    }
    for j in 0..g {
        s.insert_atom(&sym("G"), sym(&format!("g{j}")));
    }
    for i in 0..u {
        for j in 0..g {
            if cells[i * g + j] {
                s.insert_tuple(&sym("M"), vec![sym(&format!("u{i}")), sym(&format!("g{j}"))]);
            }
        }
    }
    s
}

proptest! {
    #[test]
    fn exists_matches_brute_force((u, g, cells) in grid()) {
        let sys = groups();
        let s = grid_state(u, g, &cells);
        for i in 0..u {
            let brute = (0..g).any(|j| cells[i * g + j]);
            let got = sys.entails(&s, "any", &[Atom::new("U", &format!("u{i}"))]).unwrap();
            prop_assert_eq!(got, brute);
        }
    }

    #[test]
    fn size_is_an_independent_recount((u, g, cells) in grid()) {
        let s = grid_state(u, g, &cells);
        let recount = u + g + cells.iter().filter(|c| **c).count();
        prop_assert_eq!(state_size(&s), recount);
        prop_assert_eq!(s.size(), recount);
    }

    #[test]
    fn state_json_round_trips((u, g, cells) in grid()) {
        let s = grid_state(u, g, &cells);
        let back: State = serde_json::from_str(&s.to_canonical_json()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn steps_are_deterministic_and_total(grants in prop::collection::vec((0usize..2, 0usize..2, any::<bool>()), 0..8)) {
        let acl = builtin_system("acl").unwrap();
        let mut s = seed_state(&acl, acl.init(), 2);
        for (u, o, add) in grants {
            let gc = GroundCommand::new(if add { "grant" } else { "revoke" }, &["u1", &format!("u{}", u + 1), &format!("o{}", o + 1)]);
            let a = acl.step_ground(&s, &gc).unwrap();
            prop_assert_eq!(&a, &acl.step_ground(&s, &gc).unwrap());
            prop_assert!(acl.check_state(&a).is_ok());
            let theory = acl.theory(&a);
            prop_assert!(acl.allowed(&a).iter().all(|q| theory.get(q) == Some(&true)));
            s = a;
        }
    }
}
