mod common;

use std::collections::BTreeMap;

use acx_core::lattice::{self, Dimension, PropertySet};
use acx_core::{Comparison, PropertyTag as T};
use proptest::prelude::*;

/// Reads the published decomposition table from the workspace source document. Rows with a
/// `\phantom` prefix extend the HMG+ row above them.
fn published_table() -> BTreeMap<String, PropertySet> {
    let text = std::fs::read_to_string(common::workspace_file("paper.md")).unwrap();
    let start = text.find("Simulation & Decomposition").unwrap();
    let end = start + text[start..].find("\\end{tabular}").unwrap();
    let mut rows = BTreeMap::new();
    let mut base = PropertySet::new();
    for line in text[start..end].lines().skip(1) {
        let Some((name, rest)) = line.split_once('&') else { continue };
        let inherits = rest.contains("\\phantom");
        let body = rest.rsplit("\\propsym{").next().unwrap();
        let body = body.split('}').next().unwrap();
        let mut set: PropertySet = body
            .split("\\ ")
            .map(|t| match t.trim() {
                "R\\reach" => T::RFwd,
                "R\\bireach" => T::RBi,
                other => other.parse().unwrap(),
            })
            .collect();
        if inherits {
            set.extend(base.iter().copied());
        } else {
            base = set.clone();
        }
        rows.insert(name.trim().to_string(), set);
    }
    rows
}

fn decomp(name: &str) -> PropertySet {
    lattice::decompose_named(name).unwrap()
}

#[test]
fn catalog_matches_published_table() {
    let table = published_table();
    assert_eq!(table.len(), 10);
    let ours: BTreeMap<String, PropertySet> = lattice::catalog().into_iter().map(|e| (e.name.clone(), e.set())).collect();
    assert_eq!(ours, table);
}

#[test]
fn smg_is_weakest() {
    for n in lattice::simulation_names().into_iter().filter(|n| *n != "SMG") {
        assert_eq!(lattice::compare_sets(&decomp("SMG"), &decomp(n)), Comparison::StrictlyWeaker, "{n}");
    }
}

#[test]
fn published_comparisons() {
    let cmp = |a, b| lattice::compare_sets(&decomp(a), &decomp(b));
    assert_eq!(cmp("CDMs", "CDMw"), Comparison::StrictlyStronger);
    for v in ["HMG+a", "HMG+s", "HMG+p"] {
        assert_eq!(cmp(v, "HMG+"), Comparison::StrictlyStronger, "{v}");
    }
    assert_eq!(cmp("TL-SMR", "HMG+"), Comparison::StrictlyStronger);
    assert_eq!(cmp("TL-SMR", "SMG"), Comparison::StrictlyStronger);
    for other in ["CDMw", "CDMs", "ALS", "Ganta"] {
        assert_eq!(cmp("TL-SMR", other), Comparison::Incomparable, "{other}");
    }
}

#[test]
fn canonical_usages_are_incomparable() {
    let tl = lattice::canonical_usage("TL-SMR").unwrap();
    let hmg = lattice::canonical_usage("HMG+").unwrap();
    assert_eq!(lattice::compare_sets(&tl, &hmg), Comparison::Incomparable);
    let (ctl, chmg) = (lattice::closure(&tl), lattice::closure(&hmg));
    assert!(ctl.contains(&T::RBi) && ctl.contains(&T::SSp) && !ctl.contains(&T::SSl));
    assert!(chmg.contains(&T::SSl) && !chmg.contains(&T::RBi));
}

#[test]
fn required_implications() {
    let c = |t: T| lattice::closure(&PropertySet::from([t]));
    assert!(c(T::CDi).is_superset(&PropertySet::from([T::CCc, T::CSc])));
    assert!(c(T::QPf).is_superset(&PropertySet::from([T::QD1, T::QCc])));
    assert!(c(T::QDi).contains(&T::QCc));
    assert!(c(T::RBi).contains(&T::RFwd));
}

#[test]
fn chains_are_ordered_by_position() {
    for d in Dimension::ALL.iter().copied().filter(|d| d.is_totally_ordered()) {
        let levels = d.levels();
        for (i, &a) in levels.iter().enumerate() {
            for (j, &b) in levels.iter().enumerate() {
                assert_eq!(lattice::implies(a, b), i <= j, "{a} => {b}");
            }
        }
    }
}

#[test]
fn trace_levels() {
    assert!(lattice::implies(T::CT1, T::CTq));
    assert!(lattice::implies(T::CTq, T::CTa));
    for other in [T::CT1, T::CTq, T::CTa] {
        assert!(!lattice::implies(T::CTs, other) && !lattice::implies(other, T::CTs), "{other}");
    }
}

#[test]
fn catalog_file_is_current() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/catalog.json");
    assert_eq!(std::fs::read_to_string(path).unwrap(), lattice::catalog_json());
}

fn any_set() -> impl Strategy<Value = PropertySet> {
    prop::collection::btree_set(prop::sample::select(T::ALL.to_vec()), 0..6)
}

proptest! {
    #[test]
    fn closure_is_idempotent_and_monotone(a in any_set(), b in any_set()) {
        let ca = lattice::closure(&a);
        prop_assert!(ca.is_superset(&a));
        prop_assert_eq!(lattice::closure(&ca), ca.clone());
        let ab: PropertySet = a.union(&b).copied().collect();
        prop_assert!(lattice::closure(&ab).is_superset(&ca));
    }

    #[test]
    fn comparison_is_antisymmetric(a in any_set(), b in any_set()) {
        let (x, y) = (lattice::compare_sets(&a, &b), lattice::compare_sets(&b, &a));
        let flipped = match x {
            Comparison::StrictlyStronger => Comparison::StrictlyWeaker,
            Comparison::StrictlyWeaker => Comparison::StrictlyStronger,
            other => other,
        };
        prop_assert_eq!(y, flipped);
    }

    #[test]
    fn preservation_chain(a in any_set()) {
        let c = lattice::closure(&a);
        if c.contains(&T::QPf) { prop_assert!(c.contains(&T::QPa)); }
        if c.contains(&T::QPa) { prop_assert!(c.contains(&T::QPw)); }
    }

    #[test]
    fn strongest_generates_the_closure(a in any_set()) {
        let s = lattice::strongest(&a);
        prop_assert_eq!(lattice::closure(&s), lattice::closure(&a));
    }
}
