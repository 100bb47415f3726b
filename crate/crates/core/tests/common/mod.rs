#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use acx_core::corpus::{self, load_mapping_file, load_system_file};
use acx_core::lattice::PropertySet;
use acx_core::props::{self, CheckRun};
use acx_core::{Bound, MappingDef, PropertyTag, SystemDef};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn workspace_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(name)
}

pub fn fixture_mapping(name: &str) -> Arc<MappingDef> {
    Arc::new(load_mapping_file(&fixture(&format!("{name}.json"))).unwrap())
}

pub fn fixture_system(name: &str) -> SystemDef {
    load_system_file(&fixture(&format!("{name}.json"))).unwrap()
}

pub fn corpus_mapping(id: &str) -> Arc<MappingDef> {
    Arc::new(corpus::builtin_mapping(id).unwrap())
}

pub fn tags(text: &str) -> PropertySet {
    if text == "all" {
        return PropertyTag::ALL.iter().copied().collect();
    }
    acx_core::lattice::parse_set(text).unwrap()
}

pub fn run(m: &Arc<MappingDef>, props: &str) -> CheckRun {
    props::check_mapping(m.clone(), Bound::default(), &tags(props)).unwrap()
}

pub fn verdict(run: &CheckRun, tag: PropertyTag) -> props::Verdict {
    run.result(tag).unwrap_or_else(|| panic!("{tag} not checked")).verdict
}
