//! Workbench for comparing the expressive power of access control systems.
//!
//! Systems are finite state machines described in JSON ([`system`]).
//! Mappings between two systems are written in a small rule language
//! ([`mapping`]) and checked against simulation properties by bounded
//! exhaustive exploration ([`explore`], [`props`]). The property lattice,
//! its implication rules and the catalog of published simulation notions
//! live in [`lattice`].

pub mod atom;
pub mod corpus;
pub mod error;
pub mod explore;
pub mod formula;
pub mod lattice;
pub mod mapping;
pub mod props;
pub mod report;
pub mod state;
pub mod system;

pub use atom::{sym, Atom, Sym};
pub use error::{Error, Result};
pub use explore::{reachable, Bound, ReachSet};
pub use lattice::{Comparison, PropertySet, PropertyTag};
pub use mapping::{MappingDef, SimulationDef};
pub use state::{state_size, State};
pub use system::{GroundCommand, GroundQuery, SystemDef};

/// Serializes with object keys sorted, which is the canonical text form for
/// every JSON document the workbench writes.
pub fn canonical_json<T: serde::Serialize + ?Sized>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("workbench types always serialize");
    serde_json::to_string(&v).expect("json values always serialize")
}

/// Pretty-printed variant of [`canonical_json`].
pub fn canonical_json_pretty<T: serde::Serialize + ?Sized>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("workbench types always serialize");
    serde_json::to_string_pretty(&v).expect("json values always serialize")
}
