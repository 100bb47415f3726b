//! Access control states as set decompositions.
//!
//! A [`State`] is a map from sort names to finite atom sets plus a map from
//! relation names to finite sets of tuples. Tuples store atom names; the sort
//! of each component is fixed by the relation's schema.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::atom::Sym;

pub type Tuple = Vec<Sym>;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct State {
    #[serde(default)]
    universes: BTreeMap<Sym, BTreeSet<Sym>>,
    #[serde(default)]
    relations: BTreeMap<Sym, BTreeSet<Tuple>>,
}

impl State {
    pub fn new() -> Self {
        Self::default()
    }

    /// Empty state with an (empty) entry for each listed sort and relation.
    pub fn with_schema<'a>(
        sorts: impl IntoIterator<Item = &'a Sym>,
        relations: impl IntoIterator<Item = &'a Sym>,
    ) -> Self {
        State {
            universes: sorts.into_iter().map(|s| (s.clone(), BTreeSet::new())).collect(),
            relations: relations.into_iter().map(|r| (r.clone(), BTreeSet::new())).collect(),
        }
    }

    pub fn universes(&self) -> &BTreeMap<Sym, BTreeSet<Sym>> {
        &self.universes
    }

    pub fn relations(&self) -> &BTreeMap<Sym, BTreeSet<Tuple>> {
        &self.relations
    }

    pub fn universe(&self, sort: &str) -> Option<&BTreeSet<Sym>> {
        self.universes.get(sort)
    }

    pub fn relation(&self, name: &str) -> Option<&BTreeSet<Tuple>> {
        self.relations.get(name)
    }

    pub fn has_atom(&self, sort: &str, name: &str) -> bool {
        self.universes.get(sort).is_some_and(|u| u.contains(name))
    }

    pub fn has_tuple(&self, rel: &str, tuple: &[Sym]) -> bool {
        self.relations.get(rel).is_some_and(|r| r.contains(tuple))
    }

    pub fn universe_len(&self, sort: &str) -> usize {
        self.universes.get(sort).map_or(0, |u| u.len())
    }

    /// Returns true if the atom was not already present.
    pub fn insert_atom(&mut self, sort: &Sym, name: Sym) -> bool {
        self.universes.entry(sort.clone()).or_default().insert(name)
    }

    pub fn insert_tuple(&mut self, rel: &Sym, tuple: Tuple) -> bool {
        self.relations.entry(rel.clone()).or_default().insert(tuple)
    }

    pub fn remove_tuple(&mut self, rel: &str, tuple: &[Sym]) -> bool {
        self.relations.get_mut(rel).is_some_and(|r| r.remove(tuple))
    }

    pub fn ensure_sort(&mut self, sort: &Sym) {
        self.universes.entry(sort.clone()).or_default();
    }

    pub fn ensure_relation(&mut self, rel: &Sym) {
        self.relations.entry(rel.clone()).or_default();
    }

    /// |γ|: total cardinality of the primitive sets and relations.
    pub fn size(&self) -> usize {
        self.universes.values().map(BTreeSet::len).sum::<usize>()
            + self.relations.values().map(BTreeSet::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.size() == 0
    }

    /// Canonical JSON text (sorted keys, atoms as strings).
    pub fn to_canonical_json(&self) -> String {
        crate::canonical_json(self)
    }
}

/// Free-function form of [`State::size`].
pub fn state_size(s: &State) -> usize {
    s.size()
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        let mut first = true;
        for (sort, atoms) in &self.universes {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{sort}={{")?;
            for (i, a) in atoms.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                f.write_str(a)?;
            }
            f.write_str("}")?;
        }
        for (rel, tuples) in &self.relations {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{rel}={{")?;
            for (i, t) in tuples.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                f.write_str("(")?;
                for (j, a) in t.iter().enumerate() {
                    if j > 0 {
                        f.write_str(",")?;
                    }
                    f.write_str(a)?;
                }
                f.write_str(")")?;
            }
            f.write_str("}")?;
        }
        f.write_str("}")
    }
}
