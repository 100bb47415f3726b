//! The simulation-property lattice.
//!
//! Property tags, the implication rules between them, closure and
//! comparison of property sets, and the catalog of surveyed simulation
//! notions with their decompositions and canonical usages.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Dimension {
    SC,
    SS,
    CD,
    CC,
    CS,
    CT,
    CA,
    QD,
    QC,
    QP,
    R,
}

impl Dimension {
    pub const ALL: [Dimension; 11] = [
        Dimension::SC,
        Dimension::SS,
        Dimension::CD,
        Dimension::CC,
        Dimension::CS,
        Dimension::CT,
        Dimension::CA,
        Dimension::QD,
        Dimension::QC,
        Dimension::QP,
        Dimension::R,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::SC => "SC",
            Dimension::SS => "SS",
            Dimension::CD => "CD",
            Dimension::CC => "CC",
            Dimension::CS => "CS",
            Dimension::CT => "CT",
            Dimension::CA => "CA",
            Dimension::QD => "QD",
            Dimension::QC => "QC",
            Dimension::QP => "QP",
            Dimension::R => "R",
        }
    }

    /// Every dimension except trace structure is a chain.
    pub fn is_totally_ordered(self) -> bool {
        self != Dimension::CT
    }

    pub fn levels(self) -> Vec<PropertyTag> {
        PropertyTag::ALL.iter().copied().filter(|t| t.dimension() == self).collect()
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One level of one dimension. Within a dimension, variants are declared
/// from most to least strict.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum PropertyTag {
    SCs,
    SCq,
    SCa,
    SSl,
    SSp,
    SSInf,
    CDi,
    CDt,
    CDs,
    CCc,
    CCl,
    CCInf,
    CS1,
    CSc,
    CSInf,
    CT1,
    CTq,
    CTa,
    CTs,
    CATop,
    CAa,
    QD1,
    QDi,
    QDt,
    QDs,
    QCc,
    QCInf,
    QPf,
    QPa,
    QPw,
    RBi,
    RFwd,
}

use PropertyTag as T;

impl PropertyTag {
    pub const ALL: [PropertyTag; 32] = [
        T::SCs, T::SCq, T::SCa, T::SSl, T::SSp, T::SSInf, T::CDi, T::CDt, T::CDs, T::CCc, T::CCl,
        T::CCInf, T::CS1, T::CSc, T::CSInf, T::CT1, T::CTq, T::CTa, T::CTs, T::CATop, T::CAa,
        T::QD1, T::QDi, T::QDt, T::QDs, T::QCc, T::QCInf, T::QPf, T::QPa, T::QPw, T::RBi, T::RFwd,
    ];

    pub fn dimension(self) -> Dimension {
        match self {
            T::SCs | T::SCq | T::SCa => Dimension::SC,
            T::SSl | T::SSp | T::SSInf => Dimension::SS,
            T::CDi | T::CDt | T::CDs => Dimension::CD,
            T::CCc | T::CCl | T::CCInf => Dimension::CC,
            T::CS1 | T::CSc | T::CSInf => Dimension::CS,
            T::CT1 | T::CTq | T::CTa | T::CTs => Dimension::CT,
            T::CATop | T::CAa => Dimension::CA,
            T::QD1 | T::QDi | T::QDt | T::QDs => Dimension::QD,
            T::QCc | T::QCInf => Dimension::QC,
            T::QPf | T::QPa | T::QPw => Dimension::QP,
            T::RBi | T::RFwd => Dimension::R,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            T::SCs => "SCs",
            T::SCq => "SCq",
            T::SCa => "SCa",
            T::SSl => "SSl",
            T::SSp => "SSp",
            T::SSInf => "SS∞",
            T::CDi => "CDi",
            T::CDt => "CDt",
            T::CDs => "CDs",
            T::CCc => "CCc",
            T::CCl => "CCl",
            T::CCInf => "CC∞",
            T::CS1 => "CS1",
            T::CSc => "CSc",
            T::CSInf => "CS∞",
            T::CT1 => "CT1",
            T::CTq => "CTq",
            T::CTa => "CTa",
            T::CTs => "CTs",
            T::CATop => "CA⊤",
            T::CAa => "CAa",
            T::QD1 => "QD1",
            T::QDi => "QDi",
            T::QDt => "QDt",
            T::QDs => "QDs",
            T::QCc => "QCc",
            T::QCInf => "QC∞",
            T::QPf => "QPf",
            T::QPa => "QPa",
            T::QPw => "QPw",
            T::RBi => "R↔",
            T::RFwd => "R→",
        }
    }

    /// Spelling accepted on command lines.
    pub fn ascii(self) -> &'static str {
        match self {
            T::SSInf => "SSinf",
            T::CCInf => "CCinf",
            T::CSInf => "CSinf",
            T::CATop => "CAtop",
            T::QCInf => "QCinf",
            T::RBi => "Rbi",
            T::RFwd => "Rfwd",
            other => other.symbol(),
        }
    }

    /// The next weaker levels reachable by one within-dimension rule.
    fn weaker_in_dimension(self) -> &'static [PropertyTag] {
        match self {
            T::SCs => &[T::SCq],
            T::SCq => &[T::SCa],
            T::SSl => &[T::SSp],
            T::SSp => &[T::SSInf],
            T::CDi => &[T::CDt],
            T::CDt => &[T::CDs],
            T::CCc => &[T::CCl],
            T::CCl => &[T::CCInf],
            T::CS1 => &[T::CSc],
            T::CSc => &[T::CSInf],
            T::CT1 => &[T::CTq],
            T::CTq => &[T::CTa],
            T::CATop => &[T::CAa],
            T::QD1 => &[T::QDi],
            T::QDi => &[T::QDt],
            T::QDt => &[T::QDs],
            T::QCc => &[T::QCInf],
            T::QPf => &[T::QPa],
            T::QPa => &[T::QPw],
            T::RBi => &[T::RFwd],
            _ => &[],
        }
    }

    /// True for the levels the bounded checkers can decide or estimate.
    pub fn is_checkable(self) -> bool {
        !matches!(self, T::SSInf | T::CCInf | T::CSInf | T::QCInf)
    }
}

impl fmt::Display for PropertyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for PropertyTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        let alias = match s {
            "R->" | "R→" | "Rfwd" | "Rreach" => Some(T::RFwd),
            "R<->" | "R↔" | "Rbi" | "Rbireach" => Some(T::RBi),
            "CA⊤" | "CAT" | "CAtop" => Some(T::CATop),
            _ => None,
        };
        if let Some(t) = alias {
            return Ok(t);
        }
        PropertyTag::ALL
            .iter()
            .copied()
            .find(|t| t.symbol() == s || t.ascii() == s)
            .ok_or_else(|| Error::UnknownTag(s.to_string()))
    }
}

impl Serialize for PropertyTag {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.symbol())
    }
}

impl<'de> Deserialize<'de> for PropertyTag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub type PropertySet = BTreeSet<PropertyTag>;

/// Parses a comma or whitespace separated list of tags.
pub fn parse_set(text: &str) -> Result<PropertySet, Error> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

pub fn format_set<'a>(tags: impl IntoIterator<Item = &'a PropertyTag>) -> String {
    tags.into_iter().map(|t| t.symbol()).collect::<Vec<_>>().join(" ")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImplicationRule {
    pub premise: PropertyTag,
    pub conclusion: PropertyTag,
    pub source: String,
}

const CROSS_RULES: [(PropertyTag, PropertyTag, &str); 5] = [
    (T::CDi, T::CCc, "state-independent command mapping is constant-time command mapping"),
    (T::CCc, T::CSc, "constant-time command mapping emits a constant number of steps"),
    (T::QDi, T::QCc, "a fixed boolean expression over target queries is a constant query decider"),
    (T::QPf, T::QCc, "full query preservation answers each query with one target query"),
    (T::QPf, T::QD1, "full query preservation is a unitary-range query decider"),
];

fn within_citation(t: PropertyTag) -> &'static str {
    match t.dimension() {
        Dimension::CT => "trace structure: lock-step admits no stray query flips; request monotonicity restricts query monotonicity",
        Dimension::R => "reachability levels are listed in increasing strictness",
        Dimension::CA => "dimensions are totally ordered from most to least strict (blanket ordering remark)",
        _ => "dimensions are totally ordered from most to least strict",
    }
}

/// Every direct implication rule: within-dimension orders first, then the
/// cross-dimension rules.
pub fn rules() -> Vec<ImplicationRule> {
    let mut out = Vec::new();
    for t in PropertyTag::ALL {
        for &w in t.weaker_in_dimension() {
            out.push(ImplicationRule {
                premise: t,
                conclusion: w,
                source: within_citation(t).to_string(),
            });
        }
    }
    for (p, c, s) in CROSS_RULES {
        out.push(ImplicationRule { premise: p, conclusion: c, source: s.to_string() });
    }
    out
}

fn direct(t: PropertyTag) -> impl Iterator<Item = PropertyTag> {
    t.weaker_in_dimension()
        .iter()
        .copied()
        .chain(CROSS_RULES.iter().filter(move |r| r.0 == t).map(|r| r.1))
}

/// Reflexive-transitive closure of the implication rules.
pub fn implies(a: PropertyTag, b: PropertyTag) -> bool {
    closure(&PropertySet::from([a])).contains(&b)
}

/// Every tag implied by some member of `p`, including `p` itself.
pub fn closure(p: &PropertySet) -> PropertySet {
    let mut out = p.clone();
    let mut work: Vec<PropertyTag> = p.iter().copied().collect();
    while let Some(t) = work.pop() {
        for n in direct(t) {
            if out.insert(n) {
                work.push(n);
            }
        }
    }
    out
}

/// Maximal elements of the closure: the strongest level per dimension (two
/// levels for trace structure when an incomparable pair holds).
pub fn strongest(p: &PropertySet) -> PropertySet {
    let c = closure(p);
    c.iter()
        .copied()
        .filter(|&t| !c.iter().any(|&u| u != t && u.dimension() == t.dimension() && implies(u, t)))
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Comparison {
    Equal,
    StrictlyStronger,
    StrictlyWeaker,
    Incomparable,
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparison::Equal => "Equal",
            Comparison::StrictlyStronger => "StrictlyStronger",
            Comparison::StrictlyWeaker => "StrictlyWeaker",
            Comparison::Incomparable => "Incomparable",
        })
    }
}

/// Compares two property sets by dominance of their closures.
pub fn compare_sets(a: &PropertySet, b: &PropertySet) -> Comparison {
    let (ca, cb) = (closure(a), closure(b));
    if ca == cb {
        Comparison::Equal
    } else if ca.is_superset(&cb) {
        Comparison::StrictlyStronger
    } else if ca.is_subset(&cb) {
        Comparison::StrictlyWeaker
    } else {
        Comparison::Incomparable
    }
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    /// Tags in the order of the published table row.
    pub decomposition: Vec<PropertyTag>,
    pub canonical: Option<Vec<PropertyTag>>,
    pub citation: String,
}

impl CatalogEntry {
    pub fn set(&self) -> PropertySet {
        self.decomposition.iter().copied().collect()
    }
}

struct Row {
    name: &'static str,
    tags: &'static [PropertyTag],
    canonical_extra: Option<&'static [PropertyTag]>,
    citation: &'static str,
}

const HMG_BASE: &[PropertyTag] = &[T::SCq, T::QDt, T::RFwd];

const ROWS: [Row; 10] = [
    Row {
        name: "ALS",
        tags: &[T::SCs, T::QPa, T::RBi],
        canonical_extra: Some(&[T::QPf]),
        citation: "Ammann, Lipton and Sandhu simulation",
    },
    Row {
        name: "CDMw",
        tags: &[T::SCa, T::QPa, T::CDi, T::RFwd],
        canonical_extra: Some(&[T::QPf]),
        citation: "Chander, Dean and Mitchell weak simulation",
    },
    Row {
        name: "CDMs",
        tags: &[T::SCa, T::QPa, T::CDi, T::CS1, T::RFwd],
        canonical_extra: Some(&[T::QPf]),
        citation: "Chander, Dean and Mitchell strong simulation",
    },
    Row {
        name: "Ganta",
        tags: &[T::SCa, T::QPa, T::CTs, T::RBi],
        canonical_extra: None,
        citation: "Ganta simulation",
    },
    Row {
        name: "HMG+",
        tags: HMG_BASE,
        canonical_extra: Some(&[T::SSl]),
        citation: "Hinrichs et al. parameterized expressiveness",
    },
    Row {
        name: "HMG+a",
        tags: &[T::SCq, T::QDt, T::RFwd, T::QPa],
        canonical_extra: None,
        citation: "parameterized expressiveness with authorization preservation",
    },
    Row {
        name: "HMG+s",
        tags: &[T::SCq, T::QDt, T::RFwd, T::CTa],
        canonical_extra: None,
        citation: "parameterized expressiveness with safety preservation",
    },
    Row {
        name: "HMG+p",
        tags: &[T::SCq, T::QDt, T::RFwd, T::CAa],
        canonical_extra: None,
        citation: "parameterized expressiveness with administration preservation",
    },
    Row {
        name: "SMG",
        tags: &[T::SCa, T::RFwd],
        canonical_extra: Some(&[T::QPf]),
        citation: "Sandhu and Munawer / Sandhu and Ganta simulation",
    },
    Row {
        name: "TL-SMR",
        tags: &[T::SCq, T::QD1, T::RBi],
        canonical_extra: Some(&[T::SSp]),
        citation: "Tripunitara and Li state-matching reduction",
    },
];

pub fn catalog() -> Vec<CatalogEntry> {
    ROWS.iter()
        .map(|r| CatalogEntry {
            name: r.name.to_string(),
            decomposition: r.tags.to_vec(),
            canonical: r.canonical_extra.map(|extra| {
                let mut v = r.tags.to_vec();
                v.extend_from_slice(extra);
                v
            }),
            citation: r.citation.to_string(),
        })
        .collect()
}

pub fn simulation_names() -> Vec<&'static str> {
    ROWS.iter().map(|r| r.name).collect()
}

fn row(name: &str) -> Result<&'static Row, Error> {
    ROWS.iter()
        .find(|r| r.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::UnknownSimulation(name.to_string()))
}

/// The published decomposition, tags in table order.
pub fn decompose_ordered(name: &str) -> Result<Vec<PropertyTag>, Error> {
    Ok(row(name)?.tags.to_vec())
}

pub fn decompose_named(name: &str) -> Result<PropertySet, Error> {
    Ok(row(name)?.tags.iter().copied().collect())
}

pub fn canonical_usage(name: &str) -> Result<PropertySet, Error> {
    let r = row(name)?;
    let extra = r.canonical_extra.ok_or_else(|| Error::NoCanonicalData(r.name.to_string()))?;
    Ok(r.tags.iter().chain(extra).copied().collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogDocument {
    pub simulations: Vec<CatalogEntry>,
    pub rules: Vec<ImplicationRule>,
}

pub fn catalog_document() -> CatalogDocument {
    CatalogDocument { simulations: catalog(), rules: rules() }
}

/// The shipped `catalog.json` text.
pub fn catalog_json() -> String {
    crate::canonical_json_pretty(&catalog_document()) + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(tags: &[PropertyTag]) -> PropertySet {
        tags.iter().copied().collect()
    }

    #[test]
    fn symbols_and_ascii_parse_back() {
        for t in PropertyTag::ALL {
            assert_eq!(t.symbol().parse::<PropertyTag>().unwrap(), t);
            assert_eq!(t.ascii().parse::<PropertyTag>().unwrap(), t);
        }
        assert!("SCx".parse::<PropertyTag>().is_err());
    }

    #[test]
    fn cross_dimension_rules() {
        assert!(implies(T::CDi, T::CCc));
        assert!(implies(T::CCc, T::CSc));
        assert!(implies(T::CDi, T::CSc));
        assert!(!implies(T::SCa, T::SCq));
        assert!(!implies(T::CTs, T::CTa));
        assert!(!implies(T::CTa, T::CTs));
        assert!(!implies(T::SCs, T::QPa));
    }

    #[test]
    fn closure_examples() {
        let c = closure(&set(&[T::QPf]));
        assert!(c.contains(&T::QD1) && c.contains(&T::QCc));
        assert!(closure(&PropertySet::new()).is_empty());
        assert_eq!(strongest(&set(&[T::CDi])), set(&[T::CDi, T::CCc, T::CSc]));
    }

    #[test]
    fn rule_graph_is_acyclic() {
        for r in rules() {
            assert!(!implies(r.conclusion, r.premise), "{} <-> {}", r.premise, r.conclusion);
        }
    }

    #[test]
    fn canonical_extends_decomposition() {
        for e in catalog() {
            if let Some(c) = &e.canonical {
                assert!(e.decomposition.iter().all(|t| c.contains(t)));
            }
        }
        assert!(matches!(canonical_usage("Ganta"), Err(Error::NoCanonicalData(_))));
        assert!(matches!(decompose_named("Nope"), Err(Error::UnknownSimulation(_))));
    }
}
