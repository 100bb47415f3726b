use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::atom::Sym;
use crate::explore::Bound;
use crate::lattice::PropertyTag;
use crate::mapping::CostCounter;
use crate::state::State;
use crate::system::{GroundCommand, GroundQuery};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Exhaustively verified within the bound.
    Holds,
    /// Violated; a replayable counterexample is attached.
    Fails,
    /// Statistical support from sampled costs or sizes; never a proof.
    EvidenceHolds,
    /// Sampled costs or sizes exceed the fitted allowance.
    EvidenceFails,
    /// The property does not apply to these systems (e.g. missing actors).
    Inapplicable,
}

impl Verdict {
    pub fn is_success(self) -> bool {
        matches!(self, Verdict::Holds | Verdict::EvidenceHolds)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::EvidenceHolds => "evidence-holds",
            Verdict::EvidenceFails => "evidence-fails",
            Verdict::Inapplicable => "inapplicable",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CounterexampleKind {
    /// A source state and its image do not correspond.
    #[default]
    Correspondence,
    /// The mapped trace of a source step ends in a non-corresponding state.
    ForwardStep,
    /// A native target step has no corresponding source state within depth.
    BackwardStep,
    /// Two target states yield different command mappings.
    CommandOutputs,
    /// Two theory-equal target states yield different decisions.
    QueryDecisions,
    /// No single target query reproduces the decisions on the witnesses.
    UnitaryDecider,
    /// Mapped trace longer than one command.
    Stutter,
    /// No lock-step split point exists for the intermediate states.
    LockStep,
    /// An intermediate state flips a query against both neighbours.
    Monotonic,
    /// An intermediate state allows more than the start or end state.
    Contaminating,
    /// An emitted command runs under the wrong actor.
    Actor,
    /// The decider disagrees with the target's own request/query.
    Preservation,
    /// A sampled cost exceeds the fitted allowance.
    Cost,
    /// A sampled image size exceeds the fitted allowance.
    Storage,
}

/// Everything needed to re-execute a violation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Counterexample {
    pub kind: CounterexampleKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correspondence: Option<PropertyTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_state: Option<State>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_state: Option<State>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other_target_state: Option<State>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_command: Option<GroundCommand>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub target_commands: Vec<GroundCommand>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub other_target_commands: Vec<GroundCommand>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<GroundQuery>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_query: Option<GroundQuery>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witness_states: Vec<State>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admins: Option<Vec<Sym>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed: Option<f64>,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Atoms per sort in the scaling series (0 for explored states).
    pub level: usize,
    pub size: usize,
    pub measured: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub method: String,
    pub samples: Vec<Sample>,
    pub fitted: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckStats {
    /// Individual obligations examined.
    pub cases: u64,
    pub cost: CostCounter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckResult {
    pub property: PropertyTag,
    pub verdict: Verdict,
    pub bound: Bound,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<Evidence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    #[serde(default)]
    pub stats: CheckStats,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl CheckResult {
    fn base(property: PropertyTag, verdict: Verdict, bound: Bound, detail: String) -> Self {
        CheckResult {
            property,
            verdict,
            bound,
            detail,
            evidence: None,
            counterexample: None,
            stats: CheckStats::default(),
            warnings: Vec::new(),
        }
    }

    pub fn holds(property: PropertyTag, bound: Bound, detail: impl Into<String>) -> Self {
        Self::base(property, Verdict::Holds, bound, detail.into())
    }

    pub fn fails(property: PropertyTag, bound: Bound, cx: Counterexample) -> Self {
        let mut r = Self::base(property, Verdict::Fails, bound, cx.message.clone());
        r.counterexample = Some(cx);
        r
    }

    pub fn evidence(
        property: PropertyTag,
        bound: Bound,
        ok: bool,
        detail: impl Into<String>,
        evidence: Evidence,
        cx: Option<Counterexample>,
    ) -> Self {
        let verdict = if ok { Verdict::EvidenceHolds } else { Verdict::EvidenceFails };
        let mut r = Self::base(property, verdict, bound, detail.into());
        r.evidence = Some(evidence);
        r.counterexample = cx;
        r
    }

    pub fn inapplicable(property: PropertyTag, bound: Bound, reason: impl Into<String>) -> Self {
        Self::base(property, Verdict::Inapplicable, bound, reason.into())
    }

    /// A checker could not run; reported as inapplicable with the cause.
    pub fn error(property: PropertyTag, bound: Bound, message: String) -> Self {
        Self::inapplicable(property, bound, format!("check could not run: {message}"))
    }

    pub fn with_cases(mut self, cases: u64) -> Self {
        self.stats.cases = cases;
        self
    }

    pub fn with_cost(mut self, cost: CostCounter) -> Self {
        self.stats.cost = cost;
        self
    }

    pub fn warn(mut self, w: Option<String>) -> Self {
        self.warnings.extend(w);
        self
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<4} {:<14} {}", self.property.symbol(), self.verdict.to_string(), self.detail)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_holding_verdicts_succeed() {
        assert!(Verdict::Holds.is_success());
        assert!(Verdict::EvidenceHolds.is_success());
        for v in [Verdict::Fails, Verdict::EvidenceFails, Verdict::Inapplicable] {
            assert!(!v.is_success());
        }
    }

    #[test]
    fn results_round_trip_through_json() {
        let cx = Counterexample { kind: CounterexampleKind::Stutter, index: Some(2), message: "m".into(), ..Default::default() };
        let r = CheckResult::fails(PropertyTag::CS1, Bound::default(), cx).with_cases(7);
        let text = crate::canonical_json(&r);
        assert!(text.contains("\"verdict\":\"fails\""));
        let back: CheckResult = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.detail, "m");
    }
}
