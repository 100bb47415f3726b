//! Machine-readable and text reports of a check run.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::explore::{Bound, ExplorationStats};
use crate::lattice::{self, PropertySet, PropertyTag};
use crate::mapping::MappingDef;
use crate::props::{CheckResult, CheckRun, Verdict};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    /// Per dimension, the strongest requested levels that hold exhaustively.
    pub strongest: BTreeMap<String, Vec<PropertyTag>>,
    /// Levels supported only by sampled evidence.
    pub evidence_holds: Vec<PropertyTag>,
    pub failures: Vec<PropertyTag>,
    pub inapplicable: Vec<PropertyTag>,
    pub all_hold: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub mapping: String,
    pub source: String,
    pub target: String,
    pub bound: Bound,
    pub correspondence: PropertyTag,
    pub exploration: ExplorationStats,
    pub results: Vec<CheckResult>,
    pub summary: Summary,
}

/// Levels whose verdicts come only from sampled costs.
fn is_statistical(t: PropertyTag) -> bool {
    matches!(t, PropertyTag::CCc | PropertyTag::CCl | PropertyTag::QCc)
}

pub fn summarize(results: &[CheckResult]) -> Summary {
    let pick = |v: Verdict| -> Vec<PropertyTag> {
        results.iter().filter(|r| r.verdict == v).map(|r| r.property).collect()
    };
    let holding: PropertySet = pick(Verdict::Holds).into_iter().collect();
    let mut strongest: BTreeMap<String, Vec<PropertyTag>> = BTreeMap::new();
    let maximal = holding.iter().filter(|&&t| {
        !holding.iter().any(|&u| u != t && u.dimension() == t.dimension() && lattice::implies(u, t))
    });
    for &t in maximal {
        strongest.entry(t.dimension().name().to_string()).or_default().push(t);
    }
    let mut failures = pick(Verdict::Fails);
    failures.extend(pick(Verdict::EvidenceFails));
    failures.sort();
    Summary {
        strongest,
        evidence_holds: pick(Verdict::EvidenceHolds),
        all_hold: results.iter().all(|r| r.verdict.is_success()),
        failures,
        inapplicable: pick(Verdict::Inapplicable),
    }
}

impl Report {
    pub fn new(m: &MappingDef, run: CheckRun) -> Report {
        Report {
            mapping: m.name().to_string(),
            source: m.source().name().to_string(),
            target: m.target().name().to_string(),
            bound: run.bound,
            correspondence: run.correspondence,
            exploration: run.exploration,
            summary: summarize(&run.results),
            results: run.results,
        }
    }

    /// Parses a report and rejects documents whose statistical checks claim
    /// an exhaustive verdict or whose summary disagrees with the results.
    pub fn from_json(text: &str) -> Result<Report, Error> {
        let r: Report = serde_json::from_str(text)?;
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), Error> {
        for res in &self.results {
            if is_statistical(res.property) && matches!(res.verdict, Verdict::Holds | Verdict::Fails) {
                return Err(Error::InvalidReport(format!(
                    "{} is decided by sampling and cannot be reported as {}",
                    res.property, res.verdict
                )));
            }
            if res.verdict == Verdict::Fails && res.counterexample.is_none() {
                return Err(Error::InvalidReport(format!("{} fails without a counterexample", res.property)));
            }
        }
        if summarize(&self.results) != self.summary {
            return Err(Error::InvalidReport("summary does not match the results".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        crate::canonical_json_pretty(self) + "\n"
    }

    /// 0 when every result holds (exhaustively or by evidence), else 1.
    pub fn exit_code(&self) -> i32 {
        if self.summary.all_hold {
            0
        } else {
            1
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mapping {} ({} -> {})", self.mapping, self.source, self.target);
        let e = &self.exploration;
        let _ = writeln!(
            out,
            "bound {}  correspondence {}  source states {}  pairs {}  target states {}{}",
            self.bound,
            self.correspondence,
            e.source_states,
            e.pairs,
            e.target_states,
            if e.truncated { "  (truncated)" } else { "" }
        );
        for r in &self.results {
            let _ = writeln!(out, "{r}");
            if let Some(ev) = &r.evidence {
                let fitted: Vec<String> = ev.fitted.iter().map(|(k, v)| format!("{k}={v:.3}")).collect();
                let _ = writeln!(out, "       evidence: {}; {}", ev.method, fitted.join(" "));
            }
            if let Some(cx) = &r.counterexample {
                if let Some(c) = &cx.source_command {
                    let _ = writeln!(out, "       source command: {c}");
                }
                if !cx.target_commands.is_empty() {
                    let cmds: Vec<String> = cx.target_commands.iter().map(ToString::to_string).collect();
                    let _ = writeln!(out, "       target commands: {}", cmds.join("; "));
                }
                if let Some(s) = &cx.source_state {
                    let _ = writeln!(out, "       source state: {}", s.to_canonical_json());
                }
                if let Some(t) = &cx.target_state {
                    let _ = writeln!(out, "       target state: {}", t.to_canonical_json());
                }
            }
            for w in &r.warnings {
                let _ = writeln!(out, "       warning: {w}");
            }
        }
        let strongest: Vec<String> = self
            .summary
            .strongest
            .values()
            .flatten()
            .map(|t| t.symbol().to_string())
            .collect();
        let _ = writeln!(out, "strongest holding: {}", strongest.join(" "));
        let _ = writeln!(out, "result: {}", if self.summary.all_hold { "pass" } else { "fail" });
        out
    }
}
