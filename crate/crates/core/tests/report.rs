mod common;

use acx_core::props::Verdict;
use acx_core::report::Report;
use acx_core::PropertyTag as T;
use common::{corpus_mapping, fixture_mapping, run};

fn report_for(m: &std::sync::Arc<acx_core::MappingDef>, props: &str) -> Report {
    Report::new(m, run(m, props))
}

#[test]
fn reports_round_trip() {
    for m in [corpus_mapping("acl-to-rbac"), corpus_mapping("acl-transfer-contaminating"), fixture_mapping("cost-linear")] {
        let r = report_for(&m, "all");
        let text = r.to_json();
        let back = Report::from_json(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json(), text);
    }
}

#[test]
fn summary_lists_strongest_levels() {
    let r = report_for(&corpus_mapping("acl-to-rbac"), "SCs,SCq,SCa,QD1,QDi,CCc,Rfwd,Rbi");
    assert_eq!(r.summary.strongest["SC"], vec![T::SCq]);
    assert_eq!(r.summary.strongest["QD"], vec![T::QD1]);
    assert_eq!(r.summary.strongest["R"], vec![T::RBi]);
    assert_eq!(r.summary.failures, vec![T::SCs]);
    assert_eq!(r.summary.evidence_holds, vec![T::CCc]);
    assert!(!r.summary.all_hold);
    assert_eq!(r.exit_code(), 1);
    let text = r.to_text();
    assert!(text.contains("strongest holding:") && text.contains("result: fail"));
}

#[test]
fn passing_report_exits_zero() {
    let r = report_for(&corpus_mapping("identity-acl"), "SCs,QPa,Rbi");
    assert!(r.summary.all_hold);
    assert_eq!(r.exit_code(), 0);
}

#[test]
fn statistical_checks_cannot_claim_exhaustive_verdicts() {
    let mut r = report_for(&fixture_mapping("cost-linear"), "CCl");
    r.results[0].verdict = Verdict::Holds;
    r.summary = acx_core::report::summarize(&r.results);
    assert!(Report::from_json(&r.to_json()).unwrap_err().to_string().contains("sampling"));
}

#[test]
fn inconsistent_summaries_are_rejected() {
    let mut r = report_for(&corpus_mapping("acl-to-rbac"), "SCs,SCa");
    r.summary.all_hold = true;
    assert!(Report::from_json(&r.to_json()).is_err());
    let mut r = report_for(&corpus_mapping("acl-to-rbac"), "SCs");
    r.results[0].counterexample = None;
    r.summary = acx_core::report::summarize(&r.results);
    assert!(Report::from_json(&r.to_json()).is_err());
    assert!(Report::from_json("{\"mapping\": 1}").is_err());
}
