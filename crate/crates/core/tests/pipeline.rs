use std::path::Path;

use marginal_risk::assumptions::{ProvenanceRelation, Relation};
use marginal_risk::catalog::{self, Dimension};
use marginal_risk::pipeline::{
    run_pipeline, write_outputs, Format, MetricStatus, ReportBundle, RunConfig, Section, SystemConfig, SystemKindConfig,
};
use marginal_risk::Error;

fn demo() -> RunConfig {
    RunConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("demo/demo.toml")).unwrap()
}

fn only(d: Dimension) -> RunConfig {
    let mut cfg = demo();
    cfg.run.dimensions = vec![d];
    cfg
}

#[test]
fn demo_report_has_every_selected_section() {
    let b = run_pipeline(&demo()).unwrap().bundle;
    assert!(b.games.reported().is_some());
    assert!(b.calibration.reported().is_some());
    assert!(b.hotlist.reported().is_some());
    assert!(b.aggregation.reported().is_some());
    let risk = b.risk.reported().unwrap();
    assert!(risk.deltas.contains_key("ai_reviewer"));
    assert!(!risk.deltas.contains_key("human_a"));
    assert!(b.audit.reconciled);
    assert_eq!(b.judges.len(), 2);
    assert!(b.judges.iter().all(|j| j.pass));
}

#[test]
fn predictability_only_omits_other_sections_and_says_so() {
    let b = run_pipeline(&only(Dimension::Predictability)).unwrap().bundle;
    assert!(matches!(b.games, Section::NotSelected));
    assert!(matches!(b.calibration, Section::NotSelected));
    assert!(b.metrics.iter().all(|m| m.dimension == Dimension::Predictability));
    assert!(b.ledger.notes.iter().any(|n| n.contains("capability") && n.contains("not selected")));
    assert!(b.ledger.notes.iter().any(|n| n.contains("interaction") && n.contains("not selected")));
    let json: serde_json::Value = serde_json::from_str(&b.to_json().unwrap()).unwrap();
    assert_eq!(json["games"]["status"], "not selected");
    assert_eq!(json["dimensions"]["capability"], "not selected");
}

#[test]
fn deterministic_baseline_beats_noisy_mock_on_self_consistency() {
    let b = run_pipeline(&only(Dimension::Predictability)).unwrap().bundle;
    let sc = b.metric(catalog::SELF_CONSISTENCY).unwrap();
    assert_eq!(sc.status, MetricStatus::Reported);
    assert_eq!(sc.values["human_a"], 1.0);
    assert!(sc.values["ai_reviewer"] < sc.values["human_a"]);
}

#[test]
fn shared_training_data_excludes_agreement_metrics() {
    let mut cfg = demo();
    cfg.provenance = vec![ProvenanceRelation {
        a: "human_b".into(),
        b: "ai_reviewer".into(),
        relation: Relation::SharedTrainingData,
    }];
    let b = run_pipeline(&cfg).unwrap().bundle;
    for id in [catalog::CROSS_CONSENSUS, catalog::AGREEMENT_RATE] {
        let m = b.metric(id).unwrap();
        assert_eq!(m.status, MetricStatus::Excluded, "{id}");
        assert!(m.values.is_empty());
        let note = b.ledger.skips.iter().find(|s| s.metric_id == id).unwrap();
        assert_eq!(note.assumption.as_deref(), Some("provenance-controlled"));
    }
    assert!(b.audit.reconciled);
    assert_eq!(b.audit.totals.excluded, 2);
    let md = b.render(Format::Human).unwrap();
    let excluded = md.split("### Excluded (assumption failed)").nth(1).unwrap();
    let excluded = excluded.split("###").next().unwrap();
    assert!(excluded.contains(catalog::CROSS_CONSENSUS) && excluded.contains(catalog::AGREEMENT_RATE));
}

#[test]
fn machine_and_human_reports_carry_the_same_numbers() {
    let b = run_pipeline(&demo()).unwrap().bundle;
    let md = b.render(Format::Human).unwrap();
    let back = ReportBundle::from_json(&b.render(Format::Machine).unwrap()).unwrap();
    for m in back.metrics.iter().filter(|m| m.status == MetricStatus::Reported) {
        for v in m.values.values() {
            assert!(md.contains(&format!("{v}")), "{} value {v} missing from markdown", m.metric_id);
        }
    }
    assert_eq!(back, b);
}

#[test]
fn failing_system_degrades_to_ledger_noted_skips() {
    let mut cfg = only(Dimension::Predictability);
    cfg.systems.push(SystemConfig {
        id: "broken".into(),
        kind: SystemKindConfig::Subprocess,
        path: None,
        command: Some(vec!["sh".into(), "-c".into(), "exit 3".into()]),
        max_children: 2,
        deterministic: None,
        flip_prob: 0.0,
        alt_outputs: Vec::new(),
        seed_salt: 0,
        provenance_tags: Vec::new(),
        persona: None,
        control_slopes: Default::default(),
        control_ranges: Default::default(),
    });
    let ids = cfg.system_ids();
    cfg.provenance = Vec::new();
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            cfg.provenance.push(ProvenanceRelation { a: a.clone(), b: b.clone(), relation: Relation::Independent });
        }
    }
    let out = run_pipeline(&cfg).unwrap();
    assert!(!out.failures.is_empty());
    let b = &out.bundle;
    assert_eq!(b.trials.failed, out.failures.len());
    assert!(b.audit.reconciled);
    let sc = b.metric(catalog::SELF_CONSISTENCY).unwrap();
    assert_eq!(sc.status, MetricStatus::Skipped);
    assert!(sc.reason.as_ref().unwrap().contains("broken"));
    assert!(b.ledger.skips.iter().any(|s| s.metric_id == catalog::SELF_CONSISTENCY));

    let dir = tempfile::tempdir().unwrap();
    write_outputs(&out, dir.path()).unwrap();
    assert!(dir.path().join("trials/failures.csv").is_file());
}

#[test]
fn hotlist_larger_than_dataset_returns_every_input() {
    let mut cfg = only(Dimension::Predictability);
    cfg.interaction.hotlist_k = 50;
    let b = run_pipeline(&cfg).unwrap().bundle;
    assert_eq!(b.hotlist.reported().unwrap().items.len(), 20);
}

#[test]
fn invalid_config_fails_before_trials() {
    let mut cfg = demo();
    cfg.predictability.repeats = 1;
    assert!(matches!(run_pipeline(&cfg), Err(Error::Config(_))));
    let mut cfg = demo();
    cfg.run.dimensions.clear();
    assert!(matches!(run_pipeline(&cfg), Err(Error::Config(_))));
}

#[test]
fn every_metric_cites_the_ledger() {
    let b = run_pipeline(&demo()).unwrap().bundle;
    for m in &b.metrics {
        assert!(!m.citations.is_empty(), "{}", m.metric_id);
        for c in &m.citations {
            assert!(b.ledger.assumptions.iter().any(|a| &a.id == c), "{} cites unknown {c}", m.metric_id);
        }
    }
}

#[test]
fn different_seeds_change_noisy_results_only() {
    let mut a = only(Dimension::Predictability);
    a.run.seed = 1;
    let mut b = a.clone();
    b.run.seed = 2;
    let (ra, rb) = (run_pipeline(&a).unwrap().bundle, run_pipeline(&b).unwrap().bundle);
    let (sa, sb) = (ra.metric(catalog::SELF_CONSISTENCY).unwrap(), rb.metric(catalog::SELF_CONSISTENCY).unwrap());
    assert_eq!(sa.values["human_a"], sb.values["human_a"]);
    assert_ne!(sa.values["ai_reviewer"], sb.values["ai_reviewer"]);
}
