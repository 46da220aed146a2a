//! End-to-end runs of the simulation harness.

use std::fs;

use metacog::harness::{self, ConfigLayers, ExperimentConfig};
use metacog::orchestrator::Mode;
use metacog::{Error, Policy};

fn config(text: &str) -> ExperimentConfig {
    let mut layers = ConfigLayers::new();
    layers.merge_text(text, "inline").unwrap();
    ExperimentConfig::from_layers(&layers).unwrap()
}

#[test]
fn replay_reproduces_every_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        seeds: vec![4, 5],
        out_dir: Some(dir.path().to_path_buf()),
        ..ExperimentConfig::default()
    };
    for run in harness::run(&cfg).unwrap() {
        let sub = dir.path().join(format!("seed-{}", run.seed));
        let replayed = harness::replay(&sub.join("decisions.jsonl")).unwrap();
        assert_eq!(replayed, run.report);
        assert_eq!(fs::read_to_string(sub.join("report.json")).unwrap(), replayed.to_json().unwrap());
    }
}

#[test]
fn seeds_are_independent_of_batching() {
    let solo = ExperimentConfig::default().run_seed(8).unwrap();
    let batch = harness::run(&ExperimentConfig {
        seeds: vec![7, 8, 9],
        ..ExperimentConfig::default()
    })
    .unwrap();
    assert_eq!(batch[1].records, solo.records);
    assert_ne!(batch[0].records, batch[1].records);
}

#[test]
fn every_decision_follows_the_protocol() {
    let run = ExperimentConfig::default().run_seed(3).unwrap();
    for r in &run.records {
        r.decision.verify(3, true).unwrap();
        assert_eq!(r.decision.original_agent, (r.index % 3) as usize);
    }
    let modes: Vec<_> = run.records.iter().map(|r| r.decision.mode).collect();
    assert!(modes.contains(&Mode::Direct) && modes.contains(&Mode::Delegated));
}

#[test]
fn weak_miscalibrated_roster_still_delegates() {
    let cfg = config(
        "roster.0.specialty = 0.3\nroster.0.general = 0.2\n\
         roster.1.specialty = 0.3\nroster.1.general = 0.2\n\
         roster.2.specialty = 0.3\nroster.2.general = 0.2\nroster.bias = 0.1",
    );
    let r = cfg.run_seed(0).unwrap().report;
    assert!(r.delegation_rate > 0.0);
    assert!(r.mode_counts.collaborative > 0);
}

#[test]
fn strong_full_coverage_roster_lands_in_precision_band() {
    // five specialists, one per dimension, with stronger specialties
    let mut text = String::from("roster.size = 5\n");
    for k in 0..5 {
        text.push_str(&format!("roster.{k}.specialty = 0.95\nroster.{k}.step = 0.05\n"));
    }
    let cfg = config(&text);
    for seed in 0..5 {
        let p = cfg.run_seed(seed).unwrap().report.delegation_precision.unwrap();
        assert!((0.7..=0.95).contains(&p), "seed {seed}: precision {p}");
    }
}

#[test]
fn baselines_record_no_confidence() {
    for policy in [Policy::SingleAgent, Policy::RoundRobin, Policy::Random, Policy::SkillFixed] {
        let cfg = ExperimentConfig {
            policy,
            ..ExperimentConfig::default()
        };
        let r = cfg.run_seed(0).unwrap().report;
        assert_eq!(r.total_api_calls, 700, "{policy}");
        assert_eq!(r.ece, None);
        assert_eq!(r.delegation_precision, None);
    }
}

#[test]
fn single_agent_roster_never_delegates() {
    let r = config("roster.size = 1").run_seed(0).unwrap().report;
    assert_eq!(r.mode_counts.direct, 700);
    assert_eq!(r.total_api_calls, 700);
}

#[test]
fn benchmark_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bench.jsonl");
    let cfg = ExperimentConfig::default();
    let tasks = cfg.tasks_for(12).unwrap();
    let mut buf = Vec::new();
    metacog::benchgen::write_jsonl(&tasks, &mut buf).unwrap();
    fs::write(&path, buf).unwrap();

    let from_file = config(&format!("benchmark.path = {}", path.display()));
    assert_eq!(from_file.run_seed(12).unwrap().records, cfg.run_seed(12).unwrap().records);

    fs::write(&path, "{\"id\": 3}\n").unwrap();
    assert!(matches!(from_file.run_seed(12), Err(Error::Parse { line: 1, .. })));
}

#[test]
fn lambda_zero_fuses_to_profile_confidence() {
    let run = config("params.lambda = 0").run_seed(2).unwrap();
    for r in &run.records {
        for b in r.decision.assessments.values() {
            assert_eq!(b.fused, b.profile);
        }
    }
}

#[test]
fn single_value_sweep_equals_plain_run() {
    let cfg = ExperimentConfig::default();
    let rows = harness::sweep(&cfg, metacog::ParamKey::Theta, &[0.5]).unwrap();
    let plain = cfg.run_seed(0).unwrap().report;
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].accuracy, plain.overall_accuracy);
    assert_eq!(rows[0].delegation_precision, plain.delegation_precision);
}

#[test]
fn ablation_variant_semantics() {
    let no_ad = config("ablate.adaptive_delegation = true").run_seed(0).unwrap();
    assert_eq!(no_ad.report.delegation_rate, 0.0);

    let no_bl = config("ablate.boundary_learning = true").run_seed(0).unwrap();
    let initial = metacog::CapabilityProfile::<f64>::default();
    assert!(no_bl.profiles.values().all(|p| *p == initial));

    let no_sa = config("ablate.self_assessment = true").run_seed(0).unwrap();
    assert_eq!(no_sa.report.mode_counts.direct, 700);

    let no_cae = config("ablate.cross_agent_eval = true").run_seed(0).unwrap();
    assert_eq!(no_cae.report.mode_counts.collaborative, 0);
    assert!(no_cae.records.iter().all(|r| r.decision.api_calls <= 2));

    let no_vc = config("ablate.verbalized_confidence = true").run_seed(0).unwrap();
    for r in &no_vc.records {
        for b in r.decision.assessments.values() {
            assert_eq!(b.conflict, 0.0);
        }
    }
}
