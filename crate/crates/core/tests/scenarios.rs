mod common;

use std::process::Command;

use apm_lab::adversary::{witness_sequence, WitnessOptions};
use apm_lab::engine::{displacement_vector, fact_bb93_check, DisplacementOptions};
use apm_lab::experiment::{run_experiment, ExperimentConfig, Stage};
use apm_lab::probe::{
    d_stability_trial, estimate_modulus, verify_violation, PerturbationModel, ProbeSampler, RandomModel, Violation,
};
use apm_lab::scenario::{builtin_scenarios, scenario_from_spec, Regularity, Scenario};
use apm_lab::Error;
use common::*;

const FIRST_FOUR: [&str; 4] = ["halfspace-angle", "strip-gap", "ball-tangent", "vanishing-angle"];

#[test]
fn best_approximation_facts_hold() {
    for name in FIRST_FOUR {
        let s = scenario_from_spec(name).unwrap();
        let r = fact_bb93_check(&s.pair(), 200, 7).unwrap();
        assert!(r.norm_residual <= 1e-8, "{name}: {r:?}");
        assert!(r.e_plus_v_residual <= 1e-6, "{name}: {r:?}");
        assert!(r.max_projection_residual() <= 1e-8, "{name}: {r:?}");
    }
}

#[test]
fn estimated_displacement_matches_closed_form() {
    for g in [0.5, 1.0, 2.0] {
        let s = scenario_from_spec(&format!("strip-gap(g={g})")).unwrap();
        let d = displacement_vector(&s.a, &s.b, None, &DisplacementOptions::default()).unwrap();
        assert!(d.v.dist(&v(&[-g, 0.0])) <= 1e-8, "{d:?}");
        assert!(d.trusted && !d.analytic);
    }
}

#[test]
fn scenarios_round_trip_through_json() {
    for s in builtin_scenarios() {
        let back = Scenario::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
    }
}

#[test]
fn malformed_specs_are_config_errors() {
    for spec in ["nope", "strip-gap(g=-1)", "strip-gap(q=1)", "vanishing-angle(k=2.5)", "strip-gap(g=1"] {
        assert!(matches!(scenario_from_spec(spec), Err(Error::Config(_))), "{spec}");
    }
    let mut s = scenario_from_spec("strip-gap").unwrap();
    s.dimension = 3;
    let err = Scenario::from_json(&s.to_json().unwrap()).unwrap_err();
    assert!(err.to_string().contains("dimension"), "{err}");
}

#[test]
fn reported_violations_re_verify() {
    for name in FIRST_FOUR {
        let s = scenario_from_spec(name).unwrap();
        let pair = s.pair();
        let est = estimate_modulus(&pair, &[0.05, 0.1, 0.2], &[1e-3, 1e-2, 5e-2, 0.2], &ProbeSampler::default(), None)
            .unwrap();
        for viol in &est.violations {
            assert!(verify_violation(&pair, viol, 1e-12).unwrap(), "{name}: {viol:?}");
        }
        assert!(est.delta_hat.windows(2).all(|d| d[0] <= d[1]));
    }
}

#[test]
fn regularity_metadata_is_honest() {
    // regular pairs carry no violation at δ = ε²/10; the vanishing-angle
    // family has one at every tested cell
    for s in builtin_scenarios() {
        let pair = s.pair();
        let sampler = ProbeSampler {
            extra: s.raw_witnesses(),
            ..ProbeSampler::default()
        };
        let eps = 0.1;
        let est = estimate_modulus(&pair, &[eps], &[eps * eps / 10.0], &sampler, None).unwrap();
        if s.analytic.regularity == Regularity::Regular {
            assert!(est.violations.is_empty(), "{}: {:?}", s.name, est.violations);
        }
    }
    let s = scenario_from_spec("vanishing-angle(k=64)").unwrap();
    let sampler = ProbeSampler {
        extra: s.raw_witnesses(),
        ..ProbeSampler::default()
    };
    let est = estimate_modulus(&s.pair(), &[0.1], &[1e-3, 1e-6, 1e-9], &sampler, None).unwrap();
    assert_eq!(est.violations.len(), 3);
    assert_eq!(est.delta_hat, vec![0.0]);
}

#[test]
fn adversary_witnesses_are_violations() {
    let s = scenario_from_spec("vanishing-angle(k=64)").unwrap();
    let pair = s.pair();
    let eps = 0.1;
    let deltas: Vec<f64> = (1..=8).map(|h| (eps / 3.0f64).min(0.5f64.powi(h))).collect();
    let ws = witness_sequence(&pair, eps, &deltas, &s.raw_witnesses(), &WitnessOptions::default()).unwrap();
    for w in &ws {
        let viol = Violation {
            x: w.point.clone(),
            eps,
            delta: w.delta,
            dist_a: w.dist_a,
            dist_b: w.dist_b,
            dist_to_e: w.dist_to_e,
        };
        assert!(verify_violation(&pair, &viol, 1e-12).unwrap(), "{w:?}");
    }
}

#[test]
fn probes_are_deterministic() {
    let s = scenario_from_spec("ball-tangent").unwrap();
    let pair = s.pair();
    let sampler = ProbeSampler {
        samples: 512,
        seed: 9,
        ..ProbeSampler::default()
    };
    let a = estimate_modulus(&pair, &[0.05, 0.1], &[1e-3, 1e-2], &sampler, None).unwrap();
    let b = estimate_modulus(&pair, &[0.05, 0.1], &[1e-3, 1e-2], &sampler, None).unwrap();
    assert_eq!(a, b);
    let model = PerturbationModel::Random(RandomModel::default());
    let x = d_stability_trial(&pair, &model, 4, 200, 3, 3.0).unwrap();
    let y = d_stability_trial(&pair, &model, 4, 200, 3, 3.0).unwrap();
    assert_eq!(x, y);
    let z = d_stability_trial(&pair, &model, 4, 200, 4, 3.0).unwrap();
    assert_ne!(x, z);
}

#[test]
fn experiment_outputs_are_reproducible() {
    let cfg = ExperimentConfig::new(
        "strip-gap(g=0.5)",
        vec![
            Stage::Apm {
                start: None,
                stop_tol: 1e-12,
            },
            Stage::Metrics { radius: None },
        ],
    );
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let m1 = run_experiment(&cfg, d1.path()).unwrap();
    let m2 = run_experiment(&cfg, d2.path()).unwrap();
    assert_eq!(m1, m2);
    for st in &m1.stages {
        for f in &st.outputs {
            let a = std::fs::read(d1.path().join(&f.path)).unwrap();
            let b = std::fs::read(d2.path().join(&f.path)).unwrap();
            assert_eq!(a, b, "{}", f.path);
        }
    }
}

fn cli_in(dir: &std::path::Path, args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_apm-lab"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .unwrap();
    out.status.code().unwrap()
}

fn cli(args: &[&str]) -> i32 {
    cli_in(tempfile::tempdir().unwrap().path(), args)
}

#[test]
fn cli_exit_codes() {
    assert_eq!(cli(&["scenario", "list"]), 0);
    assert_eq!(cli(&["scenario", "show", "vanishing-angle(k=3)"]), 0);
    assert_eq!(cli(&["apm", "-s", "strip-gap"]), 0);
    assert_eq!(cli(&["metrics", "-s", "strip-gap"]), 0);
    assert_eq!(cli(&["sandwich", "-s", "sandwich-toy"]), 0);
    assert_eq!(cli(&["project", "-s", "ball-tangent", "--point", "3,4"]), 0);
    let probe = ["probe", "-s", "ball-tangent", "--eps-grid", "0.1,0.2", "--windows", "1,2", "--trials", "2", "--horizon", "50"];
    assert_eq!(cli(&probe), 0);
    assert_eq!(cli(&["apm", "-s", "no-such-family"]), 2);
    assert_eq!(cli(&["apm", "-s", "missing/scenario.json"]), 2);
    assert_eq!(cli(&["apm", "-s", "strip-gap", "--start", "1,2,3"]), 2);
    assert_eq!(cli(&["adversary", "-s", "ball-tangent", "--epochs", "3"]), 2);
    assert_eq!(cli(&["adversary", "-s", "touching-quads", "--epochs", "2", "--delta-schedule", "0.03"]), 2);
    assert_eq!(cli(&["--budget", "1", "adversary", "-s", "touching-quads", "--epochs", "3"]), 4);
}

#[test]
fn cli_replays_an_adversary_report() {
    let dir = tempfile::tempdir().unwrap();
    let adv = ["adversary", "-s", "touching-quads", "--epochs", "2", "--delta-schedule", "0.03,0.025"];
    assert_eq!(cli_in(dir.path(), &adv), 0);
    let report = dir.path().join("adversary.json");
    let replay = tempfile::tempdir().unwrap();
    let args = ["perturbed", "-s", "touching-quads", "--schedule", report.to_str().unwrap(), "--start", "0,1.5"];
    assert_eq!(cli_in(replay.path(), &args), 0);
    assert!(replay.path().join("perturbed_trace.csv").is_file());
}

#[test]
fn cli_runs_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::new(
        "halfspace-angle(theta=0.5)",
        vec![
            Stage::Apm {
                start: None,
                stop_tol: 1e-12,
            },
            Stage::Probe {
                eps_grid: vec![0.1],
                delta_grid: vec![1e-3],
                samples: 256,
                window: None,
                windows: vec![],
                trials: 0,
                horizon: 0,
                model: None,
            },
        ],
    );
    let path = dir.path().join("config.json");
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = dir.path().join("out");
    assert_eq!(cli_in(&out, &["run", "--config", path.to_str().unwrap()]), 0);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["stages"].as_array().unwrap().len(), 2);
    std::fs::write(&path, r#"{"scenario": "strip-gap", "pipeline": [{"stage": "apm", "bogus": 1}]}"#).unwrap();
    assert_eq!(cli_in(&out, &["run", "--config", path.to_str().unwrap()]), 2);
}
