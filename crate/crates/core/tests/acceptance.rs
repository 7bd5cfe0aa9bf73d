//! End-to-end acceptance checks. Each prints one PASS/FAIL line; the test
//! fails if any of them does.

mod common;

use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use apm_lab::adversary::{
    black_box, sandwich_verify, witness_sequence, BlackBoxParams, SandwichOptions, SandwichParams, VerifyOptions,
    WitnessOptions,
};
use apm_lab::engine::{fact_bb93_check, run_apm, PairProblem};
use apm_lab::experiment::{adversary_run, ExperimentConfig};
use apm_lab::metrics::{excess_report, excess_upper_bound, hausdorff, Method, Sampler};
use apm_lab::probe::{d_stability_trial, estimate_modulus, verify_violation, PerturbationModel, ProbeSampler, RandomModel};
use apm_lab::scenario::scenario_from_spec;
use apm_lab::ConvexSet;
use common::*;
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() <= limit, || {
        format!("took {:.1}s, limit {limit}s", elapsed.as_secs_f64())
    })
}

fn projections() -> Outcome {
    let t = Instant::now();
    let (mut worst_vi, mut worst_ne) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let n = 1800;
    for i in 0..n {
        let mut r = rng(0xacce97 + i as u64);
        let kind = KINDS[i % KINDS.len()];
        let dim = r.gen_range(1..=5);
        let q = gaussian(&mut r, dim, 1.0);
        let c = random_set(&mut r, kind, dim, &q);
        let x = &q + &gaussian(&mut r, dim, 3.0);
        let y = &q + &gaussian(&mut r, dim, 3.0);
        let px = c.project(&x).map_err(|e| format!("{kind}: {e}"))?;
        let py = c.project(&y).map_err(|e| format!("{kind}: {e}"))?;
        for z in points_in(&mut r, &c, &q, 20) {
            let slack = 1e-8 * (1.0 + x.norm()) * (1.0 + z.norm());
            worst_vi = worst_vi.max((&x - &px).dot(&(&z - &px)) / slack);
        }
        worst_ne = worst_ne.max(px.dist(&py) - x.dist(&y));
        ensure(worst_vi <= 1.0, || format!("instance {i} ({kind}): variational inequality off by {worst_vi:.2}× slack"))?;
        ensure(worst_ne <= 1e-9, || format!("instance {i} ({kind}): expansion {worst_ne:e}"))?;
    }
    within(t.elapsed(), 30.0)?;
    Ok(format!(
        "{n} instances, worst VI ratio {worst_vi:.2e}, worst expansion {worst_ne:.1e}, {:.2}s",
        t.elapsed().as_secs_f64()
    ))
}

fn best_approximation() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for name in ["halfspace-angle", "strip-gap", "ball-tangent", "vanishing-angle"] {
        let s = scenario_from_spec(name).map_err(|e| e.to_string())?;
        let r = fact_bb93_check(&s.pair(), 128, 1).map_err(|e| format!("{name}: {e}"))?;
        ensure(r.norm_residual <= 1e-8, || format!("{name}: |‖v‖ − dist| = {:e}", r.norm_residual))?;
        ensure(r.e_plus_v_residual <= 1e-6, || format!("{name}: E + v vs F {:e}", r.e_plus_v_residual))?;
        ensure(r.max_projection_residual() <= 1e-8, || {
            format!("{name}: projection residual {:e}", r.max_projection_residual())
        })?;
        worst = worst.max(r.norm_residual).max(r.max_projection_residual());
    }
    within(t.elapsed(), 10.0)?;
    Ok(format!("4 scenarios, 128 points each, worst residual {worst:.1e}, {:.2}s", t.elapsed().as_secs_f64()))
}

fn sandwich() -> Outcome {
    let s = scenario_from_spec("sandwich-toy").map_err(|e| e.to_string())?;
    let spec = s.analytic.sandwich.clone().ok_or("no sandwich data")?;
    let params = SandwichParams::new(spec.z, spec.w).map_err(|e| e.to_string())?;
    let rep = sandwich_verify(&params, &s.a, &s.b, 10_000, &SandwichOptions::default()).map_err(|e| e.to_string())?;
    ensure(rep.plane_dist <= 1e-8, || format!("plane distance {:e}", rep.plane_dist))?;
    ensure(rep.segment_dist_a.max(rep.segment_dist_b) <= 1e-8, || {
        format!("segment distances {:e}, {:e}", rep.segment_dist_a, rep.segment_dist_b)
    })?;
    ensure(rep.final_dist_to_w <= 1e-6 && rep.reached_at <= 10_000, || format!("{} from w", rep.final_dist_to_w))?;
    Ok(format!("within 1e-6 of w after {} steps, plane distance {:.1e}", rep.reached_at, rep.plane_dist))
}

fn black_boxes() -> Outcome {
    let sampler = Sampler::default();
    let instances = 6;
    let mut worst: f64 = 0.0;
    for seed in 0..instances {
        let (a, b, p, w) = touching_polygons(seed);
        let delta = rng(seed + 100).gen_range(0.02..0.1);
        let params = BlackBoxParams::new(v(&[1.0, 0.0]), 0.0, radius_about(&a, &p), p, w, delta)
            .map_err(|e| e.to_string())?;
        let (sets, cert) = black_box(&a, &b, &params, &VerifyOptions::default()).map_err(|e| format!("{seed}: {e}"))?;
        let bound = 3.0 * delta + 1e-8;
        for (name, orig, hat) in [("A", &a, &sets.a_hat), ("B", &b, &sets.b_hat)] {
            let (e, method, _) = excess_report(orig, hat, &sampler).map_err(|e| e.to_string())?;
            ensure(method == Method::VertexExact, || format!("{seed}: e({name}, hat) not vertex-exact"))?;
            let back = excess_upper_bound(hat, orig).map_err(|e| e.to_string())?.ok_or("no structural bound")?;
            let d = e.max(back);
            ensure(d <= bound, || format!("instance {seed}: D_H({name}, hat) ≤ {d} > 3δ = {}", 3.0 * delta))?;
            worst = worst.max(d / (3.0 * delta));
        }
        ensure(cert.pinning <= 1e-9, || format!("instance {seed}: pinning {:e}", cert.pinning))?;
        ensure(cert.final_dist_to_w <= 1e-6, || format!("instance {seed}: {} from w", cert.final_dist_to_w))?;
    }
    Ok(format!("{instances} polygon pairs, worst D_H/3δ {worst:.3}"))
}

fn vanishing_angle_schedule() -> Outcome {
    let t = Instant::now();
    let spec = "vanishing-angle(k=64)";
    let s = scenario_from_spec(spec).map_err(|e| e.to_string())?;
    let eps = 0.1;
    let run = adversary_run(&s, &ExperimentConfig::new(spec, vec![]), eps, 8, None, 2.0, None)
        .map_err(|e| e.to_string())?;
    ensure(run.checkpoints.len() == 8, || format!("{} checkpoints", run.checkpoints.len()))?;
    ensure(run.min_separation() >= eps - 1e-6, || format!("checkpoint at distance {}", run.min_separation()))?;
    for (h, ep) in run.epochs.iter().enumerate() {
        let d = (eps / 3.0).min(0.5f64.powi(h as i32 + 1));
        ensure(ep.hausdorff_a.hausdorff <= 9.0 * d + 1e-8, || {
            format!("epoch {}: D_H(A, Â) = {} > 9δ", h + 1, ep.hausdorff_a.hausdorff)
        })?;
        ensure(ep.hausdorff_b.hausdorff <= 10.0 * d + 1e-8, || {
            format!("epoch {}: D_H(B, B̂) = {} > 10δ", h + 1, ep.hausdorff_b.hausdorff)
        })?;
    }
    ensure(run.aw_certificate, || "Attouch-Wets certificate rejected".into())?;
    within(t.elapsed(), 60.0)?;
    Ok(format!(
        "8 epochs, min separation {:.4}, {} steps, {:.2}s",
        run.min_separation(),
        run.schedule.total_len(),
        t.elapsed().as_secs_f64()
    ))
}

fn random_perturbations() -> Outcome {
    let ball = ConvexSet::ball(v(&[0.0, 0.0]), 1.0).map_err(|e| e.to_string())?;
    let half = ConvexSet::halfspace(v(&[1.0, 0.0]), 0.0).map_err(|e| e.to_string())?;
    let both = ConvexSet::intersect([ball.clone(), half.clone()]).map_err(|e| e.to_string())?;
    let e = Arc::new(both);
    let pair = PairProblem::new(Arc::new(ball), Arc::new(half))
        .with_v(v(&[0.0, 0.0]), true)
        .with_best_approx(e.clone(), e);
    let model = PerturbationModel::Random(RandomModel::default());
    let rep = d_stability_trial(&pair, &model, 20, 10_000, 5, 3.0).map_err(|e| e.to_string())?;
    let hit = rep.reached(1e-2);
    ensure(hit == 20, || format!("{hit}/20 within 1e-2, worst {}", rep.max_terminal_dist))?;
    Ok(format!("20/20 trials, worst terminal distance {:.2e}", rep.max_terminal_dist))
}

fn two_lines() -> Outcome {
    let mut worst: f64 = 0.0;
    for theta in [std::f64::consts::FRAC_PI_6, std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_3] {
        let a = Arc::new(ConvexSet::span(2, vec![v(&[1.0, 0.0])]).map_err(|e| e.to_string())?);
        let b = Arc::new(ConvexSet::span(2, vec![v(&[theta.cos(), theta.sin()])]).map_err(|e| e.to_string())?);
        let trace = run_apm(&PairProblem::new(a, b), &v(&[0.3, 2.0]), 20, 0.0).map_err(|e| e.to_string())?;
        for w in trace.records.windows(2) {
            let ratio = w[1].a.norm() / w[0].a.norm();
            worst = worst.max((ratio - theta.cos().powi(2)).abs());
        }
    }
    ensure(worst <= 1e-6, || format!("contraction off by {worst:e}"))?;
    Ok(format!("θ ∈ {{π/6, π/4, π/3}}, worst deviation {worst:.1e}"))
}

fn hausdorff_vs_grid() -> Outcome {
    let h = 1e-3;
    let n = 20;
    let mut worst: f64 = 0.0;
    for seed in 0..n {
        let mut r = rng(0x9e1d + seed);
        let (np, nq) = (r.gen_range(3..=7), r.gen_range(3..=7));
        let p = hull(&random_points_2d(&mut r, np, [0.0, 0.0], 0.5));
        let c = [r.gen_range(-0.8..0.8), r.gen_range(-0.8..0.8)];
        let q = hull(&random_points_2d(&mut r, nq, c, 0.5));
        let rep = hausdorff(&polytope_2d(&p), &polytope_2d(&q), &Sampler::default()).map_err(|e| e.to_string())?;
        ensure(rep.method == Method::VertexExact, || format!("instance {seed}: {:?}", rep.method))?;
        let grid = grid_excess(&p, &q, h).max(grid_excess(&q, &p, h));
        ensure(grid <= rep.hausdorff + 1e-12, || format!("instance {seed}: grid {grid} above {}", rep.hausdorff))?;
        worst = worst.max((rep.hausdorff - grid).abs());
    }
    ensure(worst <= 2e-3, || format!("deviation {worst:e}"))?;
    Ok(format!("{n} polygon pairs at pitch 1e-3, worst deviation {worst:.1e}"))
}

fn probe_soundness() -> Outcome {
    let spec = "vanishing-angle(k=64)";
    let s = scenario_from_spec(spec).map_err(|e| e.to_string())?;
    let pair = s.pair();
    let eps = 0.1;
    let deltas: Vec<f64> = (1..=8).map(|h| (eps / 3.0f64).min(0.5f64.powi(h))).collect();
    let ws = witness_sequence(&pair, eps, &deltas, &s.raw_witnesses(), &WitnessOptions::default())
        .map_err(|e| e.to_string())?;
    for (i, w) in ws.iter().enumerate() {
        let sampler = ProbeSampler {
            samples: 0,
            extra: vec![w.point.clone()],
            ..ProbeSampler::default()
        };
        let est = estimate_modulus(&pair, &[eps], &[w.delta], &sampler, None).map_err(|e| e.to_string())?;
        ensure(est.violations.len() == 1, || format!("witness {} not registered at δ = {}", i + 1, w.delta))?;
        ensure(verify_violation(&pair, &est.violations[0], 1e-12).map_err(|e| e.to_string())?, || {
            format!("witness {} fails re-verification", i + 1)
        })?;
    }
    let s1 = scenario_from_spec("halfspace-angle").map_err(|e| e.to_string())?;
    let p1 = s1.pair();
    let est = estimate_modulus(&p1, &[0.1], &[1e-3, 1e-2, 5e-2], &ProbeSampler::default(), None)
        .map_err(|e| e.to_string())?;
    let mut false_hits = 0;
    for viol in &est.violations {
        if !verify_violation(&p1, viol, 1e-12).map_err(|e| e.to_string())? {
            false_hits += 1;
        }
    }
    ensure(false_hits == 0, || format!("{false_hits} false violations on halfspace-angle"))?;
    Ok(format!(
        "{} witnesses registered; halfspace-angle violations re-verified: {}",
        ws.len(),
        est.violations.len()
    ))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("projection inequalities", projections),
        ("best approximation facts", best_approximation),
        ("planar confinement", sandwich),
        ("black-box certificates", black_boxes),
        ("vanishing-angle schedule", vanishing_angle_schedule),
        ("random perturbations", random_perturbations),
        ("two-line contraction", two_lines),
        ("Hausdorff vs grid", hausdorff_vs_grid),
        ("probe soundness", probe_soundness),
    ];
    let mut failed = Vec::new();
    let mut out = std::io::stdout().lock();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let line = match check() {
            Ok(detail) => format!("criterion {} ({name}): PASS  {detail}", i + 1),
            Err(why) => {
                failed.push(i + 1);
                format!("criterion {} ({name}): FAIL  {why}", i + 1)
            }
        };
        // straight to stdout so the lines survive output capture
        writeln!(out, "{line}").unwrap();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
