//! Empirical regularity: searching for points close to both `A` and `B − v`
//! yet far from `E`, and randomized perturbed runs.
//!
//! Finding no violation is evidence at the given sampling budget, never a
//! proof of regularity.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::best_approx_set;
use crate::engine::{run_perturbed, PairProblem, PerturbationSchedule, RunOptions};
use crate::error::{Error, Result};
use crate::geometry::ConvexSet;
use crate::vector::Vector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeSampler {
    /// Random `y` drawn per search.
    pub samples: usize,
    /// `y` is uniform in the cube of this half-width around `P_E(0)`.
    pub box_half_width: f64,
    pub seed: u64,
    /// Candidates tested as given, e.g. a scenario's witness points.
    pub extra: Vec<Vector>,
}

impl Default for ProbeSampler {
    fn default() -> Self {
        ProbeSampler {
            samples: 4096,
            box_half_width: 2.0,
            seed: 0,
            extra: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub x: Vector,
    pub eps: f64,
    pub delta: f64,
    pub dist_a: f64,
    /// `dist(x, B − v)`
    pub dist_b: f64,
    pub dist_to_e: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusEstimate {
    pub eps_grid: Vec<f64>,
    pub delta_grid: Vec<f64>,
    /// Per `ε`, the largest tested `δ` without a violation (0 if every tested
    /// `δ` has one), regularized to be nondecreasing in `ε`.
    pub delta_hat: Vec<f64>,
    /// One violation per violated `(ε, δ)` cell, the closest-to-both point.
    pub violations: Vec<Violation>,
    /// Cells with no violation: evidence at `candidates` points only.
    pub inconclusive: Vec<(f64, f64)>,
    pub candidates: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_radius: Option<f64>,
}

struct Candidate {
    x: Vector,
    reach: f64,
    dist_a: f64,
    dist_b: f64,
    dist_e: f64,
}

fn shifted_b(pair: &PairProblem) -> Result<Arc<ConvexSet>> {
    if pair.v.norm() == 0.0 {
        Ok(pair.b.clone())
    } else {
        Ok(Arc::new(ConvexSet::translate(pair.b.clone(), -&pair.v)?))
    }
}

/// Points `λ P_A(y) + (1 − λ) P_{B−v}(y)` for random `y` and `λ`, plus the
/// extra candidates, with their three distances.
fn candidates(pair: &PairProblem, e: &ConvexSet, sampler: &ProbeSampler, window: Option<f64>) -> Result<Vec<Candidate>> {
    let dim = pair.dim();
    let b = shifted_b(pair)?;
    let center = e.project(&Vector::zeros(dim))?;
    let half = match window {
        Some(r) => sampler.box_half_width.min(r),
        None => sampler.box_half_width,
    };
    let random: Result<Vec<Vector>> = (0..sampler.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
            rng.set_stream(i as u64);
            let mut y = center.clone();
            let r: Vec<f64> = (0..dim).map(|_| rng.gen_range(-half..=half)).collect();
            y.axpy(1.0, &Vector::from_slice(&r));
            let lam: f64 = rng.gen();
            Ok(pair.a.project(&y)?.lerp(&b.project(&y)?, 1.0 - lam))
        })
        .collect();
    let mut xs = random?;
    xs.extend(sampler.extra.iter().cloned());
    if let Some(r) = window {
        xs.retain(|x| x.norm() <= r);
    }
    xs.into_par_iter()
        .map(|x| {
            let dist_a = pair.a.dist(&x)?;
            let dist_b = b.dist(&x)?;
            let dist_e = e.dist(&x)?;
            Ok(Candidate {
                reach: dist_a.max(dist_b),
                x,
                dist_a,
                dist_b,
                dist_e,
            })
        })
        .collect()
}

/// Searches for `x` with `max{dist(x, A), dist(x, B − v)} ≤ δ` and
/// `dist(x, E) > ε` over the grid. With `window = r`, only `‖x‖ ≤ r` counts.
pub fn estimate_modulus(
    pair: &PairProblem,
    eps_grid: &[f64],
    delta_grid: &[f64],
    sampler: &ProbeSampler,
    window: Option<f64>,
) -> Result<ModulusEstimate> {
    if eps_grid.is_empty() || delta_grid.is_empty() {
        return Err(Error::Config("ε and δ grids must be nonempty".into()));
    }
    if eps_grid.iter().chain(delta_grid).any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::Config("grid values must be positive and finite".into()));
    }
    let mut eps_grid = eps_grid.to_vec();
    let mut delta_grid = delta_grid.to_vec();
    eps_grid.sort_by(f64::total_cmp);
    delta_grid.sort_by(f64::total_cmp);
    let e = best_approx_set(pair)?;
    let cands = candidates(pair, &e, sampler, window)?;

    let mut raw = Vec::with_capacity(eps_grid.len());
    let mut violations = Vec::new();
    let mut inconclusive = Vec::new();
    for &eps in &eps_grid {
        let best = cands
            .iter()
            .filter(|c| c.dist_e > eps)
            .min_by(|p, q| p.reach.total_cmp(&q.reach));
        let mut hat = 0.0;
        for &delta in &delta_grid {
            match best {
                Some(c) if c.reach <= delta => violations.push(Violation {
                    x: c.x.clone(),
                    eps,
                    delta,
                    dist_a: c.dist_a,
                    dist_b: c.dist_b,
                    dist_to_e: c.dist_e,
                }),
                _ => {
                    hat = delta;
                    inconclusive.push((eps, delta));
                }
            }
        }
        raw.push(hat);
    }
    // nondecreasing in ε: a violation at ε is one at every smaller ε
    let mut delta_hat = raw;
    for i in (0..delta_hat.len().saturating_sub(1)).rev() {
        delta_hat[i] = delta_hat[i].min(delta_hat[i + 1]);
    }
    Ok(ModulusEstimate {
        eps_grid,
        delta_grid,
        delta_hat,
        violations,
        inconclusive,
        candidates: cands.len(),
        window_radius: window,
    })
}

/// Recomputes the three distances of a violation from scratch and checks
/// them against `δ` and `ε` with half the tolerance.
pub fn verify_violation(pair: &PairProblem, v: &Violation, tol: f64) -> Result<bool> {
    let e = best_approx_set(pair)?;
    let b = shifted_b(pair)?;
    let slack = 0.5 * tol;
    Ok(pair.a.dist(&v.x)? <= v.delta + slack && b.dist(&v.x)? <= v.delta + slack && e.dist(&v.x)? > v.eps - slack)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowFrontier {
    pub radius: f64,
    /// `δ̂(ε)` inside the window.
    pub delta_hat: f64,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundedReport {
    pub eps: f64,
    pub windows: Vec<WindowFrontier>,
    pub global_delta_hat: f64,
    /// Every windowed violation re-verified as a global one.
    pub consistent: bool,
    /// The two largest windows give the same frontier.
    pub stabilized: bool,
}

/// Frontiers at a single `ε` inside growing windows `r𝔹`, compared with the
/// unrestricted search.
pub fn bounded_vs_global_check(
    pair: &PairProblem,
    windows: &[f64],
    eps: f64,
    delta_grid: &[f64],
    sampler: &ProbeSampler,
) -> Result<BoundedReport> {
    let mut windows = windows.to_vec();
    windows.sort_by(f64::total_cmp);
    let global = estimate_modulus(pair, &[eps], delta_grid, sampler, None)?;
    let mut consistent = true;
    let mut out = Vec::with_capacity(windows.len());
    for &r in &windows {
        let est = estimate_modulus(pair, &[eps], delta_grid, sampler, Some(r))?;
        for v in &est.violations {
            consistent &= v.x.norm() <= r && verify_violation(pair, v, 1e-12)?;
        }
        out.push(WindowFrontier {
            radius: r,
            delta_hat: est.delta_hat[0],
            violations: est.violations.len(),
        });
    }
    let stabilized = match out.as_slice() {
        [.., x, y] => x.delta_hat == y.delta_hat,
        _ => true,
    };
    Ok(BoundedReport {
        eps,
        windows: out,
        global_delta_hat: global.delta_hat[0],
        consistent,
        stabilized,
    })
}

/// Per-step random perturbations with magnitude `δ_n = c / n^p`: `A_n` is `A`
/// dilated and translated by up to `δ_n`, likewise `B_n`, optionally
/// intersected with `r_n𝔹`, `r_n = r0 + n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomModel {
    pub c: f64,
    pub p: f64,
    pub translate: bool,
    pub dilate: bool,
    pub truncate_r0: Option<f64>,
}

impl Default for RandomModel {
    fn default() -> Self {
        RandomModel {
            c: 1.0,
            p: 1.0,
            translate: true,
            dilate: true,
            truncate_r0: None,
        }
    }
}

impl RandomModel {
    pub fn delta(&self, n: usize) -> f64 {
        self.c / (n as f64).powf(self.p)
    }

    fn perturb(&self, set: &Arc<ConvexSet>, n: usize, rng: &mut ChaCha8Rng) -> Result<Arc<ConvexSet>> {
        let d = self.delta(n);
        let mut s = set.clone();
        if self.dilate && d > 0.0 {
            let r = d * rng.gen::<f64>();
            if r > 0.0 {
                s = Arc::new(ConvexSet::dilation(s, r)?);
            }
        }
        if self.translate && d > 0.0 {
            let g: Vec<f64> = (0..set.dim()).map(|_| StandardNormal.sample(rng)).collect();
            if let Some(u) = Vector::from_slice(&g).normalized() {
                s = Arc::new(ConvexSet::translate(s, u.scaled(d * rng.gen::<f64>()))?);
            }
        }
        if let Some(r0) = self.truncate_r0 {
            s = Arc::new(s.truncate(r0 + n as f64)?);
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationModel {
    Random(RandomModel),
    /// A fixed schedule, e.g. one built by the adversary.
    Schedule { schedule: PerturbationSchedule, start: Vector },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial: usize,
    pub start: Vector,
    pub steps: usize,
    pub terminal_dist_to_e: f64,
    /// `(n, dist(a_n, E))` at `n = 1, 2, 4, …` and the last step.
    pub profile: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub seed: u64,
    pub horizon: usize,
    pub trials: Vec<TrialReport>,
    pub max_terminal_dist: f64,
}

impl StabilityReport {
    /// Trials with `dist(a_n, E) ≤ target` at the horizon.
    pub fn reached(&self, target: f64) -> usize {
        self.trials.iter().filter(|t| t.terminal_dist_to_e <= target).count()
    }

    /// Rows `trial,step,dist_to_e` for plotting.
    pub fn write_profiles_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["trial", "step", "dist_to_e"])?;
        for t in &self.trials {
            for (n, d) in &t.profile {
                w.write_record([t.trial.to_string(), n.to_string(), format!("{d:e}")])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn profile_step(n: usize, horizon: usize) -> bool {
    n.is_power_of_two() || n == horizon
}

/// Randomized perturbed runs of `horizon` steps; trial `i` starts from a
/// Gaussian point of norm `start_scale` and uses its own seeded stream.
pub fn d_stability_trial(
    pair: &PairProblem,
    model: &PerturbationModel,
    trials: usize,
    horizon: usize,
    seed: u64,
    start_scale: f64,
) -> Result<StabilityReport> {
    let e = best_approx_set(pair)?;
    let reports: Result<Vec<TrialReport>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            match model {
                PerturbationModel::Random(m) => {
                    let g: Vec<f64> = (0..pair.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let start = Vector::from_slice(&g)
                        .normalized()
                        .unwrap_or_else(|| Vector::basis(pair.dim(), 0))
                        .scaled(start_scale);
                    let mut x = start.clone();
                    let mut profile = Vec::new();
                    let mut d = e.dist(&x)?;
                    for n in 1..=horizon {
                        let b_n = m.perturb(&pair.b, n, &mut rng)?;
                        let a_n = m.perturb(&pair.a, n, &mut rng)?;
                        x = a_n.project(&b_n.project(&x)?)?;
                        if profile_step(n, horizon) {
                            d = e.dist(&x)?;
                            profile.push((n, d));
                        }
                    }
                    Ok(TrialReport {
                        trial: i,
                        start,
                        steps: horizon,
                        terminal_dist_to_e: d,
                        profile,
                    })
                }
                PerturbationModel::Schedule { schedule, start } => {
                    let trace = run_perturbed(schedule, start, &RunOptions::with_refs(pair.references()))?;
                    let steps = trace.steps.min(horizon);
                    let mut profile = Vec::new();
                    for r in &trace.records {
                        if r.step <= steps && profile_step(r.step, steps) {
                            profile.push((r.step, e.dist(&r.a)?));
                        }
                    }
                    let last = trace.record_at(steps).map(|r| r.a.clone()).unwrap_or_else(|| start.clone());
                    Ok(TrialReport {
                        trial: i,
                        start: start.clone(),
                        steps,
                        terminal_dist_to_e: e.dist(&last)?,
                        profile,
                    })
                }
            }
        })
        .collect();
    let trials = reports?;
    let max_terminal_dist = trials.iter().map(|t| t.terminal_dist_to_e).fold(0.0, f64::max);
    Ok(StabilityReport {
        seed,
        horizon,
        trials,
        max_terminal_dist,
    })
}
