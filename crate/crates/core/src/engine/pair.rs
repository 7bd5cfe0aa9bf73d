use std::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConvexSet;
use crate::vector::Vector;

use super::apm::{run_apm_with, RunOptions};
use super::trace::StopReason;
use super::PairProblem;

/// `n` points of `set`: projections of uniform points of the box of
/// half-width `scale` around `P_set(0)`.
pub fn sample_set(set: &ConvexSet, n: usize, scale: f64, seed: u64) -> Result<Vec<Vector>> {
    let center = set.project(&Vector::zeros(set.dim()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let y: Vec<f64> = center
            .as_slice()
            .iter()
            .map(|c| c + rng.gen_range(-scale..=scale))
            .collect();
        out.push(set.project(&Vector::from_slice(&y))?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DisplacementOptions {
    pub starts: usize,
    pub budget: usize,
    pub stop_tol: f64,
    /// Estimates whose spread across starts exceeds this are not trusted.
    pub spread_tol: f64,
    pub box_radius: f64,
    pub seed: u64,
}

impl Default for DisplacementOptions {
    fn default() -> Self {
        DisplacementOptions {
            starts: 8,
            budget: 100_000,
            stop_tol: 1e-14,
            spread_tol: 1e-6,
            box_radius: 10.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Displacement {
    pub v: Vector,
    /// Largest distance of a single start's estimate from the average; zero
    /// for a closed form.
    pub quality: f64,
    pub trusted: bool,
    pub analytic: bool,
    /// Starts whose run ended on the step budget.
    pub budget_exhausted: usize,
}

/// The displacement vector `v = P_{cl(B−A)}(0)`: the closed form when one is
/// supplied, otherwise the average of `b_n − a_n` at the end of classical
/// runs from seeded random starts.
pub fn displacement_vector(
    a: &ConvexSet,
    b: &ConvexSet,
    analytic: Option<&Vector>,
    opts: &DisplacementOptions,
) -> Result<Displacement> {
    if let Some(v) = analytic {
        return Ok(Displacement {
            v: v.clone(),
            quality: 0.0,
            trusted: true,
            analytic: true,
            budget_exhausted: 0,
        });
    }
    if opts.starts == 0 {
        return Err(Error::Config("at least one start is needed".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts: Vec<Vector> = (0..opts.starts)
        .map(|_| {
            let c: Vec<f64> = (0..a.dim())
                .map(|_| rng.gen_range(-opts.box_radius..=opts.box_radius))
                .collect();
            Vector::from_slice(&c)
        })
        .collect();
    let run_opts = RunOptions {
        max_stored: 2,
        ..RunOptions::default()
    };
    let results: Result<Vec<(Vector, bool)>> = starts
        .par_iter()
        .map(|x0| {
            let t = run_apm_with(a, b, x0, opts.budget, opts.stop_tol, &run_opts, |_| Ok(ControlFlow::Continue(())))?;
            let last = t.last().expect("budget ≥ 1");
            Ok((&last.b - &last.a, t.stop_reason == StopReason::Budget))
        })
        .collect();
    let results = results?;
    let mut mean = Vector::zeros(a.dim());
    for (v, _) in &results {
        mean.axpy(1.0 / results.len() as f64, v);
    }
    let quality = results.iter().map(|(v, _)| v.dist(&mean)).fold(0.0, f64::max);
    Ok(Displacement {
        v: mean,
        quality,
        trusted: quality <= opts.spread_tol,
        analytic: false,
        budget_exhausted: results.iter().filter(|(_, b)| *b).count(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixedPointOptions {
    pub step_tol: f64,
    pub budget: usize,
    /// Acceptance tolerance for `dist(e, A)`, `dist(e, B − v)` and the
    /// `Fix(P_B P_A)` cross-check.
    pub accept_tol: f64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            step_tol: 1e-11,
            budget: 1_000_000,
            accept_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestApprox {
    pub e: Vec<Vector>,
    pub f: Vec<Vector>,
    /// `(start index, reason)` for starts that did not yield a verified point.
    pub dropped: Vec<(usize, String)>,
}

/// Fixed points of `P_A P_B` reached from `starts`, with `F = E + v`
/// cross-checked against `Fix(P_B P_A)`.
pub fn best_approx_sets(pair: &PairProblem, starts: &[Vector], opts: &FixedPointOptions) -> Result<BestApprox> {
    let b_minus_v = ConvexSet::translate(pair.b.clone(), -&pair.v)?;
    let outcomes: Vec<std::result::Result<(Vector, Vector), String>> = starts
        .par_iter()
        .map(|x0| -> Result<std::result::Result<(Vector, Vector), String>> {
            let mut y = pair.a.project(x0)?;
            let mut moved = f64::INFINITY;
            for _ in 0..opts.budget {
                let z = pair.a.project(&pair.b.project(&y)?)?;
                moved = z.dist(&y);
                y = z;
                if moved <= opts.step_tol {
                    break;
                }
            }
            if moved > opts.step_tol {
                return Ok(Err(format!("no fixed point within budget (last step {moved:e})")));
            }
            let tol = opts.accept_tol;
            let da = pair.a.dist(&y)?;
            let db = b_minus_v.dist(&y)?;
            if da > tol || db > tol {
                return Ok(Err(format!("dist to A {da:e}, dist to B − v {db:e}")));
            }
            let f = &y + &pair.v;
            let back = pair.b.project(&pair.a.project(&f)?)?;
            if back.dist(&f) > tol {
                return Ok(Err(format!("e + v is not fixed by P_B P_A ({:e})", back.dist(&f))));
            }
            Ok(Ok((y, f)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = BestApprox {
        e: Vec::new(),
        f: Vec::new(),
        dropped: Vec::new(),
    };
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok((e, f)) => {
                out.e.push(e);
                out.f.push(f);
            }
            Err(reason) => out.dropped.push((i, reason)),
        }
    }
    Ok(out)
}

/// Residuals of the three displacement facts on sampled points of `E`, `F`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bb93Report {
    pub samples: usize,
    pub v_norm: f64,
    /// Certified bracket for `dist(A, B)`: a separating-functional lower
    /// bound and the smallest sampled `dist(e, B)`.
    pub dist_lower: f64,
    pub dist_upper: f64,
    /// `max(dist_upper − ‖v‖, ‖v‖ − dist_lower)`
    pub norm_residual: f64,
    /// `max dist(e + v, F)` and `max dist(f − v, E)`
    pub e_plus_v_residual: f64,
    /// `max ‖P_B e − (e + v)‖` and `max ‖P_F e − (e + v)‖`
    pub pb_residual: f64,
    pub pf_residual: f64,
    /// `max ‖P_A f − (f − v)‖` and `max ‖P_E f − (f − v)‖`
    pub pa_residual: f64,
    pub pe_residual: f64,
}

impl Bb93Report {
    pub fn max_projection_residual(&self) -> f64 {
        self.pb_residual
            .max(self.pf_residual)
            .max(self.pa_residual)
            .max(self.pe_residual)
    }
}

pub fn fact_bb93_check(pair: &PairProblem, samples: usize, seed: u64) -> Result<Bb93Report> {
    let (Some(e_set), Some(f_set)) = (&pair.e, &pair.f) else {
        return Err(Error::Config("best approximation sets E and F are required".into()));
    };
    let v = &pair.v;
    let es = sample_set(e_set, samples, 10.0, seed)?;
    let fs = sample_set(f_set, samples, 10.0, seed.wrapping_add(1))?;

    let v_norm = v.norm();
    let dist_lower = match v.normalized() {
        None => 0.0,
        Some(u) => (-pair.b.support(&-&u) - pair.a.support(&u)).max(0.0),
    };
    let mut dist_upper = f64::INFINITY;
    for e in &es {
        dist_upper = dist_upper.min(pair.b.dist(e)?);
    }
    let mut r = Bb93Report {
        samples,
        v_norm,
        dist_lower,
        dist_upper,
        norm_residual: (dist_upper - v_norm).max(v_norm - dist_lower),
        e_plus_v_residual: 0.0,
        pb_residual: 0.0,
        pf_residual: 0.0,
        pa_residual: 0.0,
        pe_residual: 0.0,
    };
    for e in &es {
        let ev = e + v;
        r.e_plus_v_residual = r.e_plus_v_residual.max(f_set.dist(&ev)?);
        r.pb_residual = r.pb_residual.max(pair.b.project(e)?.dist(&ev));
        r.pf_residual = r.pf_residual.max(f_set.project(e)?.dist(&ev));
    }
    for f in &fs {
        let fv = f - v;
        r.e_plus_v_residual = r.e_plus_v_residual.max(e_set.dist(&fv)?);
        r.pa_residual = r.pa_residual.max(pair.a.project(f)?.dist(&fv));
        r.pe_residual = r.pe_residual.max(e_set.project(f)?.dist(&fv));
    }
    Ok(r)
}
