use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::engine::{run_apm_with, RunOptions, Trace};
use crate::error::{Error, Result};
use crate::geometry::ConvexSet;
use crate::vector::Vector;

/// Two orthogonal vectors `z`, `w` with `f = ⟨z, ·⟩` and
/// `f̂ = ⟨z + αw, ·⟩`, `α = ‖z‖²/‖w‖²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichParams {
    pub z: Vector,
    pub w: Vector,
    pub alpha: f64,
    /// `z/‖z‖`
    pub f_normal: Vector,
    pub f_hat_normal: Vector,
}

impl SandwichParams {
    pub fn new(z: Vector, w: Vector) -> Result<Self> {
        if z.dim() != w.dim() {
            return Err(Error::Config("z and w must have the same dimension".into()));
        }
        let f_normal = z
            .normalized()
            .ok_or_else(|| Error::Hypothesis("z must be nonzero".into()))?;
        if w.norm() == 0.0 {
            return Err(Error::Hypothesis("w must be nonzero".into()));
        }
        if w.dot(&z).abs() > 1e-12 {
            return Err(Error::Hypothesis(format!("⟨w, z⟩ = {:e} is not zero", w.dot(&z))));
        }
        let alpha = z.norm_sq() / w.norm_sq();
        let mut f_hat_normal = z.clone();
        f_hat_normal.axpy(alpha, &w);
        Ok(SandwichParams {
            z,
            w,
            alpha,
            f_normal,
            f_hat_normal,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SandwichOptions {
    /// Stop once `‖a_n − w‖` is below this.
    pub target: f64,
    pub tol: f64,
    /// Points per segment for the inclusion checks.
    pub inclusion_samples: usize,
}

impl Default for SandwichOptions {
    fn default() -> Self {
        SandwichOptions {
            target: 1e-6,
            tol: 1e-8,
            inclusion_samples: 21,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub trace: Trace,
    /// Largest distance of an iterate to `span{z, w}`.
    pub plane_dist: f64,
    /// Largest distance of an A-side iterate to `[z, w]` and of a B-side
    /// iterate to `[0, w]`.
    pub segment_dist_a: f64,
    pub segment_dist_b: f64,
    /// First step with `‖a_n − w‖ ≤ target`.
    pub reached_at: usize,
    pub final_dist_to_w: f64,
}

/// Runs alternating projections from `P_A(0)` and checks that every iterate
/// stays on `[z, w]` (A side) or `[0, w]` (B side) until it is within
/// `opts.target` of `w`.
pub fn sandwich_verify(
    params: &SandwichParams,
    a: &ConvexSet,
    b: &ConvexSet,
    budget: usize,
    opts: &SandwichOptions,
) -> Result<SandwichReport> {
    let SandwichParams { z, w, .. } = params;
    let dim = z.dim();
    if a.dim() != dim || b.dim() != dim {
        return Err(Error::Config("sets and vectors differ in dimension".into()));
    }
    let tol = opts.tol;
    let origin = Vector::zeros(dim);
    let k = opts.inclusion_samples.max(2);
    for i in 0..k {
        let t = i as f64 / (k - 1) as f64;
        let on_zw = z.lerp(w, t);
        let d = a.dist(&on_zw)?;
        if d > tol {
            return Err(Error::Hypothesis(format!("[z, w] ⊄ A: dist {d:e} at t = {t}")));
        }
        let on_0w = origin.lerp(w, t);
        let d = b.dist(&on_0w)?;
        if d > tol {
            return Err(Error::Hypothesis(format!("[0, w] ⊄ B: dist {d:e} at t = {t}")));
        }
    }
    let fh = &params.f_hat_normal;
    let inf_a = -a.support(&-fh);
    if inf_a < fh.dot(w) - tol {
        return Err(Error::Hypothesis(format!(
            "A ⊄ [f̂ ≥ f̂(w)]: inf f̂(A) ≤ {inf_a:e} < {:e}",
            fh.dot(w)
        )));
    }
    let sup_b = b.support(z);
    if sup_b > tol {
        return Err(Error::Hypothesis(format!("B ⊄ [f ≤ 0]: sup f(B) ≥ {sup_b:e}")));
    }

    let plane = ConvexSet::span(dim, vec![z.clone(), w.clone()])?;
    let seg_a = ConvexSet::segment(z.clone(), w.clone())?;
    let seg_b = ConvexSet::segment(origin.clone(), w.clone())?;
    let a0 = a.project(&origin)?;
    let mut plane_dist = plane.dist(&a0)?;
    let mut seg_dist_a = seg_a.dist(&a0)?;
    let mut seg_dist_b: f64 = 0.0;
    let mut reached = (a0.dist(w) <= opts.target).then_some(0);
    let confined = |what: &str, step: usize, d: f64| {
        if d > tol {
            Err(Error::Certificate {
                what: format!("confinement of {what} at step {step}"),
                measured: d,
                bound: tol,
            })
        } else {
            Ok(())
        }
    };
    confined("a_0", 0, plane_dist.max(seg_dist_a))?;

    let trace = if reached.is_some() {
        Trace {
            start: a0.clone(),
            records: Vec::new(),
            steps: 0,
            stop_reason: crate::engine::StopReason::Converged,
            block_boundaries: Vec::new(),
        }
    } else {
        run_apm_with(a, b, &a0, budget, 0.0, &RunOptions::default(), |s| {
            let pb = plane.dist(s.b)?;
            let sb = seg_b.dist(s.b)?;
            confined("b", s.step, pb.max(sb))?;
            let pa = plane.dist(s.a)?;
            let sa = seg_a.dist(s.a)?;
            confined("a", s.step, pa.max(sa))?;
            plane_dist = plane_dist.max(pa).max(pb);
            seg_dist_a = seg_dist_a.max(sa);
            seg_dist_b = seg_dist_b.max(sb);
            if s.a.dist(w) <= opts.target {
                reached = Some(s.step);
                return Ok(ControlFlow::Break(()));
            }
            Ok(ControlFlow::Continue(()))
        })?
    };
    let final_dist = trace.final_a().dist(w);
    let Some(reached_at) = reached else {
        return Err(Error::Budget {
            phase: "sandwich iteration".into(),
            steps: trace.steps,
            achieved: final_dist,
        });
    };
    Ok(SandwichReport {
        trace,
        plane_dist,
        segment_dist_a: seg_dist_a,
        segment_dist_b: seg_dist_b,
        reached_at,
        final_dist_to_w: final_dist,
    })
}
