use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::engine::{run_apm_with, Block, PairProblem, PerturbationSchedule, Provenance, RunOptions, StopReason};
use crate::error::{Error, Result};
use crate::metrics::{aw_certify, hausdorff, AwOptions};
use crate::tol::Tolerances;
use crate::vector::Vector;

use super::{
    best_approx_set, check_at_most, classical_until, construct_black_box, lockstep, radius_about, AdversaryRun,
    BlackBoxParams, Checkpoint, EpochReport, Separator,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparatedParams {
    pub eps0: f64,
    /// `δ_h` handed to the black box for the `h`-th witness.
    pub deltas: Vec<f64>,
    /// `sup f(B) ≤ level ≤ inf f(A)`.
    pub separator: Separator,
    /// Cap on the steps of each classical or black-box phase.
    pub budget_per_phase: usize,
    /// Step size at which a classical run is taken to have reached its limit.
    pub limit_tol: f64,
    #[serde(default)]
    pub tol: Tolerances,
    #[serde(default)]
    pub aw: AwOptions,
}

impl SeparatedParams {
    pub fn new(eps0: f64, deltas: Vec<f64>, separator: Separator) -> Self {
        SeparatedParams {
            eps0,
            deltas,
            separator,
            budget_per_phase: 1_000_000,
            limit_tol: 1e-14,
            tol: Tolerances::default(),
            aw: AwOptions::default(),
        }
    }
}

/// Alternates classical blocks, run from the current point until within `ε₀`
/// of their limit `p_h ∈ E`, with black-box blocks built from `p_h` toward
/// the next witness and run until within `ε₀` of it.
pub fn build_separated_schedule(
    pair: &PairProblem,
    start: &Vector,
    witnesses: &[Vector],
    params: &SeparatedParams,
) -> Result<AdversaryRun> {
    let eps0 = params.eps0;
    let tol = &params.tol;
    if !(eps0 > 0.0) {
        return Err(Error::Config(format!("ε₀ must be > 0, got {eps0}")));
    }
    if witnesses.is_empty() || witnesses.len() != params.deltas.len() {
        return Err(Error::Config(format!(
            "need one δ per witness, got {} witnesses and {} deltas",
            witnesses.len(),
            params.deltas.len()
        )));
    }
    if let Some(d) = params.deltas.iter().find(|d| !(**d > 0.0 && **d <= eps0)) {
        return Err(Error::Hypothesis(format!("black-box δ must lie in (0, ε₀], got {d}")));
    }
    let radius_a = pair.a.bound_radius();
    if !radius_a.is_finite() {
        return Err(Error::Hypothesis("A must be bounded".into()));
    }
    let e = best_approx_set(pair)?;
    let sep = &params.separator;
    let cap = params.budget_per_phase;

    let mut schedule = PerturbationSchedule::new();
    let mut checkpoints = Vec::new();
    let mut epochs = Vec::new();
    let mut x = start.clone();
    for (h, (w, &delta)) in witnesses.iter().zip(&params.deltas).enumerate() {
        let epoch = h + 1;
        let dw = e.dist(w)?;
        if dw <= 3.0 * eps0 {
            return Err(Error::Hypothesis(format!(
                "witness {epoch} is only {dw:e} from E, need more than 3ε₀"
            )));
        }
        let limit_run = run_apm_with(
            &pair.a,
            &pair.b,
            &x,
            cap,
            params.limit_tol,
            &RunOptions {
                max_stored: 2,
                ..RunOptions::default()
            },
            |_| Ok(ControlFlow::Continue(())),
        )?;
        if limit_run.stop_reason == StopReason::Budget {
            return Err(Error::Budget {
                phase: format!("classical limit, epoch {epoch}"),
                steps: limit_run.steps,
                achieved: limit_run.last().map(|r| r.step_size).unwrap_or(f64::NAN),
            });
        }
        let p = limit_run.final_a().clone();
        check_at_most("dist(p_h, E)", e.dist(&p)?, tol.geometric)?;

        let (n, p_tilde) = classical_until(
            &pair.a,
            &pair.b,
            &x,
            cap,
            &format!("classical, epoch {epoch}"),
            |y| Ok(y.dist(&p)),
            |d| d <= eps0,
        )?;

        let r = radius_about(&pair.a, &p).max(1.0);
        let bb = BlackBoxParams::new(sep.normal.clone(), sep.level, r, p.clone(), w.clone(), delta)?;
        let sets = construct_black_box(&pair.a, &pair.b, &bb, tol.geometric)?;
        let run = lockstep(
            &sets.a_hat,
            &sets.b_hat,
            &p,
            &p_tilde,
            sep,
            cap,
            &format!("black box, epoch {epoch}"),
            |y| Ok(y.dist(w)),
            |d| d <= eps0,
        )?;
        let q = run.follow;
        check_at_most("‖q − w‖", q.dist(w), 2.0 * eps0 + tol.geometric)?;
        check_at_most("hyperplane pinning", run.pinning, tol.geometric)?;
        check_at_most("nonexpansive transfer", run.transfer_excess, tol.geometric)?;
        let dist_q = e.dist(&q)?;
        if dist_q < eps0 - tol.separation {
            return Err(Error::Certificate {
                what: format!("separation of checkpoint {epoch}"),
                measured: dist_q,
                bound: eps0,
            });
        }

        let sampler = params
            .aw
            .sampler
            .clone()
            .with_hints(vec![p.clone(), w.clone(), sets.z.clone()]);
        let (ha, hb) = rayon::join(
            || hausdorff(&pair.a, &sets.a_hat, &sampler),
            || hausdorff(&pair.b, &sets.b_hat, &sampler),
        );
        let (ha, hb) = (ha?, hb?);
        let bound = 3.0 * delta;
        for (name, rep) in [("D_H(A, Â)", &ha), ("D_H(B, B̂)", &hb)] {
            check_at_most(
                &format!("{name}, epoch {epoch}"),
                rep.upper_bound.unwrap_or(0.0).max(rep.hausdorff),
                bound + tol.certificate,
            )?;
        }

        schedule.push(Block::original(pair.a.clone(), pair.b.clone(), n));
        schedule.push(Block {
            a: sets.a_hat.clone(),
            b: sets.b_hat.clone(),
            count: run.steps,
            delta_a: bound,
            delta_b: bound,
            tag: Provenance::Hatted,
            radius: None,
        });
        checkpoints.push(Checkpoint {
            epoch,
            index: schedule.total_len(),
            point: q.clone(),
            dist_to_e: dist_q,
        });
        epochs.push(EpochReport {
            epoch,
            classical_steps: n,
            hatted_steps: run.steps,
            delta,
            radius: None,
            separator: sep.clone(),
            p,
            w: w.clone(),
            witness: w.clone(),
            checkpoint: q.clone(),
            dist_to_e: dist_q,
            hausdorff_a: ha,
            hausdorff_b: hb,
            bound_a: bound,
            bound_b: bound,
            pinning: run.pinning,
            transfer_excess: run.transfer_excess,
        });
        x = q;
    }

    let seq_a: Vec<_> = schedule.blocks.iter().map(|b| (*b.a).clone()).collect();
    let seq_b: Vec<_> = schedule.blocks.iter().map(|b| (*b.b).clone()).collect();
    let deltas: Vec<f64> = schedule.blocks.iter().map(|b| b.delta_a.max(tol.certificate)).collect();
    let aw_a = aw_certify(&seq_a, &pair.a, &vec![radius_a; seq_a.len()], &deltas, &params.aw)?;
    let radius_b = pair.b.bound_radius();
    let aw_b = if radius_b.is_finite() {
        Some(aw_certify(&seq_b, &pair.b, &vec![radius_b; seq_b.len()], &deltas, &params.aw)?)
    } else {
        None
    };
    let aw_certificate = aw_a.ok && aw_b.as_ref().map_or(true, |r| r.ok);
    Ok(AdversaryRun {
        eps: eps0,
        start: start.clone(),
        schedule,
        checkpoints,
        delta_sequence: params.deltas.clone(),
        epochs,
        aw_a: Some(aw_a),
        aw_b,
        aw_certificate,
    })
}

/// The two-polygon pair of the tests: thin quadrilaterals on either side of
/// the `y` axis, touching along `E = [(0,0), (0,1)]`.
#[cfg(test)]
pub(crate) fn touching_quads() -> PairProblem {
    use std::sync::Arc;

    use crate::geometry::ConvexSet;
    let v = |c: &[f64]| Vector::from_slice(c);
    let quad = |s: f64| {
        Arc::new(ConvexSet::polytope(vec![v(&[0.0, 0.0]), v(&[0.0, 1.0]), v(&[s, 2.0]), v(&[s, -1.0])]).unwrap())
    };
    let e = Arc::new(ConvexSet::segment(v(&[0.0, 0.0]), v(&[0.0, 1.0])).unwrap());
    PairProblem::new(quad(0.04), quad(-0.04)).with_best_approx(e.clone(), e)
}
