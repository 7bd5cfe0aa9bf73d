use std::ops::ControlFlow;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::{run_apm_with, Block, PairProblem, PerturbationSchedule, Provenance, RunOptions};
use crate::error::{Error, Result};
use crate::geometry::ConvexSet;
use crate::metrics::{aw_certify, hausdorff, AwOptions};
use crate::tol::Tolerances;
use crate::vector::Vector;

use super::{
    best_approx_set, check_at_most, check_deltas, classical_until, construct_black_box, lockstep, on_segment,
    radius_about, AdversaryRun, BlackBoxParams, Checkpoint, EpochReport, Separator,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralParams {
    /// Target separation `ε`.
    pub eps: f64,
    /// `δ_h`, one per epoch.
    pub deltas: Vec<f64>,
    /// Truncation radii `r_h`, one per epoch.
    pub radii: Vec<f64>,
    /// Cap on the steps of each phase.
    pub cap: usize,
    /// Budget of the run that locates the closest pair of the shifted sets.
    pub separator_budget: usize,
    #[serde(default)]
    pub tol: Tolerances,
    #[serde(default)]
    pub aw: AwOptions,
}

impl GeneralParams {
    /// `δ_h = min(ε/3, 2^{−h})` and `r_h = h + r0` for `h = 1..=epochs`.
    pub fn standard(eps: f64, epochs: usize, r0: f64) -> Self {
        GeneralParams {
            eps,
            deltas: (1..=epochs).map(|h| (eps / 3.0).min(0.5f64.powi(h as i32))).collect(),
            radii: (1..=epochs).map(|h| h as f64 + r0).collect(),
            cap: 1_000_000,
            separator_budget: 100_000,
            tol: Tolerances::default(),
            aw: AwOptions::default(),
        }
    }
}

/// Moves the pair so that `P_E(0)` becomes the origin. Returns the moved
/// pair and the shift `c` (the original pair is the moved one plus `c`).
pub fn recenter(pair: &PairProblem) -> Result<(PairProblem, Vector)> {
    let e = best_approx_set(pair)?;
    let c = e.project(&Vector::zeros(pair.dim()))?;
    if c.norm() == 0.0 {
        return Ok((pair.clone(), c));
    }
    let back = -&c;
    let mv = |s: &Arc<ConvexSet>| -> Result<Arc<ConvexSet>> { Ok(Arc::new(ConvexSet::translate(s.clone(), back.clone())?)) };
    let moved = PairProblem {
        a: mv(&pair.a)?,
        b: mv(&pair.b)?,
        v: pair.v.clone(),
        e: Some(mv(&e)?),
        f: pair.f.as_ref().map(mv).transpose()?,
        v_is_analytic: pair.v_is_analytic,
    };
    Ok((moved, c))
}

/// The general-case schedule: per epoch a classical block run until the
/// iterate is within `ε` of `E = A ∩ B`, then a black-box block built from
/// `A ∩ r_h𝔹` and `B + δ_h u_h` that carries the iterate back out to distance
/// `2ε + δ_h` from `E`. `witnesses[h]` is the epoch's target `t_h`; the run
/// starts at `witnesses[0]`.
pub fn build_general_schedule(
    pair: &PairProblem,
    directions: &[Vector],
    witnesses: &[Vector],
    params: &GeneralParams,
) -> Result<AdversaryRun> {
    let epochs = params.deltas.len();
    if directions.is_empty() {
        return Err(Error::Hypothesis(
            "no admissible opening direction u_h; the pair is not known to be non-regular".into(),
        ));
    }
    if params.radii.len() != epochs {
        return Err(Error::Config("need one radius per δ".into()));
    }
    if witnesses.len() < epochs {
        return Err(Error::Config(format!("need {epochs} witnesses, got {}", witnesses.len())));
    }
    check_deltas(&params.deltas)?;
    if !(params.eps > 0.0) {
        return Err(Error::Config(format!("ε must be > 0, got {}", params.eps)));
    }
    if pair.v.norm() > params.tol.geometric {
        return Err(Error::Hypothesis("A ∩ B must be nonempty (v = 0)".into()));
    }
    let (moved, c) = recenter(pair)?;
    if c.norm() == 0.0 {
        return build_centered(pair, directions, witnesses, params);
    }
    let shifted: Vec<Vector> = witnesses.iter().map(|w| w - &c).collect();
    let mut run = build_centered(&moved, directions, &shifted, params)?;
    let fwd = |s: &Arc<ConvexSet>| -> Result<Arc<ConvexSet>> { Ok(Arc::new(ConvexSet::translate(s.clone(), c.clone())?)) };
    for block in &mut run.schedule.blocks {
        if block.tag == Provenance::Original {
            block.a = pair.a.clone();
            block.b = pair.b.clone();
        } else {
            block.a = fwd(&block.a)?;
            block.b = fwd(&block.b)?;
        }
    }
    run.start = &run.start + &c;
    for cp in &mut run.checkpoints {
        cp.point = &cp.point + &c;
    }
    for ep in &mut run.epochs {
        for x in [&mut ep.p, &mut ep.w, &mut ep.witness, &mut ep.checkpoint] {
            *x = &*x + &c;
        }
        ep.separator.level += ep.separator.normal.dot(&c);
    }
    Ok(run)
}

fn build_centered(
    pair: &PairProblem,
    directions: &[Vector],
    witnesses: &[Vector],
    params: &GeneralParams,
) -> Result<AdversaryRun> {
    let eps = params.eps;
    let tol = &params.tol;
    let cap = params.cap;
    let e = best_approx_set(pair)?;
    if !e.bound_radius().is_finite() {
        return Err(Error::Hypothesis("A ∩ B must be bounded".into()));
    }

    let mut schedule = PerturbationSchedule::new();
    let mut checkpoints = Vec::new();
    let mut reports = Vec::new();
    let mut seq_a = Vec::new();
    let mut seq_b = Vec::new();
    let mut q = witnesses[0].clone();
    for (h, (&delta, &r_h)) in params.deltas.iter().zip(&params.radii).enumerate() {
        let epoch = h + 1;
        let t = &witnesses[h];
        let u = directions[h.min(directions.len() - 1)]
            .normalized()
            .ok_or_else(|| Error::Hypothesis(format!("direction u_{epoch} is zero")))?;
        let dt = e.dist(t)?;
        if dt < 3.0 * eps {
            return Err(Error::Hypothesis(format!(
                "witness t_{epoch} is {dt:e} from A ∩ B, need at least 3ε"
            )));
        }
        let reach = pair.a.dist(t)?.max(pair.b.dist(t)?);
        if reach > delta + tol.geometric {
            return Err(Error::Hypothesis(format!(
                "witness t_{epoch} is {reach:e} from A or B, more than δ = {delta:e}"
            )));
        }

        let a_h = Arc::new(pair.a.truncate(r_h)?);
        let b_shift = Arc::new(ConvexSet::translate(pair.b.clone(), u.scaled(delta))?);

        let (n, s) = classical_until(
            &pair.a,
            &pair.b,
            &q,
            cap,
            &format!("classical, epoch {epoch}"),
            |y| Ok(e.dist(y)?),
            |d| d < eps,
        )?;
        let s_e = e.project(&s)?;

        let closest = run_apm_with(
            &a_h,
            &b_shift,
            &s_e,
            params.separator_budget,
            1e-15,
            &RunOptions {
                max_stored: 2,
                ..RunOptions::default()
            },
            |_| Ok(ControlFlow::Continue(())),
        )?;
        let p_a = closest.final_a().clone();
        let p_b = closest.final_b().cloned().unwrap_or_else(|| p_a.clone());
        let gap = p_a.dist(&p_b);
        let normal = (&p_a - &p_b).normalized().filter(|_| gap > tol.geometric).ok_or_else(|| {
            Error::Separator(format!(
                "A ∩ r𝔹 and B + δu meet after the shift in epoch {epoch} (gap {gap:e}); bad direction u"
            ))
        })?;
        let sup_b = b_shift.support(&normal);
        let inf_a = -a_h.support(&-&normal);
        let mut level = 0.5 * (normal.dot(&p_a) + normal.dot(&p_b));
        if (sup_b > level || inf_a < level) && sup_b <= inf_a {
            // the run stopped short at a small angle; its direction still separates
            level = 0.5 * (sup_b + inf_a);
        }
        let sep = Separator { normal, level };
        if sup_b > level || inf_a < level {
            return Err(Error::Separator(format!(
                "epoch {epoch}: sup f(B + δu) ≤ {sup_b:e}, inf f(A ∩ r𝔹) ≥ {inf_a:e}, level {level:e}"
            )));
        }

        let f = |x: &Vector| sep.eval(x);
        let mut s_top = s_e.clone();
        s_top.axpy(delta, &u);
        let p = on_segment(&s_e, &s_top, f, level, tol.geometric)?;
        let a_t = a_h.project(t)?;
        let mut b_t = pair.b.project(t)?;
        b_t.axpy(delta, &u);
        let w = on_segment(&a_t, &b_t, f, level, tol.geometric)?;

        let r = radius_about(&a_h, &p).max(1.0);
        let bb = BlackBoxParams::new(sep.normal.clone(), level, r, p.clone(), w.clone(), 3.0 * delta)?;
        let sets = construct_black_box(&a_h, &b_shift, &bb, tol.geometric)?;
        let threshold = 2.0 * eps + delta;
        let run = lockstep(
            &sets.a_hat,
            &sets.b_hat,
            &p,
            &s,
            &sep,
            cap,
            &format!("black box, epoch {epoch}"),
            |y| Ok(e.dist(y)?),
            |d| d > threshold,
        )?;
        check_at_most(&format!("hyperplane pinning, epoch {epoch}"), run.pinning, tol.geometric)?;
        check_at_most(
            &format!("nonexpansive transfer, epoch {epoch}"),
            run.transfer_excess,
            tol.geometric,
        )?;
        let next = run.follow;
        let dist_q = e.dist(&next)?;
        if dist_q < eps - tol.separation {
            return Err(Error::Certificate {
                what: format!("separation of checkpoint {epoch}"),
                measured: dist_q,
                bound: eps,
            });
        }

        let sampler = params
            .aw
            .sampler
            .clone()
            .with_hints(vec![t.clone(), w.clone(), p.clone(), s_e.clone(), a_t.clone(), b_t.clone()]);
        let (ha, hb) = rayon::join(
            || hausdorff(&a_h, &sets.a_hat, &sampler),
            || hausdorff(&pair.b, &sets.b_hat, &sampler),
        );
        let (ha, hb) = (ha?, hb?);
        let (bound_a, bound_b) = (9.0 * delta, 10.0 * delta);
        check_at_most(
            &format!("D_H(A ∩ r𝔹, Â), epoch {epoch}"),
            ha.hausdorff,
            bound_a + tol.certificate,
        )?;
        check_at_most(&format!("D_H(B, B̂), epoch {epoch}"), hb.hausdorff, bound_b + tol.certificate)?;

        schedule.push(Block::original(pair.a.clone(), pair.b.clone(), n));
        schedule.push(Block {
            a: sets.a_hat.clone(),
            b: sets.b_hat.clone(),
            count: run.steps,
            delta_a: bound_a,
            delta_b: bound_b,
            tag: Provenance::Hatted,
            radius: Some(r_h),
        });
        for (set_a, set_b, da, db) in [
            ((*pair.a).clone(), (*pair.b).clone(), bound_a, bound_b),
            ((*sets.a_hat).clone(), (*sets.b_hat).clone(), bound_a, bound_b),
        ] {
            seq_a.push((set_a, r_h, da));
            seq_b.push((set_b, db));
        }
        checkpoints.push(Checkpoint {
            epoch,
            index: schedule.total_len(),
            point: next.clone(),
            dist_to_e: dist_q,
        });
        reports.push(EpochReport {
            epoch,
            classical_steps: n,
            hatted_steps: run.steps,
            delta: 3.0 * delta,
            radius: Some(r_h),
            separator: sep,
            p,
            w,
            witness: t.clone(),
            checkpoint: next.clone(),
            dist_to_e: dist_q,
            hausdorff_a: ha,
            hausdorff_b: hb,
            bound_a,
            bound_b,
            pinning: run.pinning,
            transfer_excess: run.transfer_excess,
        });
        q = next;
    }

    let (sets_a, (radii, deltas_a)): (Vec<_>, (Vec<_>, Vec<_>)) =
        seq_a.into_iter().map(|(s, r, d)| (s, (r, d))).unzip();
    let aw_a = aw_certify(&sets_a, &pair.a, &radii, &deltas_a, &params.aw)?;
    let big = pair.b.bound_radius();
    let radii_b: Vec<f64> = radii.iter().map(|&r| if big.is_finite() { big.max(r) } else { r }).collect();
    let (sets_b, deltas_b): (Vec<_>, Vec<_>) = seq_b.into_iter().unzip();
    let aw_b = aw_certify(&sets_b, &pair.b, &radii_b, &deltas_b, &params.aw)?;
    let aw_certificate = aw_a.ok && aw_b.ok;
    Ok(AdversaryRun {
        eps,
        start: witnesses[0].clone(),
        schedule,
        checkpoints,
        delta_sequence: params.deltas.clone(),
        epochs: reports,
        aw_a: Some(aw_a),
        aw_b: Some(aw_b),
        aw_certificate,
    })
}
