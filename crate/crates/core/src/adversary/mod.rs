//! Constructive perturbations that keep alternating projections away from
//! `A ∩ B`: the planar confinement check, the black-box pair `(Â, B̂)` and
//! the concatenated schedules built from them.

mod black_box;
mod general;
mod sandwich;
mod separated;
mod witness;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::{PairProblem, PerturbationSchedule};
use crate::error::{Error, Result};
use crate::geometry::ConvexSet;
use crate::metrics::{AwReport, SetDistanceReport};
use crate::vector::Vector;

pub use black_box::{black_box, construct_black_box, BlackBoxCertificate, BlackBoxParams, BlackBoxSets, VerifyOptions};
pub use general::{build_general_schedule, recenter, GeneralParams};
pub use sandwich::{sandwich_verify, SandwichOptions, SandwichParams, SandwichReport};
pub use separated::{build_separated_schedule, SeparatedParams};
pub use witness::{witness_sequence, Witness, WitnessOptions};

/// A linear functional `x ↦ ⟨normal, x⟩` with a level, read as the
/// hyperplane `[f = level]` or the halfspaces on either side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Separator {
    pub normal: Vector,
    pub level: f64,
}

impl Separator {
    pub fn eval(&self, x: &Vector) -> f64 {
        self.normal.dot(x)
    }
}

/// The iterate at the end of an adversarial block pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub epoch: usize,
    /// One-based step index in the expanded schedule.
    pub index: usize,
    pub point: Vector,
    pub dist_to_e: f64,
}

/// What one epoch did and the certificates it produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    /// Classical steps `n_h` and black-box steps `m_h`.
    pub classical_steps: usize,
    pub hatted_steps: usize,
    /// `δ` handed to the black box.
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    pub separator: Separator,
    pub p: Vector,
    pub w: Vector,
    pub witness: Vector,
    pub checkpoint: Vector,
    pub dist_to_e: f64,
    pub hausdorff_a: SetDistanceReport,
    pub hausdorff_b: SetDistanceReport,
    pub bound_a: f64,
    pub bound_b: f64,
    /// `max |f(b) − level|` over the B̂-side iterates started at `p`.
    pub pinning: f64,
    /// `max (‖x_m − y_m‖ − ‖x_0 − y_0‖)` for the two black-box runs.
    pub transfer_excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryRun {
    pub eps: f64,
    pub start: Vector,
    pub schedule: PerturbationSchedule,
    pub checkpoints: Vec<Checkpoint>,
    pub delta_sequence: Vec<f64>,
    pub epochs: Vec<EpochReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aw_a: Option<AwReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aw_b: Option<AwReport>,
    pub aw_certificate: bool,
}

impl AdversaryRun {
    pub fn min_separation(&self) -> f64 {
        self.checkpoints
            .iter()
            .map(|c| c.dist_to_e)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `E` if the pair knows it, otherwise `A ∩ (B − v)`.
pub fn best_approx_set(pair: &PairProblem) -> Result<Arc<ConvexSet>> {
    if let Some(e) = &pair.e {
        return Ok(e.clone());
    }
    let b = if pair.v.norm() == 0.0 {
        pair.b.clone()
    } else {
        Arc::new(ConvexSet::translate(pair.b.clone(), -&pair.v)?)
    };
    Ok(Arc::new(ConvexSet::intersection(vec![pair.a.clone(), b])?))
}

/// `sup_{a∈A} ‖a − p‖` for polytopes, an upper bound otherwise.
pub(crate) fn radius_about(a: &ConvexSet, p: &Vector) -> f64 {
    match a.vertices() {
        Some(vs) => vs.iter().map(|v| v.dist(p)).fold(0.0, f64::max),
        None => a.bound_radius() + p.norm(),
    }
}

/// The point of `[x, y]` where the affine function `g` takes the value `level`.
pub(crate) fn on_segment(x: &Vector, y: &Vector, g: impl Fn(&Vector) -> f64, level: f64, tol: f64) -> Result<Vector> {
    let (gx, gy) = (g(x), g(y));
    if (gx - level).abs() <= tol {
        return Ok(x.clone());
    }
    if (gx - gy).abs() == 0.0 {
        return Err(Error::Separator(format!(
            "functional is constant {gx:e} on the segment, cannot reach {level:e}"
        )));
    }
    let t = (gx - level) / (gx - gy);
    if !(-tol..=1.0 + tol).contains(&t) {
        return Err(Error::Separator(format!(
            "level {level:e} lies outside the segment range [{gx:e}, {gy:e}]"
        )));
    }
    Ok(x.lerp(y, t.clamp(0.0, 1.0)))
}

/// Classical steps from `x` until `reached(measure(a_n))`, checking `n = 0`
/// first. Returns `(n, a_n)`.
pub(crate) fn classical_until(
    a: &ConvexSet,
    b: &ConvexSet,
    x: &Vector,
    cap: usize,
    phase: &str,
    measure: impl Fn(&Vector) -> Result<f64>,
    reached: impl Fn(f64) -> bool,
) -> Result<(usize, Vector)> {
    let mut x = x.clone();
    let mut value = measure(&x)?;
    for n in 0..=cap {
        if reached(value) {
            return Ok((n, x));
        }
        if n == cap {
            break;
        }
        x = a.project(&b.project(&x)?)?;
        value = measure(&x)?;
    }
    Err(Error::Budget {
        phase: phase.into(),
        steps: cap,
        achieved: value,
    })
}

/// Two black-box runs advanced together: `lead` decides when to stop, the
/// other only follows.
#[derive(Clone, Debug)]
pub(crate) struct Lockstep {
    pub steps: usize,
    pub lead: Vector,
    pub follow: Vector,
    /// `max |f(b) − level|` over the lead run's B̂-side iterates.
    pub pinning: f64,
    /// `max_m ‖lead_m − follow_m‖ − ‖lead_0 − follow_0‖`
    pub transfer_excess: f64,
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn lockstep(
    a_hat: &ConvexSet,
    b_hat: &ConvexSet,
    lead: &Vector,
    follow: &Vector,
    sep: &Separator,
    cap: usize,
    phase: &str,
    measure: impl Fn(&Vector) -> Result<f64>,
    reached: impl Fn(f64) -> bool,
) -> Result<Lockstep> {
    let gap0 = lead.dist(follow);
    let mut out = Lockstep {
        steps: 0,
        lead: lead.clone(),
        follow: follow.clone(),
        pinning: 0.0,
        transfer_excess: 0.0,
    };
    let mut value = measure(lead)?;
    while !reached(value) {
        if out.steps == cap {
            return Err(Error::Budget {
                phase: phase.into(),
                steps: cap,
                achieved: value,
            });
        }
        out.steps += 1;
        let b = b_hat.project(&out.lead)?;
        out.pinning = out.pinning.max((sep.eval(&b) - sep.level).abs());
        out.lead = a_hat.project(&b)?;
        out.follow = a_hat.project(&b_hat.project(&out.follow)?)?;
        out.transfer_excess = out.transfer_excess.max(out.lead.dist(&out.follow) - gap0);
        value = measure(&out.lead)?;
    }
    Ok(out)
}

pub(crate) fn check_at_most(what: &str, measured: f64, bound: f64) -> Result<()> {
    if measured > bound {
        return Err(Error::Certificate {
            what: what.into(),
            measured,
            bound,
        });
    }
    Ok(())
}

pub(crate) fn check_deltas(deltas: &[f64]) -> Result<()> {
    if deltas.is_empty() {
        return Err(Error::Config("delta schedule is empty".into()));
    }
    if let Some(d) = deltas.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        return Err(Error::Hypothesis(format!("delta must be > 0, got {d}")));
    }
    if deltas.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Hypothesis("delta schedule must be non-increasing".into()));
    }
    if deltas.len() > 1 && deltas[deltas.len() - 1] >= deltas[0] {
        return Err(Error::Hypothesis("delta schedule is constant; it must decrease toward 0".into()));
    }
    Ok(())
}
