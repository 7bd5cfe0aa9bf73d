//! Classical and perturbed alternating projections and the fixed-point facts
//! tying them to the displacement vector and best approximation sets.

mod apm;
mod pair;
mod schedule;
mod trace;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::ConvexSet;
use crate::vector::Vector;

pub use apm::{pi_operator, run_apm, run_apm_with, run_perturbed, run_perturbed_with, References, RunOptions, StepView};
pub use pair::{
    best_approx_sets, displacement_vector, fact_bb93_check, sample_set, Bb93Report, BestApprox, Displacement,
    DisplacementOptions, FixedPointOptions,
};
pub use schedule::{Block, PerturbationSchedule, Provenance};
pub use trace::{StepRecord, StopReason, Trace, TraceSummary};

/// A pair `(A, B)` with its displacement vector `v = P_{cl(B−A)}(0)` and,
/// when known, the best approximation sets `E ⊆ A`, `F ⊆ B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairProblem {
    pub a: Arc<ConvexSet>,
    pub b: Arc<ConvexSet>,
    pub v: Vector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Arc<ConvexSet>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Arc<ConvexSet>>,
    pub v_is_analytic: bool,
}

impl PairProblem {
    /// A pair with `v = 0` marked as not analytic.
    pub fn new(a: Arc<ConvexSet>, b: Arc<ConvexSet>) -> Self {
        let v = Vector::zeros(a.dim());
        PairProblem {
            a,
            b,
            v,
            e: None,
            f: None,
            v_is_analytic: false,
        }
    }

    pub fn with_v(mut self, v: Vector, analytic: bool) -> Self {
        self.v = v;
        self.v_is_analytic = analytic;
        self
    }

    pub fn with_best_approx(mut self, e: Arc<ConvexSet>, f: Arc<ConvexSet>) -> Self {
        self.e = Some(e);
        self.f = Some(f);
        self
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn references(&self) -> References {
        References {
            a: Some(self.a.clone()),
            e: self.e.clone(),
            f: self.f.clone(),
        }
    }
}
