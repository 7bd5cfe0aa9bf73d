use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::PairProblem;
use crate::error::{Error, Result};
use crate::geometry::ConvexSet;
use crate::vector::Vector;

use super::{best_approx_set, check_deltas, Separator};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WitnessOptions {
    /// Accepted range of `dist(w, E)`; points beyond the upper end slide
    /// toward `E` to the middle of the band. Defaults to `(3ε₀, 3ε₀ + 1)`.
    pub band: Option<(f64, f64)>,
    /// Candidates are first projected onto `[f = level]`.
    pub separator: Option<Separator>,
    pub tol: f64,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        WitnessOptions {
            band: None,
            separator: None,
            tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: Vector,
    pub dist_to_e: f64,
    pub dist_a: f64,
    /// `dist(w, B − v)`
    pub dist_b: f64,
    pub delta: f64,
}

/// Points `w_n` far from `E` but within `δ_n` of both `A` and `B − v`,
/// chosen from `raw` in order (the first candidate that qualifies wins).
pub fn witness_sequence(
    pair: &PairProblem,
    eps0: f64,
    deltas: &[f64],
    raw: &[Vector],
    opts: &WitnessOptions,
) -> Result<Vec<Witness>> {
    if !(eps0 > 0.0) {
        return Err(Error::Config(format!("ε₀ must be > 0, got {eps0}")));
    }
    check_deltas(deltas)?;
    if raw.is_empty() {
        return Err(Error::NoWitness(
            "no raw witnesses supplied; use the scenario's witness generator".into(),
        ));
    }
    let (lo, hi) = opts.band.unwrap_or((3.0 * eps0, 3.0 * eps0 + 1.0));
    if !(lo < hi && lo >= eps0) {
        return Err(Error::Config(format!("witness band ({lo}, {hi}) must satisfy ε₀ ≤ lo < hi")));
    }
    let e = best_approx_set(pair)?;
    let b_shift = if pair.v.norm() == 0.0 {
        pair.b.clone()
    } else {
        Arc::new(ConvexSet::translate(pair.b.clone(), -&pair.v)?)
    };
    let kernel = match &opts.separator {
        Some(s) => Some(ConvexSet::hyperplane(s.normal.clone(), s.level)?),
        None => None,
    };

    let mut candidates = Vec::with_capacity(raw.len());
    for c in raw {
        let c = match &kernel {
            Some(k) => k.project(c)?,
            None => c.clone(),
        };
        let pe = e.project(&c)?;
        let d = c.dist(&pe);
        if d <= lo {
            continue;
        }
        let w = if d >= hi { pe.lerp(&c, 0.5 * (lo + hi) / d) } else { c };
        let dist_to_e = e.dist(&w)?;
        let dist_a = pair.a.dist(&w)?;
        let dist_b = b_shift.dist(&w)?;
        candidates.push(Witness {
            point: w,
            dist_to_e,
            dist_a,
            dist_b,
            delta: dist_a.max(dist_b),
        });
    }

    let mut out = Vec::with_capacity(deltas.len());
    for (n, &delta) in deltas.iter().enumerate() {
        let found = candidates
            .iter()
            .find(|w| w.delta <= delta + opts.tol && w.dist_to_e > eps0)
            .ok_or_else(|| {
                let best = candidates.iter().map(|w| w.delta).fold(f64::INFINITY, f64::min);
                Error::NoWitness(format!(
                    "no candidate for δ_{} = {delta:e} among {} raw points (closest {best:e})",
                    n + 1,
                    raw.len()
                ))
            })?;
        out.push(found.clone());
    }
    Ok(out)
}
