use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConvexSet;
use crate::metrics::{hausdorff, Sampler, SetDistanceReport};
use crate::vector::Vector;

use super::radius_about;

/// Inputs of the black-box perturbation. `f = ⟨f_normal, ·⟩` separates
/// with `sup f(B) ≤ β ≤ inf f(A)`, and `p ≠ w` both lie on `[f = β]` within
/// `δ` of both sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlackBoxParams {
    pub f_normal: Vector,
    pub beta: f64,
    /// `A − p ⊆ r𝔹`, `r ≥ 1`.
    pub r: f64,
    pub p: Vector,
    pub w: Vector,
    pub delta: f64,
    /// `min{1, ‖w − p‖}`
    pub eps0: f64,
    /// `δ ε₀ / (r ‖w − p‖²)`
    pub theta: f64,
}

impl BlackBoxParams {
    pub fn new(f_normal: Vector, beta: f64, r: f64, p: Vector, w: Vector, delta: f64) -> Result<Self> {
        if f_normal.dim() != p.dim() || w.dim() != p.dim() {
            return Err(Error::Config("separator, p and w must have the same dimension".into()));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::Hypothesis(format!("δ must be > 0, got {delta}")));
        }
        if !(r >= 1.0) {
            return Err(Error::Hypothesis(format!("r must be ≥ 1, got {r}")));
        }
        let f_normal = f_normal
            .normalized()
            .ok_or_else(|| Error::Hypothesis("separator normal is zero".into()))?;
        let d = (&w - &p).norm();
        if d == 0.0 {
            return Err(Error::Hypothesis("p and w coincide".into()));
        }
        let eps0 = d.min(1.0);
        let theta = delta * eps0 / (r * d * d);
        Ok(BlackBoxParams {
            f_normal,
            beta,
            r,
            p,
            w,
            delta,
            eps0,
            theta,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlackBoxSets {
    pub a_hat: Arc<ConvexSet>,
    pub b_hat: Arc<ConvexSet>,
    /// `Â ⊆ {x : ⟨f_hat_normal, x⟩ ≥ f_hat_level}` with
    /// `f_hat_normal = u + θ(w − p)`.
    pub f_hat_normal: Vector,
    pub f_hat_level: f64,
    /// `p + (δε₀/r) u`, the far end of the A-side segment.
    pub z: Vector,
}

/// Builds `B̂ = (B + 3δ𝔹) ∩ [f ≤ β]` and `Â = (A + 3δ𝔹) ∩ [f̂ ≥ f̂(w)]`, with
/// the formulas applied after moving `p` to the origin.
pub fn construct_black_box(a: &Arc<ConvexSet>, b: &Arc<ConvexSet>, params: &BlackBoxParams, tol: f64) -> Result<BlackBoxSets> {
    let BlackBoxParams {
        f_normal: u,
        beta,
        r,
        p,
        w,
        delta,
        eps0,
        theta,
    } = params;
    let dim = p.dim();
    if a.dim() != dim || b.dim() != dim {
        return Err(Error::Config("sets and parameters differ in dimension".into()));
    }
    for (name, x) in [("p", p), ("w", w)] {
        let off = (u.dot(x) - beta).abs();
        if off > tol {
            return Err(Error::Hypothesis(format!("f({name}) differs from β by {off:e}")));
        }
        for (set_name, set) in [("A", a), ("B", b)] {
            let d = set.dist(x)?;
            if d > delta + tol {
                return Err(Error::Hypothesis(format!(
                    "dist({name}, {set_name}) = {d:e} exceeds δ = {delta:e}"
                )));
            }
        }
    }
    let sup_b = b.support(u);
    let inf_a = -a.support(&-u);
    if sup_b > beta + tol || inf_a < beta - tol {
        return Err(Error::Hypothesis(format!(
            "f does not separate at β: sup f(B) ≤ {sup_b:e}, inf f(A) ≥ {inf_a:e}, β = {beta:e}"
        )));
    }
    let reach = radius_about(a, p);
    if reach > r + tol {
        return Err(Error::Hypothesis(format!("A − p reaches {reach:e} > r = {r:e}")));
    }

    let back = -p;
    let w0 = w - p;
    let a0 = Arc::new(ConvexSet::translate(a.clone(), back.clone())?);
    let b0 = Arc::new(ConvexSet::translate(b.clone(), back)?);
    let mut n_hat = u.clone();
    n_hat.axpy(*theta, &w0);
    let level0 = n_hat.dot(&w0);
    let a_hat0 = ConvexSet::intersect([
        ConvexSet::dilation(a0, 3.0 * delta)?,
        ConvexSet::halfspace_geq(n_hat.clone(), level0)?,
    ])?;
    let b_hat0 = ConvexSet::intersect([
        ConvexSet::dilation(b0, 3.0 * delta)?,
        ConvexSet::halfspace(u.clone(), 0.0)?,
    ])?;
    let mut z = p.clone();
    z.axpy(delta * eps0 / r, u);
    Ok(BlackBoxSets {
        a_hat: Arc::new(ConvexSet::translate(Arc::new(a_hat0), p.clone())?),
        b_hat: Arc::new(ConvexSet::translate(Arc::new(b_hat0), p.clone())?),
        f_hat_level: level0 + n_hat.dot(p),
        f_hat_normal: n_hat,
        z,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyOptions {
    pub sampler: Sampler,
    /// Cycle budget of the verification run.
    pub budget: usize,
    /// The run must come within this distance of `w`.
    pub target: f64,
    pub pin_tol: f64,
    pub slack: f64,
    pub tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            sampler: Sampler::default(),
            budget: 1_000_000,
            target: 1e-6,
            pin_tol: 1e-9,
            slack: 1e-8,
            tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlackBoxCertificate {
    pub hausdorff_a: SetDistanceReport,
    pub hausdorff_b: SetDistanceReport,
    /// `3δ`
    pub bound: f64,
    /// `max |f(b_n) − β|` over the B̂-side iterates from `p`.
    pub pinning: f64,
    pub steps: usize,
    pub final_dist_to_w: f64,
}

/// [`construct_black_box`] followed by the Hausdorff certificates and a run
/// from `p` that must stay pinned to `[f = β]` on the B̂ side and reach `w`.
pub fn black_box(
    a: &Arc<ConvexSet>,
    b: &Arc<ConvexSet>,
    params: &BlackBoxParams,
    opts: &VerifyOptions,
) -> Result<(BlackBoxSets, BlackBoxCertificate)> {
    let sets = construct_black_box(a, b, params, opts.tol)?;
    let bound = 3.0 * params.delta;
    let mut sampler = opts.sampler.clone();
    sampler.hints.extend([params.p.clone(), params.w.clone(), sets.z.clone()]);
    let (ha, hb) = rayon::join(
        || hausdorff(a, &sets.a_hat, &sampler),
        || hausdorff(b, &sets.b_hat, &sampler),
    );
    let (ha, hb) = (ha?, hb?);
    for (name, rep) in [("D_H(A, Â)", &ha), ("D_H(B, B̂)", &hb)] {
        let measured = rep.upper_bound.unwrap_or(0.0).max(rep.hausdorff);
        if measured > bound + opts.slack {
            return Err(Error::Certificate {
                what: name.into(),
                measured,
                bound,
            });
        }
    }

    let mut x = params.p.clone();
    let mut pinning: f64 = 0.0;
    let mut steps = 0;
    let mut dist = x.dist(&params.w);
    while dist > opts.target {
        if steps == opts.budget {
            return Err(Error::Budget {
                phase: "black-box verification".into(),
                steps,
                achieved: dist,
            });
        }
        steps += 1;
        let bn = sets.b_hat.project(&x)?;
        pinning = pinning.max((params.f_normal.dot(&bn) - params.beta).abs());
        x = sets.a_hat.project(&bn)?;
        dist = x.dist(&params.w);
    }
    if pinning > opts.pin_tol {
        return Err(Error::Certificate {
            what: "hyperplane pinning".into(),
            measured: pinning,
            bound: opts.pin_tol,
        });
    }
    Ok((
        sets,
        BlackBoxCertificate {
            hausdorff_a: ha,
            hausdorff_b: hb,
            bound,
            pinning,
            steps,
            final_dist_to_w: dist,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Method;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    fn squares() -> (Arc<ConvexSet>, Arc<ConvexSet>) {
        let sq = |x0: f64| {
            Arc::new(
                ConvexSet::polytope(vec![v(&[x0, 0.0]), v(&[x0 + 1.0, 0.0]), v(&[x0 + 1.0, 1.0]), v(&[x0, 1.0])])
                    .unwrap(),
            )
        };
        (sq(0.0), sq(-1.0))
    }

    #[test]
    fn squares_certify() {
        let (a, b) = squares();
        let p = v(&[0.0, 0.2]);
        let r = radius_about(&a, &p);
        let params = BlackBoxParams::new(v(&[1.0, 0.0]), 0.0, r, p, v(&[0.0, 0.8]), 0.05).unwrap();
        let (sets, cert) = black_box(&a, &b, &params, &VerifyOptions::default()).unwrap();
        assert!(cert.final_dist_to_w <= 1e-6);
        assert!(cert.pinning <= 1e-9);
        assert_eq!(cert.hausdorff_a.upper_bound.unwrap(), 3.0 * 0.05);
        assert!(cert.hausdorff_a.excess_ab <= 2.0 * 0.05 + 1e-12);
        assert!(sets.a_hat.contains(&params.w).unwrap());
        assert!(sets.b_hat.contains(&params.p).unwrap());
        assert_eq!(cert.hausdorff_b.upper_bound.unwrap(), 3.0 * 0.05);
        assert_eq!(cert.hausdorff_a.method, Method::Sampled);
    }

    #[test]
    fn theta_formula() {
        let params = BlackBoxParams::new(v(&[1.0, 0.0]), 0.0, 2.0, v(&[0.0, 0.0]), v(&[0.0, 0.5]), 0.1).unwrap();
        assert_eq!(params.eps0, 0.5);
        assert_eq!(params.theta, 0.1 * 0.5 / (2.0 * 0.25));
    }

    #[test]
    fn rejects_bad_parameters() {
        let zero = BlackBoxParams::new(v(&[1.0, 0.0]), 0.0, 2.0, v(&[0.0, 0.0]), v(&[0.0, 0.5]), 0.0);
        assert!(matches!(zero, Err(Error::Hypothesis(_))));
        let (a, b) = squares();
        let far = BlackBoxParams::new(v(&[1.0, 0.0]), 0.0, 2.0, v(&[0.0, 0.2]), v(&[0.0, 3.0]), 0.05).unwrap();
        assert!(matches!(construct_black_box(&a, &b, &far, 1e-9), Err(Error::Hypothesis(_))));
        let off = BlackBoxParams::new(v(&[1.0, 0.0]), 0.0, 2.0, v(&[0.01, 0.2]), v(&[0.0, 0.8]), 0.05).unwrap();
        assert!(matches!(construct_black_box(&a, &b, &off, 1e-9), Err(Error::Hypothesis(_))));
    }
}
