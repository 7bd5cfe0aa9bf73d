//! Projection onto the convex hull of finitely many points.
//!
//! Uses Wolfe's active-set method for the minimum-norm point of a polytope:
//! the nearest point of `conv(V)` to `x` is `x + m` where `m` is the
//! minimum-norm point of `conv(V - x)`. The active set is kept affinely
//! independent, so each corral solve is a small dense system.

use nalgebra::{DMatrix, DVector};

use crate::vector::Vector;

use super::GeometryError;

/// Convex hull of a nonempty vertex list.
#[derive(Clone, Debug, PartialEq)]
pub struct Polytope {
    vertices: Vec<Vector>,
}

impl Polytope {
    pub fn new(vertices: Vec<Vector>) -> Result<Self, GeometryError> {
        let first = vertices
            .first()
            .ok_or_else(|| GeometryError::InvalidSet("polytope needs at least one vertex".into()))?;
        let dim = first.dim();
        if let Some(bad) = vertices.iter().find(|v| v.dim() != dim) {
            return Err(GeometryError::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(Polytope { vertices })
    }

    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }

    pub fn project(&self, x: &Vector) -> Result<Vector, GeometryError> {
        if self.vertices.len() == 1 {
            return Ok(self.vertices[0].clone());
        }
        let shifted: Vec<Vector> = self.vertices.iter().map(|v| v - x).collect();
        let m = min_norm_point(&shifted)?;
        Ok(x + &m)
    }
}

const WEIGHT_EPS: f64 = 1e-12;
const OPT_EPS: f64 = 1e-15;

/// Minimum-norm point of `conv(points)`.
pub(crate) fn min_norm_point(points: &[Vector]) -> Result<Vector, GeometryError> {
    let scale = points
        .iter()
        .map(Vector::norm_sq)
        .fold(f64::MIN_POSITIVE, f64::max);

    let i0 = argmin(points.iter().map(Vector::norm_sq));
    let mut active = vec![i0];
    let mut weights = vec![1.0];
    let mut x = points[i0].clone();

    let max_major = 50 * points.len() + 100;
    for _ in 0..max_major {
        let xx = x.norm_sq();
        let (j, best) = points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, x.dot(p)))
            .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
        if xx - best <= OPT_EPS * scale || active.contains(&j) {
            return Ok(x);
        }
        let prev = x.clone();
        active.push(j);
        weights.push(0.0);

        // minor cycle: move toward the affine minimizer of the corral
        let mut converged = false;
        for _ in 0..=active.len() + 1 {
            let mu = affine_minimizer(points, &active);
            if mu.iter().any(|m| !m.is_finite()) {
                return Ok(prev);
            }
            if mu.iter().all(|&m| m > 0.0) {
                weights = mu;
                x = combination(points, &active, &weights);
                converged = true;
                break;
            }
            let mut theta: f64 = 1.0;
            for (l, m) in weights.iter().zip(&mu) {
                if *m <= WEIGHT_EPS {
                    let denom = l - m;
                    if denom > 0.0 {
                        theta = theta.min(l / denom);
                    }
                }
            }
            for (l, m) in weights.iter_mut().zip(&mu) {
                *l = (1.0 - theta) * *l + theta * m;
            }
            let mut remove: Vec<bool> = weights.iter().map(|w| *w <= WEIGHT_EPS).collect();
            if !remove.iter().any(|r| *r) {
                remove[argmin(weights.iter().copied())] = true;
            }
            let (kept_active, kept_weights): (Vec<usize>, Vec<f64>) = active
                .iter()
                .zip(&weights)
                .zip(&remove)
                .filter(|(_, r)| !**r)
                .map(|((a, w), _)| (*a, *w))
                .unzip();
            active = kept_active;
            weights = kept_weights;
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            x = combination(points, &active, &weights);
            if active.len() == 1 {
                converged = true;
                break;
            }
        }
        // a corral that gives no decrease means we are cycling on roundoff
        if !converged || x.norm_sq() >= xx {
            return Ok(if x.norm_sq() < xx { x } else { prev });
        }
    }
    Err(GeometryError::NonConvergence {
        method: "wolfe",
        iterations: max_major,
        residual: f64::NAN,
    })
}

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    values
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc })
        .0
}

fn combination(points: &[Vector], active: &[usize], weights: &[f64]) -> Vector {
    let mut x = Vector::zeros(points[active[0]].dim());
    for (&i, &w) in active.iter().zip(weights) {
        x.axpy(w, &points[i]);
    }
    x
}

/// Weights of the minimum-norm point of the affine hull of the active points.
fn affine_minimizer(points: &[Vector], active: &[usize]) -> Vec<f64> {
    let k = active.len();
    if k == 1 {
        return vec![1.0];
    }
    let p0 = &points[active[0]];
    let diffs: Vec<Vector> = active[1..].iter().map(|&i| &points[i] - p0).collect();
    let m = k - 1;
    let gram = DMatrix::from_fn(m, m, |r, c| diffs[r].dot(&diffs[c]));
    let rhs = DVector::from_fn(m, |r, _| -diffs[r].dot(p0));
    let coeffs = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram
            .svd(true, true)
            .solve(&rhs, 1e-14)
            .unwrap_or_else(|_| DVector::zeros(m)),
    };
    let mut mu = Vec::with_capacity(k);
    mu.push(1.0 - coeffs.sum());
    mu.extend(coeffs.iter().copied());
    mu
}
