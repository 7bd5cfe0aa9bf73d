//! Excess, Hausdorff distance and their ball-localized versions, plus a
//! numerical check of Attouch-Wets convergence through ball truncations.
//!
//! `e(A, B) = sup_{a∈A} dist(a, B)` is computed as a maximum over sample
//! points of `A`. For a polytope the vertices suffice because `dist(·, B)` is
//! convex; for every other set the value is a lower bound and the report
//! says so. Where the structure of a set gives one (a dilation of a set close
//! to the other, an intersection with such a member), a certified upper bound
//! is reported alongside.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{ConvexSet, GeometryError};
use crate::vector::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    VertexExact,
    Sampled,
}

impl Method {
    fn and(self, other: Method) -> Method {
        if self == Method::VertexExact && other == Method::VertexExact {
            Method::VertexExact
        } else {
            Method::Sampled
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetDistanceReport {
    pub excess_ab: f64,
    pub excess_ba: f64,
    pub hausdorff: f64,
    pub method: Method,
    pub sample_count: usize,
    pub radius: Option<f64>,
    /// Certified upper bound on `hausdorff` when both excesses have one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper_bound: Option<f64>,
}

/// How points of a set are generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Sampler {
    /// Boundary directions per coordinate plane for balls.
    pub ball_directions: usize,
    /// Cap on coordinate planes used for balls and on axes used for other sets.
    pub max_planes: usize,
    /// Distance from the anchor at which unbounded sets are probed.
    pub window: f64,
    /// Extra random directions for non-polytope sets.
    pub random_directions: usize,
    pub seed: u64,
    /// Additional points to project onto the set (e.g. known extreme points).
    pub hints: Vec<Vector>,
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler {
            ball_directions: 64,
            max_planes: 64,
            window: 10.0,
            random_directions: 64,
            seed: 0,
            hints: Vec::new(),
        }
    }
}

impl Sampler {
    pub fn with_hints(mut self, hints: Vec<Vector>) -> Self {
        self.hints = hints;
        self
    }

    fn directions(&self, dim: usize) -> Vec<Vector> {
        let mut out = Vec::new();
        for i in 0..dim.min(self.max_planes) {
            out.push(Vector::basis(dim, i));
            out.push(-&Vector::basis(dim, i));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for _ in 0..self.random_directions {
            let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            if let Some(u) = Vector::from_slice(&g).normalized() {
                out.push(u);
            }
        }
        out
    }

    /// Sample points of `set`, with `VertexExact` when they are its vertices.
    pub fn sample(&self, set: &ConvexSet) -> Result<(Vec<Vector>, Method), GeometryError> {
        if let Some(vs) = set.vertices() {
            return Ok((vs, Method::VertexExact));
        }
        let dim = set.dim();
        let mut pts = Vec::new();
        if let ConvexSet::Ball(b) = set {
            pts.push(b.center().clone());
            let k = self.ball_directions.max(4);
            for i in 0..(dim - 1).min(self.max_planes) {
                for j in 0..k {
                    let a = std::f64::consts::TAU * j as f64 / k as f64;
                    let mut p = b.center().clone();
                    let mut d = Vector::zeros(dim);
                    d.axpy(a.cos(), &Vector::basis(dim, i));
                    d.axpy(a.sin(), &Vector::basis(dim, i + 1));
                    p.axpy(b.radius(), &d);
                    pts.push(p);
                }
            }
            if dim == 1 {
                pts.push(b.center() + &Vector::from_slice(&[b.radius()]));
                pts.push(b.center() - &Vector::from_slice(&[b.radius()]));
            }
        } else {
            let c0 = set.project(&Vector::zeros(dim))?;
            pts.push(c0.clone());
            let probes: Vec<Vector> = self
                .directions(dim)
                .into_iter()
                .map(|d| {
                    let mut y = c0.clone();
                    y.axpy(self.window, &d);
                    y
                })
                .collect();
            let projected: Result<Vec<Vector>, GeometryError> =
                probes.par_iter().map(|y| set.project(y)).collect();
            pts.extend(projected?);
        }
        for h in &self.hints {
            pts.push(set.project(h)?);
        }
        Ok((pts, Method::Sampled))
    }

    /// Sample points of `A ∩ r𝔹`. Points of `A` outside the ball are pulled
    /// radially toward `P_A(0)` until they hit the sphere, which keeps them in
    /// `A` by convexity. Returns `None` when the truncation is empty.
    pub fn sample_truncated(
        &self,
        set: &ConvexSet,
        r: f64,
    ) -> Result<Option<(Vec<Vector>, Method)>, GeometryError> {
        let anchor = set.project(&Vector::zeros(set.dim()))?;
        if anchor.norm() > r {
            return Ok(None);
        }
        let (pts, method) = self.sample(set)?;
        let all_inside = pts.iter().all(|p| p.norm() <= r);
        let mut out: Vec<Vector> = pts.iter().map(|p| retract(&anchor, p, r)).collect();
        out.push(anchor);
        let method = if all_inside { method } else { Method::Sampled };
        if !all_inside {
            // points of the truncation reached through its own projection
            let trunc = set.truncate(r)?;
            let probes: Vec<Vector> = self
                .directions(set.dim())
                .into_iter()
                .map(|d| d.scaled(r + self.window))
                .collect();
            let projected: Result<Vec<Vector>, GeometryError> =
                probes.par_iter().map(|y| trunc.project(y)).collect();
            out.extend(projected?);
        }
        Ok(Some((out, method)))
    }
}

/// The point of `[anchor, p]` farthest from `anchor` inside `r𝔹`.
fn retract(anchor: &Vector, p: &Vector, r: f64) -> Vector {
    if p.norm() <= r {
        return p.clone();
    }
    let d = p - anchor;
    let dd = d.norm_sq();
    if dd == 0.0 {
        return anchor.clone();
    }
    let ad = anchor.dot(&d);
    let disc = (ad * ad - dd * (anchor.norm_sq() - r * r)).max(0.0);
    let t = ((-ad + disc.sqrt()) / dd).clamp(0.0, 1.0);
    let mut q = anchor.clone();
    q.axpy(t, &d);
    // guard against rounding just outside the sphere
    let n = q.norm();
    if n > r {
        q = q.scaled(r / n);
    }
    q
}

fn max_dist(points: &[Vector], b: &ConvexSet) -> Result<f64, GeometryError> {
    points
        .par_iter()
        .map(|p| b.dist(p))
        .try_reduce(|| 0.0, |x, y| Ok(x.max(y)))
}

/// `e(A, B)` with the method used.
pub fn excess_report(a: &ConvexSet, b: &ConvexSet, sampler: &Sampler) -> Result<(f64, Method, usize), GeometryError> {
    let (pts, method) = sampler.sample(a)?;
    Ok((max_dist(&pts, b)?, method, pts.len()))
}

pub fn excess(a: &ConvexSet, b: &ConvexSet, sampler: &Sampler) -> Result<f64, GeometryError> {
    excess_report(a, b, sampler).map(|r| r.0)
}

/// Upper bound on `e(A, B)` read off the structure of `A`: exact for
/// polytopes, `ρ + e(C, B)` for `A = C + ρ𝔹`, the smallest member bound for
/// an intersection, `‖s‖` when `B = A + s`.
pub fn excess_upper_bound(a: &ConvexSet, b: &ConvexSet) -> Result<Option<f64>, GeometryError> {
    if a == b {
        return Ok(Some(0.0));
    }
    if let ConvexSet::Translate(t) = b {
        if t.inner() == a {
            return Ok(Some(t.shift().norm()));
        }
    }
    if let Some(vs) = a.vertices() {
        return max_dist(&vs, b).map(Some);
    }
    match a {
        ConvexSet::Dilation(d) => Ok(excess_upper_bound(d.inner(), b)?.map(|e| e + d.radius())),
        ConvexSet::Intersection(i) => {
            let mut best: Option<f64> = None;
            for m in i.members() {
                if let Some(e) = excess_upper_bound(m, b)? {
                    best = Some(best.map_or(e, |x| x.min(e)));
                }
            }
            Ok(best)
        }
        ConvexSet::Translate(t) => excess_upper_bound(t.inner(), &shift_back(b, t.shift())?),
        _ => Ok(None),
    }
}

/// `B − s`, collapsing nested translations.
fn shift_back(b: &ConvexSet, s: &Vector) -> Result<ConvexSet, GeometryError> {
    if let ConvexSet::Translate(t) = b {
        let rest = t.shift() - s;
        if rest.norm() == 0.0 {
            return Ok(t.inner().clone());
        }
        return ConvexSet::translate(Arc::new(t.inner().clone()), rest);
    }
    ConvexSet::translate(Arc::new(b.clone()), -s)
}

pub fn hausdorff(a: &ConvexSet, b: &ConvexSet, sampler: &Sampler) -> Result<SetDistanceReport, GeometryError> {
    let (ab, m1, n1) = excess_report(a, b, sampler)?;
    let (ba, m2, n2) = excess_report(b, a, sampler)?;
    let upper = |e: f64, m: Method, x: &ConvexSet, y: &ConvexSet| -> Result<Option<f64>, GeometryError> {
        match m {
            Method::VertexExact => Ok(Some(e)),
            Method::Sampled => excess_upper_bound(x, y),
        }
    };
    let upper_bound = match (upper(ab, m1, a, b)?, upper(ba, m2, b, a)?) {
        (Some(x), Some(y)) => Some(x.max(y)),
        _ => None,
    };
    Ok(SetDistanceReport {
        excess_ab: ab,
        excess_ba: ba,
        hausdorff: ab.max(ba),
        method: m1.and(m2),
        sample_count: n1 + n2,
        radius: None,
        upper_bound,
    })
}

/// `e_r(A, B) = e(A ∩ r𝔹, B)`, zero when the truncation is empty.
pub fn localized_excess_report(
    a: &ConvexSet,
    b: &ConvexSet,
    r: f64,
    sampler: &Sampler,
) -> Result<(f64, Method, usize), GeometryError> {
    if !(r > 0.0) {
        return Err(GeometryError::InvalidSet(format!("radius must be > 0, got {r}")));
    }
    match sampler.sample_truncated(a, r)? {
        None => Ok((0.0, Method::VertexExact, 0)),
        Some((pts, method)) => Ok((max_dist(&pts, b)?, method, pts.len())),
    }
}

pub fn localized_excess(a: &ConvexSet, b: &ConvexSet, r: f64, sampler: &Sampler) -> Result<f64, GeometryError> {
    localized_excess_report(a, b, r, sampler).map(|x| x.0)
}

pub fn localized_hausdorff(
    a: &ConvexSet,
    b: &ConvexSet,
    r: f64,
    sampler: &Sampler,
) -> Result<SetDistanceReport, GeometryError> {
    let (ab, m1, n1) = localized_excess_report(a, b, r, sampler)?;
    let (ba, m2, n2) = localized_excess_report(b, a, r, sampler)?;
    Ok(SetDistanceReport {
        excess_ab: ab,
        excess_ba: ba,
        hausdorff: ab.max(ba),
        method: m1.and(m2),
        sample_count: n1 + n2,
        radius: Some(r),
        upper_bound: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum AwFailure {
    /// `D_H(A ∩ r_n𝔹, A_n) > δ_n`.
    Hypothesis { index: usize, measured: f64, bound: f64 },
    /// `D_{H,r}(A, A_n) > δ_n` for an index past the first `r_n > r`.
    Conclusion { index: usize, r: f64, measured: f64, bound: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AwReport {
    pub ok: bool,
    /// Indices actually measured (members equal to the limit are skipped).
    pub checked: Vec<usize>,
    pub first_failure: Option<AwFailure>,
    pub max_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AwOptions {
    pub r_grid: Vec<f64>,
    pub slack: f64,
    pub sampler: Sampler,
}

impl Default for AwOptions {
    fn default() -> Self {
        AwOptions {
            r_grid: vec![1.0, 2.0, 4.0],
            slack: 1e-8,
            sampler: Sampler::default(),
        }
    }
}

/// Numerical check of the ball-truncation criterion for Attouch-Wets
/// convergence of `sequence` to `limit`.
///
/// Members structurally identical to `limit` are at distance zero from it and
/// are skipped.
pub fn aw_certify(
    sequence: &[ConvexSet],
    limit: &ConvexSet,
    radii: &[f64],
    delta_bounds: &[f64],
    opts: &AwOptions,
) -> Result<AwReport, GeometryError> {
    if sequence.len() != radii.len() || sequence.len() != delta_bounds.len() {
        return Err(GeometryError::InvalidSet(
            "sequence, radii and delta bounds must have equal length".into(),
        ));
    }
    let mut report = AwReport {
        ok: true,
        checked: Vec::new(),
        first_failure: None,
        max_ratio: 0.0,
    };
    for (n, ((a_n, &r_n), &d_n)) in sequence.iter().zip(radii).zip(delta_bounds).enumerate() {
        if a_n == limit {
            continue;
        }
        report.checked.push(n);
        let truncated = limit.truncate(r_n)?;
        let h = hausdorff(&truncated, a_n, &opts.sampler)?.hausdorff;
        report.max_ratio = report.max_ratio.max(h / d_n);
        if h > d_n + opts.slack {
            report.ok = false;
            report.first_failure = Some(AwFailure::Hypothesis {
                index: n,
                measured: h,
                bound: d_n,
            });
            return Ok(report);
        }
    }
    for &r in &opts.r_grid {
        let Some(start) = radii.iter().position(|&rn| rn > r) else {
            continue;
        };
        for n in start + 1..sequence.len() {
            if sequence[n] == *limit {
                continue;
            }
            let h = localized_hausdorff(limit, &sequence[n], r, &opts.sampler)?.hausdorff;
            if h > delta_bounds[n] + opts.slack {
                report.ok = false;
                report.first_failure = Some(AwFailure::Conclusion {
                    index: n,
                    r,
                    measured: h,
                    bound: delta_bounds[n],
                });
                return Ok(report);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn excess_examples() {
        let s = Sampler::default();
        let seg = ConvexSet::polytope(vec![v(&[0.0, 0.0]), v(&[3.0, 0.0])]).unwrap();
        let h = ConvexSet::halfspace(v(&[1.0, 0.0]), 0.0).unwrap();
        assert_eq!(excess(&seg, &h, &s).unwrap(), 3.0);
        let small = ConvexSet::polytope(vec![v(&[-1.0, 0.0]), v(&[-2.0, 1.0])]).unwrap();
        assert_eq!(excess(&small, &h, &s).unwrap(), 0.0);
        let b2 = ConvexSet::ball(v(&[0.0, 0.0]), 2.0).unwrap();
        let b1 = ConvexSet::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        assert!((excess(&b2, &b1, &s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hausdorff_examples() {
        let s = Sampler::default();
        let seg = ConvexSet::polytope(vec![v(&[0.0, 0.0]), v(&[1.0, 0.0])]).unwrap();
        let tri = ConvexSet::polytope(vec![v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
        let r = hausdorff(&seg, &tri, &s).unwrap();
        assert_eq!(r.method, Method::VertexExact);
        assert!(r.excess_ab.abs() < 1e-15);
        assert!((r.excess_ba - 1.0).abs() < 1e-12);
        assert_eq!(r.hausdorff, r.excess_ba);
        assert_eq!(hausdorff(&tri, &tri, &s).unwrap().hausdorff, 0.0);
        let b = |r| ConvexSet::ball(v(&[0.0, 0.0]), r).unwrap();
        assert!((hausdorff(&b(0.5), &b(2.0), &s).unwrap().hausdorff - 1.5).abs() < 1e-12);
    }

    #[test]
    fn localized_examples() {
        let s = Sampler::default();
        let e1 = ConvexSet::span(2, vec![v(&[1.0, 0.0])]).unwrap();
        let e2 = ConvexSet::span(2, vec![v(&[0.0, 1.0])]).unwrap();
        let origin = ConvexSet::singleton(v(&[0.0, 0.0]));
        assert!((localized_excess(&e1, &origin, 5.0, &s).unwrap() - 5.0).abs() < 1e-12);
        let far = ConvexSet::halfspace_geq(v(&[1.0, 0.0]), 3.0).unwrap();
        assert_eq!(localized_excess(&far, &origin, 1.0, &s).unwrap(), 0.0);
        let touching = ConvexSet::halfspace_geq(v(&[1.0, 0.0]), 1.0).unwrap();
        let p = ConvexSet::singleton(v(&[1.0, 0.0]));
        assert!(localized_excess(&touching, &p, 1.0, &s).unwrap() < 1e-7);
        assert!((localized_hausdorff(&e1, &e2, 1.0, &s).unwrap().hausdorff - 1.0).abs() < 1e-12);
        let b = |r| ConvexSet::ball(v(&[0.0, 0.0]), r).unwrap();
        assert!((localized_hausdorff(&b(1.0), &b(2.0), 10.0, &s).unwrap().hausdorff - 1.0).abs() < 1e-12);
        assert_eq!(localized_hausdorff(&e1, &e1, 3.0, &s).unwrap().hausdorff, 0.0);
    }

    #[test]
    fn structural_upper_bounds() {
        let tri = Arc::new(ConvexSet::polytope(vec![v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap());
        let fat = ConvexSet::dilation(tri.clone(), 0.3).unwrap();
        let cut = ConvexSet::intersect([fat.clone(), ConvexSet::halfspace(v(&[0.0, 1.0]), 0.5).unwrap()]).unwrap();
        assert_eq!(excess_upper_bound(&fat, &tri).unwrap(), Some(0.3));
        assert_eq!(excess_upper_bound(&cut, &tri).unwrap(), Some(0.3));
        let s = v(&[2.0, -1.0]);
        let moved = ConvexSet::translate(
            Arc::new(ConvexSet::dilation(Arc::new(ConvexSet::translate(tri.clone(), -&s).unwrap()), 0.1).unwrap()),
            s,
        )
        .unwrap();
        assert!((excess_upper_bound(&moved, &tri).unwrap().unwrap() - 0.1).abs() < 1e-15);
        let shifted = ConvexSet::translate(tri.clone(), v(&[0.0, 0.25])).unwrap();
        let fat_shifted = ConvexSet::dilation(Arc::new(shifted), 0.5).unwrap();
        assert_eq!(excess_upper_bound(&fat_shifted, &tri).unwrap(), Some(0.75));
        let r = hausdorff(&tri, &cut, &Sampler::default()).unwrap();
        assert_eq!(r.method, Method::Sampled);
        assert_eq!(r.upper_bound, Some(0.5), "{r:?}");
        assert!((r.excess_ab - 0.5).abs() < 1e-12 && r.excess_ba <= 0.3 + 1e-12);
        let h = ConvexSet::halfspace(v(&[1.0, 0.0]), 0.0).unwrap();
        assert_eq!(excess_upper_bound(&h, &tri).unwrap(), None);
    }

    #[test]
    fn retraction_stays_on_segment() {
        let a = v(&[0.5, 0.0]);
        let p = v(&[3.0, 4.0]);
        let q = retract(&a, &p, 2.0);
        assert!((q.norm() - 2.0).abs() < 1e-12);
        let t = (&q - &a).norm() / (&p - &a).norm();
        assert!(a.lerp(&p, t).dist(&q) < 1e-12);
    }

    #[test]
    fn aw_examples() {
        let o = AwOptions::default();
        let a = ConvexSet::polytope(vec![v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
        let n = 6;
        let radii: Vec<f64> = (1..=n).map(|k| k as f64).collect();
        let deltas: Vec<f64> = (1..=n).map(|k| 1.0 / k as f64).collect();
        let constant = vec![a.clone(); n];
        assert!(aw_certify(&constant, &a, &radii, &deltas, &o).unwrap().ok);

        let unit = ConvexSet::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        let balls: Vec<ConvexSet> = (1..=n)
            .map(|k| ConvexSet::ball(v(&[0.0, 0.0]), 1.0 + 1.0 / k as f64).unwrap())
            .collect();
        let rep = aw_certify(&balls, &unit, &radii, &deltas, &o).unwrap();
        assert!(rep.ok, "{rep:?}");
        assert_eq!(rep.checked.len(), n);

        let shifted = vec![ConvexSet::translate(a.clone(), v(&[1.0, 0.0])).unwrap(); n];
        let rep = aw_certify(&shifted, &a, &radii, &deltas, &o).unwrap();
        assert!(!rep.ok);
        assert!(matches!(rep.first_failure, Some(AwFailure::Hypothesis { .. })));
    }
}
