//! Convex-set algebra with metric projections.
//!
//! Every variant is nonempty, closed and convex by construction (an
//! `Intersection` is the one variant whose nonemptiness cannot be checked up
//! front; an empty one is reported when it is first projected onto).
//! Projections are pure, so sets can be shared across threads behind `Arc`.

mod intersection;
mod polytope;
mod repr;
mod shapes;

use std::sync::Arc;

use thiserror::Error;

use crate::vector::Vector;

pub use intersection::{project_dykstra, DykstraOptions, Intersection};
pub use polytope::Polytope;
pub use shapes::{AffineSpan, Ball, Halfspace, Hyperplane, Segment};

/// Base geometric tolerance; membership tests scale it by `1 + ‖x‖`.
pub const DEFAULT_TOL: f64 = 1e-9;

/// `DEFAULT_TOL · (1 + ‖x‖)`.
#[inline]
pub fn default_tol(x: &Vector) -> f64 {
    DEFAULT_TOL * (1.0 + x.norm())
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("invalid set: {0}")]
    InvalidSet(String),
    #[error("{method} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("intersection is empty")]
    EmptyIntersection,
}

/// `inner + radius·𝔹`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dilation {
    inner: Arc<ConvexSet>,
    radius: f64,
}

impl Dilation {
    pub fn inner(&self) -> &ConvexSet {
        &self.inner
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// `inner + shift`.
#[derive(Clone, Debug, PartialEq)]
pub struct Translate {
    inner: Arc<ConvexSet>,
    shift: Vector,
}

impl Translate {
    pub fn inner(&self) -> &ConvexSet {
        &self.inner
    }

    pub fn shift(&self) -> &Vector {
        &self.shift
    }
}

/// A closed convex set description.
#[derive(Clone, Debug, PartialEq)]
pub enum ConvexSet {
    Halfspace(Halfspace),
    Hyperplane(Hyperplane),
    Ball(Ball),
    Segment(Segment),
    AffineSpan(AffineSpan),
    Polytope(Polytope),
    Dilation(Dilation),
    Intersection(Intersection),
    Translate(Translate),
}

impl ConvexSet {
    /// `{x : ⟨normal, x⟩ ≤ offset}`.
    pub fn halfspace(normal: Vector, offset: f64) -> Result<Self, GeometryError> {
        Ok(ConvexSet::Halfspace(Halfspace::new(normal, offset)?))
    }

    /// `{x : ⟨normal, x⟩ ≥ offset}`.
    pub fn halfspace_geq(normal: Vector, offset: f64) -> Result<Self, GeometryError> {
        Self::halfspace(-&normal, -offset)
    }

    pub fn hyperplane(normal: Vector, offset: f64) -> Result<Self, GeometryError> {
        Ok(ConvexSet::Hyperplane(Hyperplane::new(normal, offset)?))
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self, GeometryError> {
        Ok(ConvexSet::Ball(Ball::new(center, radius)?))
    }

    pub fn singleton(point: Vector) -> Self {
        ConvexSet::Ball(Ball::new(point, 0.0).expect("zero radius is valid"))
    }

    pub fn segment(a: Vector, b: Vector) -> Result<Self, GeometryError> {
        Ok(ConvexSet::Segment(Segment::new(a, b)?))
    }

    pub fn affine_span(base: Vector, directions: Vec<Vector>) -> Result<Self, GeometryError> {
        Ok(ConvexSet::AffineSpan(AffineSpan::new(base, directions)?))
    }

    /// Linear span of `directions` in ℝ^dim.
    pub fn span(dim: usize, directions: Vec<Vector>) -> Result<Self, GeometryError> {
        Self::affine_span(Vector::zeros(dim), directions)
    }

    pub fn polytope(vertices: Vec<Vector>) -> Result<Self, GeometryError> {
        Ok(ConvexSet::Polytope(Polytope::new(vertices)?))
    }

    pub fn dilation(inner: impl Into<Arc<ConvexSet>>, radius: f64) -> Result<Self, GeometryError> {
        if !radius.is_finite() || radius <= 0.0 {
            return Err(GeometryError::InvalidSet(format!(
                "dilation radius must be > 0, got {radius}"
            )));
        }
        Ok(ConvexSet::Dilation(Dilation {
            inner: inner.into(),
            radius,
        }))
    }

    pub fn intersection(members: Vec<Arc<ConvexSet>>) -> Result<Self, GeometryError> {
        Ok(ConvexSet::Intersection(Intersection::new(members)?))
    }

    /// Intersection of owned sets.
    pub fn intersect(members: impl IntoIterator<Item = ConvexSet>) -> Result<Self, GeometryError> {
        Self::intersection(members.into_iter().map(Arc::new).collect())
    }

    pub fn translate(inner: impl Into<Arc<ConvexSet>>, shift: Vector) -> Result<Self, GeometryError> {
        let inner = inner.into();
        if inner.dim() != shift.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: inner.dim(),
                found: shift.dim(),
            });
        }
        Ok(ConvexSet::Translate(Translate { inner, shift }))
    }

    /// `self ∩ radius·𝔹`, merging with an existing origin-centred ball when present.
    pub fn truncate(&self, radius: f64) -> Result<ConvexSet, GeometryError> {
        let origin_ball = |s: &ConvexSet| match s {
            ConvexSet::Ball(b) if b.center().norm() == 0.0 => Some(b.radius()),
            _ => None,
        };
        if let Some(r) = origin_ball(self) {
            return ConvexSet::ball(Vector::zeros(self.dim()), r.min(radius));
        }
        if let ConvexSet::Intersection(i) = self {
            if let Some(pos) = i.members().iter().position(|m| origin_ball(m).is_some()) {
                let r = origin_ball(&i.members()[pos]).unwrap();
                if r <= radius {
                    return Ok(self.clone());
                }
                let mut members = i.members().to_vec();
                members[pos] = Arc::new(ConvexSet::ball(Vector::zeros(self.dim()), radius)?);
                return ConvexSet::intersection(members);
            }
        }
        ConvexSet::intersection(vec![
            Arc::new(self.clone()),
            Arc::new(ConvexSet::ball(Vector::zeros(self.dim()), radius)?),
        ])
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Halfspace(h) => h.normal().dim(),
            ConvexSet::Hyperplane(h) => h.normal().dim(),
            ConvexSet::Ball(b) => b.center().dim(),
            ConvexSet::Segment(s) => s.a().dim(),
            ConvexSet::AffineSpan(a) => a.base().dim(),
            ConvexSet::Polytope(p) => p.vertices()[0].dim(),
            ConvexSet::Dilation(d) => d.inner.dim(),
            ConvexSet::Intersection(i) => i.members()[0].dim(),
            ConvexSet::Translate(t) => t.shift.dim(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ConvexSet::Halfspace(_) => "halfspace",
            ConvexSet::Hyperplane(_) => "hyperplane",
            ConvexSet::Ball(_) => "ball",
            ConvexSet::Segment(_) => "segment",
            ConvexSet::AffineSpan(_) => "affine_span",
            ConvexSet::Polytope(_) => "polytope",
            ConvexSet::Dilation(_) => "dilation",
            ConvexSet::Intersection(_) => "intersection",
            ConvexSet::Translate(_) => "translate",
        }
    }

    /// Halfspaces, hyperplanes and balls: constraints with a one-parameter dual.
    pub(crate) fn is_simple_constraint(&self) -> bool {
        matches!(
            self,
            ConvexSet::Halfspace(_) | ConvexSet::Hyperplane(_) | ConvexSet::Ball(_)
        )
    }

    fn check_dim(&self, x: &Vector) -> Result<(), GeometryError> {
        if x.dim() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        if !x.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        Ok(())
    }

    /// Metric projection `P_C(x)`.
    pub fn project(&self, x: &Vector) -> Result<Vector, GeometryError> {
        self.check_dim(x)?;
        match self {
            ConvexSet::Halfspace(h) => Ok(h.project(x)),
            ConvexSet::Hyperplane(h) => Ok(h.project(x)),
            ConvexSet::Ball(b) => Ok(b.project(x)),
            ConvexSet::Segment(s) => Ok(s.project(x)),
            ConvexSet::AffineSpan(a) => Ok(a.project(x)),
            ConvexSet::Polytope(p) => p.project(x),
            ConvexSet::Dilation(d) => project_dilation(&d.inner, d.radius, x),
            ConvexSet::Intersection(i) => i.project(x),
            ConvexSet::Translate(t) => {
                let p = t.inner.project(&(x - &t.shift))?;
                Ok(&p + &t.shift)
            }
        }
    }

    /// `dist(x, C)`.
    pub fn dist(&self, x: &Vector) -> Result<f64, GeometryError> {
        self.check_dim(x)?;
        match self {
            ConvexSet::Halfspace(h) => Ok(h.dist(x)),
            ConvexSet::Hyperplane(h) => Ok(h.dist(x)),
            ConvexSet::Ball(b) => Ok(b.dist(x)),
            ConvexSet::Dilation(d) => Ok((d.inner.dist(x)? - d.radius).max(0.0)),
            ConvexSet::Translate(t) => t.inner.dist(&(x - &t.shift)),
            _ => Ok(x.dist(&self.project(x)?)),
        }
    }

    /// `dist(x, C) ≤ tol`.
    pub fn membership(&self, x: &Vector, tol: f64) -> Result<bool, GeometryError> {
        self.check_dim(x)?;
        match self {
            ConvexSet::Halfspace(h) => Ok(h.excess(x) <= tol),
            ConvexSet::Hyperplane(h) => Ok(h.excess(x).abs() <= tol),
            ConvexSet::Ball(b) => Ok(x.dist(b.center()) <= b.radius() + tol),
            ConvexSet::Dilation(d) => Ok(d.inner.dist(x)? <= d.radius + tol),
            ConvexSet::Translate(t) => t.inner.membership(&(x - &t.shift), tol),
            ConvexSet::Intersection(i) => i.membership(x, tol),
            _ => Ok(self.dist(x)? <= tol),
        }
    }

    /// Membership at the default tolerance `1e-9·(1+‖x‖)`.
    pub fn contains(&self, x: &Vector) -> Result<bool, GeometryError> {
        self.membership(x, default_tol(x))
    }

    /// Upper bound on the support function `sup_{c∈C} ⟨g, c⟩` (possibly +∞).
    ///
    /// Exact for every variant except a general `Intersection`, where the
    /// minimum over members is returned.
    pub fn support(&self, g: &Vector) -> f64 {
        const PAR: f64 = 1e-12;
        let gn = g.norm();
        match self {
            ConvexSet::Halfspace(h) => {
                let c = g.dot(h.normal());
                let resid = (g - &h.normal().scaled(c)).norm();
                if c >= 0.0 && resid <= PAR * gn {
                    c * h.offset()
                } else {
                    f64::INFINITY
                }
            }
            ConvexSet::Hyperplane(h) => {
                let c = g.dot(h.normal());
                let resid = (g - &h.normal().scaled(c)).norm();
                if resid <= PAR * gn {
                    c * h.offset()
                } else {
                    f64::INFINITY
                }
            }
            ConvexSet::Ball(b) => g.dot(b.center()) + b.radius() * gn,
            ConvexSet::Segment(s) => g.dot(s.a()).max(g.dot(s.b())),
            ConvexSet::Polytope(p) => p
                .vertices()
                .iter()
                .map(|v| g.dot(v))
                .fold(f64::NEG_INFINITY, f64::max),
            ConvexSet::AffineSpan(a) => {
                if a.project_linear(g).norm() <= PAR * gn {
                    g.dot(a.base())
                } else {
                    f64::INFINITY
                }
            }
            ConvexSet::Dilation(d) => d.inner.support(g) + d.radius * gn,
            ConvexSet::Translate(t) => t.inner.support(g) + g.dot(&t.shift),
            ConvexSet::Intersection(i) => i.support(g),
        }
    }

    /// Upper bound on `sup_{c∈C} ‖c‖` (+∞ when unbounded).
    pub fn bound_radius(&self) -> f64 {
        match self {
            ConvexSet::Halfspace(_) | ConvexSet::Hyperplane(_) => f64::INFINITY,
            ConvexSet::AffineSpan(a) => {
                if a.directions().is_empty() {
                    a.base().norm()
                } else {
                    f64::INFINITY
                }
            }
            ConvexSet::Ball(b) => b.center().norm() + b.radius(),
            ConvexSet::Segment(s) => s.a().norm().max(s.b().norm()),
            ConvexSet::Polytope(p) => p.vertices().iter().map(Vector::norm).fold(0.0, f64::max),
            ConvexSet::Dilation(d) => d.inner.bound_radius() + d.radius,
            ConvexSet::Translate(t) => t.inner.bound_radius() + t.shift.norm(),
            ConvexSet::Intersection(i) => i
                .members()
                .iter()
                .map(|m| m.bound_radius())
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Vertex list when the set is a polytope (segments included).
    pub fn vertices(&self) -> Option<Vec<Vector>> {
        match self {
            ConvexSet::Polytope(p) => Some(p.vertices().to_vec()),
            ConvexSet::Segment(s) => Some(vec![s.a().clone(), s.b().clone()]),
            ConvexSet::Ball(b) if b.radius() == 0.0 => Some(vec![b.center().clone()]),
            ConvexSet::Translate(t) => t
                .inner
                .vertices()
                .map(|vs| vs.iter().map(|v| v + &t.shift).collect()),
            _ => None,
        }
    }
}

/// Projection onto `C + r·𝔹`: `x` itself when `dist(x, C) ≤ r`, otherwise
/// `p + r(x − p)/‖x − p‖` with `p = P_C(x)`.
pub fn project_dilation(c: &ConvexSet, r: f64, x: &Vector) -> Result<Vector, GeometryError> {
    if !(r > 0.0) {
        return Err(GeometryError::InvalidSet(format!(
            "dilation radius must be > 0, got {r}"
        )));
    }
    let p = c.project(x)?;
    let d = x.dist(&p);
    if d <= r {
        Ok(x.clone())
    } else {
        Ok(p.lerp(x, r / d))
    }
}

/// Harness for the nested-projection fact: with `C ⊆ D` and `p = P_D(b)`,
/// `p ∈ C` forces `p = P_C(b)`. Returns whether the implication holds at `b`.
pub fn nested_projection_check(
    c: &ConvexSet,
    d: &ConvexSet,
    b: &Vector,
    tol: f64,
) -> Result<bool, GeometryError> {
    let p = d.project(b)?;
    if !c.membership(&p, tol)? {
        return Ok(true);
    }
    Ok(c.project(b)?.dist(&p) <= tol)
}

impl From<Halfspace> for ConvexSet {
    fn from(h: Halfspace) -> Self {
        ConvexSet::Halfspace(h)
    }
}
