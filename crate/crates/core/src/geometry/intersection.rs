//! Projection onto finite intersections.
//!
//! Strategy, cheapest first:
//! 1. an affine set cut by a ball centred on it has the closed form
//!    `P_ball(P_aff(x))`, and affine sets meet in an affine set;
//! 2. if projecting onto a single member already lands in every other
//!    member, that point is the answer;
//! 3. a segment member cuts the rest down to a sub-segment, found by a
//!    line search;
//! 4. when one member is a halfspace, hyperplane or ball, the problem has a
//!    one-dimensional dual and is solved by a bracketed root search over
//!    projections onto the remaining members;
//! 5. otherwise Dykstra's cyclic scheme.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::vector::Vector;

use super::{ConvexSet, GeometryError};

/// Exact-form cases detected at construction.
#[derive(Clone, Debug, PartialEq)]
enum Kind {
    General,
    /// `members[affine] ∩ members[ball]` with the ball centre on the affine set.
    AffineBall { affine: usize, ball: usize },
    /// Only affine members: `P(x) = y0 + N(x − y0)` with `N` the projector
    /// onto the common linear part, or `None` when they do not meet.
    Affine(Option<(Vector, DMatrix<f64>)>),
}

/// Nonempty list of sets, all of the same dimension.
#[derive(Clone, Debug)]
pub struct Intersection {
    members: Vec<Arc<ConvexSet>>,
    kind: Kind,
}

impl PartialEq for Intersection {
    fn eq(&self, other: &Self) -> bool {
        self.members == other.members
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DykstraOptions {
    /// Stop when a full sweep's path length is at most `tol·(1+‖y‖)`.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for DykstraOptions {
    fn default() -> Self {
        DykstraOptions {
            tol: 1e-10,
            max_sweeps: 100_000,
        }
    }
}

const SHORTCUT_TOL: f64 = 1e-12;
const ROOT_ITERS: usize = 200;

impl Intersection {
    pub fn new(members: Vec<Arc<ConvexSet>>) -> Result<Self, GeometryError> {
        let first = members
            .first()
            .ok_or_else(|| GeometryError::InvalidSet("intersection needs at least one member".into()))?;
        let dim = first.dim();
        if let Some(bad) = members.iter().find(|m| m.dim() != dim) {
            return Err(GeometryError::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        let kind = detect_kind(&members);
        Ok(Intersection { members, kind })
    }

    pub fn members(&self) -> &[Arc<ConvexSet>] {
        &self.members
    }

    pub(crate) fn project(&self, x: &Vector) -> Result<Vector, GeometryError> {
        if self.members.len() == 1 {
            return self.members[0].project(x);
        }
        match &self.kind {
            Kind::AffineBall { affine, ball } => {
                let p = self.members[*affine].project(x)?;
                return self.members[*ball].project(&p);
            }
            Kind::Affine(None) => return Err(GeometryError::EmptyIntersection),
            Kind::Affine(Some((y0, n))) => {
                let d = DVector::from_column_slice((x - y0).as_slice());
                return Ok(y0 + &Vector::from_slice((n * d).as_slice()));
            }
            Kind::General => {}
        }
        if let Some(p) = self.shortcut(x)? {
            return Ok(p);
        }
        if let Some(i) = self.members.iter().position(|m| matches!(**m, ConvexSet::Segment(_))) {
            if let ConvexSet::Segment(seg) = &*self.members[i] {
                return segment_cut(seg.a(), seg.b(), &*self.rest(i)?, x);
            }
        }
        if self.members.len() <= 4 {
            if let Some(i) = self.members.iter().position(|m| m.is_simple_constraint()) {
                return dual_search(&self.members[i], &*self.rest(i)?, x);
            }
        }
        project_dykstra(&self.members, x, DykstraOptions::default())
    }

    /// All members but the `i`-th.
    fn rest(&self, i: usize) -> Result<Arc<ConvexSet>, GeometryError> {
        let mut rest: Vec<Arc<ConvexSet>> = self
            .members
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, m)| m.clone())
            .collect();
        Ok(if rest.len() == 1 {
            rest.pop().unwrap()
        } else {
            Arc::new(ConvexSet::Intersection(Intersection::new(rest)?))
        })
    }

    /// A member's projection that is feasible for all other members.
    fn shortcut(&self, x: &Vector) -> Result<Option<Vector>, GeometryError> {
        let mut order: Vec<usize> = (0..self.members.len()).collect();
        order.sort_by_key(|&i| !self.members[i].is_simple_constraint());
        for &i in &order {
            let p = self.members[i].project(x)?;
            let tol = SHORTCUT_TOL * (1.0 + p.norm());
            let mut ok = true;
            for (j, m) in self.members.iter().enumerate() {
                if j != i && !m.membership(&p, tol)? {
                    ok = false;
                    break;
                }
            }
            if ok {
                return Ok(Some(p));
            }
        }
        Ok(None)
    }

    pub(crate) fn membership(&self, x: &Vector, tol: f64) -> Result<bool, GeometryError> {
        for m in &self.members {
            if !m.membership(x, tol)? {
                return Ok(false);
            }
        }
        if matches!(self.kind, Kind::AffineBall { .. } | Kind::Affine(Some(_))) {
            return Ok(true);
        }
        match self.project(x) {
            Ok(p) => Ok(p.dist(x) <= tol),
            Err(GeometryError::EmptyIntersection) => Ok(false),
            Err(e) => Err(e),
        }
    }

    pub(crate) fn support(&self, g: &Vector) -> f64 {
        if let Kind::AffineBall { affine, ball } = self.kind {
            if let (ConvexSet::AffineSpan(a), ConvexSet::Ball(b)) =
                (&*self.members[affine], &*self.members[ball])
            {
                return g.dot(b.center()) + b.radius() * a.project_linear(g).norm();
            }
        }
        self.members
            .iter()
            .map(|m| m.support(g))
            .fold(f64::INFINITY, f64::min)
    }
}

fn detect_kind(members: &[Arc<ConvexSet>]) -> Kind {
    if members.len() >= 2
        && members
            .iter()
            .all(|m| matches!(**m, ConvexSet::AffineSpan(_) | ConvexSet::Hyperplane(_)))
    {
        return Kind::Affine(affine_meet(members));
    }
    if members.len() != 2 {
        return Kind::General;
    }
    for (affine, ball) in [(0, 1), (1, 0)] {
        if let (ConvexSet::AffineSpan(a), ConvexSet::Ball(b)) = (&*members[affine], &*members[ball]) {
            let off = a.project(b.center()).dist(b.center());
            if off <= 1e-14 * (1.0 + b.center().norm()) {
                return Kind::AffineBall { affine, ball };
            }
        }
    }
    Kind::General
}

/// Stacks every member as `M_i y = r_i` (`M_i = I − DDᵀ` for a span with
/// orthonormal `D`, a single row for a hyperplane) and solves by SVD.
fn affine_meet(members: &[Arc<ConvexSet>]) -> Option<(Vector, DMatrix<f64>)> {
    let dim = members[0].dim();
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for m in members {
        match &**m {
            ConvexSet::Hyperplane(h) => rows.push((h.normal().as_slice().to_vec(), h.offset())),
            ConvexSet::AffineSpan(a) => {
                for i in 0..dim {
                    let e = Vector::basis(dim, i);
                    let row = &e - &a.project_linear(&e);
                    let rhs = row.dot(a.base());
                    rows.push((row.as_slice().to_vec(), rhs));
                }
            }
            _ => unreachable!("affine members only"),
        }
    }
    // pivoted Gram-Schmidt on the rows, carrying the right-hand sides along;
    // each basis vector q_j ends up with q_j·y = s_j on the whole meet
    let scale = 1.0 + rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
    let mut rows: Vec<(Vector, f64)> = rows.into_iter().map(|(r, b)| (Vector::from_slice(&r), b)).collect();
    let mut basis: Vec<(Vector, f64)> = Vec::new();
    while !rows.is_empty() {
        let (i, norm) = rows
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r.0.norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if norm <= 1e-10 {
            break;
        }
        let (row, rhs) = rows.swap_remove(i);
        let q = row.scaled(1.0 / norm);
        let s = rhs / norm;
        for r in rows.iter_mut() {
            // twice, for orthogonality to working precision
            for _ in 0..2 {
                let c = r.0.dot(&q);
                r.0.axpy(-c, &q);
                r.1 -= c * s;
            }
        }
        basis.push((q, s));
    }
    if rows.iter().any(|r| r.1.abs() > 1e-9 * scale) {
        return None;
    }
    let mut y0 = Vector::zeros(dim);
    let mut n = DMatrix::identity(dim, dim);
    for (q, s) in &basis {
        y0.axpy(*s, q);
        let qv = DVector::from_column_slice(q.as_slice());
        n -= &qv * qv.transpose();
    }
    Some((y0, n))
}

/// Projection onto `simple ∩ rest` through the one-dimensional dual of the
/// simple constraint.
fn dual_search(simple: &ConvexSet, rest: &ConvexSet, x: &Vector) -> Result<Vector, GeometryError> {
    match simple {
        ConvexSet::Halfspace(h) => match halfspace_dual(rest, x, h.normal(), h.offset())? {
            Some(p) => Ok(p),
            None => rest.project(x),
        },
        ConvexSet::Hyperplane(h) => {
            let p0 = rest.project(x)?;
            let e = h.excess(&p0);
            if e == 0.0 {
                return Ok(p0);
            }
            let (n, beta) = if e > 0.0 {
                (h.normal().clone(), h.offset())
            } else {
                (-h.normal(), -h.offset())
            };
            Ok(halfspace_dual(rest, x, &n, beta)?.unwrap_or(p0))
        }
        ConvexSet::Ball(b) => ball_dual(rest, x, b.center(), b.radius()),
        _ => unreachable!("dual search needs a simple constraint"),
    }
}

/// Projection onto `[a, b] ∩ rest`. The intersection is a sub-segment
/// `a + [t0, t1](b − a)`, located through the convex function
/// `t ↦ dist(a + t(b − a), rest)`; the answer is the clamped line projection.
fn segment_cut(a: &Vector, b: &Vector, rest: &ConvexSet, x: &Vector) -> Result<Vector, GeometryError> {
    let d = b - a;
    let dd = d.norm_sq();
    if dd == 0.0 {
        return match rest.dist(a)? <= 1e-12 * (1.0 + a.norm()) {
            true => Ok(a.clone()),
            false => Err(GeometryError::EmptyIntersection),
        };
    }
    let ztol = 1e-13 * (1.0 + a.norm() + b.norm());
    let f = |t: f64| -> Result<f64, GeometryError> {
        let mut y = a.clone();
        y.axpy(t, &d);
        rest.dist(&y)
    };
    // golden section for a feasible parameter
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = (f(0.0)?, 0.0);
    let f1 = f(1.0)?;
    if f1 < best.0 {
        best = (f1, 1.0);
    }
    let mut t1 = hi - g * (hi - lo);
    let mut t2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(t1)?, f(t2)?);
    // 0.618⁸⁰ ≈ 2e-17, below the spacing of floats near 1
    for _ in 0..80 {
        if best.0 <= ztol {
            break;
        }
        if f1.min(f2) < best.0 {
            best = if f1 <= f2 { (f1, t1) } else { (f2, t2) };
        }
        if f1 <= f2 {
            hi = t2;
            t2 = t1;
            f2 = f1;
            t1 = hi - g * (hi - lo);
            f1 = f(t1)?;
        } else {
            lo = t1;
            t1 = t2;
            f1 = f2;
            t2 = lo + g * (hi - lo);
            f2 = f(t2)?;
        }
    }
    if f1.min(f2) < best.0 {
        best = if f1 <= f2 { (f1, t1) } else { (f2, t2) };
    }
    if best.0 > 1e3 * ztol {
        return Err(GeometryError::EmptyIntersection);
    }
    let star = best.1;
    // the feasible interval's ends, by bisection towards 0 and 1
    let edge = |outer: f64| -> Result<f64, GeometryError> {
        if f(outer)? <= ztol {
            return Ok(outer);
        }
        let (mut inside, mut outside) = (star, outer);
        for _ in 0..64 {
            let mid = 0.5 * (inside + outside);
            if f(mid)? <= ztol {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok(inside)
    };
    let t = (x - a).dot(&d) / dd;
    let t = if t <= star {
        t.max(edge(0.0)?)
    } else {
        t.min(edge(1.0)?)
    };
    let mut y = a.clone();
    y.axpy(t, &d);
    Ok(y)
}

/// Solves `min ‖y − x‖` over `rest ∩ {⟨n, y⟩ ≤ β}` via `y(λ) = P_rest(x − λn)`.
/// Returns `None` when `P_rest(x)` is already feasible.
fn halfspace_dual(
    rest: &ConvexSet,
    x: &Vector,
    n: &Vector,
    beta: f64,
) -> Result<Option<Vector>, GeometryError> {
    let at = |lam: f64| -> Result<(Vector, f64), GeometryError> {
        let mut y = x.clone();
        y.axpy(-lam, n);
        let p = rest.project(&y)?;
        let g = n.dot(&p) - beta;
        Ok((p, g))
    };
    let (p0, g0) = at(0.0)?;
    if g0 <= 0.0 {
        return Ok(None);
    }
    let scale = 1.0 + x.norm() + beta.abs();
    let gtol = 1e-14 * scale;

    // bracket: g is nonincreasing in λ
    let mut lo = (0.0, g0, p0);
    let mut step = g0.max(1e-12 * scale);
    let mut hi = None;
    for _ in 0..ROOT_ITERS {
        let (p, g) = at(lo.0 + step)?;
        // a residual g that no longer moves p is roundoff on a plateau, e.g.
        // when `rest` is a single point on the boundary
        if g <= 0.0 || (g <= gtol && p.dist(&lo.2) <= 1e-15 * scale) {
            hi = Some((lo.0 + step, g, p));
            break;
        }
        lo = (lo.0 + step, g, p);
        step *= 2.0;
    }
    let hi = hi.ok_or(GeometryError::EmptyIntersection)?;
    illinois(lo, hi, gtol, |lam| at(lam)).map(Some)
}

/// Solves `min ‖y − x‖` over `rest ∩ Ball(c, ρ)` via
/// `y(t) = P_rest(c + t(x − c))`, `t ∈ [0, 1]`.
fn ball_dual(rest: &ConvexSet, x: &Vector, c: &Vector, rho: f64) -> Result<Vector, GeometryError> {
    let at = |t: f64| -> Result<(Vector, f64), GeometryError> {
        let p = rest.project(&c.lerp(x, t))?;
        let h = p.dist(c) - rho;
        Ok((p, h))
    };
    let (p1, h1) = at(1.0)?;
    if h1 <= 0.0 {
        return Ok(p1);
    }
    let (p0, h0) = at(0.0)?;
    if h0 > 1e-14 * (1.0 + c.norm() + rho) {
        return Err(GeometryError::EmptyIntersection);
    }
    if h0 >= 0.0 {
        return Ok(p0);
    }
    // keep the feasible side (h ≤ 0) as the returned endpoint
    let gtol = 1e-14 * (1.0 + rho + c.norm());
    let neg = |t: f64| at(t).map(|(p, h)| (p, -h));
    illinois((0.0, -h0, p0), (1.0, -h1, p1), gtol, neg)
}

/// Illinois regula falsi on a bracket with `g(lo) > 0 ≥ g(hi)`. Returns the
/// point at an abscissa with `|g| ≤ gtol`, or the feasible (`g ≤ 0`) end once
/// the bracket collapses.
fn illinois<F>(
    lo: (f64, f64, Vector),
    hi: (f64, f64, Vector),
    gtol: f64,
    mut eval: F,
) -> Result<Vector, GeometryError>
where
    F: FnMut(f64) -> Result<(Vector, f64), GeometryError>,
{
    let (mut a, mut ga, _) = lo;
    let (mut b, mut gb, mut pb) = hi;
    if gb.abs() <= gtol {
        return Ok(pb);
    }
    // ga, gb get halved below, so only freshly evaluated values are tested
    let mut side = 0i8;
    for _ in 0..ROOT_ITERS {
        if (b - a).abs() <= 4.0 * f64::EPSILON * b.abs().max(a.abs()).max(f64::MIN_POSITIVE) {
            return Ok(pb);
        }
        let mut t = (a * gb - b * ga) / (gb - ga);
        if !(t > a.min(b) && t < a.max(b)) {
            t = 0.5 * (a + b);
        }
        let (p, g) = eval(t)?;
        if g.abs() <= gtol {
            return Ok(p);
        }
        if g < 0.0 {
            b = t;
            gb = g;
            pb = p;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        } else {
            a = t;
            ga = g;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        }
    }
    Err(GeometryError::NonConvergence {
        method: "dual root search",
        iterations: ROOT_ITERS,
        residual: (b - a).abs(),
    })
}

/// Dykstra's cyclic projection onto `⋂ members`.
pub fn project_dykstra(
    members: &[Arc<ConvexSet>],
    x: &Vector,
    opts: DykstraOptions,
) -> Result<Vector, GeometryError> {
    let mut y = x.clone();
    let mut incr: Vec<Vector> = vec![Vector::zeros(x.dim()); members.len()];
    let mut change = f64::INFINITY;
    for _ in 0..opts.max_sweeps {
        // path length of the sweep, which is also how far the increments
        // moved; the net displacement can vanish while they still move
        change = 0.0;
        for (m, q) in members.iter().zip(incr.iter_mut()) {
            let z = &y + q;
            let p = m.project(&z)?;
            *q = &z - &p;
            change += p.dist(&y);
            y = p;
        }
        if change <= opts.tol * (1.0 + y.norm()) {
            return Ok(y);
        }
    }
    Err(GeometryError::NonConvergence {
        method: "dykstra",
        iterations: opts.max_sweeps,
        residual: change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    fn arc(s: ConvexSet) -> Arc<ConvexSet> {
        Arc::new(s)
    }

    #[test]
    fn halfspace_and_ball_corner() {
        // {x₁ ≤ 0} ∩ Ball(0,1): from (1, 2) the nearest point is (0, 1)
        let i = ConvexSet::intersect([
            ConvexSet::halfspace(v(&[1.0, 0.0]), 0.0).unwrap(),
            ConvexSet::ball(v(&[0.0, 0.0]), 1.0).unwrap(),
        ])
        .unwrap();
        let p = i.project(&v(&[1.0, 2.0])).unwrap();
        assert!(p.dist(&v(&[0.0, 1.0])) < 1e-12, "{p:?}");
    }

    #[test]
    fn dual_and_dykstra_agree() {
        let members = vec![
            arc(ConvexSet::halfspace(v(&[1.0, 1.0]), 0.5).unwrap()),
            arc(ConvexSet::ball(v(&[0.3, 0.0]), 1.0).unwrap()),
            arc(ConvexSet::polytope(vec![v(&[-1.0, -1.0]), v(&[2.0, -1.0]), v(&[-1.0, 2.0])]).unwrap()),
        ];
        let i = ConvexSet::intersection(members.clone()).unwrap();
        for x in [v(&[3.0, 3.0]), v(&[-2.0, 1.5]), v(&[0.9, -2.0]), v(&[1.0, 1.0])] {
            let p = i.project(&x).unwrap();
            let q = project_dykstra(
                &members,
                &x,
                DykstraOptions {
                    tol: 1e-14,
                    max_sweeps: 1_000_000,
                },
            )
            .unwrap();
            assert!(p.dist(&q) < 1e-7, "{x:?}: {p:?} vs {q:?}");
        }
    }

    #[test]
    fn hyperplane_member_both_sides() {
        let i = ConvexSet::intersect([
            ConvexSet::hyperplane(v(&[0.0, 1.0]), 0.5).unwrap(),
            ConvexSet::ball(v(&[0.0, 0.0]), 1.0).unwrap(),
        ])
        .unwrap();
        let r = (1.0f64 - 0.25).sqrt();
        for (x, want) in [
            (v(&[5.0, 3.0]), v(&[r, 0.5])),
            (v(&[-5.0, -3.0]), v(&[-r, 0.5])),
            (v(&[0.1, -0.2]), v(&[0.1, 0.5])),
        ] {
            let p = i.project(&x).unwrap();
            assert!(p.dist(&want) < 1e-10, "{x:?}: {p:?}");
        }
    }

    #[test]
    fn disjoint_members_are_reported() {
        let i = ConvexSet::intersect([
            ConvexSet::ball(v(&[0.0, 0.0]), 1.0).unwrap(),
            ConvexSet::halfspace(v(&[-1.0, 0.0]), -2.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(i.project(&v(&[0.0, 0.0])), Err(GeometryError::EmptyIntersection));
    }

    #[test]
    fn affine_ball_closed_form() {
        let line = ConvexSet::span(3, vec![v(&[1.0, 1.0, 0.0])]).unwrap();
        let t = line.truncate(1.0).unwrap();
        let p = t.project(&v(&[4.0, 2.0, 7.0])).unwrap();
        let s = 0.5f64.sqrt();
        assert!(p.dist(&v(&[s, s, 0.0])) < 1e-14);
    }

    #[test]
    fn crossing_segments_meet_at_one_point() {
        // [(-1,-1,0),(1,1,0)] ∩ [(-1,1,0),(1,-1,0)] = {0}, cut by x₃ ≤ 1
        let i = ConvexSet::intersect([
            ConvexSet::segment(v(&[-1.0, -1.0, 0.0]), v(&[1.0, 1.0, 0.0])).unwrap(),
            ConvexSet::halfspace(v(&[0.0, 0.0, 1.0]), 1.0).unwrap(),
            ConvexSet::segment(v(&[-1.0, 1.0, 0.0]), v(&[1.0, -1.0, 0.0])).unwrap(),
        ])
        .unwrap();
        let p = i.project(&v(&[3.0, 0.5, 2.0])).unwrap();
        assert!(p.norm() < 1e-12, "{p:?}");
    }

    #[test]
    fn overlapping_segments_clamp_to_the_overlap() {
        let i = ConvexSet::intersect([
            ConvexSet::segment(v(&[0.0, 0.0]), v(&[2.0, 0.0])).unwrap(),
            ConvexSet::segment(v(&[1.0, 0.0]), v(&[3.0, 0.0])).unwrap(),
        ])
        .unwrap();
        assert!(i.project(&v(&[-5.0, 1.0])).unwrap().dist(&v(&[1.0, 0.0])) < 1e-12);
        assert!(i.project(&v(&[1.5, 1.0])).unwrap().dist(&v(&[1.5, 0.0])) < 1e-12);
        assert!(i.project(&v(&[9.0, 0.0])).unwrap().dist(&v(&[2.0, 0.0])) < 1e-12);
        let far = ConvexSet::intersect([
            ConvexSet::segment(v(&[0.0, 0.0]), v(&[1.0, 0.0])).unwrap(),
            ConvexSet::segment(v(&[2.0, 0.0]), v(&[3.0, 0.0])).unwrap(),
        ])
        .unwrap();
        assert!(matches!(far.project(&v(&[0.0, 0.0])), Err(GeometryError::EmptyIntersection)));
    }

    #[test]
    fn concurrent_lines() {
        // three lines through (1, 2), two of them nearly parallel
        let q = v(&[1.0, 2.0]);
        let lines = [[0.0, 1.0], [1.0, 0.05], [1.0, -0.05]].map(|n| {
            let n = v(&n).normalized().unwrap();
            ConvexSet::hyperplane(n.clone(), n.dot(&q)).unwrap()
        });
        let i = ConvexSet::intersect(lines).unwrap();
        assert!(i.project(&v(&[-3.0, 9.0])).unwrap().dist(&q) < 1e-9);
    }

    #[test]
    fn hyperplane_through_polytope_face() {
        // the root of the dual sits on a plateau evaluated with roundoff
        let square = ConvexSet::polytope(vec![
            v(&[0.0, 0.0]),
            v(&[1.0, 0.0]),
            v(&[1.0, 1.0]),
            v(&[0.0, 1.0]),
        ])
        .unwrap();
        let line = ConvexSet::hyperplane(v(&[0.1, 1.0]).normalized().unwrap(), 0.0).unwrap();
        let i = ConvexSet::intersect([line.clone(), square]).unwrap();
        for x in [v(&[-1.0, 3.0]), v(&[2.0, 2.0]), v(&[0.5, -4.0])] {
            let p = i.project(&x).unwrap();
            assert!(p.norm() < 1e-12, "{x:?}: {p:?}");
        }
    }

    #[test]
    fn dykstra_stall_is_not_convergence() {
        // a sweep can leave y in place while the increments keep moving
        let members = vec![
            arc(ConvexSet::polytope(vec![v(&[0.0, 0.0]), v(&[2.0, 0.0]), v(&[0.0, 2.0])]).unwrap()),
            arc(ConvexSet::halfspace(v(&[-1.0, 0.0]), -0.5).unwrap()),
            arc(ConvexSet::halfspace(v(&[0.0, -1.0]), -0.5).unwrap()),
        ];
        let x = v(&[3.0, -1.0]);
        let p = project_dykstra(&members, &x, DykstraOptions::default()).unwrap();
        // the corner region is the triangle (0.5,0.5), (1.5,0.5), (0.5,1.5)
        assert!(p.dist(&v(&[1.5, 0.5])) < 1e-8, "{p:?}");
    }

    #[test]
    fn affine_members_meet_exactly() {
        // two planes through (0,0,1) at a small angle share the x₁ axis shifted up
        let t = 1e-3f64;
        let base = v(&[0.0, 0.0, 1.0]);
        let p1 = ConvexSet::affine_span(base.clone(), vec![v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])]).unwrap();
        let p2 = ConvexSet::affine_span(base, vec![v(&[1.0, 0.0, 0.0]), v(&[0.0, t.cos(), t.sin()])]).unwrap();
        let i = ConvexSet::intersect([p1.clone(), p2]).unwrap();
        let p = i.project(&v(&[2.0, 5.0, -3.0])).unwrap();
        assert!(p.dist(&v(&[2.0, 0.0, 1.0])) < 1e-10, "{p:?}");
        let h = ConvexSet::hyperplane(v(&[1.0, 0.0, 0.0]), 0.5).unwrap();
        let j = ConvexSet::intersect([p1.clone(), h]).unwrap();
        assert!(j.project(&v(&[0.0, 2.0, 0.0])).unwrap().dist(&v(&[0.5, 2.0, 1.0])) < 1e-12);
        let parallel = ConvexSet::affine_span(v(&[0.0, 0.0, 2.0]), vec![v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])]).unwrap();
        let none = ConvexSet::intersect([p1, parallel]).unwrap();
        assert!(matches!(none.project(&v(&[0.0, 0.0, 0.0])), Err(GeometryError::EmptyIntersection)));
    }
}
