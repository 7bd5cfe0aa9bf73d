#![allow(dead_code)]

use std::sync::Arc;

use apm_lab::{ConvexSet, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn v(c: &[f64]) -> Vector {
    Vector::from_slice(c)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(r: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vector {
    let g: Vec<f64> = (0..dim).map(|_| { let z: f64 = StandardNormal.sample(r); scale * z }).collect();
    Vector::from_slice(&g)
}

pub fn unit(r: &mut ChaCha8Rng, dim: usize) -> Vector {
    loop {
        if let Some(u) = gaussian(r, dim, 1.0).normalized() {
            return u;
        }
    }
}

pub const KINDS: [&str; 9] = [
    "halfspace",
    "hyperplane",
    "ball",
    "segment",
    "affine_span",
    "polytope",
    "dilation",
    "intersection",
    "translate",
];

/// A random set of the given kind that contains `q`.
pub fn random_set(r: &mut ChaCha8Rng, kind: &str, dim: usize, q: &Vector) -> ConvexSet {
    match kind {
        "halfspace" => {
            let n = unit(r, dim);
            ConvexSet::halfspace(n.clone(), n.dot(q) + r.gen_range(0.0..1.0)).unwrap()
        }
        "hyperplane" => {
            let n = unit(r, dim);
            ConvexSet::hyperplane(n.clone(), n.dot(q)).unwrap()
        }
        "ball" => {
            let c = q + &gaussian(r, dim, 0.5);
            let rad = c.dist(q) + r.gen_range(0.1..1.5);
            ConvexSet::ball(c, rad).unwrap()
        }
        "segment" => {
            let d = gaussian(r, dim, 1.0);
            let t = r.gen_range(0.0..1.0);
            ConvexSet::segment(q - &d.scaled(t), q + &d.scaled(1.0 - t)).unwrap()
        }
        "affine_span" => {
            let k = r.gen_range(1..dim.max(2));
            let dirs = (0..k).map(|_| gaussian(r, dim, 1.0)).collect();
            ConvexSet::affine_span(q.clone(), dirs).unwrap()
        }
        "polytope" => {
            let n = r.gen_range(1..=dim + 3);
            let mut vs: Vec<Vector> = (0..n).map(|_| q + &gaussian(r, dim, 1.0)).collect();
            vs.push(q.clone());
            ConvexSet::polytope(vs).unwrap()
        }
        "dilation" => {
            let inner_kind = ["segment", "polytope", "halfspace", "affine_span"][r.gen_range(0..4)];
            let inner = random_set(r, inner_kind, dim, q);
            ConvexSet::dilation(inner, r.gen_range(0.05..1.0)).unwrap()
        }
        "intersection" => {
            // polytope members are centred on q: two polytopes sharing only a
            // vertex can meet at an angle too small for any cyclic scheme
            let kinds = ["halfspace", "ball", "hyperplane", "polytope", "segment"];
            let m = r.gen_range(2..=3);
            let members: Vec<ConvexSet> = (0..m)
                .map(|_| match kinds[r.gen_range(0..kinds.len())] {
                    "polytope" => centred_polytope(r, dim, q),
                    k => random_set(r, k, dim, q),
                })
                .collect();
            ConvexSet::intersect(members).unwrap()
        }
        "translate" => {
            let s = gaussian(r, dim, 1.0);
            let inner_kind = ["ball", "polytope", "halfspace", "segment"][r.gen_range(0..4)];
            let inner = random_set(r, inner_kind, dim, &(q - &s));
            ConvexSet::translate(inner, s).unwrap()
        }
        other => panic!("unknown kind {other}"),
    }
}

/// A polytope with `q` as its vertex centroid.
pub fn centred_polytope(r: &mut ChaCha8Rng, dim: usize, q: &Vector) -> ConvexSet {
    let n = r.gen_range(dim + 1..=dim + 4);
    let g: Vec<Vector> = (0..n).map(|_| gaussian(r, dim, 1.0)).collect();
    let mut mean = Vector::zeros(dim);
    for x in &g {
        mean.axpy(1.0 / n as f64, x);
    }
    ConvexSet::polytope(g.iter().map(|x| &(q + x) - &mean).collect()).unwrap()
}

/// Points of `C`: projections of random points and convex combinations of them.
pub fn points_in(r: &mut ChaCha8Rng, c: &ConvexSet, q: &Vector, n: usize) -> Vec<Vector> {
    let dim = q.dim();
    let mut pts: Vec<Vector> = (0..n / 2 + 1)
        .map(|_| c.project(&(q + &gaussian(r, dim, 2.0))).unwrap())
        .collect();
    pts.push(q.clone());
    while pts.len() < n {
        let i = r.gen_range(0..pts.len());
        let j = r.gen_range(0..pts.len());
        let t: f64 = r.gen();
        let p = pts[i].lerp(&pts[j], t);
        pts.push(p);
    }
    pts
}

/// `P_C(x)` by minimizing `‖x − y‖` over a grid of pitch `h` on `[lo, hi]²`
/// restricted to `C`, for 2-D oracles.
pub fn grid_projection(c: &ConvexSet, x: &Vector, lo: f64, hi: f64, h: f64) -> Vector {
    let n = ((hi - lo) / h).round() as usize;
    let mut best = (f64::INFINITY, Vector::zeros(2));
    for i in 0..=n {
        for j in 0..=n {
            let y = v(&[lo + i as f64 * h, lo + j as f64 * h]);
            if c.membership(&y, 1e-12).unwrap() {
                let d = y.dist(x);
                if d < best.0 {
                    best = (d, y);
                }
            }
        }
    }
    best.1
}

pub fn arc(s: ConvexSet) -> Arc<ConvexSet> {
    Arc::new(s)
}

/// A random 2-D convex polygon: random points, their hull left implicit.
pub fn random_polygon(r: &mut ChaCha8Rng, center: &Vector, n: usize, scale: f64) -> ConvexSet {
    let vs = (0..n).map(|_| center + &gaussian(r, 2, scale)).collect();
    ConvexSet::polytope(vs).unwrap()
}

/// Convex hull of 2-D points, counter-clockwise (monotone chain).
pub fn hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut h: Vec<[f64; 2]> = Vec::new();
    for pass in 0..2 {
        let start = h.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &q in iter {
            while h.len() >= start + 2 && cross(h[h.len() - 2], h[h.len() - 1], q) <= 0.0 {
                h.pop();
            }
            h.push(q);
        }
        h.pop();
    }
    h
}

fn seg_dist(x: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let dd = d[0] * d[0] + d[1] * d[1];
    let t = if dd == 0.0 { 0.0 } else { (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / dd).clamp(0.0, 1.0) };
    ((x[0] - a[0] - t * d[0]).powi(2) + (x[1] - a[1] - t * d[1]).powi(2)).sqrt()
}

/// Distance from `x` to the polygon with counter-clockwise vertices `h`.
pub fn polygon_dist(h: &[[f64; 2]], x: [f64; 2]) -> f64 {
    if h.len() >= 3 && polygon_contains(h, x) {
        return 0.0;
    }
    let n = h.len();
    (0..n).map(|i| seg_dist(x, h[i], h[(i + 1) % n])).fold(f64::INFINITY, f64::min)
}

pub fn polygon_contains(h: &[[f64; 2]], x: [f64; 2]) -> bool {
    let n = h.len();
    (0..n).all(|i| {
        let (a, b) = (h[i], h[(i + 1) % n]);
        (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]) >= 0.0
    })
}

/// `e(P, Q)` for polygons from below: the largest distance to `Q` over the
/// grid points of pitch `h` inside `P` and points at pitch `h` along its
/// edges, offset by `h/2` so that no vertex is sampled.
pub fn grid_excess(p: &[[f64; 2]], q: &[[f64; 2]], h: f64) -> f64 {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for v in p {
        for k in 0..2 {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    let mut best: f64 = 0.0;
    for i in 0..p.len() {
        let (a, b) = (p[i], p[(i + 1) % p.len()]);
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let mut s = 0.5 * h;
        while s < len {
            let t = s / len;
            best = best.max(polygon_dist(q, [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]));
            s += h;
        }
    }
    let nx = ((hi[0] - lo[0]) / h).ceil() as usize;
    let ny = ((hi[1] - lo[1]) / h).ceil() as usize;
    for i in 0..=nx {
        for j in 0..=ny {
            let x = [lo[0] + i as f64 * h, lo[1] + j as f64 * h];
            if polygon_contains(p, x) {
                best = best.max(polygon_dist(q, x));
            }
        }
    }
    best
}

pub fn random_points_2d(r: &mut ChaCha8Rng, n: usize, center: [f64; 2], scale: f64) -> Vec<[f64; 2]> {
    (0..n)
        .map(|_| {
            let g = gaussian(r, 2, scale);
            [center[0] + g[0], center[1] + g[1]]
        })
        .collect()
}

pub fn polytope_2d(points: &[[f64; 2]]) -> ConvexSet {
    ConvexSet::polytope(points.iter().map(|p| v(p)).collect()).unwrap()
}

/// Polygons on either side of `x₁ = 0` sharing part of an edge on it, with
/// `p` and `w` on the shared part.
pub fn touching_polygons(seed: u64) -> (Arc<ConvexSet>, Arc<ConvexSet>, Vector, Vector) {
    let mut r = rng(seed);
    let side = |r: &mut ChaCha8Rng, sign: f64, lo: f64, hi: f64| {
        let mut vs = vec![v(&[0.0, lo]), v(&[0.0, hi])];
        for _ in 0..r.gen_range(1..=4) {
            vs.push(v(&[sign * r.gen_range(0.2..1.5), r.gen_range(-1.0..2.0)]));
        }
        Arc::new(ConvexSet::polytope(vs).unwrap())
    };
    let (a_lo, a_hi) = (r.gen_range(-0.5..0.0), r.gen_range(1.0..1.5));
    let (b_lo, b_hi) = (r.gen_range(-0.5..0.2), r.gen_range(0.8..1.5));
    let a = side(&mut r, 1.0, a_lo, a_hi);
    let b = side(&mut r, -1.0, b_lo, b_hi);
    let (lo, hi) = (a_lo.max(b_lo), a_hi.min(b_hi));
    let p = v(&[0.0, lo + 0.2 * (hi - lo)]);
    let w = v(&[0.0, lo + r.gen_range(0.5..0.95) * (hi - lo)]);
    (a, b, p, w)
}

/// `max{1, sup_{a∈A} ‖a − p‖}` for a polytope.
pub fn radius_about(a: &ConvexSet, p: &Vector) -> f64 {
    a.vertices().unwrap().iter().map(|x| x.dist(p)).fold(1.0, f64::max)
}
