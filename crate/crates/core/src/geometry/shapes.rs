//! Closed-form members of the set algebra.

use crate::vector::Vector;

use super::GeometryError;

/// Below this, a unit normal is kept bit-for-bit instead of being renormalized.
const UNIT_SLACK: f64 = 4.0 * f64::EPSILON;

fn unit_normal(normal: Vector) -> Result<(Vector, f64), GeometryError> {
    let n = normal.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(GeometryError::InvalidSet("normal must be nonzero".into()));
    }
    if (n - 1.0).abs() <= UNIT_SLACK {
        Ok((normal, 1.0))
    } else {
        Ok((normal.scaled(1.0 / n), n))
    }
}

/// Closed halfspace `{x : ⟨normal, x⟩ ≤ offset}` with unit normal.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace {
    normal: Vector,
    offset: f64,
}

impl Halfspace {
    /// `{x : ⟨normal, x⟩ ≤ offset}`; the pair is rescaled so the normal has unit length.
    pub fn new(normal: Vector, offset: f64) -> Result<Self, GeometryError> {
        if !offset.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        let (normal, scale) = unit_normal(normal)?;
        Ok(Halfspace {
            normal,
            offset: offset / scale,
        })
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Signed violation `⟨normal, x⟩ - offset`.
    #[inline]
    pub fn excess(&self, x: &Vector) -> f64 {
        self.normal.dot(x) - self.offset
    }

    pub fn project(&self, x: &Vector) -> Vector {
        let e = self.excess(x);
        if e <= 0.0 {
            x.clone()
        } else {
            let mut p = x.clone();
            p.axpy(-e, &self.normal);
            p
        }
    }

    pub fn dist(&self, x: &Vector) -> f64 {
        self.excess(x).max(0.0)
    }
}

/// Hyperplane `{x : ⟨normal, x⟩ = offset}` with unit normal.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperplane {
    normal: Vector,
    offset: f64,
}

impl Hyperplane {
    pub fn new(normal: Vector, offset: f64) -> Result<Self, GeometryError> {
        if !offset.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        let (normal, scale) = unit_normal(normal)?;
        Ok(Hyperplane {
            normal,
            offset: offset / scale,
        })
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    #[inline]
    pub fn excess(&self, x: &Vector) -> f64 {
        self.normal.dot(x) - self.offset
    }

    pub fn project(&self, x: &Vector) -> Vector {
        let mut p = x.clone();
        p.axpy(-self.excess(x), &self.normal);
        p
    }

    pub fn dist(&self, x: &Vector) -> f64 {
        self.excess(x).abs()
    }
}

/// Closed ball; radius 0 is a singleton.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    center: Vector,
    radius: f64,
}

impl Ball {
    pub fn new(center: Vector, radius: f64) -> Result<Self, GeometryError> {
        if !radius.is_finite() || radius < 0.0 {
            return Err(GeometryError::InvalidSet(format!(
                "ball radius must be finite and ≥ 0, got {radius}"
            )));
        }
        Ok(Ball { center, radius })
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn project(&self, x: &Vector) -> Vector {
        let d = x.dist(&self.center);
        if d <= self.radius {
            x.clone()
        } else {
            self.center.lerp(x, self.radius / d)
        }
    }

    pub fn dist(&self, x: &Vector) -> f64 {
        (x.dist(&self.center) - self.radius).max(0.0)
    }
}

/// Closed segment `[a, b]`; `a = b` is a singleton.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    a: Vector,
    b: Vector,
}

impl Segment {
    pub fn new(a: Vector, b: Vector) -> Result<Self, GeometryError> {
        if a.dim() != b.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: a.dim(),
                found: b.dim(),
            });
        }
        Ok(Segment { a, b })
    }

    pub fn a(&self) -> &Vector {
        &self.a
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }

    pub fn project(&self, x: &Vector) -> Vector {
        let d = &self.b - &self.a;
        let len_sq = d.norm_sq();
        if len_sq == 0.0 {
            return self.a.clone();
        }
        let t = ((x - &self.a).dot(&d) / len_sq).clamp(0.0, 1.0);
        self.a.lerp(&self.b, t)
    }
}

/// Affine set `base + span(directions)` with an orthonormal direction list.
#[derive(Clone, Debug)]
pub struct AffineSpan {
    base: Vector,
    directions: Vec<Vector>,
    // nonzero entries of each direction; coordinate-aligned families are very sparse
    sparse: Vec<Vec<(usize, f64)>>,
}

impl PartialEq for AffineSpan {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.directions == other.directions
    }
}

impl AffineSpan {
    /// Orthonormalizes `directions` (modified Gram-Schmidt, dependent
    /// directions dropped). An already orthonormal list is kept unchanged.
    pub fn new(base: Vector, directions: Vec<Vector>) -> Result<Self, GeometryError> {
        for d in &directions {
            if d.dim() != base.dim() {
                return Err(GeometryError::DimensionMismatch {
                    expected: base.dim(),
                    found: d.dim(),
                });
            }
        }
        let directions = if is_orthonormal(&directions) {
            directions
        } else {
            gram_schmidt(directions)
        };
        let sparse = directions
            .iter()
            .map(|d| {
                d.as_slice()
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != 0.0)
                    .map(|(i, c)| (i, *c))
                    .collect()
            })
            .collect();
        Ok(AffineSpan {
            base,
            directions,
            sparse,
        })
    }

    pub fn base(&self) -> &Vector {
        &self.base
    }

    pub fn directions(&self) -> &[Vector] {
        &self.directions
    }

    /// Orthogonal projection of `g` onto the linear part `span(directions)`.
    pub fn project_linear(&self, g: &Vector) -> Vector {
        let mut out = vec![0.0; g.dim()];
        let g = g.as_slice();
        for d in &self.sparse {
            let c: f64 = d.iter().map(|(i, v)| g[*i] * v).sum();
            for (i, v) in d {
                out[*i] += c * v;
            }
        }
        Vector::from_slice(&out)
    }

    pub fn project(&self, x: &Vector) -> Vector {
        let rel = x - &self.base;
        &self.base + &self.project_linear(&rel)
    }
}

fn is_orthonormal(dirs: &[Vector]) -> bool {
    const SLACK: f64 = 1e-14;
    for (i, d) in dirs.iter().enumerate() {
        if (d.norm_sq() - 1.0).abs() > SLACK {
            return false;
        }
        for e in &dirs[..i] {
            if d.dot(e).abs() > SLACK {
                return false;
            }
        }
    }
    true
}

fn gram_schmidt(dirs: Vec<Vector>) -> Vec<Vector> {
    let mut out: Vec<Vector> = Vec::with_capacity(dirs.len());
    for d in dirs {
        let scale = d.norm();
        if scale == 0.0 {
            continue;
        }
        let mut r = d;
        // two passes keep the basis orthogonal to working precision
        for _ in 0..2 {
            for e in &out {
                let c = r.dot(e);
                r.axpy(-c, e);
            }
        }
        let n = r.norm();
        if n > 1e-12 * scale {
            out.push(r.scaled(1.0 / n));
        }
    }
    out
}
