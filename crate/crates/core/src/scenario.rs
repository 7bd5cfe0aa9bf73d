//! Canonical pairs with their known displacement vector, best approximation
//! sets and separators, plus their JSON form.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::adversary::Separator;
use crate::engine::PairProblem;
use crate::error::{Error, Result};
use crate::geometry::ConvexSet;
use crate::vector::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regularity {
    Regular,
    /// Regular for every finite member of a family, with the modulus
    /// degrading without bound along it.
    NonRegularLimit,
    Unknown,
}

/// Opening directions handed to the adversary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Directions {
    /// Standard basis vectors `e_{i+1}` for the listed zero-based `i`.
    Axes { dim: usize, indices: Vec<usize> },
    Explicit { vectors: Vec<Vector> },
}

impl Directions {
    pub fn vectors(&self) -> Vec<Vector> {
        match self {
            Directions::Axes { dim, indices } => indices.iter().map(|&i| Vector::basis(*dim, i)).collect(),
            Directions::Explicit { vectors } => vectors.clone(),
        }
    }
}

/// Raw witness candidates, fed to `witness_sequence` or the probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witnesses {
    /// In the `k`-th coordinate plane `(e_{2k−1}, e_{2k})`, the point at
    /// angle `angles[k−1] / 2` and distance `length` from the origin.
    PlaneBisectors { dim: usize, angles: Vec<f64>, length: f64 },
    Points { points: Vec<Vector> },
}

impl Witnesses {
    pub fn points(&self) -> Vec<Vector> {
        match self {
            Witnesses::PlaneBisectors { dim, angles, length } => angles
                .iter()
                .enumerate()
                .map(|(k, th)| {
                    let mut x = Vector::basis(*dim, 2 * k).scaled(length * (th / 2.0).cos());
                    x.axpy(length * (th / 2.0).sin(), &Vector::basis(*dim, 2 * k + 1));
                    x
                })
                .collect(),
            Witnesses::Points { points } => points.clone(),
        }
    }
}

/// The pair of points `z ⊥ w` spanning the planar confinement instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichSpec {
    pub z: Vector,
    pub w: Vector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Analytic {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Arc<ConvexSet>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Arc<ConvexSet>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separator: Option<Separator>,
    pub regularity: Regularity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversary_directions: Option<Directions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witnesses: Option<Witnesses>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sandwich: Option<SandwichSpec>,
}

impl Analytic {
    fn new(regularity: Regularity) -> Self {
        Analytic {
            v: None,
            e: None,
            f: None,
            separator: None,
            regularity,
            adversary_directions: None,
            witnesses: None,
            sandwich: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub dimension: usize,
    pub a: Arc<ConvexSet>,
    pub b: Arc<ConvexSet>,
    pub analytic: Analytic,
    #[serde(default)]
    pub notes: String,
}

impl Scenario {
    /// The pair with whatever of `v`, `E`, `F` is known.
    pub fn pair(&self) -> PairProblem {
        let mut pair = PairProblem::new(self.a.clone(), self.b.clone());
        if let Some(v) = &self.analytic.v {
            pair = pair.with_v(v.clone(), true);
        }
        if let (Some(e), Some(f)) = (&self.analytic.e, &self.analytic.f) {
            pair = pair.with_best_approx(e.clone(), f.clone());
        }
        pair
    }

    pub fn directions(&self) -> Vec<Vector> {
        self.analytic.adversary_directions.as_ref().map(Directions::vectors).unwrap_or_default()
    }

    pub fn raw_witnesses(&self) -> Vec<Vector> {
        self.analytic.witnesses.as_ref().map(Witnesses::points).unwrap_or_default()
    }

    /// Dimension and shape checks beyond what deserialization enforces.
    pub fn validate(&self) -> Result<()> {
        let dim = self.dimension;
        let bad = |field: &str, msg: String| Err(Error::Config(format!("{field}: {msg}")));
        if dim == 0 {
            return bad("dimension", "must be positive".into());
        }
        for (field, d) in [("a", self.a.dim()), ("b", self.b.dim())] {
            if d != dim {
                return bad(field, format!("dimension {d}, expected {dim}"));
            }
        }
        let an = &self.analytic;
        if let Some(v) = &an.v {
            if v.dim() != dim {
                return bad("analytic.v", format!("dimension {}, expected {dim}", v.dim()));
            }
        }
        for (field, s) in [("analytic.e", &an.e), ("analytic.f", &an.f)] {
            if let Some(s) = s {
                if s.dim() != dim {
                    return bad(field, format!("dimension {}, expected {dim}", s.dim()));
                }
            }
        }
        if an.e.is_some() != an.f.is_some() {
            return bad("analytic.e", "E and F must be given together".into());
        }
        if let Some(sep) = &an.separator {
            if sep.normal.dim() != dim {
                return bad("analytic.separator.normal", format!("dimension {}, expected {dim}", sep.normal.dim()));
            }
            if !(sep.normal.norm() > 0.0) {
                return bad("analytic.separator.normal", "zero length".into());
            }
            if !sep.level.is_finite() {
                return bad("analytic.separator.level", "not finite".into());
            }
        }
        if let Some(d) = &an.adversary_directions {
            for (i, u) in d.vectors().iter().enumerate() {
                if u.dim() != dim || !(u.norm() > 0.0) {
                    return bad(&format!("analytic.adversary_directions[{i}]"), "zero or wrong dimension".into());
                }
            }
            if let Directions::Axes { indices, .. } = d {
                if let Some(i) = indices.iter().find(|&&i| i >= dim) {
                    return bad("analytic.adversary_directions.indices", format!("axis {i} out of range"));
                }
            }
        }
        if let Some(w) = &an.witnesses {
            if let Witnesses::PlaneBisectors { angles, .. } = w {
                if 2 * angles.len() > dim {
                    return bad("analytic.witnesses.angles", format!("{} planes do not fit in dimension {dim}", angles.len()));
                }
            }
            if w.points().iter().any(|p| p.dim() != dim) {
                return bad("analytic.witnesses", "point of wrong dimension".into());
            }
        }
        if let Some(s) = &an.sandwich {
            if s.z.dim() != dim || s.w.dim() != dim {
                return bad("analytic.sandwich", "z and w must match the dimension".into());
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and validates; errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let s: Scenario = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::Config(format!("{}: {}", e.path(), e.inner())))?;
        s.validate()?;
        Ok(s)
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Scenario::from_json(&text)
}

pub fn save_scenario(s: &Scenario, path: &Path) -> Result<()> {
    write_atomic(path, s.to_json()?.as_bytes())
}

/// Writes to a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(fs::Permissions::from_mode(0o644))?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn v(c: &[f64]) -> Vector {
    Vector::from_slice(c)
}

fn arc(s: ConvexSet) -> Arc<ConvexSet> {
    Arc::new(s)
}

/// `A = {⟨u_θ, x⟩ ≥ 0} ∩ R𝔹` with `u_θ = (sin θ, −cos θ)`, and
/// `B = {x₁ ≤ 0} ∩ R𝔹`; the boundary lines meet at angle `θ`.
pub fn halfspace_angle(theta: f64, radius: f64) -> Result<Scenario> {
    if !(theta > 0.0 && theta <= std::f64::consts::PI / 2.0) {
        return Err(Error::Config(format!("halfspace-angle needs θ in (0, π/2], got {theta}")));
    }
    let ball = || ConvexSet::ball(Vector::zeros(2), radius);
    let ha = ConvexSet::halfspace_geq(v(&[theta.sin(), -theta.cos()]), 0.0)?;
    let hb = ConvexSet::halfspace(v(&[1.0, 0.0]), 0.0)?;
    let a = arc(ConvexSet::intersect([ha.clone(), ball()?])?);
    let b = arc(ConvexSet::intersect([hb.clone(), ball()?])?);
    let e = arc(ConvexSet::intersect([ha, hb, ball()?])?);
    let mut an = Analytic::new(Regularity::Regular);
    an.v = Some(Vector::zeros(2));
    an.e = Some(e.clone());
    an.f = Some(e);
    Ok(Scenario {
        name: format!("halfspace-angle(theta={theta},r={radius})"),
        dimension: 2,
        a,
        b,
        analytic: an,
        notes: "Two truncated halfplanes meeting at a positive angle; E = F = A ∩ B, v = 0.".into(),
    })
}

/// Rectangles `[g, g+2] × [−1, 1]` and `[−2, 0] × [−1, 1]`, i.e. the halfspaces
/// `x₁ ≥ g` and `x₁ ≤ 0` cut to a box.
pub fn strip_gap(g: f64) -> Result<Scenario> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::Config(format!("strip-gap needs g > 0, got {g}")));
    }
    let rect = |x0: f64, x1: f64| ConvexSet::polytope(vec![v(&[x0, -1.0]), v(&[x1, -1.0]), v(&[x1, 1.0]), v(&[x0, 1.0])]);
    let mut an = Analytic::new(Regularity::Regular);
    an.v = Some(v(&[-g, 0.0]));
    an.e = Some(arc(ConvexSet::segment(v(&[g, -1.0]), v(&[g, 1.0]))?));
    an.f = Some(arc(ConvexSet::segment(v(&[0.0, -1.0]), v(&[0.0, 1.0]))?));
    an.separator = Some(Separator {
        normal: v(&[1.0, 0.0]),
        level: 0.0,
    });
    Ok(Scenario {
        name: format!("strip-gap(g={g})"),
        dimension: 2,
        a: arc(rect(g, g + 2.0)?),
        b: arc(rect(-2.0, 0.0)?),
        analytic: an,
        notes: "Disjoint boxes facing each other across a gap g; E and F are the facing facets, v = (−g, 0).".into(),
    })
}

/// `A = Ball((1,0), 1)`, `B = {x₁ ≤ 0}`, tangent at the origin.
pub fn ball_tangent() -> Result<Scenario> {
    let origin = arc(ConvexSet::singleton(Vector::zeros(2)));
    let mut an = Analytic::new(Regularity::Regular);
    an.v = Some(Vector::zeros(2));
    an.e = Some(origin.clone());
    an.f = Some(origin);
    an.separator = Some(Separator {
        normal: v(&[1.0, 0.0]),
        level: 0.0,
    });
    Ok(Scenario {
        name: "ball-tangent".into(),
        dimension: 2,
        a: arc(ConvexSet::ball(v(&[1.0, 0.0]), 1.0)?),
        b: arc(ConvexSet::halfspace(v(&[1.0, 0.0]), 0.0)?),
        analytic: an,
        notes: "Unit disc tangent to a halfplane; E = F = {0}. Regular in finite dimension, \
                but alternating projections slow down to a sublinear rate."
            .into(),
    })
}

/// `K` coordinate planes of `ℝ^{2K}`; in plane `k` the lines `A` and `B` meet
/// at angle `θ_k = base^{−k}`. Both are cut to `R𝔹`.
pub fn vanishing_angle(k: usize, radius: f64, base: f64) -> Result<Scenario> {
    if k == 0 || !(base > 1.0) || !(radius > 0.0) {
        return Err(Error::Config(format!(
            "vanishing-angle needs k ≥ 1, base > 1, r > 0; got k={k}, base={base}, r={radius}"
        )));
    }
    let dim = 2 * k;
    let angles: Vec<f64> = (1..=k).map(|j| base.powi(-(j as i32))).collect();
    let a_dirs = (0..k).map(|j| Vector::basis(dim, 2 * j)).collect();
    let b_dirs = angles
        .iter()
        .enumerate()
        .map(|(j, th)| {
            let mut d = Vector::basis(dim, 2 * j).scaled(th.cos());
            d.axpy(th.sin(), &Vector::basis(dim, 2 * j + 1));
            d
        })
        .collect();
    let ball = || ConvexSet::ball(Vector::zeros(dim), radius);
    let a = ConvexSet::intersect([ConvexSet::span(dim, a_dirs)?, ball()?])?;
    let b = ConvexSet::intersect([ConvexSet::span(dim, b_dirs)?, ball()?])?;
    let origin = arc(ConvexSet::singleton(Vector::zeros(dim)));
    let mut an = Analytic::new(Regularity::NonRegularLimit);
    an.v = Some(Vector::zeros(dim));
    an.e = Some(origin.clone());
    an.f = Some(origin);
    an.adversary_directions = Some(Directions::Axes {
        dim,
        indices: (0..k).map(|j| 2 * j + 1).collect(),
    });
    an.witnesses = Some(Witnesses::PlaneBisectors {
        dim,
        angles,
        length: 0.9,
    });
    Ok(Scenario {
        name: format!("vanishing-angle(k={k},r={radius},base={base})"),
        dimension: dim,
        a: arc(a),
        b: arc(b),
        analytic: an,
        notes: "Subspaces meeting only at 0 with plane angles shrinking geometrically; \
                the finite-dimensional stand-in for a non-regular pair with bounded E."
            .into(),
    })
}

/// Polytopes around the segments `[z, w] ⊆ A` and `[0, w] ⊆ B` in `ℝ³`, with
/// `A ⊆ {x₁ + x₂ ≥ 1}` and `B ⊆ {x₁ ≤ 0}`.
pub fn sandwich_toy() -> Result<Scenario> {
    let a = ConvexSet::polytope(vec![
        v(&[1.0, 0.0, 0.0]),
        v(&[0.0, 1.0, 0.0]),
        v(&[1.0, 1.0, 0.3]),
        v(&[0.5, 1.0, -0.2]),
    ])?;
    let b = ConvexSet::polytope(vec![
        v(&[0.0, 0.0, 0.0]),
        v(&[0.0, 1.0, 0.0]),
        v(&[-1.0, 0.0, 0.4]),
        v(&[-0.5, 0.5, -0.3]),
    ])?;
    let w = v(&[0.0, 1.0, 0.0]);
    let single = arc(ConvexSet::singleton(w.clone()));
    let mut an = Analytic::new(Regularity::Regular);
    an.v = Some(Vector::zeros(3));
    an.e = Some(single.clone());
    an.f = Some(single);
    an.separator = Some(Separator {
        normal: v(&[1.0, 0.0, 0.0]),
        level: 0.0,
    });
    an.sandwich = Some(SandwichSpec {
        z: v(&[1.0, 0.0, 0.0]),
        w,
    });
    Ok(Scenario {
        name: "sandwich-toy".into(),
        dimension: 3,
        a: arc(a),
        b: arc(b),
        analytic: an,
        notes: "Tetrahedra touching only at w; iterates from P_A(0) stay on [z, w] and [0, w].".into(),
    })
}

/// Thin quadrilaterals on either side of the `y` axis sharing the edge
/// `[(0,0), (0,1)]`; separated by `x₁ = 0`.
pub fn touching_quads(slant: f64) -> Result<Scenario> {
    let quad = |s: f64| ConvexSet::polytope(vec![v(&[0.0, 0.0]), v(&[0.0, 1.0]), v(&[s, 2.0]), v(&[s, -1.0])]);
    let e = arc(ConvexSet::segment(v(&[0.0, 0.0]), v(&[0.0, 1.0]))?);
    let mut an = Analytic::new(Regularity::Regular);
    an.v = Some(Vector::zeros(2));
    an.e = Some(e.clone());
    an.f = Some(e);
    an.separator = Some(Separator {
        normal: v(&[1.0, 0.0]),
        level: 0.0,
    });
    an.witnesses = Some(Witnesses::Points {
        points: vec![v(&[0.0, -0.5]), v(&[0.0, 1.5])],
    });
    Ok(Scenario {
        name: format!("touching-quads(s={slant})"),
        dimension: 2,
        a: arc(quad(slant)?),
        b: arc(quad(-slant)?),
        analytic: an,
        notes: "Separated instance: A ∩ B is a shared edge, f = x₁ separates at level 0.".into(),
    })
}

/// One instance of each family at its default parameters.
pub fn builtin_scenarios() -> Vec<Scenario> {
    [
        "halfspace-angle",
        "strip-gap",
        "ball-tangent",
        "vanishing-angle",
        "sandwich-toy",
        "touching-quads",
    ]
    .iter()
    .map(|s| scenario_from_spec(s).expect("built-in defaults are valid"))
    .collect()
}

/// Families and their parameters with defaults, for `scenario list`.
pub const FAMILIES: &[(&str, &str)] = &[
    ("halfspace-angle", "theta=1.0471975511965976, r=2"),
    ("strip-gap", "g=1"),
    ("ball-tangent", ""),
    ("vanishing-angle", "k=8, r=8, base=2"),
    ("sandwich-toy", ""),
    ("touching-quads", "s=0.04"),
];

/// Builds a scenario from `family` or `family(key=value, ...)`.
pub fn scenario_from_spec(spec: &str) -> Result<Scenario> {
    let spec = spec.trim();
    let (family, args) = match spec.find('(') {
        Some(i) => {
            let inner = spec[i + 1..]
                .strip_suffix(')')
                .ok_or_else(|| Error::Config(format!("unbalanced parentheses in `{spec}`")))?;
            (spec[..i].trim(), inner)
        }
        None => (spec, ""),
    };
    let mut params = BTreeMap::new();
    for kv in args.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, val) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{kv}` in `{spec}`")))?;
        let x: f64 = val
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("`{}` is not a number in `{spec}`", val.trim())))?;
        params.insert(k.trim().to_string(), x);
    }
    let mut take = |key: &str, default: f64| params.remove(key).unwrap_or(default);
    let s = match family {
        "halfspace-angle" => {
            let theta = take("theta", std::f64::consts::PI / 3.0);
            halfspace_angle(theta, take("r", 2.0))?
        }
        "strip-gap" => strip_gap(take("g", 1.0))?,
        "ball-tangent" => ball_tangent()?,
        "vanishing-angle" => {
            let k = take("k", 8.0);
            if k.fract() != 0.0 || k < 1.0 {
                return Err(Error::Config(format!("k must be a positive integer, got {k}")));
            }
            let r = take("r", 8.0);
            vanishing_angle(k as usize, r, take("base", 2.0))?
        }
        "sandwich-toy" => sandwich_toy()?,
        "touching-quads" => touching_quads(take("s", 0.04))?,
        other => return Err(Error::Config(format!("unknown scenario family `{other}`"))),
    };
    if let Some(k) = params.keys().next() {
        return Err(Error::Config(format!("unknown parameter `{k}` for {family}")));
    }
    Ok(s)
}

/// A built-in spec string or a path to a scenario JSON file.
pub fn resolve_scenario(name: &str) -> Result<Scenario> {
    let path = Path::new(name);
    if name.ends_with(".json") || path.is_file() {
        return load_scenario(path);
    }
    scenario_from_spec(name)
}
