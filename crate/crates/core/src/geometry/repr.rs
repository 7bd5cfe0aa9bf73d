//! JSON form of [`ConvexSet`]: an internally tagged document such as
//! `{"type": "halfspace", "normal": [1.0, 0.0], "offset": 0.0}`.

use serde::{Deserialize, Serialize};

use crate::vector::Vector;

use super::{ConvexSet, GeometryError};

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum SetDoc {
    Halfspace { normal: Vector, offset: f64 },
    Hyperplane { normal: Vector, offset: f64 },
    Ball { center: Vector, radius: f64 },
    Segment { a: Vector, b: Vector },
    AffineSpan { base: Vector, directions: Vec<Vector> },
    Polytope { vertices: Vec<Vector> },
    Dilation { inner: Box<SetDoc>, radius: f64 },
    Intersection { members: Vec<SetDoc> },
    Translate { inner: Box<SetDoc>, shift: Vector },
}

impl From<&ConvexSet> for SetDoc {
    fn from(s: &ConvexSet) -> Self {
        match s {
            ConvexSet::Halfspace(h) => SetDoc::Halfspace {
                normal: h.normal().clone(),
                offset: h.offset(),
            },
            ConvexSet::Hyperplane(h) => SetDoc::Hyperplane {
                normal: h.normal().clone(),
                offset: h.offset(),
            },
            ConvexSet::Ball(b) => SetDoc::Ball {
                center: b.center().clone(),
                radius: b.radius(),
            },
            ConvexSet::Segment(g) => SetDoc::Segment {
                a: g.a().clone(),
                b: g.b().clone(),
            },
            ConvexSet::AffineSpan(a) => SetDoc::AffineSpan {
                base: a.base().clone(),
                directions: a.directions().to_vec(),
            },
            ConvexSet::Polytope(p) => SetDoc::Polytope {
                vertices: p.vertices().to_vec(),
            },
            ConvexSet::Dilation(d) => SetDoc::Dilation {
                inner: Box::new(d.inner().into()),
                radius: d.radius(),
            },
            ConvexSet::Intersection(i) => SetDoc::Intersection {
                members: i.members().iter().map(|m| (&**m).into()).collect(),
            },
            ConvexSet::Translate(t) => SetDoc::Translate {
                inner: Box::new(t.inner().into()),
                shift: t.shift().clone(),
            },
        }
    }
}

impl TryFrom<SetDoc> for ConvexSet {
    type Error = GeometryError;

    fn try_from(d: SetDoc) -> Result<Self, GeometryError> {
        match d {
            SetDoc::Halfspace { normal, offset } => ConvexSet::halfspace(normal, offset),
            SetDoc::Hyperplane { normal, offset } => ConvexSet::hyperplane(normal, offset),
            SetDoc::Ball { center, radius } => ConvexSet::ball(center, radius),
            SetDoc::Segment { a, b } => ConvexSet::segment(a, b),
            SetDoc::AffineSpan { base, directions } => ConvexSet::affine_span(base, directions),
            SetDoc::Polytope { vertices } => ConvexSet::polytope(vertices),
            SetDoc::Dilation { inner, radius } => ConvexSet::dilation(ConvexSet::try_from(*inner)?, radius),
            SetDoc::Intersection { members } => ConvexSet::intersect(
                members
                    .into_iter()
                    .map(ConvexSet::try_from)
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            SetDoc::Translate { inner, shift } => ConvexSet::translate(ConvexSet::try_from(*inner)?, shift),
        }
    }
}

impl Serialize for ConvexSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SetDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConvexSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = SetDoc::deserialize(d)?;
        ConvexSet::try_from(doc).map_err(serde::de::Error::custom)
    }
}
