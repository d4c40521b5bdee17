use serde::{Deserialize, Serialize};

use crate::geometry::{ConvexPolygon, GeometryError, Pose, Vec2};

pub type BodyId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyKind {
    Robot,
    Movable,
    Static,
}

/// A rigid convex body. The shape is stored in the body frame with its
/// centroid at the origin, so `pose` is the centroid pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BodySnapshot", into = "BodySnapshot")]
pub struct Body {
    pub id: BodyId,
    pub kind: BodyKind,
    shape: ConvexPolygon,
    pub pose: Pose,
    mass: f64,
    inertia: f64,
    pub linear_velocity: Vec2,
    pub angular_velocity: f64,
    /// Accumulated centroid arc length, meters.
    pub traveled: f64,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum BodyError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("body {id}: mass must be positive and finite, got {mass}")]
    InvalidMass { id: BodyId, mass: f64 },
}

impl Body {
    /// Builds a body from a body-frame shape. The shape is re-centred on its
    /// centroid and the pose shifted so the world footprint is unchanged.
    /// `mass` is ignored for static bodies.
    pub fn new(
        id: BodyId,
        kind: BodyKind,
        shape: ConvexPolygon,
        pose: Pose,
        mass: f64,
    ) -> Result<Self, BodyError> {
        let c = shape.centroid();
        let shape = if c.norm() > 0.0 {
            ConvexPolygon::new(shape.vertices().iter().map(|&v| v - c).collect())?
        } else {
            shape
        };
        let shifted = pose.transform(c);
        Self::centred(id, kind, shape, Pose::new(shifted.x, shifted.y, pose.theta), mass)
    }

    /// Takes the shape as already centred, so restoring a snapshot is exact.
    fn centred(id: BodyId, kind: BodyKind, shape: ConvexPolygon, pose: Pose, mass: f64) -> Result<Self, BodyError> {
        let mass = match kind {
            BodyKind::Static => 0.0,
            _ if mass.is_finite() && mass > 0.0 => mass,
            _ => return Err(BodyError::InvalidMass { id, mass }),
        };
        let inertia = polygon_inertia(&shape, mass);
        Ok(Self {
            id,
            kind,
            shape,
            pose,
            mass,
            inertia,
            linear_velocity: Vec2::ZERO,
            angular_velocity: 0.0,
            traveled: 0.0,
        })
    }

    /// Builds a body whose world footprint is `polygon` at heading 0.
    pub fn from_world_polygon(
        id: BodyId,
        kind: BodyKind,
        polygon: &ConvexPolygon,
        mass: f64,
    ) -> Result<Self, BodyError> {
        Self::new(id, kind, polygon.clone(), Pose::default(), mass)
    }

    pub fn shape(&self) -> &ConvexPolygon {
        &self.shape
    }

    /// Mass in kg; 0 for static bodies.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    pub fn inv_mass(&self) -> f64 {
        if self.kind == BodyKind::Static {
            0.0
        } else {
            1.0 / self.mass
        }
    }

    pub fn inv_inertia(&self) -> f64 {
        if self.kind == BodyKind::Static {
            0.0
        } else {
            1.0 / self.inertia
        }
    }

    pub fn is_static(&self) -> bool {
        self.kind == BodyKind::Static
    }

    pub fn position(&self) -> Vec2 {
        self.pose.position()
    }

    pub fn world_shape(&self) -> ConvexPolygon {
        self.shape.transformed(&self.pose)
    }

    pub fn bounding_radius(&self) -> f64 {
        self.shape.radius_about(Vec2::ZERO)
    }

    /// Distance from the centroid to the nearest edge.
    pub fn inradius(&self) -> f64 {
        self.shape.inradius_about(Vec2::ZERO)
    }

    pub fn kinetic_energy(&self) -> f64 {
        if self.is_static() {
            return 0.0;
        }
        0.5 * self.mass * self.linear_velocity.norm_sq()
            + 0.5 * self.inertia * self.angular_velocity * self.angular_velocity
    }

    pub fn is_at_rest(&self) -> bool {
        self.linear_velocity == Vec2::ZERO && self.angular_velocity == 0.0
    }
}

/// Moment of inertia about the centroid (origin) for uniform density.
fn polygon_inertia(shape: &ConvexPolygon, mass: f64) -> f64 {
    let v = shape.vertices();
    let n = v.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        let p = v[i];
        let q = v[(i + 1) % n];
        let c = p.cross(q).abs();
        num += c * (p.dot(p) + p.dot(q) + q.dot(q));
        den += c;
    }
    mass * num / (6.0 * den)
}

/// Serialized body layout used in world snapshots and logs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BodySnapshot {
    pub id: BodyId,
    pub kind: BodyKind,
    /// Body-frame vertices, counter-clockwise, centroid at the origin.
    pub vertices: Vec<Vec2>,
    pub pose: Pose,
    pub mass: f64,
    pub linear_velocity: Vec2,
    pub angular_velocity: f64,
    pub traveled: f64,
}

impl From<Body> for BodySnapshot {
    fn from(b: Body) -> Self {
        Self {
            id: b.id,
            kind: b.kind,
            vertices: b.shape.vertices().to_vec(),
            pose: b.pose,
            mass: b.mass,
            linear_velocity: b.linear_velocity,
            angular_velocity: b.angular_velocity,
            traveled: b.traveled,
        }
    }
}

impl TryFrom<BodySnapshot> for Body {
    type Error = BodyError;

    fn try_from(s: BodySnapshot) -> Result<Self, Self::Error> {
        let shape = ConvexPolygon::new(s.vertices)?;
        let mut body = Body::centred(s.id, s.kind, shape, s.pose, s.mass)?;
        body.linear_velocity = s.linear_velocity;
        body.angular_velocity = s.angular_velocity;
        body.traveled = s.traveled;
        Ok(body)
    }
}
