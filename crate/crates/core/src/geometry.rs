//! Planar geometry: vectors, poses, convex polygons and the exact
//! containment/overlap queries used by goal tests and generators.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    /// Cross product of a scalar (z-axis) with a vector.
    pub fn cross_scalar(s: f64, v: Vec2) -> Vec2 {
        Vec2::new(-s * v.y, s * v.x)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            Vec2::ZERO
        }
    }

    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Planar pose. `theta` is the heading, counter-clockwise from +x.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn heading(&self) -> Vec2 {
        Vec2::from_angle(self.theta)
    }

    /// Maps a body-frame point into the world frame.
    pub fn transform(&self, p: Vec2) -> Vec2 {
        p.rotate(self.theta) + self.position()
    }

    /// Maps a world-frame point into the body frame.
    pub fn inverse_transform(&self, p: Vec2) -> Vec2 {
        (p - self.position()).rotate(-self.theta)
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self {
            min: Vec2::new(x0.min(x1), y0.min(y1)),
            max: Vec2::new(x0.max(x1), y0.max(y1)),
        }
    }

    pub fn from_center(c: Vec2, half_w: f64, half_h: f64) -> Self {
        Self::new(c.x - half_w, c.y - half_h, c.x + half_w, c.y + half_h)
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Vec2 {
        (self.min + self.max) * 0.5
    }

    /// Closed containment.
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Strict interior containment.
    pub fn contains_strict(&self, p: Vec2) -> bool {
        p.x > self.min.x && p.x < self.max.x && p.y > self.min.y && p.y < self.max.y
    }

    /// Corners in counter-clockwise order starting at `min`.
    pub fn corners(&self) -> [Vec2; 4] {
        [
            self.min,
            Vec2::new(self.max.x, self.min.y),
            self.max,
            Vec2::new(self.min.x, self.max.y),
        ]
    }

    pub fn to_polygon(&self) -> Result<ConvexPolygon, GeometryError> {
        ConvexPolygon::new(self.corners().to_vec())
    }

    pub fn inflate(&self, margin: f64) -> Rect {
        Rect::new(
            self.min.x - margin,
            self.min.y - margin,
            self.max.x + margin,
            self.max.y + margin,
        )
    }

    /// Euclidean distance from `p` to the rectangle (0 inside).
    pub fn distance_to(&self, p: Vec2) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        dx.hypot(dy)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon has zero or negative area ({0})")]
    Degenerate(f64),
    #[error("polygon is not convex at vertex {0}")]
    NonConvex(usize),
    #[error("polygon vertex {0} is not finite")]
    NonFinite(usize),
}

/// A convex polygon with counter-clockwise winding.
///
/// Construction rejects degenerate and non-convex input; clockwise input is
/// reversed rather than rejected.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
}

impl<'de> Deserialize<'de> for ConvexPolygon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            vertices: Vec<Vec2>,
        }
        let raw = Raw::deserialize(d)?;
        ConvexPolygon::new(raw.vertices).map_err(serde::de::Error::custom)
    }
}

const AREA_EPS: f64 = 1e-12;

impl ConvexPolygon {
    pub fn new(mut vertices: Vec<Vec2>) -> Result<Self, GeometryError> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeometryError::TooFewVertices(n));
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
        let area = signed_area(&vertices);
        if area.abs() <= AREA_EPS {
            return Err(GeometryError::Degenerate(area));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if (b - a).cross(c - b) < -1e-12 {
                return Err(GeometryError::NonConvex((i + 1) % n));
            }
        }
        Ok(Self { vertices })
    }

    /// Axis-aligned box of the given size centred at the origin.
    pub fn rectangle(width: f64, height: f64) -> Result<Self, GeometryError> {
        Rect::from_center(Vec2::ZERO, width * 0.5, height * 0.5).to_polygon()
    }

    /// Regular polygon with `n` vertices on a circle of `radius`.
    pub fn regular(n: usize, radius: f64) -> Result<Self, GeometryError> {
        let verts = (0..n)
            .map(|i| Vec2::from_angle(2.0 * PI * i as f64 / n as f64) * radius)
            .collect();
        Self::new(verts)
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Vec2 {
        let n = self.vertices.len();
        let mut c = Vec2::ZERO;
        let mut a2 = 0.0;
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let w = p.cross(q);
            a2 += w;
            c += (p + q) * w;
        }
        c * (1.0 / (3.0 * a2))
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(b)).sum()
    }

    /// Edges as (start, end) pairs, counter-clockwise.
    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Outward unit normal of edge `i`.
    pub fn edge_normal(&self, i: usize) -> Vec2 {
        let n = self.vertices.len();
        let e = self.vertices[(i + 1) % n] - self.vertices[i];
        Vec2::new(e.y, -e.x).normalized()
    }

    pub fn translated(&self, d: Vec2) -> ConvexPolygon {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|&v| v + d).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> ConvexPolygon {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|&v| v * s).collect(),
        }
    }

    /// The polygon placed at `pose` (body frame to world frame).
    pub fn transformed(&self, pose: &Pose) -> ConvexPolygon {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|&v| pose.transform(v)).collect(),
        }
    }

    /// Largest distance from `p` to a vertex.
    pub fn radius_about(&self, p: Vec2) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.distance(p))
            .fold(0.0, f64::max)
    }

    /// Smallest distance from `p` (assumed inside) to an edge line.
    pub fn inradius_about(&self, p: Vec2) -> f64 {
        (0..self.len())
            .map(|i| -(p - self.vertices[i]).dot(self.edge_normal(i)))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn bounds(&self) -> Rect {
        let mut r = Rect {
            min: Vec2::new(f64::INFINITY, f64::INFINITY),
            max: Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        };
        for v in &self.vertices {
            r.min.x = r.min.x.min(v.x);
            r.min.y = r.min.y.min(v.y);
            r.max.x = r.max.x.max(v.x);
            r.max.y = r.max.y.max(v.y);
        }
        r
    }

    /// Closed point-in-polygon test.
    pub fn contains(&self, p: Vec2) -> bool {
        self.edges().all(|(a, b)| (b - a).cross(p - a) >= 0.0)
    }

    pub fn closest_point(&self, p: Vec2) -> Vec2 {
        if self.contains(p) {
            return p;
        }
        let mut best = self.vertices[0];
        let mut best_d = f64::INFINITY;
        for (a, b) in self.edges() {
            let q = closest_point_on_segment(p, a, b);
            let d = q.distance(p);
            if d < best_d {
                best_d = d;
                best = q;
            }
        }
        best
    }

    /// Euclidean distance from `p` to the polygon (0 inside).
    pub fn distance_to(&self, p: Vec2) -> f64 {
        self.closest_point(p).distance(p)
    }

    /// Separating-axis overlap test. Touching polygons do not overlap.
    pub fn overlaps(&self, other: &ConvexPolygon) -> bool {
        self.separation(other) < 0.0
    }

    /// Signed separating distance along the best separating axis
    /// (negative when penetrating).
    pub fn separation(&self, other: &ConvexPolygon) -> f64 {
        max_separation(self, other).1.max(max_separation(other, self).1)
    }

    /// Intersection polygon vertices (possibly empty).
    pub fn clip(&self, other: &ConvexPolygon) -> Vec<Vec2> {
        let mut output = self.vertices.clone();
        for (a, b) in other.edges() {
            if output.is_empty() {
                break;
            }
            let input = std::mem::take(&mut output);
            let inside = |p: Vec2| (b - a).cross(p - a) >= 0.0;
            let m = input.len();
            for i in 0..m {
                let cur = input[i];
                let prev = input[(i + m - 1) % m];
                let cur_in = inside(cur);
                let prev_in = inside(prev);
                if cur_in {
                    if !prev_in {
                        output.push(line_intersection(prev, cur, a, b));
                    }
                    output.push(cur);
                } else if prev_in {
                    output.push(line_intersection(prev, cur, a, b));
                }
            }
        }
        output
    }

    /// Exact area of the intersection of two convex polygons.
    pub fn overlap_area(&self, other: &ConvexPolygon) -> f64 {
        let pts = self.clip(other);
        if pts.len() < 3 {
            return 0.0;
        }
        signed_area(&pts).max(0.0)
    }
}

fn signed_area(v: &[Vec2]) -> f64 {
    let n = v.len();
    let mut a = 0.0;
    for i in 0..n {
        a += v[i].cross(v[(i + 1) % n]);
    }
    0.5 * a
}

fn line_intersection(p: Vec2, q: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let r = q - p;
    let s = b - a;
    let denom = r.cross(s);
    if denom.abs() < 1e-300 {
        return q;
    }
    let t = (a - p).cross(s) / denom;
    p + r * t
}

pub fn closest_point_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let ab = b - a;
    let len2 = ab.norm_sq();
    if len2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

/// Largest separation of `b` from `a` over `a`'s edge normals:
/// (edge index, separation).
pub(crate) fn max_separation(a: &ConvexPolygon, b: &ConvexPolygon) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..a.len() {
        let n = a.edge_normal(i);
        let v = a.vertices[i];
        let s = b
            .vertices
            .iter()
            .map(|&w| n.dot(w - v))
            .fold(f64::INFINITY, f64::min);
        if s > best.1 {
            best = (i, s);
        }
    }
    best
}
