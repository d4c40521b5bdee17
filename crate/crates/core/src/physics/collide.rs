//! Polygon-polygon contact manifolds (reference/incident face clipping).

use crate::geometry::{max_separation, ConvexPolygon, Vec2};

#[derive(Debug, Clone, Copy)]
pub(crate) struct ContactPoint {
    pub point: Vec2,
    pub penetration: f64,
}

/// Contact between two polygons. `normal` points from the first polygon
/// towards the second.
#[derive(Debug, Clone)]
pub(crate) struct Manifold {
    pub normal: Vec2,
    pub points: Vec<ContactPoint>,
}

impl Manifold {
    pub fn max_penetration(&self) -> f64 {
        self.points
            .iter()
            .map(|c| c.penetration)
            .fold(0.0, f64::max)
    }
}

const REFERENCE_BIAS: f64 = 5e-4;

pub(crate) fn collide(a: &ConvexPolygon, b: &ConvexPolygon) -> Option<Manifold> {
    let (edge_a, sep_a) = max_separation(a, b);
    if sep_a > 0.0 {
        return None;
    }
    let (edge_b, sep_b) = max_separation(b, a);
    if sep_b > 0.0 {
        return None;
    }

    let (reference, incident, edge, flip) = if sep_b > sep_a + REFERENCE_BIAS {
        (b, a, edge_b, true)
    } else {
        (a, b, edge_a, false)
    };

    let n = reference.edge_normal(edge);
    let rv = reference.vertices();
    let v1 = rv[edge];
    let v2 = rv[(edge + 1) % rv.len()];

    // Incident edge: the one most anti-parallel to the reference normal.
    let mut inc = 0;
    let mut min_dot = f64::INFINITY;
    for i in 0..incident.len() {
        let d = n.dot(incident.edge_normal(i));
        if d < min_dot {
            min_dot = d;
            inc = i;
        }
    }
    let iv = incident.vertices();
    let seg = [iv[inc], iv[(inc + 1) % iv.len()]];

    let tangent = (v2 - v1).normalized();
    let clipped = clip_segment(seg, -tangent, -tangent.dot(v1))?;
    let clipped = clip_segment(clipped, tangent, tangent.dot(v2))?;

    let points: Vec<ContactPoint> = clipped
        .iter()
        .filter_map(|&p| {
            let sep = n.dot(p - v1);
            (sep <= 0.0).then_some(ContactPoint {
                point: p,
                penetration: -sep,
            })
        })
        .collect();
    if points.is_empty() {
        return None;
    }
    Some(Manifold {
        normal: if flip { -n } else { n },
        points,
    })
}

/// Keeps the part of the segment with `normal . p <= offset`.
fn clip_segment(seg: [Vec2; 2], normal: Vec2, offset: f64) -> Option<[Vec2; 2]> {
    let d0 = normal.dot(seg[0]) - offset;
    let d1 = normal.dot(seg[1]) - offset;
    match (d0 <= 0.0, d1 <= 0.0) {
        (true, true) => Some(seg),
        (false, false) => None,
        (in0, _) => {
            let t = d0 / (d0 - d1);
            let x = seg[0] + (seg[1] - seg[0]) * t;
            Some(if in0 { [seg[0], x] } else { [x, seg[1]] })
        }
    }
}
