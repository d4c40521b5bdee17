//! Static-map shortest paths used for l0*, li* and spanning-graph weights.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::geometry::{ConvexPolygon, Rect, Vec2};
use crate::grid::{visible_goal, GeodesicField, GoalGeometry, GridSpec, OccupancyGrid};

/// Static geometry of an episode. Movable objects are never part of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticMap {
    pub bounds: Rect,
    pub resolution: f64,
    pub obstacles: Vec<ConvexPolygon>,
}

impl StaticMap {
    pub fn new(bounds: Rect, resolution: f64, obstacles: Vec<ConvexPolygon>) -> Self {
        Self {
            bounds,
            resolution,
            obstacles,
        }
    }

    pub fn spec(&self) -> Result<GridSpec, MetricsError> {
        GridSpec::covering(self.bounds, self.resolution)
            .map_err(|e| MetricsError::InvalidRecord(e.to_string()))
    }

    /// Occupancy with every obstacle grown by `inflation` meters.
    pub fn occupancy(&self, inflation: f64) -> Result<OccupancyGrid, MetricsError> {
        Ok(OccupancyGrid::rasterize(
            self.spec()?,
            &self.obstacles,
            inflation,
        ))
    }
}

/// A shortest path on the static map.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticPath {
    pub length: f64,
    pub points: Vec<Vec2>,
}

impl StaticPath {
    pub fn end(&self) -> Vec2 {
        *self.points.last().expect("paths are never empty")
    }
}

/// Caches inflated occupancy grids of one map by inflation radius, and
/// distance fields by goal and inflation.
#[derive(Debug, Clone)]
pub struct PathOracle<'a> {
    map: &'a StaticMap,
    grids: HashMap<u64, OccupancyGrid>,
    fields: Vec<(GoalGeometry, u64, GeodesicField)>,
}

impl<'a> PathOracle<'a> {
    pub fn new(map: &'a StaticMap) -> Self {
        Self {
            map,
            grids: HashMap::new(),
            fields: Vec::new(),
        }
    }

    pub fn occupancy(&mut self, inflation: f64) -> Result<&OccupancyGrid, MetricsError> {
        let key = inflation.to_bits();
        if !self.grids.contains_key(&key) {
            let grid = self.map.occupancy(inflation)?;
            self.grids.insert(key, grid);
        }
        Ok(&self.grids[&key])
    }

    /// Distance field to `goal` for a body of the given inflation radius.
    pub fn field(&mut self, goal: &GoalGeometry, inflation: f64) -> Result<&GeodesicField, MetricsError> {
        let key = inflation.to_bits();
        let found = self.fields.iter().position(|(g, k, _)| *k == key && g == goal);
        let ix = match found {
            Some(ix) => ix,
            None => {
                let field = GeodesicField::towards(self.occupancy(inflation)?, goal.clone());
                self.fields.push((goal.clone(), key, field));
                self.fields.len() - 1
            }
        };
        Ok(&self.fields[ix].2)
    }

    /// Shortest distance between two points for a body of the given
    /// inflation radius, falling back to the uninflated map. A segment
    /// with clear line of sight is its own shortest path, so no field is
    /// built for it.
    pub fn point_distance(
        &mut self,
        from: Vec2,
        to: Vec2,
        inflation: f64,
    ) -> Result<Option<f64>, MetricsError> {
        let radii: &[f64] = if inflation == 0.0 { &[0.0] } else { &[inflation, 0.0] };
        for &r in radii {
            if self.occupancy(r)?.line_of_sight(from, to) {
                return Ok(Some(from.distance(to)));
            }
            let goal = GoalGeometry::Point { point: to };
            if let Some(d) = self.field(&goal, r)?.distance_from(from) {
                return Ok(Some(d));
            }
        }
        Ok(None)
    }

    /// Shortest path from `start` to the nearest point of `goal`. Falls back
    /// to the uninflated map when inflation closes every route.
    pub fn shortest(
        &mut self,
        start: Vec2,
        goal: &GoalGeometry,
        inflation: f64,
    ) -> Result<StaticPath, MetricsError> {
        if goal.contains(start) {
            return Ok(StaticPath {
                length: 0.0,
                points: vec![start],
            });
        }
        let mut last_err = None;
        for r in [inflation, 0.0] {
            // Same answer the field would give for a visible goal point,
            // without building the field.
            let occ = self.occupancy(r)?;
            let q = goal.closest_point(start);
            let free = occ.spec.cell_of(start).is_some_and(|(i, j)| occ.is_free(i, j));
            if free && visible_goal(occ, start, q) {
                return Ok(StaticPath {
                    length: start.distance(q),
                    points: vec![start, q],
                });
            }
            let field = self.field(goal, r)?;
            match field.query(start) {
                Some(q) => {
                    if r != inflation {
                        log::debug!("path from {start:?} only exists on the uninflated map");
                    }
                    return Ok(StaticPath {
                        length: q.distance,
                        points: q.path,
                    });
                }
                None => {
                    last_err = Some(MetricsError::Unreachable(format!(
                        "no static path from ({:.3}, {:.3}) to the goal",
                        start.x, start.y
                    )))
                }
            }
            if inflation == 0.0 {
                break;
            }
        }
        Err(last_err.expect("loop ran at least once"))
    }
}

/// Shortest static-map path length from `start` to the goal set for a body
/// of radius `inflation`.
pub fn shortest_static_path(
    start: Vec2,
    goal: &GoalGeometry,
    map: &StaticMap,
    inflation: f64,
) -> Result<f64, MetricsError> {
    PathOracle::new(map)
        .shortest(start, goal, inflation)
        .map(|p| p.length)
}
