//! Occupancy grids, distance transforms and geodesic distance fields.
//!
//! Two distance computations live here:
//!
//! * [`distance_transform`]: exact shortest 8-connected grid paths (diagonal
//!   steps cost sqrt 2, no corner cutting). Used for the egocentric
//!   observation channel.
//! * [`GeodesicField`]: an any-angle refinement of the same search (parents
//!   are re-linked whenever line of sight allows), giving polyline lengths
//!   that approach Euclidean shortest paths instead of octile ones. Used for
//!   every metric path length, the goal distance channel and reward shaping.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ConvexPolygon, Rect, Vec2};

/// Distance assigned to cells that cannot reach any source.
pub const UNREACHABLE: f64 = f64::INFINITY;

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("distance transform needs at least one source cell")]
    NoSources,
    #[error("source cell ({0}, {1}) lies outside the grid")]
    SourceOutOfBounds(usize, usize),
    #[error("invalid grid: {0}")]
    Invalid(String),
}

/// Placement of a grid in the world. Cell (i, j) covers
/// `[origin.x + i*res, origin.x + (i+1)*res) x [origin.y + j*res, ...)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Vec2,
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
}

impl GridSpec {
    /// Smallest grid covering `bounds`.
    pub fn covering(bounds: Rect, resolution: f64) -> Result<Self, GridError> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(GridError::Invalid(format!("resolution {resolution}")));
        }
        let width = ((bounds.width() / resolution) - 1e-9).ceil().max(1.0) as usize;
        let height = ((bounds.height() / resolution) - 1e-9).ceil().max(1.0) as usize;
        Ok(Self {
            origin: bounds.min,
            resolution,
            width,
            height,
        })
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.width + i
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.width, idx / self.width)
    }

    pub fn center(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + (i as f64 + 0.5) * self.resolution,
            self.origin.y + (j as f64 + 0.5) * self.resolution,
        )
    }

    pub fn center_of(&self, idx: usize) -> Vec2 {
        let (i, j) = self.coords(idx);
        self.center(i, j)
    }

    /// Cell containing `p`, if inside the grid.
    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let fx = (p.x - self.origin.x) / self.resolution;
        let fy = (p.y - self.origin.y) / self.resolution;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (i, j) = (fx.floor() as usize, fy.floor() as usize);
        (i < self.width && j < self.height).then_some((i, j))
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(
            self.origin.x,
            self.origin.y,
            self.origin.x + self.width as f64 * self.resolution,
            self.origin.y + self.height as f64 * self.resolution,
        )
    }

    fn cell_range(&self, r: Rect) -> Option<(usize, usize, usize, usize)> {
        let lo_x = ((r.min.x - self.origin.x) / self.resolution - 0.5).ceil().max(0.0);
        let lo_y = ((r.min.y - self.origin.y) / self.resolution - 0.5).ceil().max(0.0);
        let hi_x = ((r.max.x - self.origin.x) / self.resolution - 0.5).floor();
        let hi_y = ((r.max.y - self.origin.y) / self.resolution - 0.5).floor();
        if hi_x < 0.0 || hi_y < 0.0 || lo_x > hi_x || lo_y > hi_y {
            return None;
        }
        let hi_x = (hi_x as usize).min(self.width - 1);
        let hi_y = (hi_y as usize).min(self.height - 1);
        let (lo_x, lo_y) = (lo_x as usize, lo_y as usize);
        (lo_x <= hi_x && lo_y <= hi_y).then_some((lo_x, lo_y, hi_x, hi_y))
    }

    /// 8-neighbourhood of a cell with step costs in cells, skipping
    /// diagonal moves that would cut an occupied corner.
    fn neighbors<'a>(
        &'a self,
        idx: usize,
        blocked: &'a [bool],
    ) -> impl Iterator<Item = (usize, f64)> + 'a {
        let (i, j) = self.coords(idx);
        let (i, j) = (i as isize, j as isize);
        let (w, h) = (self.width as isize, self.height as isize);
        const OFFSETS: [(isize, isize); 8] = [
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ];
        let free = move |x: isize, y: isize| {
            x >= 0 && y >= 0 && x < w && y < h && !blocked[(y * w + x) as usize]
        };
        OFFSETS.iter().filter_map(move |&(dx, dy)| {
            let (x, y) = (i + dx, j + dy);
            if !free(x, y) {
                return None;
            }
            if dx != 0 && dy != 0 && !(free(i + dx, j) && free(i, j + dy)) {
                return None;
            }
            let cost = if dx != 0 && dy != 0 { SQRT2 } else { 1.0 };
            Some(((y * w + x) as usize, cost))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    pub spec: GridSpec,
    pub data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(spec: GridSpec, value: T) -> Self {
        Self {
            spec,
            data: vec![value; spec.len()],
        }
    }
}

impl<T: Copy> Grid<T> {
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[self.spec.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let k = self.spec.index(i, j);
        self.data[k] = v;
    }

    /// Value of the cell containing `p`.
    pub fn at(&self, p: Vec2) -> Option<T> {
        self.spec.cell_of(p).map(|(i, j)| self.get(i, j))
    }
}

pub type OccupancyGrid = Grid<bool>;

impl OccupancyGrid {
    pub fn empty(spec: GridSpec) -> Self {
        Grid::filled(spec, false)
    }

    /// Marks every cell whose centre lies within `inflation` of a polygon.
    pub fn rasterize<'a>(
        spec: GridSpec,
        polygons: impl IntoIterator<Item = &'a ConvexPolygon>,
        inflation: f64,
    ) -> Self {
        let mut grid = Self::empty(spec);
        for poly in polygons {
            grid.fill_polygon(poly, inflation);
        }
        grid
    }

    pub fn fill_polygon(&mut self, poly: &ConvexPolygon, inflation: f64) {
        let Some((x0, y0, x1, y1)) = self.spec.cell_range(poly.bounds().inflate(inflation)) else {
            return;
        };
        for j in y0..=y1 {
            for i in x0..=x1 {
                let c = self.spec.center(i, j);
                let hit = if inflation > 0.0 {
                    poly.distance_to(c) <= inflation
                } else {
                    poly.contains(c)
                };
                if hit {
                    self.set(i, j, true);
                }
            }
        }
    }

    pub fn is_free(&self, i: usize, j: usize) -> bool {
        !self.get(i, j)
    }

    /// Whether the segment a-b crosses only free cells. Cells touched at a
    /// corner count as crossed.
    pub fn line_of_sight(&self, a: Vec2, b: Vec2) -> bool {
        let spec = &self.spec;
        let (Some(ca), Some(cb)) = (spec.cell_of(a), spec.cell_of(b)) else {
            return false;
        };
        let (mut i, mut j) = (ca.0 as isize, ca.1 as isize);
        let (ti, tj) = (cb.0 as isize, cb.1 as isize);
        let free = |x: isize, y: isize| {
            x >= 0
                && y >= 0
                && (x as usize) < spec.width
                && (y as usize) < spec.height
                && !self.data[y as usize * spec.width + x as usize]
        };
        if !free(i, j) {
            return false;
        }
        let d = b - a;
        let step_i: isize = if d.x > 0.0 { 1 } else { -1 };
        let step_j: isize = if d.y > 0.0 { 1 } else { -1 };
        let res = spec.resolution;
        let next_boundary = |cell: isize, step: isize, origin: f64| {
            origin + (cell + if step > 0 { 1 } else { 0 }) as f64 * res
        };
        let mut t_max_x = if d.x != 0.0 {
            (next_boundary(i, step_i, spec.origin.x) - a.x) / d.x
        } else {
            f64::INFINITY
        };
        let mut t_max_y = if d.y != 0.0 {
            (next_boundary(j, step_j, spec.origin.y) - a.y) / d.y
        } else {
            f64::INFINITY
        };
        let t_dx = if d.x != 0.0 { res / d.x.abs() } else { f64::INFINITY };
        let t_dy = if d.y != 0.0 { res / d.y.abs() } else { f64::INFINITY };
        let max_iter = spec.width + spec.height + 4;
        for _ in 0..max_iter * 2 {
            if i == ti && j == tj {
                return true;
            }
            let diff = t_max_x - t_max_y;
            if diff.abs() < 1e-12 {
                // Passing exactly through a corner: both side cells count.
                if !free(i + step_i, j) || !free(i, j + step_j) {
                    return false;
                }
                i += step_i;
                j += step_j;
                t_max_x += t_dx;
                t_max_y += t_dy;
            } else if diff < 0.0 {
                i += step_i;
                t_max_x += t_dx;
            } else {
                j += step_j;
                t_max_y += t_dy;
            }
            if !free(i, j) {
                return false;
            }
        }
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    cost: f64,
    idx: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest 8-connected path length (meters) from every cell to the nearest
/// source. Occupied cells are impassable and keep [`UNREACHABLE`], as do
/// free cells with no path. Sources are seeded at 0 even when occupied.
pub fn distance_transform(
    occupancy: &OccupancyGrid,
    sources: &[(usize, usize)],
) -> Result<Grid<f64>, GridError> {
    if sources.is_empty() {
        return Err(GridError::NoSources);
    }
    let spec = occupancy.spec;
    let mut dist = Grid::filled(spec, UNREACHABLE);
    let mut heap = BinaryHeap::new();
    for &(i, j) in sources {
        if i >= spec.width || j >= spec.height {
            return Err(GridError::SourceOutOfBounds(i, j));
        }
        let k = spec.index(i, j);
        dist.data[k] = 0.0;
        heap.push(HeapEntry { cost: 0.0, idx: k });
    }
    while let Some(HeapEntry { cost, idx }) = heap.pop() {
        if cost > dist.data[idx] {
            continue;
        }
        for (n, step) in spec.neighbors(idx, &occupancy.data) {
            let cand = cost + step * spec.resolution;
            if cand < dist.data[n] {
                dist.data[n] = cand;
                heap.push(HeapEntry { cost: cand, idx: n });
            }
        }
    }
    Ok(dist)
}

/// Where a geodesic path ends when followed from a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Parent {
    None,
    /// Terminal goal point (stored in `parent_point`).
    Goal,
    Cell(u32),
}

/// A point the field propagates from, at a given initial cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    pub cell: (usize, usize),
    pub cost: f64,
    /// Exact goal point the cell connects to.
    pub point: Vec2,
}

/// Target set of a [`GeodesicField`]: a point, a disk, a polygon, the
/// half-plane above a horizontal line, or everything outside a rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GoalGeometry {
    Point { point: Vec2 },
    Disk { center: Vec2, radius: f64 },
    Polygon { polygon: ConvexPolygon },
    /// Everything with `y >= y`.
    LineAbove { y: f64 },
    /// Everything not strictly inside `rect`; the nearest goal point of an
    /// interior point is on the rectangle boundary.
    OutsideRect { rect: Rect },
}

impl GoalGeometry {
    pub fn contains(&self, p: Vec2) -> bool {
        match self {
            GoalGeometry::Point { .. } => false,
            GoalGeometry::Disk { center, radius } => p.distance(*center) <= *radius,
            GoalGeometry::Polygon { polygon } => polygon.contains(p),
            GoalGeometry::LineAbove { y } => p.y >= *y,
            GoalGeometry::OutsideRect { rect } => !rect.contains_strict(p),
        }
    }

    /// Nearest point of the goal set (`p` itself when inside).
    pub fn closest_point(&self, p: Vec2) -> Vec2 {
        if self.contains(p) {
            return p;
        }
        match self {
            GoalGeometry::Point { point } => *point,
            GoalGeometry::Disk { center, radius } => {
                let d = p - *center;
                *center + d * (*radius / d.norm())
            }
            GoalGeometry::Polygon { polygon } => polygon.closest_point(p),
            GoalGeometry::LineAbove { y } => Vec2::new(p.x, *y),
            GoalGeometry::OutsideRect { rect } => {
                let candidates = [
                    (p.x - rect.min.x, Vec2::new(rect.min.x, p.y)),
                    (rect.max.x - p.x, Vec2::new(rect.max.x, p.y)),
                    (p.y - rect.min.y, Vec2::new(p.x, rect.min.y)),
                    (rect.max.y - p.y, Vec2::new(p.x, rect.max.y)),
                ];
                candidates
                    .iter()
                    .fold(candidates[0], |best, c| if c.0 < best.0 { *c } else { best })
                    .1
            }
        }
    }

    /// Euclidean distance to the goal set.
    pub fn distance(&self, p: Vec2) -> f64 {
        p.distance(self.closest_point(p))
    }
}

impl From<Vec2> for GoalGeometry {
    fn from(point: Vec2) -> Self {
        GoalGeometry::Point { point }
    }
}

impl From<ConvexPolygon> for GoalGeometry {
    fn from(polygon: ConvexPolygon) -> Self {
        GoalGeometry::Polygon { polygon }
    }
}

/// Any-angle shortest-path distances to a goal set over free cells.
#[derive(Debug, Clone)]
pub struct GeodesicField {
    occupancy: OccupancyGrid,
    goal: Option<GoalGeometry>,
    cost: Vec<f64>,
    parent: Vec<Parent>,
    parent_point: Vec<Vec2>,
    parent_cost: Vec<f64>,
}

/// Result of a point query on a [`GeodesicField`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicQuery {
    pub distance: f64,
    /// Polyline from the query point to the goal point.
    pub path: Vec<Vec2>,
    /// Distance covered to leave blocked cells before the path starts.
    pub snapped: f64,
}

impl GeodesicQuery {
    pub fn goal_point(&self) -> Vec2 {
        *self.path.last().expect("query paths are never empty")
    }
}

/// Farthest snap (in cells) used to pull a blocked query point onto free space.
const MAX_SNAP_CELLS: isize = 12;

impl GeodesicField {
    /// Field towards a goal. Free cells inside it cost 0; free cells that
    /// see their closest goal point directly cost exactly that distance.
    pub fn towards(occupancy: &OccupancyGrid, goal: impl Into<GoalGeometry>) -> Self {
        let goal = goal.into();
        let spec = occupancy.spec;
        let mut seeds = Vec::new();
        for j in 0..spec.height {
            for i in 0..spec.width {
                if occupancy.get(i, j) {
                    continue;
                }
                let c = spec.center(i, j);
                if goal.contains(c) {
                    seeds.push(Seed {
                        cell: (i, j),
                        cost: 0.0,
                        point: c,
                    });
                    continue;
                }
                let q = goal.closest_point(c);
                if visible_goal(occupancy, c, q) {
                    seeds.push(Seed {
                        cell: (i, j),
                        cost: q.distance(c),
                        point: q,
                    });
                }
            }
        }
        let mut field = Self::from_seeds(occupancy, &seeds);
        field.goal = Some(goal);
        field
    }

    /// Field towards a single point.
    pub fn towards_point(occupancy: &OccupancyGrid, target: Vec2) -> Self {
        Self::towards(occupancy, target)
    }

    pub fn from_seeds(occupancy: &OccupancyGrid, seeds: &[Seed]) -> Self {
        let spec = occupancy.spec;
        let n = spec.len();
        let mut field = Self {
            occupancy: occupancy.clone(),
            goal: None,
            cost: vec![UNREACHABLE; n],
            parent: vec![Parent::None; n],
            parent_point: vec![Vec2::ZERO; n],
            parent_cost: vec![0.0; n],
        };
        let mut heap = BinaryHeap::new();
        for s in seeds {
            let (i, j) = s.cell;
            if i >= spec.width || j >= spec.height || occupancy.get(i, j) {
                continue;
            }
            let k = spec.index(i, j);
            if s.cost < field.cost[k] {
                field.cost[k] = s.cost;
                field.parent[k] = Parent::Goal;
                field.parent_point[k] = s.point;
                field.parent_cost[k] = 0.0;
                heap.push(HeapEntry { cost: s.cost, idx: k });
            }
        }
        while let Some(HeapEntry { cost, idx }) = heap.pop() {
            if cost > field.cost[idx] {
                continue;
            }
            let center = spec.center_of(idx);
            let (pp, pc) = field.anchor(idx);
            for (nb, _) in spec.neighbors(idx, &occupancy.data) {
                let nc = spec.center_of(nb);
                let (cand, parent, ppoint, pcost) = if occupancy.line_of_sight(pp, nc) {
                    (pc + pp.distance(nc), field.parent_link(idx), pp, pc)
                } else {
                    (cost + center.distance(nc), Parent::Cell(idx as u32), center, cost)
                };
                if cand < field.cost[nb] - 1e-12 {
                    field.cost[nb] = cand;
                    field.parent[nb] = parent;
                    field.parent_point[nb] = ppoint;
                    field.parent_cost[nb] = pcost;
                    heap.push(HeapEntry { cost: cand, idx: nb });
                }
            }
        }
        field
    }

    /// The point a cell's path heads to first, with its cost.
    fn anchor(&self, idx: usize) -> (Vec2, f64) {
        match self.parent[idx] {
            Parent::None => (self.occupancy.spec.center_of(idx), self.cost[idx]),
            _ => (self.parent_point[idx], self.parent_cost[idx]),
        }
    }

    fn parent_link(&self, idx: usize) -> Parent {
        self.parent[idx]
    }

    pub fn occupancy(&self) -> &OccupancyGrid {
        &self.occupancy
    }

    pub fn spec(&self) -> GridSpec {
        self.occupancy.spec
    }

    /// Cost at every cell centre (meters; [`UNREACHABLE`] if none).
    pub fn costs(&self) -> Grid<f64> {
        Grid {
            spec: self.occupancy.spec,
            data: self.cost.clone(),
        }
    }

    pub fn goal(&self) -> Option<&GoalGeometry> {
        self.goal.as_ref()
    }

    pub fn cell_cost(&self, i: usize, j: usize) -> f64 {
        self.cost[self.occupancy.spec.index(i, j)]
    }

    /// Shortest distance from an arbitrary point, with the path taken.
    /// Points in blocked cells are first snapped to the nearest free cell.
    pub fn query(&self, p: Vec2) -> Option<GeodesicQuery> {
        let spec = self.occupancy.spec;
        let (ci, cj) = spec.cell_of(p)?;
        if self.occupancy.is_free(ci, cj) {
            if let Some(goal) = &self.goal {
                let q = goal.closest_point(p);
                if goal.contains(p) || visible_goal(&self.occupancy, p, q) {
                    let path = if q == p { vec![p] } else { vec![p, q] };
                    return Some(GeodesicQuery {
                        distance: p.distance(q),
                        path,
                        snapped: 0.0,
                    });
                }
            }
            let mut best: Option<(f64, usize, bool)> = None;
            for dj in -1..=1isize {
                for di in -1..=1isize {
                    let (x, y) = (ci as isize + di, cj as isize + dj);
                    if x < 0 || y < 0 || x >= spec.width as isize || y >= spec.height as isize {
                        continue;
                    }
                    let k = spec.index(x as usize, y as usize);
                    if !self.cost[k].is_finite() {
                        continue;
                    }
                    let (ap, ac) = self.anchor(k);
                    let candidates = [
                        (self.occupancy.line_of_sight(p, ap), ac + p.distance(ap), true),
                        (
                            self.occupancy.line_of_sight(p, spec.center_of(k)),
                            self.cost[k] + p.distance(spec.center_of(k)),
                            false,
                        ),
                    ];
                    for (visible, c, via_anchor) in candidates {
                        if visible && best.is_none_or(|b| c < b.0) {
                            best = Some((c, k, via_anchor));
                        }
                    }
                }
            }
            let (distance, k, via_anchor) = best?;
            let mut path = vec![p];
            if via_anchor {
                self.extend_from_anchor(k, &mut path);
            } else {
                path.push(spec.center_of(k));
                self.extend_from_anchor(k, &mut path);
            }
            return Some(GeodesicQuery {
                distance,
                path,
                snapped: 0.0,
            });
        }

        // Blocked start: nearest free, reachable cell.
        let mut best: Option<(f64, usize)> = None;
        for r in 1..=MAX_SNAP_CELLS {
            for dj in -r..=r {
                for di in -r..=r {
                    if di.abs() != r && dj.abs() != r {
                        continue;
                    }
                    let (x, y) = (ci as isize + di, cj as isize + dj);
                    if x < 0 || y < 0 || x >= spec.width as isize || y >= spec.height as isize {
                        continue;
                    }
                    let k = spec.index(x as usize, y as usize);
                    if self.occupancy.data[k] || !self.cost[k].is_finite() {
                        continue;
                    }
                    let d = p.distance(spec.center_of(k));
                    if best.is_none_or(|b| d < b.0 || (d == b.0 && k < b.1)) {
                        best = Some((d, k));
                    }
                }
            }
            if best.is_some() {
                break;
            }
        }
        let (snap, k) = best?;
        let c = spec.center_of(k);
        let mut q = self.query(c)?;
        q.distance += snap;
        q.snapped = snap;
        q.path.insert(0, p);
        Some(q)
    }

    pub fn distance_from(&self, p: Vec2) -> Option<f64> {
        self.query(p).map(|q| q.distance)
    }

    fn extend_from_anchor(&self, mut k: usize, path: &mut Vec<Vec2>) {
        let spec = self.occupancy.spec;
        for _ in 0..spec.len() + 1 {
            match self.parent[k] {
                Parent::None => return,
                Parent::Goal => {
                    path.push(self.parent_point[k]);
                    return;
                }
                Parent::Cell(c) => {
                    k = c as usize;
                    path.push(spec.center_of(k));
                }
            }
        }
    }

    /// Cost at `p` interpolated bilinearly between finite cell centres.
    pub fn sample(&self, p: Vec2) -> f64 {
        sample_bilinear(&self.costs_ref(), p)
    }

    fn costs_ref(&self) -> GridView<'_> {
        GridView {
            spec: self.occupancy.spec,
            data: &self.cost,
        }
    }
}

/// Line of sight to a goal point, which may sit on the boundary of (or
/// inside) a blocked cell: the last blocked stretch right at the goal is
/// tolerated when it is shorter than one cell.
pub(crate) fn visible_goal(occ: &OccupancyGrid, from: Vec2, goal: Vec2) -> bool {
    if occ.line_of_sight(from, goal) {
        return true;
    }
    let d = goal.distance(from);
    let res = occ.spec.resolution;
    if d <= res {
        return false;
    }
    let back = goal + (from - goal) * (res / d);
    occ.line_of_sight(from, back) && occ.at(goal).is_some()
}

struct GridView<'a> {
    spec: GridSpec,
    data: &'a [f64],
}

/// Bilinear interpolation over the finite corners only; `UNREACHABLE` when
/// none of the surrounding centres is finite.
pub fn sample_grid(grid: &Grid<f64>, p: Vec2) -> f64 {
    sample_bilinear(
        &GridView {
            spec: grid.spec,
            data: &grid.data,
        },
        p,
    )
}

fn sample_bilinear(grid: &GridView<'_>, p: Vec2) -> f64 {
    let spec = grid.spec;
    let fx = (p.x - spec.origin.x) / spec.resolution - 0.5;
    let fy = (p.y - spec.origin.y) / spec.resolution - 0.5;
    let x0 = fx.floor();
    let y0 = fy.floor();
    let tx = fx - x0;
    let ty = fy - y0;
    let mut acc = 0.0;
    let mut wsum = 0.0;
    for (dx, dy, w) in [
        (0, 0, (1.0 - tx) * (1.0 - ty)),
        (1, 0, tx * (1.0 - ty)),
        (0, 1, (1.0 - tx) * ty),
        (1, 1, tx * ty),
    ] {
        let x = (x0 as isize + dx).clamp(0, spec.width as isize - 1) as usize;
        let y = (y0 as isize + dy).clamp(0, spec.height as isize - 1) as usize;
        let v = grid.data[spec.index(x, y)];
        if v.is_finite() && w > 0.0 {
            acc += w * v;
            wsum += w;
        }
    }
    if wsum > 0.0 {
        acc / wsum
    } else {
        // Exactly on a centre whose value is infinite, or all corners blocked.
        let (x, y) = (
            (fx.round() as isize).clamp(0, spec.width as isize - 1) as usize,
            (fy.round() as isize).clamp(0, spec.height as isize - 1) as usize,
        );
        let v = grid.data[spec.index(x, y)];
        if v.is_finite() {
            v
        } else {
            UNREACHABLE
        }
    }
}
