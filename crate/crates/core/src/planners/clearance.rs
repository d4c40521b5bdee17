//! Area-clearing planner: straight push paths across each edge of the
//! clearance rectangle, a GTSP over them, and a waypoint executor.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::gtsp::{solve_gtsp, Gtsp};
use super::{Decision, Policy, PlannerError};
use crate::env::{Action, ActionMode, Env, EnvKind, Observation};
use crate::geometry::{closest_point_on_segment, ConvexPolygon, Pose, Rect, Vec2};
use crate::metrics::{PathOracle, StaticMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryEdge {
    South,
    East,
    North,
    West,
}

impl BoundaryEdge {
    pub const ALL: [BoundaryEdge; 4] = [Self::South, Self::East, Self::North, Self::West];

    pub fn outward_normal(self) -> Vec2 {
        match self {
            Self::South => Vec2::new(0.0, -1.0),
            Self::East => Vec2::new(1.0, 0.0),
            Self::North => Vec2::new(0.0, 1.0),
            Self::West => Vec2::new(-1.0, 0.0),
        }
    }

    /// Where a push from `c` along the outward normal meets this edge.
    pub fn crossing(self, rect: Rect, c: Vec2) -> Vec2 {
        match self {
            Self::South => Vec2::new(c.x, rect.min.y),
            Self::East => Vec2::new(rect.max.x, c.y),
            Self::North => Vec2::new(c.x, rect.max.y),
            Self::West => Vec2::new(rect.min.x, c.y),
        }
    }
}

/// Geometry parameters of the clearance paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClearanceSetup {
    pub clearance: Rect,
    pub robot_length: f64,
    pub robot_width: f64,
    /// Gap between the robot front and the box circle at the approach point.
    pub margin: f64,
    /// How far past the edge the exit point lies.
    pub exit_epsilon: f64,
    /// Extra push beyond the exit point, for the box centre.
    pub overshoot: f64,
}

impl ClearanceSetup {
    pub fn from_env(env: &Env) -> Self {
        let c = env.config();
        Self {
            clearance: c.clearance,
            robot_length: c.robot.length,
            robot_width: c.robot.width,
            margin: 0.1,
            exit_epsilon: 0.05,
            overshoot: c.box_size,
        }
    }

    fn robot_at(&self, p: Vec2, heading: f64) -> ConvexPolygon {
        ConvexPolygon::rectangle(self.robot_length, self.robot_width)
            .expect("positive robot size")
            .transformed(&Pose::new(p.x, p.y, heading))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClearancePath {
    pub box_index: usize,
    pub edge: BoundaryEdge,
    /// Robot centre before the push, behind the box.
    pub approach: Vec2,
    /// Unit push direction (the edge's outward normal).
    pub direction: Vec2,
    /// Box centre at the start of the push.
    pub box_start: Vec2,
    /// Where the push line meets the edge.
    pub crossing: Vec2,
    /// Point just outside the boundary on the push line.
    pub exit: Vec2,
    /// Box centre at the end of the push.
    pub box_target: Vec2,
    /// Robot centre at the end of the push.
    pub push_end: Vec2,
}

impl ClearancePath {
    pub fn new(setup: &ClearanceSetup, box_index: usize, shape: &ConvexPolygon, edge: BoundaryEdge) -> Self {
        let c = shape.centroid();
        let d = edge.outward_normal();
        let half = 0.5 * setup.robot_length;
        let back = shape
            .vertices()
            .iter()
            .map(|&v| (c - v).dot(d))
            .fold(0.0, f64::max);
        let crossing = edge.crossing(setup.clearance, c);
        let exit = crossing + d * setup.exit_epsilon;
        let box_target = exit + d * setup.overshoot;
        Self {
            box_index,
            edge,
            approach: c - d * (half + shape.radius_about(c) + setup.margin),
            direction: d,
            box_start: c,
            crossing,
            exit,
            box_target,
            push_end: box_target - d * (half + back),
        }
    }

    pub fn push_length(&self) -> f64 {
        self.approach.distance(self.push_end)
    }

    /// Whether the robot fits at the approach point.
    pub fn is_feasible(&self, setup: &ClearanceSetup, statics: &[ConvexPolygon]) -> bool {
        let robot = setup.robot_at(self.approach, self.direction.angle());
        statics.iter().all(|s| !s.overlaps(&robot))
    }
}

/// One path per (box, edge) pair whose approach point is free of static
/// geometry.
pub fn enumerate_clearance_paths(
    setup: &ClearanceSetup,
    boxes: &[(usize, ConvexPolygon)],
    statics: &[ConvexPolygon],
) -> Result<Vec<ClearancePath>, PlannerError> {
    let mut out = Vec::with_capacity(4 * boxes.len());
    for (index, shape) in boxes {
        let before = out.len();
        for edge in BoundaryEdge::ALL {
            let p = ClearancePath::new(setup, *index, shape, edge);
            if p.is_feasible(setup, statics) {
                out.push(p);
            }
        }
        if out.len() == before {
            return Err(PlannerError::NoCandidates(*index));
        }
    }
    Ok(out)
}

/// Vertex 0 is the robot start; vertex `v > 0` is `paths[v - 1]`. Each box
/// forms one set. The weight of `u -> v` is the static-map path from where
/// `u` leaves the robot to the approach point of `v`, plus the push of `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtspGraph {
    pub start: Vec2,
    pub paths: Vec<ClearancePath>,
    pub problem: Gtsp,
}

impl GtspGraph {
    pub fn vertex_count(&self) -> usize {
        self.problem.vertex_count()
    }

    pub fn set_count(&self) -> usize {
        self.problem.sets.len()
    }

    pub fn path_of(&self, v: usize) -> Option<&ClearancePath> {
        v.checked_sub(1).and_then(|i| self.paths.get(i))
    }
}

pub fn build_gtsp_graph(
    paths: Vec<ClearancePath>,
    robot_start: Vec2,
    map: &StaticMap,
    robot_radius: f64,
) -> Result<GtspGraph, PlannerError> {
    let n = paths.len() + 1;
    let mut sets: Vec<Vec<usize>> = Vec::new();
    let mut last_box = None;
    for (i, p) in paths.iter().enumerate() {
        if last_box != Some(p.box_index) {
            sets.push(Vec::new());
            last_box = Some(p.box_index);
        }
        sets.last_mut().expect("just pushed").push(i + 1);
    }
    let ends: Vec<Vec2> = std::iter::once(robot_start)
        .chain(paths.iter().map(|p| p.push_end))
        .collect();

    let mut oracle = PathOracle::new(map);
    let mut weights = vec![vec![f64::INFINITY; n]; n];
    for v in 1..n {
        let path = &paths[v - 1];
        for u in 0..n {
            if u == v {
                weights[u][v] = 0.0;
            } else if let Some(d) = oracle.point_distance(ends[u], path.approach, robot_radius)? {
                weights[u][v] = d + path.push_length();
            }
        }
        if (0..n).all(|u| u == v || !weights[u][v].is_finite()) {
            return Err(PlannerError::Disconnected(v));
        }
    }
    Ok(GtspGraph {
        start: robot_start,
        paths,
        problem: Gtsp {
            weights,
            sets,
            start: 0,
        },
    })
}

/// Chosen clearance paths in execution order with the tour cost. This is
/// also the plan dump format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClearancePlan {
    pub setup: ClearanceSetup,
    pub paths: Vec<ClearancePath>,
    pub cost: f64,
    pub vertex_count: usize,
    pub set_count: usize,
}

/// Plans over the boxes not yet cleared in `env`.
pub fn plan_clearance(env: &Env) -> Result<ClearancePlan, PlannerError> {
    plan_clearance_with(env, ClearanceSetup::from_env(env))
}

pub fn plan_clearance_with(env: &Env, setup: ClearanceSetup) -> Result<ClearancePlan, PlannerError> {
    let boxes: Vec<(usize, ConvexPolygon)> = (0..env.movable_count())
        .filter(|&i| !env.status().object_done[i])
        .map(|i| (i, env.movable(i).world_shape()))
        .collect();
    let paths = enumerate_clearance_paths(&setup, &boxes, &env.static_map().obstacles)?;
    let graph = build_gtsp_graph(
        paths,
        env.robot_pose().position(),
        env.static_map(),
        env.config().robot.radius(),
    )?;
    let tour = solve_gtsp(&graph.problem)?;
    Ok(ClearancePlan {
        setup,
        paths: tour
            .vertices
            .iter()
            .map(|&v| graph.path_of(v).expect("tour vertices are paths").clone())
            .collect(),
        cost: tour.cost,
        vertex_count: graph.vertex_count(),
        set_count: graph.set_count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
enum Stage {
    #[default]
    Start,
    Approach,
    Push,
    Finished,
}

/// Plans once at the first action, then drives each chosen clearance path
/// as waypoints: a route to the approach point, then the push. A leg whose
/// waypoint is not reached is skipped, as is a leg whose box is already
/// clear. Each leg is re-anchored on the box's current position, keeping
/// its edge, since earlier pushes may have nudged it.
#[derive(Debug, Clone)]
pub struct GtspPolicy {
    /// Gap between robot and box circle at the approach point, meters.
    pub margin: f64,
    /// How far past the boundary the exit point lies, meters.
    pub exit_epsilon: f64,
    plan: Option<ClearancePlan>,
    leg: usize,
    stage: Stage,
    current: Option<ClearancePath>,
    route: VecDeque<Vec2>,
    pending: Option<Vec2>,
    /// Plan indices of legs abandoned because a waypoint was not reached.
    pub skipped: Vec<usize>,
    /// Boxes of the legs that were started, in order.
    pub executed: Vec<usize>,
}

impl Default for GtspPolicy {
    fn default() -> Self {
        Self {
            margin: 0.1,
            exit_epsilon: 0.05,
            plan: None,
            leg: 0,
            stage: Stage::Start,
            current: None,
            route: VecDeque::new(),
            pending: None,
            skipped: Vec::new(),
            executed: Vec::new(),
        }
    }
}

impl GtspPolicy {
    pub fn plan(&self) -> Option<&ClearancePlan> {
        self.plan.as_ref()
    }

    fn next_leg(&mut self) {
        self.leg += 1;
        self.stage = Stage::Start;
        self.route.clear();
        self.current = None;
    }

    /// Waypoints to the approach point that go around the leg's own box.
    fn route_to(env: &Env, setup: &ClearanceSetup, path: &ClearancePath) -> VecDeque<Vec2> {
        let shape = env.movable(path.box_index).world_shape();
        let c = shape.centroid();
        let robot_reach = 0.5 * setup.robot_length.hypot(setup.robot_width);
        let clear = shape.radius_about(c) + robot_reach + 0.05;
        let interior = env.scene().interior;
        let inside = |p: Vec2| {
            let m = robot_reach;
            Vec2::new(
                p.x.clamp(interior.min.x + m, interior.max.x - m),
                p.y.clamp(interior.min.y + m, interior.max.y - m),
            )
        };
        // The robot body sweeps its half-width around the segment.
        let pass = shape.radius_about(c) + 0.5 * setup.robot_width + 0.05;
        let blocked = |a: Vec2, b: Vec2| closest_point_on_segment(c, a, b).distance(c) < pass;
        let from = env.robot_pose().position();
        let mut route = VecDeque::new();
        if blocked(from, path.approach) {
            let d = path.direction;
            let side = if (from - c).dot(d.perp()) >= 0.0 { d.perp() } else { -d.perp() };
            let back = inside(c + side * clear - d * (path.approach.distance(c)));
            if blocked(from, back) {
                route.push_back(inside(c + side * clear));
            }
            route.push_back(back);
        }
        route.push_back(path.approach);
        route
    }
}

impl Policy for GtspPolicy {
    fn name(&self) -> &str {
        "gtsp"
    }

    fn required_mode(&self) -> Option<ActionMode> {
        Some(ActionMode::Waypoint)
    }

    fn reset(&mut self, _seed: u64) {
        *self = Self {
            margin: self.margin,
            exit_epsilon: self.exit_epsilon,
            ..Self::default()
        };
    }

    fn act(&mut self, _observation: &Observation, env: &Env) -> Result<Decision, PlannerError> {
        let cfg = env.config();
        if cfg.kind != EnvKind::AreaClearing || cfg.action_mode != ActionMode::Waypoint {
            return Err(PlannerError::Unsupported {
                policy: self.name().into(),
                kind: cfg.kind,
                mode: cfg.action_mode,
            });
        }
        if self.plan.is_none() {
            let setup = ClearanceSetup {
                margin: self.margin,
                exit_epsilon: self.exit_epsilon,
                ..ClearanceSetup::from_env(env)
            };
            let plan = plan_clearance_with(env, setup)?;
            log::debug!("clearance plan: {} legs, cost {:.3}", plan.paths.len(), plan.cost);
            self.plan = Some(plan);
        }
        let plan = self.plan.clone().expect("planned above");
        let tolerance = 1.5 * cfg.resolution;
        loop {
            if env.status().object_done.iter().all(|d| *d) || self.leg >= plan.paths.len() {
                return Ok(Decision::Done);
            }
            if let Some(target) = self.pending.take() {
                if env.robot_pose().position().distance(target) > tolerance {
                    log::debug!("leg {} skipped: waypoint {target:?} not reached", self.leg);
                    self.skipped.push(self.leg);
                    self.next_leg();
                    continue;
                }
            }
            let leg = &plan.paths[self.leg];
            if env.status().object_done[leg.box_index] {
                self.next_leg();
                continue;
            }
            match self.stage {
                Stage::Start => {
                    let shape = env.movable(leg.box_index).world_shape();
                    let path = ClearancePath::new(&plan.setup, leg.box_index, &shape, leg.edge);
                    if !path.is_feasible(&plan.setup, &env.static_map().obstacles) {
                        self.skipped.push(self.leg);
                        self.next_leg();
                        continue;
                    }
                    self.route = Self::route_to(env, &plan.setup, &path);
                    self.current = Some(path);
                    self.executed.push(leg.box_index);
                    self.stage = Stage::Approach;
                }
                Stage::Approach => match self.route.pop_front() {
                    Some(w) => {
                        self.pending = Some(w);
                        return Ok(Decision::Act(Action::waypoint(w)));
                    }
                    None => self.stage = Stage::Push,
                },
                Stage::Push => {
                    let end = self.current.as_ref().expect("set at leg start").push_end;
                    self.stage = Stage::Finished;
                    self.pending = Some(end);
                    return Ok(Decision::Act(Action::waypoint(end)));
                }
                Stage::Finished => self.next_leg(),
            }
        }
    }
}
