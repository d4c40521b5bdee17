//! The four benchmark tasks behind one reset/step interface.
//!
//! * Maze: reach a goal disk through a walled maze with loose obstacles.
//! * Ship-Ice: cross a goal line through a channel of ice floes.
//! * Box-Delivery: push boxes into a receptacle.
//! * Area-Clearing: push boxes out of a clearance rectangle.
//!
//! Navigation tasks take angular-velocity actions, one physics substep per
//! action. Manipulation tasks take heading steps or waypoints, each followed
//! by a short settling phase so pushed boxes come to rest.

pub mod config;
pub mod generate;
pub mod observation;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{ActionMode, EnvConfig, EnvKind, MazeLayout, RewardConfig, RobotConfig};
pub use generate::{generate_ice_field, maze_geometry, MazeGeometry, Scene};
pub use observation::{Channel, ChannelRole, Frame, Observation};

use crate::geometry::{ConvexPolygon, Pose, Vec2};
use crate::grid::{distance_transform, sample_grid, GeodesicField, GoalGeometry, Grid, OccupancyGrid};
use crate::metrics::{EpisodeRecord, ObjectRecord, StaticMap, TaskClass};
use crate::physics::{
    Body, BodyError, BodyId, BodyKind, DriveCommand, PhysicsError, StepInfo, WorldState,
};
use observation::{line_cells, local_point, to_local, to_world};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("generation failed: {0}")]
    Generation(String),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Body(#[from] BodyError),
    #[error("{action:?} action sent to an environment in {mode:?} mode")]
    ActionMismatch { mode: ActionMode, action: Action },
    #[error("episode already finished")]
    Finished,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    /// Turn rate at constant forward speed, rad/s.
    AngularVelocity { omega: f64 },
    /// Turn in place to `heading`, then drive one step.
    Heading { heading: f64 },
    /// Drive in re-aimed heading steps to a world point.
    Waypoint { x: f64, y: f64 },
}

impl Action {
    pub fn mode(&self) -> ActionMode {
        match self {
            Action::AngularVelocity { .. } => ActionMode::AngularVelocity,
            Action::Heading { .. } => ActionMode::HeadingStep,
            Action::Waypoint { .. } => ActionMode::Waypoint,
        }
    }

    pub fn waypoint(p: Vec2) -> Self {
        Action::Waypoint { x: p.x, y: p.y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub collision: f64,
    pub progress: f64,
    pub completion: f64,
    pub total: f64,
}

impl RewardBreakdown {
    fn new(collision: f64, progress: f64, completion: f64) -> Self {
        Self {
            collision,
            progress,
            completion,
            total: collision + progress + completion,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EpisodeStatus {
    pub terminated: bool,
    pub truncated: bool,
    /// Navigation goal reached.
    pub goal_reached: bool,
    /// Per-object delivered / cleared flags (latched).
    pub object_done: Vec<bool>,
    pub steps: usize,
    /// Consecutive actions without a completed box.
    pub steps_since_completion: usize,
}

impl EpisodeStatus {
    pub fn is_done(&self) -> bool {
        self.terminated || self.truncated
    }

    pub fn completed(&self) -> usize {
        self.object_done.iter().filter(|d| **d).count()
    }
}

/// Sets `terminated` / `truncated` from the counters and flags in `status`.
/// Termination takes precedence over truncation.
pub fn check_termination(kind: EnvKind, config: &EnvConfig, status: &mut EpisodeStatus) {
    status.terminated = if kind.is_navigation() {
        status.goal_reached
    } else {
        !status.object_done.is_empty() && status.object_done.iter().all(|d| *d)
    };
    let stalled = !kind.is_navigation() && status.steps_since_completion >= config.no_progress_limit;
    status.truncated = !status.terminated && (status.steps >= config.max_steps || stalled);
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: RewardBreakdown,
    pub status: EpisodeStatus,
    pub info: StepInfo,
}

/// Result of [`Env::advance`]: a step without rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub reward: RewardBreakdown,
    pub status: EpisodeStatus,
    pub info: StepInfo,
    /// Objects completed by this action.
    pub completed_now: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Env {
    config: EnvConfig,
    scene: Scene,
    world: WorldState,
    movable_ids: Vec<BodyId>,
    movable_radius: Vec<f64>,
    initial_positions: Vec<Vec2>,
    robot_start: Vec2,
    static_map: StaticMap,
    static_grid: OccupancyGrid,
    goal_field: GeodesicField,
    goal_costs: Grid<f64>,
    frame: Frame,
    status: EpisodeStatus,
    robot_goal_distance: f64,
    object_goal_distance: Vec<f64>,
}

impl Env {
    /// Generates the world for `config.seed`.
    pub fn new(config: EnvConfig) -> Result<Self, EnvError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let scene = generate::generate(&config, &mut rng)?;
        Self::from_scene(config, scene)
    }

    /// Builds an environment around a hand-made scene.
    pub fn from_scene(config: EnvConfig, scene: Scene) -> Result<Self, EnvError> {
        config.validate()?;
        let mut world = WorldState::new();
        let robot = Body::new(
            0,
            BodyKind::Robot,
            generate::robot_shape(&config),
            scene.robot_pose,
            config.robot.mass,
        )?;
        let robot_start = robot.position();
        world.add_body(robot)?;
        for poly in &scene.statics {
            let id = world.next_id();
            world.add_body(Body::from_world_polygon(id, BodyKind::Static, poly, 0.0)?)?;
        }
        let mut movable_ids = Vec::new();
        let mut movable_radius = Vec::new();
        let mut initial_positions = Vec::new();
        for (poly, mass) in &scene.movables {
            let id = world.next_id();
            let body = Body::from_world_polygon(id, BodyKind::Movable, poly, *mass)?;
            movable_radius.push(body.inradius());
            initial_positions.push(body.position());
            movable_ids.push(world.add_body(body)?);
        }

        let static_map = StaticMap::new(scene.bounds, config.resolution, scene.statics.clone());
        let static_grid = static_map
            .occupancy(0.0)
            .map_err(|e| EnvError::InvalidConfig(e.to_string()))?;
        let inflation = if config.kind.is_navigation() {
            config.robot.radius()
        } else {
            movable_radius
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min)
                .min(0.5 * config.box_size)
        };
        let inflated = static_map
            .occupancy(inflation)
            .map_err(|e| EnvError::InvalidConfig(e.to_string()))?;
        let goal_field = GeodesicField::towards(&inflated, scene.goal.clone());
        let goal_costs = goal_field.costs();
        let frame = if config.kind == EnvKind::ShipIce {
            Frame::WorldAligned
        } else {
            Frame::HeadingAligned
        };
        let n = movable_ids.len();
        let mut env = Self {
            config,
            scene,
            world,
            movable_ids,
            movable_radius,
            initial_positions,
            robot_start,
            static_map,
            static_grid,
            goal_field,
            goal_costs,
            frame,
            status: EpisodeStatus {
                object_done: vec![false; n],
                ..EpisodeStatus::default()
            },
            robot_goal_distance: 0.0,
            object_goal_distance: Vec::new(),
        };
        env.robot_goal_distance = env.goal_distance_of(env.robot_start);
        env.object_goal_distance = (0..n)
            .map(|i| env.goal_distance_of(env.initial_positions[i]))
            .collect();
        if !env.config.kind.is_navigation() {
            // Boxes generated already complete count from the start.
            for i in 0..n {
                if env.object_complete(i) {
                    env.status.object_done[i] = true;
                }
            }
        }
        Ok(env)
    }

    /// Regenerates the world for a new seed and returns the first observation.
    pub fn reset(&mut self, seed: u64) -> Result<Observation, EnvError> {
        let mut config = self.config.clone();
        config.seed = seed;
        *self = Self::new(config)?;
        Ok(self.observe())
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn kind(&self) -> EnvKind {
        self.config.kind
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn status(&self) -> &EpisodeStatus {
        &self.status
    }

    pub fn goal(&self) -> &GoalGeometry {
        &self.scene.goal
    }

    pub fn static_map(&self) -> &StaticMap {
        &self.static_map
    }

    pub fn goal_field(&self) -> &GeodesicField {
        &self.goal_field
    }

    pub fn robot(&self) -> &Body {
        self.world.robot().expect("environments always have a robot")
    }

    pub fn robot_pose(&self) -> Pose {
        self.robot().pose
    }

    pub fn robot_start(&self) -> Vec2 {
        self.robot_start
    }

    pub fn movable_ids(&self) -> &[BodyId] {
        &self.movable_ids
    }

    pub fn movable(&self, i: usize) -> &Body {
        self.world
            .body(self.movable_ids[i])
            .expect("movable ids stay valid")
    }

    pub fn movable_count(&self) -> usize {
        self.movable_ids.len()
    }

    pub fn initial_positions(&self) -> &[Vec2] {
        &self.initial_positions
    }

    /// Goal distance of a point along the static map (the goal-DT value).
    pub fn goal_distance_of(&self, p: Vec2) -> f64 {
        if self.scene.goal.contains(p) {
            return 0.0;
        }
        self.goal_field
            .distance_from(p)
            .unwrap_or_else(|| self.scene.goal.distance(p) + self.diagonal())
    }

    /// Current goal-DT value of the robot.
    pub fn robot_goal_distance(&self) -> f64 {
        self.robot_goal_distance
    }

    pub fn diagonal(&self) -> f64 {
        let b = self.static_map.bounds;
        b.width().hypot(b.height())
    }

    fn object_complete(&self, i: usize) -> bool {
        let body = self.movable(i);
        match self.config.kind {
            EnvKind::BoxDelivery => self.scene.goal.contains(body.position()),
            EnvKind::AreaClearing => body
                .world_shape()
                .vertices()
                .iter()
                .all(|v| !self.config.clearance.contains_strict(*v)),
            _ => false,
        }
    }

    /// Steps and renders the next observation.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome, EnvError> {
        let r = self.advance(action)?;
        Ok(StepOutcome {
            observation: self.observe(),
            reward: r.reward,
            status: r.status,
            info: r.info,
        })
    }

    /// Steps without rendering an observation.
    pub fn advance(&mut self, action: Action) -> Result<StepReport, EnvError> {
        if self.status.is_done() {
            return Err(EnvError::Finished);
        }
        if action.mode() != self.config.action_mode {
            return Err(EnvError::ActionMismatch {
                mode: self.config.action_mode,
                action,
            });
        }
        let phys = self.config.physics.clone();
        let info = match action {
            Action::AngularVelocity { omega } => self.world.step(
                DriveCommand::Unicycle {
                    angular_velocity: omega,
                },
                &phys,
            )?,
            Action::Heading { heading } => {
                let mut info = self
                    .world
                    .heading_step(heading, self.config.step_distance, &phys)?;
                info.merge(self.settle()?);
                info
            }
            Action::Waypoint { x, y } => {
                let mut info = self.drive_to(Vec2::new(x, y))?;
                info.merge(self.settle()?);
                info
            }
        };
        Ok(self.score(info))
    }

    fn drive_to(&mut self, target: Vec2) -> Result<StepInfo, EnvError> {
        let phys = self.config.physics.clone();
        let step = self.config.step_distance;
        let tol = self.config.resolution;
        let mut info = StepInfo {
            displacement: vec![0.0; self.world.bodies.len()],
            ..StepInfo::default()
        };
        let start = self.robot().position().distance(target);
        let max_legs = (start / step).ceil() as usize * 3 + 8;
        for _ in 0..max_legs {
            let p = self.robot().position();
            let d = p.distance(target);
            if d <= tol {
                break;
            }
            let sub = self
                .world
                .heading_step((target - p).angle(), step.min(d), &phys)?;
            let stuck = sub.immobilized;
            info.merge(sub);
            if stuck {
                break;
            }
        }
        Ok(info)
    }

    /// Holds the robot still until movables stop or the budget runs out.
    fn settle(&mut self) -> Result<StepInfo, EnvError> {
        let phys = self.config.physics.clone();
        let mut info = StepInfo {
            displacement: vec![0.0; self.world.bodies.len()],
            ..StepInfo::default()
        };
        for _ in 0..self.config.settle_steps {
            if self.world.bodies_of(BodyKind::Movable).all(Body::is_at_rest) {
                break;
            }
            info.merge(self.world.step(DriveCommand::Stop, &phys)?);
        }
        Ok(info)
    }

    fn score(&mut self, info: StepInfo) -> StepReport {
        let rc = self.config.rewards.clone();
        let kind = self.config.kind;
        let impulse: f64 = if kind.is_navigation() {
            info.collisions
                .iter()
                .filter(|e| e.involves(BodyKind::Robot))
                .map(|e| e.impulse)
                .sum()
        } else {
            info.robot_impulse_with(BodyKind::Static)
        };
        let collision = -rc.collision * impulse.min(rc.impulse_cap) / rc.impulse_cap;

        let mut progress = 0.0;
        let mut completion = 0.0;
        let mut completed_now = Vec::new();
        match kind {
            EnvKind::Maze => {
                let p = self.robot().position();
                let d = self.goal_distance_of(p);
                progress = rc.progress * (self.robot_goal_distance - d);
                self.robot_goal_distance = d;
                if self.scene.goal.contains(p) {
                    self.status.goal_reached = true;
                }
            }
            EnvKind::ShipIce => {
                let pose = self.robot_pose();
                // The nearest goal-line point is straight up the channel.
                progress = rc.heading * (pose.theta - std::f64::consts::FRAC_PI_2).cos();
                self.robot_goal_distance = self.scene.goal.distance(pose.position());
                if self.scene.goal.contains(pose.position()) {
                    self.status.goal_reached = true;
                }
            }
            EnvKind::BoxDelivery | EnvKind::AreaClearing => {
                for i in 0..self.movable_ids.len() {
                    if self.status.object_done[i] {
                        continue;
                    }
                    let d = self.goal_distance_of(self.movable(i).position());
                    progress += rc.box_progress * (self.object_goal_distance[i] - d);
                    self.object_goal_distance[i] = d;
                    if self.object_complete(i) {
                        self.status.object_done[i] = true;
                        completion += rc.box_completion;
                        completed_now.push(i);
                    }
                }
            }
        }
        if kind.is_navigation() && self.status.goal_reached {
            completion += rc.terminal;
        }

        self.status.steps += 1;
        if completed_now.is_empty() {
            self.status.steps_since_completion += 1;
        } else {
            self.status.steps_since_completion = 0;
        }
        check_termination(kind, &self.config, &mut self.status);
        StepReport {
            reward: RewardBreakdown::new(collision, progress, completion),
            status: self.status.clone(),
            info,
            completed_now,
        }
    }

    /// Everything the metrics need about the episode so far.
    pub fn episode_record(&self) -> EpisodeRecord {
        let robot = self.robot();
        EpisodeRecord {
            class: if self.config.kind.is_navigation() {
                TaskClass::Navigation
            } else {
                TaskClass::Manipulation
            },
            robot_mass: robot.mass(),
            robot_path_length: robot.traveled,
            robot_start: self.robot_start,
            robot_radius: self.config.robot.radius(),
            success: self.status.goal_reached,
            objects: (0..self.movable_ids.len())
                .map(|i| {
                    let b = self.movable(i);
                    ObjectRecord {
                        mass: b.mass(),
                        distance: b.traveled,
                        initial_position: self.initial_positions[i],
                        radius: self.movable_radius[i],
                        success: self.status.object_done[i],
                    }
                })
                .collect(),
            goal: self.scene.goal.clone(),
            static_map: self.static_map.clone(),
        }
    }

    /// Renders the observation channels for the current state.
    pub fn observe(&self) -> Observation {
        let n = self.config.window;
        let res = self.config.resolution;
        let pose = self.robot_pose();
        let frame = self.frame;
        let diag = self.diagonal();
        let cells = n * n;

        let mut static_ch = vec![0f32; cells];
        let mut goal_ch = vec![0f32; cells];
        for r in 0..n {
            for c in 0..n {
                let w = to_world(frame, pose, local_point(n, res, r, c));
                let k = r * n + c;
                static_ch[k] = match self.static_grid.at(w) {
                    Some(false) => 0.0,
                    _ => 1.0,
                };
                goal_ch[k] = if self.scene.goal.contains(w) {
                    0.0
                } else {
                    let v = sample_grid(&self.goal_costs, w);
                    if v.is_finite() && self.static_grid.at(w).is_some() {
                        (v / diag).clamp(0.0, 1.0) as f32
                    } else {
                        1.0
                    }
                };
            }
        }
        let footprint = self.rasterize(&self.robot().world_shape(), pose);
        let goal = Channel {
            role: ChannelRole::GoalDistance,
            data: goal_ch,
        };
        let footprint = Channel {
            role: ChannelRole::RobotFootprint,
            data: footprint,
        };

        let channels = if self.config.kind.is_navigation() {
            let mut movable = vec![0f32; cells];
            for i in 0..self.movable_ids.len() {
                let m = self.rasterize(&self.movable(i).world_shape(), pose);
                for (dst, v) in movable.iter_mut().zip(m) {
                    *dst = dst.max(v);
                }
            }
            let mut chans = vec![
                Channel {
                    role: ChannelRole::StaticOccupancy,
                    data: static_ch,
                },
                Channel {
                    role: ChannelRole::MovableOccupancy,
                    data: movable,
                },
                footprint,
                goal,
            ];
            if self.config.kind == EnvKind::ShipIce {
                chans.push(Channel {
                    role: ChannelRole::HeadingLine,
                    data: self.heading_line(pose),
                });
            }
            chans
        } else {
            let mut combined: Vec<f32> = static_ch.clone();
            for i in 0..self.movable_ids.len() {
                let done = self.status.object_done[i];
                let value = match (self.config.kind, done) {
                    (EnvKind::BoxDelivery, true) => continue,
                    (_, true) => 0.25,
                    _ => 0.5,
                };
                let m = self.rasterize(&self.movable(i).world_shape(), pose);
                for (dst, v) in combined.iter_mut().zip(m) {
                    if v > 0.0 && *dst < 1.0 {
                        *dst = dst.max(value);
                    }
                }
            }
            let ego = self.ego_distance(&static_ch, diag);
            vec![
                Channel {
                    role: ChannelRole::CombinedOccupancy,
                    data: combined,
                },
                footprint,
                Channel {
                    role: ChannelRole::EgoDistance,
                    data: ego,
                },
                goal,
            ]
        };
        Observation {
            size: n,
            resolution: res,
            frame,
            pose,
            channels,
        }
    }

    /// Cells of the window whose centres lie inside `poly`.
    fn rasterize(&self, poly: &ConvexPolygon, pose: Pose) -> Vec<f32> {
        let n = self.config.window;
        let res = self.config.resolution;
        let mut out = vec![0f32; n * n];
        let local: Vec<Vec2> = poly
            .vertices()
            .iter()
            .map(|&v| to_local(self.frame, pose, v))
            .collect();
        let half = n as f64 / 2.0;
        let (mut c0, mut c1, mut r0, mut r1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for v in &local {
            c0 = c0.min(v.x / res + half);
            c1 = c1.max(v.x / res + half);
            r0 = r0.min(v.y / res + half);
            r1 = r1.max(v.y / res + half);
        }
        let lo = |x: f64| (x - 0.5).ceil().max(0.0) as usize;
        let hi = |x: f64| ((x - 0.5).floor()).min(n as f64 - 1.0);
        let (hc, hr) = (hi(c1), hi(r1));
        if hc < 0.0 || hr < 0.0 {
            return out;
        }
        for r in lo(r0)..=(hr as usize) {
            for c in lo(c0)..=(hc as usize) {
                let w = to_world(self.frame, pose, local_point(n, res, r, c));
                if poly.contains(w) {
                    out[r * n + c] = 1.0;
                }
            }
        }
        out
    }

    fn heading_line(&self, pose: Pose) -> Vec<f32> {
        let n = self.config.window;
        let res = self.config.resolution;
        let mut out = vec![0f32; n * n];
        let dir = to_local(self.frame, pose, pose.position() + pose.heading());
        let half = n as f64 / 2.0;
        let center = (half as isize, half as isize);
        let reach = n as f64 * res;
        let end = dir * reach;
        let end_cell = (
            (end.y / res + half).floor() as isize,
            (end.x / res + half).floor() as isize,
        );
        for (r, c) in line_cells(center.0, center.1, end_cell.0, end_cell.1) {
            if r < 0 || c < 0 || r >= n as isize || c >= n as isize {
                break;
            }
            out[r as usize * n + c as usize] = 1.0;
        }
        out
    }

    fn ego_distance(&self, static_ch: &[f32], diag: f64) -> Vec<f32> {
        let n = self.config.window;
        let spec = crate::grid::GridSpec {
            origin: Vec2::ZERO,
            resolution: self.config.resolution,
            width: n,
            height: n,
        };
        let occ = OccupancyGrid {
            spec,
            data: static_ch.iter().map(|v| *v >= 1.0).collect(),
        };
        let dt = distance_transform(&occ, &[(n / 2, n / 2)]).expect("one in-bounds source");
        dt.data
            .iter()
            .map(|d| {
                if d.is_finite() {
                    (d / diag).clamp(0.0, 1.0) as f32
                } else {
                    1.0
                }
            })
            .collect()
    }
}
