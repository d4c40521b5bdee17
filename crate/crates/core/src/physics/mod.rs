//! Deterministic top-down rigid-body world.
//!
//! Bodies are convex polygons. Each substep applies the robot drive command,
//! Coulomb ground friction on movable bodies, sequential-impulse contact
//! resolution, integration and a positional correction pass. The world has
//! no gravity direction: `g` only scales the ground friction force.
//!
//! Iteration order is body-index order everywhere, so identical inputs give
//! bit-identical outputs.

mod body;
pub(crate) mod collide;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use body::{Body, BodyError, BodyId, BodyKind, BodySnapshot};

use crate::geometry::{normalize_angle, ConvexPolygon, Pose, Vec2};
use collide::{collide, Manifold};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicsConfig {
    /// Seconds per substep.
    pub dt: f64,
    /// Ground kinetic friction coefficient.
    pub mu: f64,
    pub g: f64,
    pub restitution: f64,
    /// Constant forward speed of the robot, m/s.
    pub robot_speed: f64,
    pub linear_damping: f64,
    pub angular_damping: f64,
    /// Bound applied to commanded angular velocities, rad/s.
    pub max_angular_velocity: f64,
    /// Coulomb coefficient between touching bodies.
    pub contact_friction: f64,
    pub solver_iterations: usize,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            dt: 0.02,
            mu: 0.5,
            g: 9.81,
            restitution: 0.1,
            robot_speed: 1.0,
            linear_damping: 0.0,
            angular_damping: 0.0,
            max_angular_velocity: 2.0,
            contact_friction: 0.5,
            solver_iterations: 10,
        }
    }
}

impl PhysicsConfig {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        let bad = |what: &str| Err(PhysicsError::InvalidConfig(what.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be > 0");
        }
        if !(self.mu >= 0.0) {
            return bad("mu must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.restitution) {
            return bad("restitution must lie in [0, 1]");
        }
        if !(self.robot_speed > 0.0) {
            return bad("robot_speed must be > 0");
        }
        if !(self.max_angular_velocity > 0.0) {
            return bad("max_angular_velocity must be > 0");
        }
        if !(self.linear_damping >= 0.0 && self.angular_damping >= 0.0) {
            return bad("damping must be >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DriveCommand {
    /// Constant forward speed with the given turn rate.
    Unicycle { angular_velocity: f64 },
    /// Robot held in place.
    Stop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub a: BodyId,
    pub b: BodyId,
    pub a_kind: BodyKind,
    pub b_kind: BodyKind,
    /// Total normal impulse, N*s.
    pub impulse: f64,
    pub point: Vec2,
}

impl CollisionEvent {
    pub fn involves(&self, kind: BodyKind) -> bool {
        self.a_kind == kind || self.b_kind == kind
    }

    pub fn is_between(&self, k1: BodyKind, k2: BodyKind) -> bool {
        (self.a_kind == k1 && self.b_kind == k2) || (self.a_kind == k2 && self.b_kind == k1)
    }
}

/// Per-step accounting. `displacement` is indexed like `WorldState::bodies`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StepInfo {
    pub displacement: Vec<f64>,
    pub collisions: Vec<CollisionEvent>,
    pub robot_static_contact: bool,
    pub robot_movable_contact: bool,
    /// The robot made no progress against static geometry.
    pub immobilized: bool,
}

impl StepInfo {
    pub fn merge(&mut self, other: StepInfo) {
        if self.displacement.len() < other.displacement.len() {
            self.displacement.resize(other.displacement.len(), 0.0);
        }
        for (d, o) in self.displacement.iter_mut().zip(&other.displacement) {
            *d += o;
        }
        self.collisions.extend(other.collisions);
        self.robot_static_contact |= other.robot_static_contact;
        self.robot_movable_contact |= other.robot_movable_contact;
        self.immobilized |= other.immobilized;
    }

    /// Sum of collision impulses between the robot and bodies of `kind`.
    pub fn robot_impulse_with(&self, kind: BodyKind) -> f64 {
        self.collisions
            .iter()
            .filter(|e| e.is_between(BodyKind::Robot, kind))
            .map(|e| e.impulse)
            .sum()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("simulation diverged: body {body} has a non-finite state")]
    Diverged { body: BodyId },
    #[error("duplicate body id {0}")]
    DuplicateId(BodyId),
    #[error("world has more than one robot")]
    MultipleRobots,
    #[error("invalid physics config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Body(#[from] BodyError),
}

const POSITION_SLOP: f64 = 0.005;
const POSITION_FACTOR: f64 = 0.8;
const MAX_POSITION_CORRECTION: f64 = 0.2;
const RESTITUTION_THRESHOLD: f64 = 0.01;
const BROADPHASE_MARGIN: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WorldState {
    pub bodies: Vec<Body>,
    /// Simulated seconds.
    pub time: f64,
}

impl WorldState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_body(&mut self, body: Body) -> Result<BodyId, PhysicsError> {
        if self.bodies.iter().any(|b| b.id == body.id) {
            return Err(PhysicsError::DuplicateId(body.id));
        }
        if body.kind == BodyKind::Robot && self.robot_index().is_some() {
            return Err(PhysicsError::MultipleRobots);
        }
        let id = body.id;
        self.bodies.push(body);
        Ok(id)
    }

    pub fn next_id(&self) -> BodyId {
        self.bodies.iter().map(|b| b.id + 1).max().unwrap_or(0)
    }

    pub fn robot_index(&self) -> Option<usize> {
        self.bodies.iter().position(|b| b.kind == BodyKind::Robot)
    }

    pub fn robot(&self) -> Option<&Body> {
        self.robot_index().map(|i| &self.bodies[i])
    }

    pub fn robot_mut(&mut self) -> Option<&mut Body> {
        let i = self.robot_index()?;
        Some(&mut self.bodies[i])
    }

    pub fn index_of(&self, id: BodyId) -> Option<usize> {
        match self.bodies.get(id as usize) {
            Some(b) if b.id == id => Some(id as usize),
            _ => self.bodies.iter().position(|b| b.id == id),
        }
    }

    pub fn body(&self, id: BodyId) -> Option<&Body> {
        self.index_of(id).map(|i| &self.bodies[i])
    }

    pub fn body_mut(&mut self, id: BodyId) -> Option<&mut Body> {
        let i = self.index_of(id)?;
        Some(&mut self.bodies[i])
    }

    pub fn bodies_of(&self, kind: BodyKind) -> impl Iterator<Item = &Body> {
        self.bodies.iter().filter(move |b| b.kind == kind)
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.bodies.iter().map(Body::kinetic_energy).sum()
    }

    /// Advances one substep of `config.dt`.
    pub fn step(
        &mut self,
        command: DriveCommand,
        config: &PhysicsConfig,
    ) -> Result<StepInfo, PhysicsError> {
        self.step_for(command, config, config.dt)
    }

    /// Rotates the robot in place to `heading`, then drives it forward up to
    /// `step_distance` in substeps, stopping early when static geometry
    /// blocks it.
    pub fn heading_step(
        &mut self,
        heading: f64,
        step_distance: f64,
        config: &PhysicsConfig,
    ) -> Result<StepInfo, PhysicsError> {
        let mut info = StepInfo {
            displacement: vec![0.0; self.bodies.len()],
            ..StepInfo::default()
        };
        let Some(r) = self.robot_index() else {
            return Ok(info);
        };
        {
            let robot = &mut self.bodies[r];
            robot.pose.theta = normalize_angle(heading);
            robot.linear_velocity = Vec2::ZERO;
            robot.angular_velocity = 0.0;
        }
        let speed = config.robot_speed;
        let mut remaining = step_distance.max(0.0);
        while remaining > 1e-12 {
            let dt = config.dt.min(remaining / speed);
            let before = self.bodies[r].position();
            let sub = self.step_for(
                DriveCommand::Unicycle {
                    angular_velocity: 0.0,
                },
                config,
                dt,
            )?;
            let robot = &self.bodies[r];
            let progress = (robot.position() - before).dot(robot.pose.heading());
            remaining -= speed * dt;
            let blocked = sub.robot_static_contact && progress < 0.1 * speed * dt;
            info.merge(sub);
            if blocked {
                info.immobilized = true;
                break;
            }
        }
        Ok(info)
    }

    fn step_for(
        &mut self,
        command: DriveCommand,
        config: &PhysicsConfig,
        dt: f64,
    ) -> Result<StepInfo, PhysicsError> {
        let n = self.bodies.len();
        let start: Vec<Vec2> = self.bodies.iter().map(Body::position).collect();
        let robot = self.robot_index();

        let mut commanded = (0.0, 0.0);
        if let Some(r) = robot {
            let body = &mut self.bodies[r];
            match command {
                DriveCommand::Unicycle { angular_velocity } => {
                    let w = clamp_turn(angular_velocity, config);
                    commanded = (config.robot_speed, w);
                    body.linear_velocity = body.pose.heading() * config.robot_speed;
                    body.angular_velocity = w;
                }
                DriveCommand::Stop => {
                    body.linear_velocity = Vec2::ZERO;
                    body.angular_velocity = 0.0;
                }
            }
        }

        for body in self.bodies.iter_mut() {
            if body.kind == BodyKind::Movable {
                apply_ground_friction(body, config, dt);
            }
        }

        let shapes: Vec<ConvexPolygon> = self.bodies.iter().map(Body::world_shape).collect();
        let contacts = self.find_contacts(&shapes, true);
        let impulses = self.solve_velocities(&contacts, config);

        let mut info = StepInfo {
            displacement: vec![0.0; n],
            ..StepInfo::default()
        };
        let mut robot_touched = false;
        for ((i, j, m), &impulse) in contacts.iter().zip(&impulses) {
            let (a, b) = (&self.bodies[*i], &self.bodies[*j]);
            if Some(*i) == robot || Some(*j) == robot {
                robot_touched = true;
                let other = if Some(*i) == robot { b.kind } else { a.kind };
                match other {
                    BodyKind::Static => info.robot_static_contact = true,
                    BodyKind::Movable => info.robot_movable_contact = true,
                    BodyKind::Robot => {}
                }
            }
            let point = m
                .points
                .iter()
                .fold(Vec2::ZERO, |acc, c| acc + c.point)
                * (1.0 / m.points.len() as f64);
            info.collisions.push(CollisionEvent {
                a: a.id,
                b: b.id,
                a_kind: a.kind,
                b_kind: b.kind,
                impulse,
                point,
            });
        }

        for (i, body) in self.bodies.iter_mut().enumerate() {
            if body.is_static() {
                continue;
            }
            if Some(i) == robot && !robot_touched {
                let (v, w) = commanded;
                body.pose = integrate_unicycle(body.pose, v, w, dt);
            } else {
                let p = body.position() + body.linear_velocity * dt;
                body.pose = Pose::new(p.x, p.y, body.pose.theta + body.angular_velocity * dt);
            }
        }

        self.correct_positions(&mut info, robot);

        for (i, body) in self.bodies.iter_mut().enumerate() {
            if !(body.pose.x.is_finite()
                && body.pose.y.is_finite()
                && body.pose.theta.is_finite()
                && body.linear_velocity.is_finite()
                && body.angular_velocity.is_finite())
            {
                return Err(PhysicsError::Diverged { body: body.id });
            }
            if body.is_static() {
                continue;
            }
            let d = body.position().distance(start[i]);
            info.displacement[i] = d;
            body.traveled += d;
        }
        self.time += dt;
        Ok(info)
    }

    /// Broad phase on bounding circles, then manifold generation.
    fn find_contacts(
        &self,
        shapes: &[ConvexPolygon],
        skip_resting: bool,
    ) -> Vec<(usize, usize, Manifold)> {
        let radii: Vec<f64> = self.bodies.iter().map(Body::bounding_radius).collect();
        let mut out = Vec::new();
        for i in 0..self.bodies.len() {
            let a = &self.bodies[i];
            for j in (i + 1)..self.bodies.len() {
                let b = &self.bodies[j];
                if a.is_static() && b.is_static() {
                    continue;
                }
                if skip_resting
                    && a.kind != BodyKind::Robot
                    && b.kind != BodyKind::Robot
                    && (a.is_static() || a.is_at_rest())
                    && (b.is_static() || b.is_at_rest())
                {
                    continue;
                }
                let reach = radii[i] + radii[j] + BROADPHASE_MARGIN;
                if (a.position() - b.position()).norm_sq() > reach * reach {
                    continue;
                }
                if let Some(m) = collide(&shapes[i], &shapes[j]) {
                    out.push((i, j, m));
                }
            }
        }
        out
    }

    /// Sequential impulses with accumulated clamping. Returns the total
    /// normal impulse of each manifold.
    fn solve_velocities(
        &mut self,
        contacts: &[(usize, usize, Manifold)],
        config: &PhysicsConfig,
    ) -> Vec<f64> {
        struct Point {
            ra: Vec2,
            rb: Vec2,
            normal_mass: f64,
            tangent_mass: f64,
            bias: f64,
            pn: f64,
            pt: f64,
        }

        let mut constraints: Vec<Vec<Point>> = Vec::with_capacity(contacts.len());
        for (i, j, m) in contacts {
            let (a, b) = (&self.bodies[*i], &self.bodies[*j]);
            let (ima, imb, iia, iib) = (a.inv_mass(), b.inv_mass(), a.inv_inertia(), b.inv_inertia());
            let n = m.normal;
            let t = n.perp();
            let pts = m
                .points
                .iter()
                .map(|c| {
                    let ra = c.point - a.position();
                    let rb = c.point - b.position();
                    let rna = ra.cross(n);
                    let rnb = rb.cross(n);
                    let rta = ra.cross(t);
                    let rtb = rb.cross(t);
                    let kn = ima + imb + iia * rna * rna + iib * rnb * rnb;
                    let kt = ima + imb + iia * rta * rta + iib * rtb * rtb;
                    let rel = relative_velocity(a, b, ra, rb);
                    let vn = rel.dot(n);
                    let bias = if vn < -RESTITUTION_THRESHOLD {
                        -config.restitution * vn
                    } else {
                        0.0
                    };
                    Point {
                        ra,
                        rb,
                        normal_mass: if kn > 0.0 { 1.0 / kn } else { 0.0 },
                        tangent_mass: if kt > 0.0 { 1.0 / kt } else { 0.0 },
                        bias,
                        pn: 0.0,
                        pt: 0.0,
                    }
                })
                .collect();
            constraints.push(pts);
        }

        for _ in 0..config.solver_iterations.max(1) {
            for ((i, j, m), pts) in contacts.iter().zip(constraints.iter_mut()) {
                let n = m.normal;
                let t = n.perp();
                for p in pts.iter_mut() {
                    let (a, b) = pair_mut(&mut self.bodies, *i, *j);
                    let rel = relative_velocity(a, b, p.ra, p.rb);
                    let vn = rel.dot(n);
                    let dpn = p.normal_mass * (-vn + p.bias);
                    let pn = (p.pn + dpn).max(0.0);
                    let dpn = pn - p.pn;
                    p.pn = pn;
                    apply_impulse(a, b, p.ra, p.rb, n * dpn);

                    let rel = relative_velocity(a, b, p.ra, p.rb);
                    let vt = rel.dot(t);
                    let limit = config.contact_friction * p.pn;
                    let pt = (p.pt - p.tangent_mass * vt).clamp(-limit, limit);
                    let dpt = pt - p.pt;
                    p.pt = pt;
                    apply_impulse(a, b, p.ra, p.rb, t * dpt);
                }
            }
        }

        constraints
            .iter()
            .map(|pts| pts.iter().map(|p| p.pn).sum())
            .collect()
    }

    /// Translational projection out of residual penetration.
    fn correct_positions(&mut self, info: &mut StepInfo, robot: Option<usize>) {
        for _ in 0..2 {
            let shapes: Vec<ConvexPolygon> = self.bodies.iter().map(Body::world_shape).collect();
            let contacts = self.find_contacts(&shapes, false);
            let mut any = false;
            for (i, j, m) in &contacts {
                let pen = m.max_penetration() - POSITION_SLOP;
                if pen <= 0.0 {
                    continue;
                }
                let (a, b) = pair_mut(&mut self.bodies, *i, *j);
                let (ima, imb) = (a.inv_mass(), b.inv_mass());
                let total = ima + imb;
                if total == 0.0 {
                    continue;
                }
                any = true;
                if Some(*i) == robot || Some(*j) == robot {
                    let other = if Some(*i) == robot { b.kind } else { a.kind };
                    match other {
                        BodyKind::Static => info.robot_static_contact = true,
                        BodyKind::Movable => info.robot_movable_contact = true,
                        BodyKind::Robot => {}
                    }
                }
                let push = (pen * POSITION_FACTOR).min(MAX_POSITION_CORRECTION) / total;
                let da = m.normal * (-push * ima);
                let db = m.normal * (push * imb);
                a.pose.x += da.x;
                a.pose.y += da.y;
                b.pose.x += db.x;
                b.pose.y += db.y;
            }
            if !any {
                break;
            }
        }
    }
}

/// Functional form of [`WorldState::step`].
pub fn step_world(
    world: &WorldState,
    command: DriveCommand,
    config: &PhysicsConfig,
) -> Result<(WorldState, StepInfo), PhysicsError> {
    let mut next = world.clone();
    let info = next.step(command, config)?;
    Ok((next, info))
}

/// Functional form of [`WorldState::heading_step`].
pub fn apply_heading_step(
    world: &WorldState,
    heading: f64,
    step_distance: f64,
    config: &PhysicsConfig,
) -> Result<(WorldState, StepInfo), PhysicsError> {
    let mut next = world.clone();
    let info = next.heading_step(heading, step_distance, config)?;
    Ok((next, info))
}

/// Exact unicycle integration over one `config.dt` at `config.robot_speed`,
/// with the turn rate clamped to `config.max_angular_velocity`.
pub fn apply_unicycle_command(pose: Pose, angular_velocity: f64, config: &PhysicsConfig) -> Pose {
    integrate_unicycle(
        pose,
        config.robot_speed,
        clamp_turn(angular_velocity, config),
        config.dt,
    )
}

fn clamp_turn(w: f64, config: &PhysicsConfig) -> f64 {
    if w.is_nan() {
        return 0.0;
    }
    w.clamp(-config.max_angular_velocity, config.max_angular_velocity)
}

fn integrate_unicycle(pose: Pose, v: f64, w: f64, dt: f64) -> Pose {
    let th = pose.theta;
    if w.abs() < 1e-12 {
        return Pose::new(pose.x + v * dt * th.cos(), pose.y + v * dt * th.sin(), th);
    }
    let th1 = th + w * dt;
    let r = v / w;
    Pose::new(
        pose.x + r * (th1.sin() - th.sin()),
        pose.y - r * (th1.cos() - th.cos()),
        th1,
    )
}

fn apply_ground_friction(body: &mut Body, config: &PhysicsConfig, dt: f64) {
    let dv = config.mu * config.g * dt;
    let speed = body.linear_velocity.norm();
    body.linear_velocity = if speed <= dv {
        Vec2::ZERO
    } else {
        body.linear_velocity * ((speed - dv) / speed)
    };
    body.linear_velocity = body.linear_velocity * (1.0 / (1.0 + config.linear_damping * dt));

    let gyration = (body.inertia() / body.mass()).sqrt();
    let dw = if gyration > 0.0 { dv / gyration } else { 0.0 };
    let w = body.angular_velocity;
    body.angular_velocity = if w.abs() <= dw { 0.0 } else { w - dw * w.signum() };
    body.angular_velocity /= 1.0 + config.angular_damping * dt;
}

fn relative_velocity(a: &Body, b: &Body, ra: Vec2, rb: Vec2) -> Vec2 {
    let va = a.linear_velocity + Vec2::cross_scalar(a.angular_velocity, ra);
    let vb = b.linear_velocity + Vec2::cross_scalar(b.angular_velocity, rb);
    vb - va
}

fn apply_impulse(a: &mut Body, b: &mut Body, ra: Vec2, rb: Vec2, p: Vec2) {
    let (ima, imb) = (a.inv_mass(), b.inv_mass());
    let (iia, iib) = (a.inv_inertia(), b.inv_inertia());
    a.linear_velocity -= p * ima;
    a.angular_velocity -= iia * ra.cross(p);
    b.linear_velocity += p * imb;
    b.angular_velocity += iib * rb.cross(p);
}

fn pair_mut(bodies: &mut [Body], i: usize, j: usize) -> (&mut Body, &mut Body) {
    debug_assert!(i < j);
    let (lo, hi) = bodies.split_at_mut(j);
    (&mut lo[i], &mut hi[0])
}

#[cfg(test)]
mod tests;
