//! Baseline policies and the planning pieces behind them.
//!
//! Every policy sees the rendered observation plus a read-only view of the
//! environment and returns either an action or [`Decision::Done`] when it has
//! nothing left to do.

pub mod clearance;
pub mod descent;
pub mod gtsp;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use clearance::{
    build_gtsp_graph, enumerate_clearance_paths, plan_clearance, plan_clearance_with, BoundaryEdge, ClearancePath,
    ClearanceSetup, ClearancePlan, GtspGraph, GtspPolicy,
};
pub use descent::DtDescent;
pub use gtsp::{solve_exact, solve_gtsp, solve_heuristic, tour_cost, Gtsp, Tour, EXACT_SET_LIMIT};

use crate::env::{Action, ActionMode, Env, EnvKind, Observation};
use crate::geometry::{normalize_angle, Vec2};
use crate::metrics::MetricsError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("box {0} has no feasible clearance path")]
    NoCandidates(usize),
    #[error("GTSP vertex {0} is unreachable from every other vertex")]
    Disconnected(usize),
    #[error("GTSP set {0} cannot be reached")]
    Infeasible(usize),
    #[error("invalid GTSP instance: {0}")]
    InvalidInstance(String),
    #[error("policy {policy} cannot drive a {kind} environment in {mode:?} mode")]
    Unsupported {
        policy: String,
        kind: EnvKind,
        mode: ActionMode,
    },
    #[error("invalid policy parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decision {
    Act(Action),
    /// The policy has finished; the episode ends here.
    Done,
}

pub trait Policy: Send {
    fn name(&self) -> &str;

    /// Action mode the policy emits, if it only supports one.
    fn required_mode(&self) -> Option<ActionMode> {
        None
    }

    /// Drops all per-episode state. Called before every episode.
    fn reset(&mut self, seed: u64);

    fn act(&mut self, observation: &Observation, env: &Env) -> Result<Decision, PlannerError>;
}

/// Names accepted by [`policy_by_name`].
pub const POLICY_NAMES: [&str; 3] = ["dt_descent", "gtsp", "random"];

pub fn policy_by_name(name: &str) -> Option<Box<dyn Policy>> {
    match name {
        "dt_descent" => Some(Box::new(DtDescent::default())),
        "gtsp" => Some(Box::new(GtspPolicy::default())),
        "random" => Some(Box::new(RandomPolicy::default())),
        _ => None,
    }
}

/// Builds a policy and applies numeric parameters from a JSON object.
///
/// * `dt_descent`: `lookahead` (cells), `gain`
/// * `gtsp`: `margin`, `exit_epsilon` (meters)
pub fn policy_with_params(name: &str, params: &serde_json::Value) -> Result<Box<dyn Policy>, PlannerError> {
    let empty = serde_json::Map::new();
    let map = match params {
        serde_json::Value::Null => &empty,
        serde_json::Value::Object(m) => m,
        other => return Err(PlannerError::InvalidParams(format!("expected an object, got {other}"))),
    };
    let num = |key: &str, v: &serde_json::Value| {
        v.as_f64()
            .filter(|x| x.is_finite() && *x >= 0.0)
            .ok_or_else(|| PlannerError::InvalidParams(format!("{key} must be a non-negative number")))
    };
    let unknown = |key: &str| PlannerError::InvalidParams(format!("{name} has no parameter {key}"));
    match name {
        "dt_descent" => {
            let mut p = DtDescent::default();
            for (k, v) in map {
                match k.as_str() {
                    "lookahead" => p.lookahead = num(k, v)?.round().max(1.0) as usize,
                    "gain" => p.gain = num(k, v)?,
                    _ => return Err(unknown(k)),
                }
            }
            Ok(Box::new(p))
        }
        "gtsp" => {
            let mut p = GtspPolicy::default();
            for (k, v) in map {
                match k.as_str() {
                    "margin" => p.margin = num(k, v)?,
                    "exit_epsilon" => p.exit_epsilon = num(k, v)?,
                    _ => return Err(unknown(k)),
                }
            }
            Ok(Box::new(p))
        }
        "random" => match map.keys().next() {
            Some(k) => Err(unknown(k)),
            None => Ok(Box::new(RandomPolicy::default())),
        },
        _ => Err(PlannerError::InvalidParams(format!(
            "unknown policy {name}; expected one of {}",
            POLICY_NAMES.join(", ")
        ))),
    }
}

/// Uniformly random actions for whatever mode the environment uses.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl Default for RandomPolicy {
    fn default() -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    fn act(&mut self, _observation: &Observation, env: &Env) -> Result<Decision, PlannerError> {
        let cfg = env.config();
        let action = match cfg.action_mode {
            ActionMode::AngularVelocity => {
                let w = cfg.physics.max_angular_velocity;
                Action::AngularVelocity {
                    omega: self.rng.gen_range(-w..=w),
                }
            }
            ActionMode::HeadingStep => Action::Heading {
                heading: self.rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            },
            ActionMode::Waypoint => {
                let b = env.scene().interior;
                Action::Waypoint {
                    x: self.rng.gen_range(b.min.x..b.max.x),
                    y: self.rng.gen_range(b.min.y..b.max.y),
                }
            }
        };
        Ok(Decision::Act(action))
    }
}

/// Replays a fixed action list, then reports done.
#[derive(Debug, Clone, Default)]
pub struct ScriptedPolicy {
    actions: Vec<Action>,
    next: usize,
}

impl ScriptedPolicy {
    pub fn new(actions: Vec<Action>) -> Self {
        Self { actions, next: 0 }
    }
}

impl Policy for ScriptedPolicy {
    fn name(&self) -> &str {
        "scripted"
    }

    fn reset(&mut self, _seed: u64) {
        self.next = 0;
    }

    fn act(&mut self, _observation: &Observation, _env: &Env) -> Result<Decision, PlannerError> {
        let d = match self.actions.get(self.next) {
            Some(a) => Decision::Act(*a),
            None => Decision::Done,
        };
        self.next += 1;
        Ok(d)
    }
}

/// Steers a unicycle robot through a waypoint list with a proportional
/// heading controller.
#[derive(Debug, Clone)]
pub struct PathFollower {
    waypoints: Vec<Vec2>,
    next: usize,
    /// Distance at which a waypoint counts as reached.
    pub tolerance: f64,
    pub gain: f64,
}

impl PathFollower {
    pub fn new(waypoints: Vec<Vec2>) -> Self {
        Self {
            waypoints,
            next: 0,
            tolerance: 0.15,
            gain: 5.0,
        }
    }

    pub fn remaining(&self) -> &[Vec2] {
        &self.waypoints[self.next.min(self.waypoints.len())..]
    }
}

impl Policy for PathFollower {
    fn name(&self) -> &str {
        "path_follower"
    }

    fn reset(&mut self, _seed: u64) {
        self.next = 0;
    }

    fn act(&mut self, _observation: &Observation, env: &Env) -> Result<Decision, PlannerError> {
        let pose = env.robot_pose();
        let p = pose.position();
        while self.next < self.waypoints.len() && p.distance(self.waypoints[self.next]) < self.tolerance {
            self.next += 1;
        }
        let Some(&target) = self.waypoints.get(self.next) else {
            return Ok(Decision::Done);
        };
        let cfg = env.config();
        let action = match cfg.action_mode {
            ActionMode::AngularVelocity => {
                let err = normalize_angle((target - p).angle() - pose.theta);
                let w = cfg.physics.max_angular_velocity;
                Action::AngularVelocity {
                    omega: (self.gain * err).clamp(-w, w),
                }
            }
            ActionMode::HeadingStep => Action::Heading {
                heading: (target - p).angle(),
            },
            ActionMode::Waypoint => {
                self.next += 1;
                Action::waypoint(target)
            }
        };
        Ok(Decision::Act(action))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvConfig;

    #[test]
    fn registry_knows_every_name() {
        for name in POLICY_NAMES {
            assert_eq!(policy_by_name(name).unwrap().name(), name);
        }
        assert!(policy_by_name("sac").is_none());
    }

    #[test]
    fn params_are_checked() {
        let p = policy_with_params("dt_descent", &serde_json::json!({"gain": 2.0})).unwrap();
        assert_eq!(p.name(), "dt_descent");
        assert!(policy_with_params("gtsp", &serde_json::json!({"margin": 0.2})).is_ok());
        assert!(policy_with_params("gtsp", &serde_json::json!({"gain": 1})).is_err());
        assert!(policy_with_params("random", &serde_json::json!({"x": 1})).is_err());
        assert!(policy_with_params("dt_descent", &serde_json::json!({"gain": -1})).is_err());
        assert!(policy_with_params("sac", &serde_json::Value::Null).is_err());
    }

    #[test]
    fn random_policy_is_seeded() {
        let env = Env::new(EnvConfig::defaults_for(EnvKind::Maze)).unwrap();
        let obs = env.observe();
        let run = |seed| {
            let mut p = RandomPolicy::default();
            p.reset(seed);
            (0..5).map(|_| p.act(&obs, &env).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
    }

    #[test]
    fn scripted_policy_ends_after_its_actions() {
        let env = Env::new(EnvConfig::defaults_for(EnvKind::Maze)).unwrap();
        let obs = env.observe();
        let a = Action::AngularVelocity { omega: 0.5 };
        let mut p = ScriptedPolicy::new(vec![a, a]);
        assert_eq!(p.act(&obs, &env).unwrap(), Decision::Act(a));
        assert_eq!(p.act(&obs, &env).unwrap(), Decision::Act(a));
        assert_eq!(p.act(&obs, &env).unwrap(), Decision::Done);
        p.reset(0);
        assert_eq!(p.act(&obs, &env).unwrap(), Decision::Act(a));
    }

    #[test]
    fn follower_reaches_waypoints_in_open_maze() {
        let mut c = EnvConfig::defaults_for(EnvKind::Maze);
        c.layout = crate::env::MazeLayout::Open;
        c.obstacle_count = 0;
        let mut env = Env::new(c).unwrap();
        let mut f = PathFollower::new(vec![Vec2::new(3.0, 1.5), Vec2::new(3.0, 4.0)]);
        for _ in 0..2000 {
            let obs = env.observe();
            match f.act(&obs, &env).unwrap() {
                Decision::Act(a) => {
                    env.step(a).unwrap();
                }
                Decision::Done => break,
            }
        }
        assert!(f.remaining().is_empty());
        assert!(env.robot_pose().position().distance(Vec2::new(3.0, 4.0)) < 0.15);
    }
}
