//! Goal-distance descent: steer towards the lowest goal-DT cell on a ring
//! around the robot that is visible through static free space.

use super::{Decision, Policy, PlannerError};
use crate::env::observation::line_cells;
use crate::env::{Action, ActionMode, ChannelRole, Env, Frame, Observation};
use crate::geometry::{normalize_angle, Vec2};

#[derive(Debug, Clone)]
pub struct DtDescent {
    /// Ring radius in cells.
    pub lookahead: usize,
    pub gain: f64,
    /// Actions taken with a flat or unreadable goal window.
    pub flat_windows: usize,
}

impl Default for DtDescent {
    fn default() -> Self {
        Self {
            lookahead: 8,
            gain: 4.0,
            flat_windows: 0,
        }
    }
}

impl DtDescent {
    /// Local direction of steepest goal-DT descent, or `None` if the window
    /// gives no preference.
    pub fn descent_direction(&self, obs: &Observation) -> Option<Vec2> {
        let goal = obs.channel(ChannelRole::GoalDistance)?;
        let blocked: Vec<bool> = match obs.channel(ChannelRole::StaticOccupancy) {
            Some(s) => s.data.iter().map(|v| *v >= 1.0).collect(),
            None => obs
                .channel(ChannelRole::CombinedOccupancy)?
                .data
                .iter()
                .map(|v| *v >= 1.0)
                .collect(),
        };
        let n = obs.size as isize;
        let c = n / 2;
        let r = self.lookahead as f64 * obs.resolution;
        let here = goal.data[(c * n + c) as usize];
        // Ring cells measured from the robot centre, which sits on a cell
        // corner of the even-sized window.
        let mut ring: Vec<(f32, Vec2)> = Vec::new();
        let mut max = f32::NEG_INFINITY;
        for row in 0..n {
            for col in 0..n {
                let p = obs.local_point(row as usize, col as usize);
                if (p.norm() - r).abs() > 0.5 * obs.resolution {
                    continue;
                }
                let v = goal.data[(row * n + col) as usize];
                max = max.max(v);
                let visible = line_cells(c, c, row, col)
                    .iter()
                    .all(|&(a, b)| !blocked[(a * n + b) as usize]);
                if visible {
                    ring.push((v, p));
                }
            }
        }
        let min = ring.iter().map(|(v, _)| *v).fold(f32::INFINITY, f32::min);
        if ring.is_empty() || (min >= max && min >= here) {
            return None;
        }
        // Average over ties so symmetric windows point straight.
        let dir = ring
            .iter()
            .filter(|(v, _)| *v <= min)
            .fold(Vec2::ZERO, |acc, (_, p)| acc + p.normalized());
        (dir.norm() > 1e-9).then_some(dir)
    }
}

impl Policy for DtDescent {
    fn name(&self) -> &str {
        "dt_descent"
    }

    fn required_mode(&self) -> Option<ActionMode> {
        Some(ActionMode::AngularVelocity)
    }

    fn reset(&mut self, _seed: u64) {
        self.flat_windows = 0;
    }

    fn act(&mut self, obs: &Observation, env: &Env) -> Result<Decision, PlannerError> {
        let cfg = env.config();
        if cfg.action_mode != ActionMode::AngularVelocity {
            return Err(PlannerError::Unsupported {
                policy: self.name().into(),
                kind: cfg.kind,
                mode: cfg.action_mode,
            });
        }
        let omega = match self.descent_direction(obs) {
            Some(dir) => {
                let err = match obs.frame {
                    Frame::HeadingAligned => dir.angle() - std::f64::consts::FRAC_PI_2,
                    Frame::WorldAligned => dir.angle() - obs.pose.theta,
                };
                let w = cfg.physics.max_angular_velocity;
                (self.gain * normalize_angle(err)).clamp(-w, w)
            }
            None => {
                self.flat_windows += 1;
                log::debug!("flat goal window at step {}", env.status().steps);
                0.0
            }
        };
        Ok(Decision::Act(Action::AngularVelocity { omega }))
    }
}
