//! Egocentric grid observations.
//!
//! A window of `size x size` cells is centred on the robot. Row `r`, column
//! `c` covers the local point `((c + 0.5 - size/2) * res, (r + 0.5 - size/2) * res)`
//! with row 0 at the bottom. In the heading-aligned frame the robot faces
//! up the rows (+local y); in the world-aligned frame local axes are world
//! axes. Image dumps flip rows so that "up" is at the top.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::{Pose, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelRole {
    StaticOccupancy,
    MovableOccupancy,
    /// Static 1.0, movable 0.5, completed box 0.25.
    CombinedOccupancy,
    RobotFootprint,
    /// Distance to the goal along static free space, normalized.
    GoalDistance,
    /// Distance from the robot along static free space, normalized.
    EgoDistance,
    HeadingLine,
}

impl ChannelRole {
    pub fn name(self) -> &'static str {
        match self {
            ChannelRole::StaticOccupancy => "static_occupancy",
            ChannelRole::MovableOccupancy => "movable_occupancy",
            ChannelRole::CombinedOccupancy => "combined_occupancy",
            ChannelRole::RobotFootprint => "robot_footprint",
            ChannelRole::GoalDistance => "goal_distance",
            ChannelRole::EgoDistance => "ego_distance",
            ChannelRole::HeadingLine => "heading_line",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    HeadingAligned,
    WorldAligned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub role: ChannelRole,
    /// Row-major, row 0 at the bottom of the window.
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub size: usize,
    pub resolution: f64,
    pub frame: Frame,
    /// Robot pose the window was rendered around.
    pub pose: Pose,
    pub channels: Vec<Channel>,
}

impl Observation {
    pub fn channel(&self, role: ChannelRole) -> Option<&Channel> {
        self.channels.iter().find(|c| c.role == role)
    }

    pub fn value(&self, role: ChannelRole, row: usize, col: usize) -> Option<f32> {
        self.channel(role).map(|c| c.data[row * self.size + col])
    }

    /// Local (robot-centred) coordinates of a cell centre.
    pub fn local_point(&self, row: usize, col: usize) -> Vec2 {
        local_point(self.size, self.resolution, row, col)
    }

    /// World coordinates of a cell centre.
    pub fn world_point(&self, row: usize, col: usize) -> Vec2 {
        to_world(self.frame, self.pose, self.local_point(row, col))
    }

    /// Cell containing a local point, if inside the window.
    pub fn cell_of_local(&self, p: Vec2) -> Option<(usize, usize)> {
        let half = self.size as f64 / 2.0;
        let c = (p.x / self.resolution + half).floor();
        let r = (p.y / self.resolution + half).floor();
        (c >= 0.0 && r >= 0.0 && (c as usize) < self.size && (r as usize) < self.size)
            .then_some((r as usize, c as usize))
    }

    /// Binary PGM of one channel, values scaled to 0..=255, top row first.
    pub fn to_pgm(&self, role: ChannelRole) -> Option<Vec<u8>> {
        let ch = self.channel(role)?;
        let n = self.size;
        let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
        for r in (0..n).rev() {
            for c in 0..n {
                let v = ch.data[r * n + c].clamp(0.0, 1.0);
                out.push((v * 255.0).round() as u8);
            }
        }
        Some(out)
    }

    /// Writes `<prefix>_<channel>.pgm` for every channel.
    pub fn write_pgm(&self, dir: &Path, prefix: &str) -> io::Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for ch in &self.channels {
            let path = dir.join(format!("{prefix}_{}.pgm", ch.role.name()));
            std::fs::write(&path, self.to_pgm(ch.role).expect("channel exists"))?;
            paths.push(path);
        }
        Ok(paths)
    }

    /// `{"shape": [C, H, W], "channels": [...], "data": [[[...]]]}` with rows
    /// top first, matching the PGM dumps.
    pub fn to_json_tensor(&self) -> serde_json::Value {
        let n = self.size;
        let data: Vec<Vec<Vec<f32>>> = self
            .channels
            .iter()
            .map(|ch| {
                (0..n)
                    .rev()
                    .map(|r| ch.data[r * n..(r + 1) * n].to_vec())
                    .collect()
            })
            .collect();
        serde_json::json!({
            "shape": [self.channels.len(), n, n],
            "channels": self.channels.iter().map(|c| c.role.name()).collect::<Vec<_>>(),
            "resolution": self.resolution,
            "data": data,
        })
    }

    /// Small ASCII rendering of a channel for debugging.
    pub fn ascii(&self, role: ChannelRole) -> String {
        let Some(ch) = self.channel(role) else {
            return String::new();
        };
        let ramp = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];
        let mut s = String::new();
        for r in (0..self.size).rev() {
            for c in 0..self.size {
                let v = ch.data[r * self.size + c].clamp(0.0, 1.0);
                s.push(ramp[((v * 9.0).round() as usize).min(9)]);
            }
            let _ = writeln!(s);
        }
        s
    }
}

pub(crate) fn local_point(size: usize, res: f64, row: usize, col: usize) -> Vec2 {
    let half = size as f64 / 2.0;
    Vec2::new((col as f64 + 0.5 - half) * res, (row as f64 + 0.5 - half) * res)
}

pub(crate) fn to_world(frame: Frame, pose: Pose, local: Vec2) -> Vec2 {
    match frame {
        Frame::WorldAligned => pose.position() + local,
        Frame::HeadingAligned => {
            pose.position() + local.rotate(pose.theta - std::f64::consts::FRAC_PI_2)
        }
    }
}

pub(crate) fn to_local(frame: Frame, pose: Pose, world: Vec2) -> Vec2 {
    let d = world - pose.position();
    match frame {
        Frame::WorldAligned => d,
        Frame::HeadingAligned => d.rotate(std::f64::consts::FRAC_PI_2 - pose.theta),
    }
}

/// Cells on a 1-cell-wide line from `(r0, c0)` to `(r1, c1)` (Bresenham).
pub(crate) fn line_cells(r0: isize, c0: isize, r1: isize, c1: isize) -> Vec<(isize, isize)> {
    let (dr, dc) = ((r1 - r0).abs(), (c1 - c0).abs());
    let (sr, sc) = ((r1 - r0).signum(), (c1 - c0).signum());
    let mut err = dc - dr;
    let (mut r, mut c) = (r0, c0);
    let mut out = vec![(r, c)];
    while (r, c) != (r1, c1) {
        let e2 = 2 * err;
        if e2 > -dr {
            err -= dr;
            c += sc;
        }
        if e2 < dc {
            err += dc;
            r += sr;
        }
        out.push((r, c));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_roundtrip() {
        let pose = Pose::new(1.0, 2.0, 0.7);
        for frame in [Frame::HeadingAligned, Frame::WorldAligned] {
            let w = Vec2::new(3.0, -1.0);
            let back = to_world(frame, pose, to_local(frame, pose, w));
            assert!(back.distance(w) < 1e-12);
        }
        // Straight ahead maps to local +y in the heading frame.
        let ahead = pose.position() + pose.heading();
        let l = to_local(Frame::HeadingAligned, pose, ahead);
        assert!((l.y - 1.0).abs() < 1e-12 && l.x.abs() < 1e-12);
    }

    #[test]
    fn bresenham_is_connected() {
        let cells = line_cells(0, 0, 5, 13);
        assert_eq!(cells.first(), Some(&(0, 0)));
        assert_eq!(cells.last(), Some(&(5, 13)));
        for w in cells.windows(2) {
            assert!((w[0].0 - w[1].0).abs() <= 1 && (w[0].1 - w[1].1).abs() <= 1);
        }
        assert_eq!(cells.len(), 14);
    }
}
