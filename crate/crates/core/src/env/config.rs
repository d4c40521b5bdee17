use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::EnvError;
use crate::geometry::Rect;
use crate::physics::PhysicsConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    #[default]
    Maze,
    ShipIce,
    BoxDelivery,
    AreaClearing,
}

impl EnvKind {
    pub const ALL: [EnvKind; 4] = [
        EnvKind::Maze,
        EnvKind::ShipIce,
        EnvKind::BoxDelivery,
        EnvKind::AreaClearing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Maze => "maze",
            EnvKind::ShipIce => "ship_ice",
            EnvKind::BoxDelivery => "box_delivery",
            EnvKind::AreaClearing => "area_clearing",
        }
    }

    pub fn is_navigation(self) -> bool {
        matches!(self, EnvKind::Maze | EnvKind::ShipIce)
    }

    pub fn default_action_mode(self) -> ActionMode {
        if self.is_navigation() {
            ActionMode::AngularVelocity
        } else {
            ActionMode::HeadingStep
        }
    }

    pub fn allows(self, mode: ActionMode) -> bool {
        match mode {
            ActionMode::AngularVelocity => self.is_navigation(),
            ActionMode::HeadingStep | ActionMode::Waypoint => !self.is_navigation(),
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EnvKind::ALL
            .into_iter()
            .find(|k| k.name() == s || k.name().replace('_', "-") == s)
            .ok_or_else(|| EnvError::InvalidConfig(format!("unknown environment kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionMode {
    AngularVelocity,
    HeadingStep,
    Waypoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MazeLayout {
    #[default]
    UShape,
    Open,
    Zigzag,
}

/// Robot footprint. The maze and manipulation robots are rectangles; the
/// ship is a pointed hull of the same length and beam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotConfig {
    pub length: f64,
    pub width: f64,
    pub mass: f64,
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self {
            length: 0.7,
            width: 0.5,
            mass: 2.0,
        }
    }
}

impl RobotConfig {
    /// Inflation radius for path planning on static maps.
    pub fn radius(&self) -> f64 {
        0.5 * self.width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    /// Scale of the collision penalty.
    pub collision: f64,
    /// Impulse (N*s) at which the collision penalty saturates.
    pub impulse_cap: f64,
    /// Per meter of goal-distance decrease (maze).
    pub progress: f64,
    /// Scale of the heading alignment term (ship).
    pub heading: f64,
    pub terminal: f64,
    /// Per meter of box goal-distance decrease.
    pub box_progress: f64,
    /// Per delivered or cleared box.
    pub box_completion: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            collision: 1.0,
            impulse_cap: 2.0,
            progress: 10.0,
            heading: 0.1,
            terminal: 10.0,
            box_progress: 5.0,
            box_completion: 3.0,
        }
    }
}

/// Flat environment configuration. Keys that do not apply to `kind` are
/// ignored by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub kind: EnvKind,
    pub seed: u64,
    pub action_mode: ActionMode,
    /// Meters per grid cell for observations and path planning.
    pub resolution: f64,
    /// Observation window side, in cells.
    pub window: usize,
    /// Hard cap on actions per episode.
    pub max_steps: usize,
    /// Manipulation tasks truncate after this many consecutive actions
    /// without a delivered or cleared box.
    pub no_progress_limit: usize,
    /// Distance of one heading step, meters.
    pub step_distance: f64,
    /// Upper bound on settling substeps after a manipulation action.
    pub settle_steps: usize,
    pub robot: RobotConfig,
    pub physics: PhysicsConfig,
    pub rewards: RewardConfig,

    pub layout: MazeLayout,
    pub obstacle_count: usize,
    pub obstacle_size: f64,
    pub obstacle_mass: f64,

    /// Fraction of the ice region covered by floes, in [0, 0.5].
    pub concentration: f64,
    /// Distance from the ship's start to the goal line, meters.
    pub goal_distance: f64,
    pub channel_width: f64,
    /// Floe mass per square meter.
    pub floe_density: f64,

    pub box_count: usize,
    pub box_size: f64,
    pub box_mass: f64,
    pub static_obstacle_count: usize,
    pub column_size: f64,
    pub room_width: f64,
    pub room_height: f64,
    pub receptacle: Rect,
    pub clearance: Rect,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self::defaults_for(EnvKind::Maze)
    }
}

impl EnvConfig {
    pub fn defaults_for(kind: EnvKind) -> Self {
        let mut c = Self {
            kind,
            seed: 0,
            action_mode: kind.default_action_mode(),
            resolution: 0.1,
            window: 64,
            max_steps: 1500,
            no_progress_limit: 200,
            step_distance: 0.25,
            settle_steps: 25,
            robot: RobotConfig::default(),
            physics: PhysicsConfig::default(),
            rewards: RewardConfig::default(),
            layout: MazeLayout::UShape,
            obstacle_count: 5,
            obstacle_size: 0.5,
            obstacle_mass: 1.0,
            concentration: 0.1,
            goal_distance: 10.0,
            channel_width: 10.0,
            floe_density: 1.0,
            box_count: 10,
            box_size: 0.44,
            box_mass: 1.0,
            static_obstacle_count: 0,
            column_size: 0.6,
            room_width: 8.0,
            room_height: 8.0,
            receptacle: Rect::new(6.5, 6.5, 8.0, 8.0),
            clearance: Rect::new(2.5, 3.0, 7.5, 8.0),
        };
        match kind {
            EnvKind::Maze => {}
            EnvKind::ShipIce => {
                c.robot = RobotConfig {
                    length: 1.6,
                    width: 0.7,
                    mass: 20.0,
                };
            }
            EnvKind::BoxDelivery => {
                c.max_steps = 1000;
                c.box_count = 6;
            }
            EnvKind::AreaClearing => {
                c.max_steps = 1000;
                c.room_width = 10.0;
                c.room_height = 10.0;
            }
        }
        c
    }

    /// Parses a JSON config. Missing keys take the defaults of the
    /// configured `kind` (maze when absent).
    pub fn from_json_value(user: Value) -> Result<Self, EnvError> {
        let kind = match user.get("kind") {
            Some(Value::String(s)) => s.parse()?,
            Some(other) => {
                return Err(EnvError::InvalidConfig(format!("`kind` must be a string, got {other}")))
            }
            None => EnvKind::Maze,
        };
        let mut base = serde_json::to_value(Self::defaults_for(kind))
            .map_err(|e| EnvError::InvalidConfig(e.to_string()))?;
        merge(&mut base, user);
        let config: Self =
            serde_json::from_value(base).map_err(|e| EnvError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_json_str(text: &str) -> Result<Self, EnvError> {
        let v: Value =
            serde_json::from_str(text).map_err(|e| EnvError::InvalidConfig(e.to_string()))?;
        Self::from_json_value(v)
    }

    /// Applies `key=value` overrides. Keys may be dotted (`physics.mu`);
    /// values are parsed as JSON and fall back to plain strings.
    pub fn with_overrides<'a>(
        &self,
        overrides: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, EnvError> {
        let mut v = serde_json::to_value(self).map_err(|e| EnvError::InvalidConfig(e.to_string()))?;
        let mut kind_changed = None;
        for (key, raw) in overrides {
            let value: Value =
                serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            if key == "kind" {
                kind_changed = Some(value.clone());
            }
            set_dotted(&mut v, key, value)?;
        }
        if let Some(kind) = kind_changed {
            // A new kind starts from that kind's defaults, keeping other overrides.
            let mut user = v;
            user["kind"] = kind;
            let mut fresh = serde_json::to_value(Self::defaults_for(
                user["kind"].as_str().unwrap_or("maze").parse()?,
            ))
            .map_err(|e| EnvError::InvalidConfig(e.to_string()))?;
            let defaults_old = serde_json::to_value(Self::defaults_for(self.kind))
                .map_err(|e| EnvError::InvalidConfig(e.to_string()))?;
            let changed = diff(&defaults_old, &user);
            merge(&mut fresh, changed);
            v = fresh;
        }
        let config: Self =
            serde_json::from_value(v).map_err(|e| EnvError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Every key accepted by [`with_overrides`](Self::with_overrides).
    pub fn keys() -> Vec<String> {
        let v = serde_json::to_value(Self::default()).expect("config serializes");
        let mut out = Vec::new();
        collect_keys(&v, "", &mut out);
        out
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: String| Err(EnvError::InvalidConfig(m));
        self.physics
            .validate()
            .map_err(|e| EnvError::InvalidConfig(e.to_string()))?;
        if !self.kind.allows(self.action_mode) {
            return bad(format!(
                "action mode {:?} is not available for {}",
                self.action_mode, self.kind
            ));
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return bad(format!("resolution must be > 0, got {}", self.resolution));
        }
        if self.window == 0 || self.window % 2 != 0 {
            return bad(format!("window must be even and > 0, got {}", self.window));
        }
        if !(0.0..=0.5).contains(&self.concentration) {
            return bad(format!("concentration must lie in [0, 0.5], got {}", self.concentration));
        }
        if !self.kind.is_navigation() && self.box_count == 0 {
            return bad("box_count must be >= 1".into());
        }
        if !(self.step_distance > 0.0) {
            return bad("step_distance must be > 0".into());
        }
        if self.robot.length <= 0.0 || self.robot.width <= 0.0 || self.robot.mass <= 0.0 {
            return bad("robot dimensions and mass must be > 0".into());
        }
        for (name, v) in [
            ("obstacle_size", self.obstacle_size),
            ("obstacle_mass", self.obstacle_mass),
            ("box_size", self.box_size),
            ("box_mass", self.box_mass),
            ("column_size", self.column_size),
            ("floe_density", self.floe_density),
            ("goal_distance", self.goal_distance),
            ("channel_width", self.channel_width),
            ("room_width", self.room_width),
            ("room_height", self.room_height),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be > 0, got {v}"));
            }
        }
        if self.rewards.impulse_cap <= 0.0 {
            return bad("rewards.impulse_cap must be > 0".into());
        }
        Ok(())
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// The parts of `new` that differ from `old`.
fn diff(old: &Value, new: &Value) -> Value {
    match (old, new) {
        (Value::Object(a), Value::Object(b)) => {
            let mut out = serde_json::Map::new();
            for (k, v) in b {
                match a.get(k) {
                    Some(av) if av == v => {}
                    Some(av) if av.is_object() && v.is_object() => {
                        out.insert(k.clone(), diff(av, v));
                    }
                    _ => {
                        out.insert(k.clone(), v.clone());
                    }
                }
            }
            Value::Object(out)
        }
        (_, n) => n.clone(),
    }
}

fn set_dotted(root: &mut Value, key: &str, value: Value) -> Result<(), EnvError> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| EnvError::InvalidConfig(format!("`{key}` is not a config key")))?;
        let slot = obj
            .get_mut(*part)
            .ok_or_else(|| EnvError::InvalidConfig(format!("unknown config key `{key}`")))?;
        if i + 1 == parts.len() {
            *slot = value;
            return Ok(());
        }
        cur = slot;
    }
    unreachable!("split yields at least one part")
}

fn collect_keys(v: &Value, prefix: &str, out: &mut Vec<String>) {
    if let Value::Object(map) = v {
        for (k, child) in map {
            let key = if prefix.is_empty() {
                k.clone()
            } else {
                format!("{prefix}.{k}")
            };
            out.push(key.clone());
            // Rect-valued keys are set whole, not field by field.
            if child.is_object() && !matches!(k.as_str(), "receptacle" | "clearance") {
                collect_keys(child, &key, out);
            }
        }
    }
}
