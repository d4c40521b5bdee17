//! Wire messages. Every frame is one JSON object with a `v` schema version,
//! a `type` tag, a sequence number and (server side) the session id.
//!
//! Client to server:
//!
//! ```json
//! {"v":1,"type":"control","seq":4,"omega":0.3}
//! {"v":1,"type":"control","seq":5,"heading":1.57}
//! {"v":1,"type":"control","seq":6,"x":2.0,"y":3.5}
//! {"v":1,"type":"session","seq":7,"command":"reset","seed":7}
//! {"v":1,"type":"session","seq":8,"command":"select","env":"ship_ice"}
//! {"v":1,"type":"session","seq":9,"command":"pause"}
//! ```
//!
//! Server to client: `hello`, `state`, `episode_end` and `error`.

use pushnav::env::{Action, ActionMode, EnvConfig, EnvKind, EpisodeStatus, RewardBreakdown};
use pushnav::metrics::{MetricReport, Metrics};
use pushnav::physics::WorldState;
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientMessage {
    pub v: u32,
    pub seq: u64,
    #[serde(flatten)]
    pub body: ClientBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientBody {
    Control(Control),
    Session(SessionCommand),
}

/// One of `omega`, `heading` or `x`+`y`, matching the session's action mode.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Control {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
}

impl Control {
    pub fn from_action(action: Action) -> Self {
        match action {
            Action::AngularVelocity { omega } => Self {
                omega: Some(omega),
                ..Self::default()
            },
            Action::Heading { heading } => Self {
                heading: Some(heading),
                ..Self::default()
            },
            Action::Waypoint { x, y } => Self {
                x: Some(x),
                y: Some(y),
                ..Self::default()
            },
        }
    }

    pub fn to_action(self, mode: ActionMode) -> Result<Action, String> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("{name} must be finite"))
            }
        };
        match (mode, self) {
            (ActionMode::AngularVelocity, Control { omega: Some(w), heading: None, x: None, y: None }) => {
                Ok(Action::AngularVelocity { omega: finite("omega", w)? })
            }
            (ActionMode::HeadingStep, Control { omega: None, heading: Some(h), x: None, y: None }) => {
                Ok(Action::Heading { heading: finite("heading", h)? })
            }
            (ActionMode::Waypoint, Control { omega: None, heading: None, x: Some(x), y: Some(y) }) => {
                Ok(Action::Waypoint {
                    x: finite("x", x)?,
                    y: finite("y", y)?,
                })
            }
            (mode, c) => Err(format!("control {c:?} does not fit the {mode:?} action mode")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum SessionCommand {
    /// Restart the episode, optionally with a new seed.
    Reset {
        #[serde(default)]
        seed: Option<u64>,
    },
    /// Switch to another environment kind (its default config) and reset.
    Select {
        env: EnvKind,
        #[serde(default)]
        seed: Option<u64>,
    },
    Pause,
    Resume,
}

/// Live scores, as if the episode ended at this tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiveScores {
    #[serde(rename = "E")]
    pub efficiency: f64,
    #[serde(rename = "I")]
    pub effort: f64,
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    pub success: Option<f64>,
    pub l0: f64,
    /// Set on the terminal tick, where these equal the episode report.
    #[serde(rename = "final", default)]
    pub final_: bool,
}

impl LiveScores {
    pub fn new(metrics: &Metrics, l0: f64, finished: bool) -> Self {
        Self {
            efficiency: metrics.efficiency(),
            effort: metrics.effort(),
            success: metrics.success_score(),
            l0,
            final_: finished,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerMessage {
    pub v: u32,
    /// Strictly increasing in the order messages reach the client. Dropped
    /// `state` frames take no number.
    pub seq: u64,
    pub session: u64,
    #[serde(flatten)]
    pub body: ServerBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerBody {
    Hello {
        tick_hz: f64,
        config: Box<EnvConfig>,
    },
    State(Box<StateFrame>),
    EpisodeEnd {
        report: Box<MetricReport>,
    },
    Error {
        message: String,
        /// Sequence number of the offending client message, when it parsed.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reply_to: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFrame {
    /// Actions applied in this episode.
    pub tick: u64,
    pub paused: bool,
    pub env: EnvKind,
    pub seed: u64,
    pub world: WorldState,
    pub metrics: LiveScores,
    pub reward: RewardBreakdown,
    pub status: EpisodeStatus,
    /// Per-object path lengths li, in movable order.
    pub object_distances: Vec<f64>,
    /// `seq` of the control applied at this tick, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_seq: Option<u64>,
}

impl ServerMessage {
    pub fn kind(&self) -> &'static str {
        match self.body {
            ServerBody::Hello { .. } => "hello",
            ServerBody::State(_) => "state",
            ServerBody::EpisodeEnd { .. } => "episode_end",
            ServerBody::Error { .. } => "error",
        }
    }
}
