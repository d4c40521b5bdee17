//! One operator's episode: latched control, tick stepping and live scores.
//! Synchronous; the server wraps it in a mutex.

use pushnav::env::{Action, Env, EnvConfig, EnvError, RewardBreakdown};
use pushnav::metrics::{evaluate, LiveMetrics, MetricReport, MetricsError};

use crate::protocol::{
    ClientBody, ClientMessage, LiveScores, ServerBody, ServerMessage, SessionCommand, StateFrame,
    PROTOCOL_VERSION,
};

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Control applied at one tick, for replaying a session offline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppliedControl {
    pub tick: u64,
    pub seq: u64,
    pub action: Action,
}

pub struct Session {
    id: u64,
    tick_hz: f64,
    env: Env,
    live: LiveMetrics,
    /// Last received control and its `seq`; applied on every tick.
    latch: Option<(Action, u64)>,
    paused: bool,
    ended: bool,
    seq: u64,
    tick: u64,
    last_reward: RewardBreakdown,
    applied: Vec<AppliedControl>,
}

impl Session {
    pub fn new(id: u64, config: EnvConfig, tick_hz: f64) -> Result<Self, SessionError> {
        Ok(Self {
            id,
            tick_hz,
            env: Env::new(config)?,
            live: LiveMetrics::new(),
            latch: None,
            paused: false,
            ended: false,
            seq: 0,
            tick: 0,
            last_reward: RewardBreakdown::default(),
            applied: Vec::new(),
        })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn is_ended(&self) -> bool {
        self.ended
    }

    pub fn latched(&self) -> Option<Action> {
        self.latch.map(|(a, _)| a)
    }

    /// Controls applied in the current episode, one per stepped tick.
    pub fn applied_controls(&self) -> &[AppliedControl] {
        &self.applied
    }

    fn wrap(&mut self, body: ServerBody) -> ServerMessage {
        self.seq += 1;
        ServerMessage {
            v: PROTOCOL_VERSION,
            seq: self.seq,
            session: self.id,
            body,
        }
    }

    fn error(&mut self, message: impl Into<String>, reply_to: Option<u64>) -> ServerMessage {
        self.wrap(ServerBody::Error {
            message: message.into(),
            reply_to,
        })
    }

    pub fn hello(&mut self) -> ServerMessage {
        let body = ServerBody::Hello {
            tick_hz: self.tick_hz,
            config: Box::new(self.env.config().clone()),
        };
        self.wrap(body)
    }

    /// Parses and handles one text frame. Malformed input produces an
    /// `error` reply and leaves the session untouched.
    pub fn handle_text(&mut self, text: &str) -> Vec<ServerMessage> {
        match serde_json::from_str::<ClientMessage>(text) {
            Ok(msg) => self.handle(msg),
            Err(e) => {
                let reply_to = serde_json::from_str::<serde_json::Value>(text)
                    .ok()
                    .and_then(|v| v.get("seq")?.as_u64());
                vec![self.error(format!("malformed message: {e}"), reply_to)]
            }
        }
    }

    pub fn handle(&mut self, msg: ClientMessage) -> Vec<ServerMessage> {
        if msg.v != PROTOCOL_VERSION {
            return vec![self.error(
                format!("unsupported protocol version {} (expected {PROTOCOL_VERSION})", msg.v),
                Some(msg.seq),
            )];
        }
        match msg.body {
            ClientBody::Control(c) => {
                if self.ended {
                    return vec![self.error("episode finished; send a reset", Some(msg.seq))];
                }
                match c.to_action(self.env.config().action_mode) {
                    Ok(a) => {
                        self.latch = Some((a, msg.seq));
                        Vec::new()
                    }
                    Err(e) => vec![self.error(e, Some(msg.seq))],
                }
            }
            ClientBody::Session(cmd) => match self.command(cmd) {
                Ok(()) => self.state_messages_with(None),
                Err(e) => vec![self.error(e.to_string(), Some(msg.seq))],
            },
        }
    }

    fn command(&mut self, cmd: SessionCommand) -> Result<(), SessionError> {
        match cmd {
            SessionCommand::Reset { seed } => {
                let mut config = self.env.config().clone();
                config.seed = seed.unwrap_or(config.seed);
                self.restart(config)
            }
            SessionCommand::Select { env, seed } => {
                let mut config = EnvConfig::defaults_for(env);
                config.seed = seed.unwrap_or(self.env.config().seed);
                self.restart(config)
            }
            SessionCommand::Pause => {
                self.paused = true;
                Ok(())
            }
            SessionCommand::Resume => {
                self.paused = false;
                Ok(())
            }
        }
    }

    fn restart(&mut self, config: EnvConfig) -> Result<(), SessionError> {
        self.env = Env::new(config)?;
        self.live.clear();
        self.latch = None;
        self.ended = false;
        self.tick = 0;
        self.last_reward = RewardBreakdown::default();
        self.applied.clear();
        Ok(())
    }

    /// Advances one tick: applies the latched control if the episode is
    /// running, then reports the new state. Nothing is sent once the
    /// episode has ended.
    pub fn tick(&mut self) -> Vec<ServerMessage> {
        if self.ended {
            return Vec::new();
        }
        let mut applied = None;
        if let (false, Some((action, seq))) = (self.paused, self.latch) {
            match self.env.advance(action) {
                Ok(report) => {
                    self.last_reward = report.reward;
                    self.tick += 1;
                    self.applied.push(AppliedControl {
                        tick: self.tick,
                        seq,
                        action,
                    });
                    applied = Some(seq);
                }
                Err(e) => return vec![self.error(e.to_string(), Some(seq))],
            }
        }
        let finished = self.env.status().is_done();
        let mut out = self.state_messages_with(applied);
        if finished {
            self.ended = true;
            out.push(self.episode_end());
        }
        out
    }

    fn state_messages_with(&mut self, control_seq: Option<u64>) -> Vec<ServerMessage> {
        match self.state_frame(control_seq) {
            Ok(frame) => vec![self.wrap(ServerBody::State(Box::new(frame)))],
            Err(e) => vec![self.error(e.to_string(), None)],
        }
    }

    /// Current world, live scores and last reward.
    pub fn state_frame(&mut self, control_seq: Option<u64>) -> Result<StateFrame, SessionError> {
        let record = self.env.episode_record();
        let finished = self.env.status().is_done();
        let metrics = self.live.update(&record, finished)?;
        Ok(StateFrame {
            tick: self.tick,
            paused: self.paused,
            env: self.env.kind(),
            seed: self.env.config().seed,
            world: self.env.world().clone(),
            metrics: LiveScores::new(&metrics, record.robot_path_length, finished),
            reward: self.last_reward,
            status: self.env.status().clone(),
            object_distances: record.objects.iter().map(|o| o.distance).collect(),
            control_seq,
        })
    }

    fn episode_end(&mut self) -> ServerMessage {
        let record = self.env.episode_record();
        let name = self.env.kind().name();
        let seed = self.env.config().seed;
        let report = match evaluate(&record) {
            Ok(m) => MetricReport::new(name, seed, &record, &m),
            Err(e) => MetricReport::failed(name, seed, record.class, e.to_string()),
        };
        self.wrap(ServerBody::EpisodeEnd {
            report: Box::new(report),
        })
    }
}
