//! Live teleoperation server for the pushing-navigation environments.
//!
//! A client connects to `ws://<bind>/ws`, receives a `hello` with the
//! session config, and then a `state` frame every tick. Controls are
//! latched: the last one received is applied on every tick until replaced.
//! See [`protocol`] for the message catalog.

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{
    ClientBody, ClientMessage, Control, LiveScores, ServerBody, ServerMessage, SessionCommand,
    StateFrame, PROTOCOL_VERSION,
};
pub use server::{router, serve, serve_on, ServeConfig, ServeError, DEFAULT_TICK_HZ};
pub use session::{AppliedControl, Session, SessionError};
