//! WebSocket endpoint: one session and one tick loop per connection.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use pushnav::env::EnvConfig;
use tokio::net::TcpListener;
use tokio::sync::mpsc;
use tokio::time::MissedTickBehavior;

use crate::protocol::{ServerBody, ServerMessage};
use crate::session::Session;

pub const DEFAULT_TICK_HZ: f64 = 30.0;

/// Outgoing queue depth. A full queue drops `state` frames, never others.
const OUTBOX: usize = 32;

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub bind: SocketAddr,
    pub tick_hz: f64,
    /// Config every new session starts from.
    pub env: EnvConfig,
}

impl ServeConfig {
    pub fn new(bind: SocketAddr, env: EnvConfig) -> Self {
        Self {
            bind,
            tick_hz: DEFAULT_TICK_HZ,
            env,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("tick rate must be positive and finite, got {0}")]
    TickRate(f64),
    #[error("invalid environment config: {0}")]
    Config(#[from] pushnav::env::EnvError),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

struct Shared {
    config: ServeConfig,
    next_id: AtomicU64,
}

pub fn router(config: ServeConfig) -> Router {
    let shared = Arc::new(Shared {
        config,
        next_id: AtomicU64::new(1),
    });
    Router::new()
        .route("/ws", get(upgrade))
        .route("/health", get(|| async { "ok" }))
        .with_state(shared)
}

/// Binds the configured address and serves until the task is dropped.
pub async fn serve(config: ServeConfig) -> Result<(), ServeError> {
    let addr = config.bind;
    let listener = TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::Bind { addr, source })?;
    serve_on(listener, config).await
}

/// Serves on an already bound listener.
pub async fn serve_on(listener: TcpListener, config: ServeConfig) -> Result<(), ServeError> {
    if !(config.tick_hz.is_finite() && config.tick_hz > 0.0) {
        return Err(ServeError::TickRate(config.tick_hz));
    }
    config.env.validate()?;
    log::info!("teleop listening on ws://{}/ws", listener.local_addr()?);
    axum::serve(listener, router(config)).await?;
    Ok(())
}

async fn upgrade(ws: WebSocketUpgrade, State(shared): State<Arc<Shared>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(socket, shared))
}

async fn connection(socket: WebSocket, shared: Arc<Shared>) {
    let id = shared.next_id.fetch_add(1, Ordering::Relaxed);
    let cfg = &shared.config;
    let (mut sink, mut stream) = socket.split();
    let mut session = match Session::new(id, cfg.env.clone(), cfg.tick_hz) {
        Ok(s) => s,
        Err(e) => {
            log::error!("session {id}: {e}");
            return;
        }
    };
    let hello = session.hello();
    let session = Arc::new(Mutex::new(session));
    let (tx, mut rx) = mpsc::channel::<ServerMessage>(OUTBOX);

    // Serializes messages built by the tick loop and the reader. Both
    // producers release the session lock before queueing, so the wire
    // sequence numbers are stamped here, in send order.
    let writer = tokio::spawn(async move {
        let mut wire_seq = 0;
        while let Some(mut msg) = rx.recv().await {
            wire_seq += 1;
            msg.seq = wire_seq;
            let text = match serde_json::to_string(&msg) {
                Ok(t) => t,
                Err(e) => {
                    log::error!("cannot serialize {} message: {e}", msg.kind());
                    continue;
                }
            };
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
    });
    if tx.send(hello).await.is_err() {
        return;
    }

    let ticker = {
        let session = Arc::clone(&session);
        let tx = tx.clone();
        let period = Duration::from_secs_f64(1.0 / cfg.tick_hz);
        tokio::spawn(async move {
            let mut interval = tokio::time::interval(period);
            // Late ticks are run back to back, so physics never falls behind.
            interval.set_missed_tick_behavior(MissedTickBehavior::Burst);
            loop {
                interval.tick().await;
                let out = session.lock().expect("session lock").tick();
                for msg in out {
                    if !deliver(&tx, msg).await {
                        return;
                    }
                }
            }
        })
    };

    while let Some(frame) = stream.next().await {
        let text = match frame {
            Ok(Message::Text(t)) => t.to_string(),
            Ok(Message::Binary(_)) => {
                let err = session.lock().expect("session lock").handle_text("<binary frame>");
                for msg in err {
                    let _ = tx.send(msg).await;
                }
                continue;
            }
            Ok(Message::Close(_)) | Err(_) => break,
            Ok(_) => continue,
        };
        let out = session.lock().expect("session lock").handle_text(&text);
        for msg in out {
            if tx.send(msg).await.is_err() {
                break;
            }
        }
    }
    log::info!("session {id} disconnected");
    ticker.abort();
    drop(tx);
    let _ = writer.await;
}

/// Queues a message; `state` frames are dropped when the client lags.
async fn deliver(tx: &mpsc::Sender<ServerMessage>, msg: ServerMessage) -> bool {
    if matches!(msg.body, ServerBody::State(_)) {
        match tx.try_send(msg) {
            Ok(()) => true,
            Err(mpsc::error::TrySendError::Full(_)) => true,
            Err(mpsc::error::TrySendError::Closed(_)) => false,
        }
    } else {
        tx.send(msg).await.is_ok()
    }
}
