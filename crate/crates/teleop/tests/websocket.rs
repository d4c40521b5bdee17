use std::time::Duration;

use futures::{SinkExt, StreamExt};
use pushnav::env::{Env, EnvConfig, EnvKind};
use pushnav_teleop::{serve_on, ServeConfig, ServerBody, ServerMessage};
use tokio::net::TcpListener;
use tokio_tungstenite::tungstenite::Message;

async fn start(tick_hz: f64) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let mut cfg = ServeConfig::new(addr, EnvConfig::defaults_for(EnvKind::Maze));
    cfg.tick_hz = tick_hz;
    tokio::spawn(serve_on(listener, cfg));
    format!("ws://{addr}/ws")
}

type Client = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

async fn next(ws: &mut Client) -> ServerMessage {
    loop {
        let frame = tokio::time::timeout(Duration::from_secs(10), ws.next())
            .await
            .expect("server went quiet")
            .expect("stream ended")
            .unwrap();
        if let Message::Text(t) = frame {
            return serde_json::from_str(&t).unwrap();
        }
    }
}

async fn send(ws: &mut Client, text: &str) {
    ws.send(Message::Text(text.to_string().into())).await.unwrap();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn hello_reset_control_and_errors_over_the_wire() {
    const TICK_HZ: f64 = 10.0;
    let url = start(TICK_HZ).await;
    let (mut ws, _) = tokio_tungstenite::connect_async(&url).await.unwrap();

    let hello = next(&mut ws).await;
    assert!(matches!(hello.body, ServerBody::Hello { tick_hz, .. } if tick_hz == TICK_HZ));
    let session = hello.session;

    send(&mut ws, r#"{"v":1,"type":"session","seq":1,"command":"reset","seed":7}"#).await;
    let mut c = EnvConfig::defaults_for(EnvKind::Maze);
    c.seed = 7;
    let expected = Env::new(c).unwrap().world().clone();
    let mut last_seq = hello.seq;
    loop {
        let m = next(&mut ws).await;
        assert!(m.seq > last_seq && m.session == session);
        last_seq = m.seq;
        if let ServerBody::State(f) = &m.body {
            if f.seed == 7 {
                assert_eq!(f.world, expected);
                break;
            }
        }
    }

    // A malformed frame is answered and the session keeps going.
    send(&mut ws, "{not json").await;
    loop {
        let m = next(&mut ws).await;
        assert!(m.seq > last_seq);
        last_seq = m.seq;
        if matches!(m.body, ServerBody::Error { .. }) {
            break;
        }
    }

    // The control shows up as applied within two tick periods of being
    // sent. Frames queued before it arrived do not count against it.
    let period = Duration::from_secs_f64(1.0 / TICK_HZ);
    let sent = std::time::Instant::now();
    send(&mut ws, r#"{"v":1,"type":"control","seq":2,"omega":0.3}"#).await;
    loop {
        let m = next(&mut ws).await;
        if let ServerBody::State(f) = &m.body {
            if f.control_seq == Some(2) {
                // Nothing moved before the first control.
                assert_eq!(f.tick, 1);
                break;
            }
        }
    }
    let waited = sent.elapsed();
    assert!(waited <= 2 * period, "round trip took {waited:?}, tick period {period:?}");
    ws.close(None).await.unwrap();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn sessions_are_isolated() {
    let url = start(30.0).await;
    let (mut a, _) = tokio_tungstenite::connect_async(&url).await.unwrap();
    let (mut b, _) = tokio_tungstenite::connect_async(&url).await.unwrap();
    let (ha, hb) = (next(&mut a).await, next(&mut b).await);
    assert_ne!(ha.session, hb.session);

    send(&mut a, r#"{"v":1,"type":"session","seq":1,"command":"select","env":"ship_ice"}"#).await;
    loop {
        if let ServerBody::State(f) = next(&mut a).await.body {
            if f.env == EnvKind::ShipIce {
                break;
            }
        }
    }
    // b still runs the default maze.
    for _ in 0..3 {
        if let ServerBody::State(f) = next(&mut b).await.body {
            assert_eq!(f.env, EnvKind::Maze);
        }
    }
}

#[tokio::test]
async fn bad_tick_rate_is_rejected() {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let mut cfg = ServeConfig::new(listener.local_addr().unwrap(), EnvConfig::default());
    cfg.tick_hz = 0.0;
    assert!(serve_on(listener, cfg).await.is_err());
}
