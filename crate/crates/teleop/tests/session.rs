use pushnav::env::{Action, Env, EnvConfig, EnvKind, MazeLayout};
use pushnav::geometry::normalize_angle;
use pushnav::metrics::{evaluate, LiveMetrics};
use pushnav_teleop::{
    ClientBody, ClientMessage, Control, ServerBody, ServerMessage, Session, SessionCommand, StateFrame,
    PROTOCOL_VERSION,
};

fn open_maze() -> EnvConfig {
    let mut c = EnvConfig::defaults_for(EnvKind::Maze);
    c.layout = MazeLayout::Open;
    c.obstacle_count = 0;
    c
}

fn msg(seq: u64, body: ClientBody) -> ClientMessage {
    ClientMessage {
        v: PROTOCOL_VERSION,
        seq,
        body,
    }
}

fn control(seq: u64, omega: f64) -> ClientMessage {
    msg(
        seq,
        ClientBody::Control(Control {
            omega: Some(omega),
            ..Control::default()
        }),
    )
}

fn state(m: &ServerMessage) -> &StateFrame {
    match &m.body {
        ServerBody::State(s) => s,
        other => panic!("expected state, got {other:?}"),
    }
}

#[test]
fn reset_with_seed_returns_that_world() {
    let mut s = Session::new(1, EnvConfig::defaults_for(EnvKind::Maze), 30.0).unwrap();
    let out = s.handle_text(r#"{"v":1,"type":"session","seq":1,"command":"reset","seed":7}"#);
    assert_eq!(out.len(), 1);
    let frame = state(&out[0]);
    let mut c = EnvConfig::defaults_for(EnvKind::Maze);
    c.seed = 7;
    assert_eq!(frame.seed, 7);
    assert_eq!(&frame.world, Env::new(c).unwrap().world());
    assert_eq!(frame.tick, 0);
}

#[test]
fn control_is_latched_across_ticks() {
    let mut s = Session::new(1, open_maze(), 30.0).unwrap();
    assert!(s.handle(control(1, 0.3)).is_empty());
    for _ in 0..10 {
        let out = s.tick();
        assert_eq!(state(&out[0]).control_seq, Some(1));
    }
    let applied = s.applied_controls();
    assert_eq!(applied.len(), 10);
    assert!(applied
        .iter()
        .all(|a| a.action == Action::AngularVelocity { omega: 0.3 } && a.seq == 1));

    // The same stream offline gives the same world.
    let mut env = Env::new(open_maze()).unwrap();
    for _ in 0..10 {
        env.step(Action::AngularVelocity { omega: 0.3 }).unwrap();
    }
    assert_eq!(env.world(), s.env().world());
}

#[test]
fn no_motion_before_first_control_and_full_effort() {
    let mut s = Session::new(1, open_maze(), 30.0).unwrap();
    let out = s.tick();
    let f = state(&out[0]);
    assert_eq!(f.tick, 0);
    assert_eq!(f.metrics.effort, 1.0);
    assert_eq!(f.metrics.l0, 0.0);
    assert_eq!(f.control_seq, None);
}

#[test]
fn pause_stops_stepping() {
    let mut s = Session::new(1, open_maze(), 30.0).unwrap();
    s.handle(control(1, 0.0));
    s.tick();
    s.handle(msg(2, ClientBody::Session(SessionCommand::Pause)));
    let before = s.env().world().clone();
    for _ in 0..5 {
        assert!(state(&s.tick()[0]).paused);
    }
    assert_eq!(&before, s.env().world());
    s.handle(msg(3, ClientBody::Session(SessionCommand::Resume)));
    s.tick();
    assert_ne!(&before, s.env().world());
}

#[test]
fn malformed_messages_get_errors_and_session_continues() {
    let mut s = Session::new(1, open_maze(), 30.0).unwrap();
    for bad in [
        "not json",
        "{}",
        r#"{"v":1,"type":"control","seq":4}"#,
        r#"{"v":1,"type":"control","seq":5,"heading":1.0}"#,
        r#"{"v":9,"type":"control","seq":6,"omega":1.0}"#,
        r#"{"v":1,"type":"session","seq":7,"command":"explode"}"#,
        r#"{"v":1,"type":"control","seq":8,"omega":0.1,"x":1.0}"#,
    ] {
        let out = s.handle_text(bad);
        assert_eq!(out.len(), 1, "{bad}");
        assert!(matches!(out[0].body, ServerBody::Error { .. }), "{bad}");
    }
    let out = s.handle_text(r#"{"v":1,"type":"control","seq":5,"heading":1.0}"#);
    assert!(matches!(out[0].body, ServerBody::Error { reply_to: Some(5), .. }));
    assert!(s.handle_text(r#"{"v":1,"type":"control","seq":9,"omega":0.2}"#).is_empty());
    assert_eq!(state(&s.tick()[0]).control_seq, Some(9));
}

#[test]
fn sequence_numbers_increase_and_carry_the_session() {
    let mut s = Session::new(42, open_maze(), 30.0).unwrap();
    let mut all = vec![s.hello()];
    all.extend(s.handle_text("garbage"));
    s.handle(control(1, 0.5));
    for _ in 0..5 {
        all.extend(s.tick());
    }
    all.extend(s.handle(msg(2, ClientBody::Session(SessionCommand::Reset { seed: Some(3) }))));
    assert!(all.windows(2).all(|w| w[0].seq < w[1].seq));
    assert!(all.iter().all(|m| m.session == 42 && m.v == PROTOCOL_VERSION));
}

#[test]
fn select_switches_environment() {
    let mut s = Session::new(1, open_maze(), 30.0).unwrap();
    let out = s.handle(msg(
        1,
        ClientBody::Session(SessionCommand::Select {
            env: EnvKind::BoxDelivery,
            seed: Some(2),
        }),
    ));
    let f = state(&out[0]);
    assert_eq!(f.env, EnvKind::BoxDelivery);
    assert_eq!(f.metrics.success, Some(0.0));
    assert_eq!(f.object_distances.len(), 6);
}

/// Steers towards the goal with the session's own state, as an operator would.
fn drive_to_goal(s: &mut Session) -> Vec<ServerMessage> {
    let mut out = Vec::new();
    for seq in 1..2000 {
        let p = s.env().robot_pose();
        let to = s.env().goal().closest_point(p.position()) - p.position();
        let w = (4.0 * normalize_angle(to.angle() - p.theta)).clamp(-1.0, 1.0);
        s.handle(control(seq, w));
        let msgs = s.tick();
        let end = msgs.iter().any(|m| matches!(m.body, ServerBody::EpisodeEnd { .. }));
        out.extend(msgs);
        if end {
            break;
        }
    }
    out
}

#[test]
fn episode_end_matches_offline_metrics_on_same_trajectory() {
    let mut s = Session::new(1, open_maze(), 30.0).unwrap();
    let out = drive_to_goal(&mut s);
    let ServerBody::EpisodeEnd { report } = &out.last().unwrap().body else {
        panic!("no episode_end");
    };
    assert!(s.env().status().goal_reached);

    // Offline oracle: replay the applied controls in a fresh env.
    let mut env = Env::new(open_maze()).unwrap();
    for a in s.applied_controls() {
        env.step(a.action).unwrap();
    }
    let offline = evaluate(&env.episode_record()).unwrap();
    assert!((report.efficiency - offline.efficiency()).abs() <= 1e-9);
    assert!((report.effort - offline.effort()).abs() <= 1e-9);
    assert!(report.efficiency > 0.9);

    // The terminal state frame carries the same values.
    let last_state = out.iter().rev().find_map(|m| match &m.body {
        ServerBody::State(f) => Some(f),
        _ => None,
    });
    let f = last_state.unwrap();
    assert!(f.metrics.final_);
    assert!((f.metrics.efficiency - report.efficiency).abs() <= 1e-9);
    assert!((f.metrics.effort - report.effort).abs() <= 1e-9);

    // Nothing more after the end; controls are refused until reset.
    assert!(s.tick().is_empty());
    assert!(matches!(s.handle(control(5000, 0.0))[0].body, ServerBody::Error { .. }));
    let out = s.handle(msg(5001, ClientBody::Session(SessionCommand::Reset { seed: None })));
    assert_eq!(state(&out[0]).tick, 0);
    assert!(!s.is_ended());
}

#[test]
fn provisional_scores_track_offline_formulas() {
    let mut c = EnvConfig::defaults_for(EnvKind::ShipIce);
    c.concentration = 0.4;
    let mut s = Session::new(1, c.clone(), 30.0).unwrap();
    let mut live = LiveMetrics::new();
    s.handle(control(1, 0.0));
    let mut effort = 1.0;
    for _ in 0..40 {
        let out = s.tick();
        let f = state(&out[0]);
        let m = live.update(&s.env().episode_record(), false).unwrap();
        assert_eq!(f.metrics.effort, m.effort());
        assert!(f.metrics.effort <= effort + 1e-12);
        effort = f.metrics.effort;
    }
    assert!(effort < 1.0);
}

#[test]
fn messages_round_trip_through_json() {
    let mut s = Session::new(1, open_maze(), 30.0).unwrap();
    s.handle(control(1, 0.25));
    let mut msgs = vec![s.hello()];
    msgs.extend(s.tick());
    msgs.extend(s.handle_text("?"));
    for m in msgs {
        let text = serde_json::to_string(&m).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["v"], 1);
        assert_eq!(v["type"], m.kind());
        let back: ServerMessage = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }
    let c = serde_json::to_string(&control(3, 0.5)).unwrap();
    assert_eq!(c, r#"{"v":1,"seq":3,"type":"control","omega":0.5}"#);
}
