//! Drives a session in-process the way a remote operator would: latch a
//! turn command, let it run for a while, then steer for the goal. Prints
//! the live scores and the final report.

use pushnav::env::{EnvConfig, EnvKind, MazeLayout};
use pushnav::geometry::normalize_angle;
use pushnav_teleop::{ServerBody, Session};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = EnvConfig::defaults_for(EnvKind::Maze);
    config.layout = MazeLayout::Open;
    let mut session = Session::new(1, config, 30.0)?;
    session.handle_text(r#"{"v":1,"type":"control","seq":1,"omega":0.6}"#);
    let mut seq = 1;
    for tick in 0..3000 {
        if tick >= 40 && tick % 5 == 0 {
            let p = session.env().robot_pose();
            let to = session.env().goal().closest_point(p.position()) - p.position();
            let w = (3.0 * normalize_angle(to.angle() - p.theta)).clamp(-1.0, 1.0);
            seq += 1;
            session.handle_text(&format!(r#"{{"v":1,"type":"control","seq":{seq},"omega":{w}}}"#));
        }
        for msg in session.tick() {
            match msg.body {
                ServerBody::State(f) if f.tick % 50 == 0 => {
                    println!("tick {:4}: E {:.3} I {:.3} l0 {:.2}", f.tick, f.metrics.efficiency, f.metrics.effort, f.metrics.l0)
                }
                ServerBody::EpisodeEnd { report } => {
                    println!("episode end: {}", serde_json::to_string(&report)?);
                    return Ok(());
                }
                _ => {}
            }
        }
    }
    Ok(())
}
