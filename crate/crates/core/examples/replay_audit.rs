//! Runs one episode, saves its log, reloads it and re-simulates it. Then
//! shows that a single changed action is caught at the step it was made.

use pushnav::env::{Action, EnvConfig, EnvKind};
use pushnav::harness::{episode_seed, replay, run_episode, EpisodeLog, HarnessError};
use pushnav::planners::DtDescent;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = EnvConfig::defaults_for(EnvKind::Maze);
    let log = run_episode(&config, &mut DtDescent::default(), 0, episode_seed(7, 0));
    let path = std::env::temp_dir().join("pushnav_replay_example.json");
    log.write(&path)?;
    let loaded = EpisodeLog::read(&path)?;
    let record = replay(&loaded)?;
    println!(
        "{} steps replayed bit-identically; robot path {:.4} m",
        loaded.steps.len(),
        record.robot_path_length
    );

    let mut tampered = loaded.clone();
    let k = tampered.steps.len() / 2;
    tampered.steps[k].action = Action::AngularVelocity { omega: 0.9 };
    match replay(&tampered) {
        Err(HarnessError::Divergence { step, detail }) => println!("tampered log diverges at step {step}: {detail}"),
        other => println!("unexpected: {other:?}"),
    }
    Ok(())
}
