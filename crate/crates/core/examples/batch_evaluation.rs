//! Seeded batch evaluation of two policies on identical maze layouts,
//! with results written to disk.
//!
//! Usage: cargo run --release --example batch_evaluation -- [output dir] [episodes]

use std::path::PathBuf;

use pushnav::env::{EnvConfig, EnvKind};
use pushnav::harness::{run_evaluation, RunSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out: PathBuf = args.next().unwrap_or_else(|| "runs".into()).into();
    let episodes: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);

    for policy in ["dt_descent", "random"] {
        let mut spec = RunSpec::new(EnvConfig::defaults_for(EnvKind::Maze), policy);
        spec.episodes = episodes;
        spec.base_seed = 2024;
        spec.output = Some(out.join(policy));
        let eval = run_evaluation(&spec)?;
        print!("{}", eval.summary.display_table());
        println!("({:.1}s)\n", eval.wall_time.as_secs_f64());
    }
    Ok(())
}
