//! Renders the egocentric observation of every environment and writes the
//! channels as PGM images plus one JSON tensor.
//!
//! Usage: cargo run --example observations -- [output dir]

use std::path::PathBuf;

use pushnav::env::{Env, EnvConfig, EnvKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "observations".into()).into();
    for kind in EnvKind::ALL {
        let env = Env::new(EnvConfig::defaults_for(kind))?;
        let obs = env.observe();
        let written = obs.write_pgm(&dir, kind.name())?;
        println!("{kind}: {}x{} cells, {:?} frame", obs.size, obs.size, obs.frame);
        for (ch, path) in obs.channels.iter().zip(&written) {
            let mean = ch.data.iter().map(|v| *v as f64).sum::<f64>() / ch.data.len() as f64;
            println!("  {:<20} mean {mean:.3} -> {}", ch.role.name(), path.display());
        }
        let tensor = dir.join(format!("{}.json", kind.name()));
        std::fs::write(&tensor, serde_json::to_string(&obs.to_json_tensor())?)?;
    }
    Ok(())
}
