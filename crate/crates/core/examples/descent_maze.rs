//! The goal-distance descent baseline in the U-shaped maze.

use pushnav::env::{Env, EnvConfig, EnvKind};
use pushnav::metrics::evaluate;
use pushnav::planners::{Decision, DtDescent, Policy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for seed in 0..4 {
        let mut config = EnvConfig::defaults_for(EnvKind::Maze);
        config.seed = seed;
        let mut env = Env::new(config)?;
        let mut policy = DtDescent::default();
        policy.reset(seed);
        while !env.status().is_done() {
            let Decision::Act(a) = policy.act(&env.observe(), &env)? else {
                break;
            };
            env.step(a)?;
        }
        let m = evaluate(&env.episode_record())?;
        println!(
            "seed {seed}: reached {} in {} steps, E = {:.3}, I = {:.3}",
            env.status().goal_reached,
            env.status().steps,
            m.efficiency(),
            m.effort()
        );
    }
    Ok(())
}
