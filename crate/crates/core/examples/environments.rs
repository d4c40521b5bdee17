//! Builds each of the four environments, takes a few random actions and
//! prints the reward breakdown.

use pushnav::env::{Env, EnvConfig, EnvKind};
use pushnav::planners::{Decision, Policy, RandomPolicy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for kind in EnvKind::ALL {
        let mut config = EnvConfig::defaults_for(kind);
        config.seed = 3;
        let mut env = Env::new(config)?;
        let mut policy = RandomPolicy::default();
        policy.reset(3);
        println!(
            "{kind}: {} movable objects, action mode {:?}, start goal distance {:.2} m",
            env.movable_count(),
            env.config().action_mode,
            env.robot_goal_distance()
        );
        let mut total = 0.0;
        for step in 0..5 {
            let obs = env.observe();
            let Decision::Act(action) = policy.act(&obs, &env)? else {
                break;
            };
            let out = env.step(action)?;
            total += out.reward.total;
            println!(
                "  step {step}: collision {:+.3} progress {:+.3} completion {:+.3}",
                out.reward.collision, out.reward.progress, out.reward.completion
            );
            if out.status.is_done() {
                break;
            }
        }
        println!("  return after {} steps: {total:+.3}", env.status().steps);
    }
    Ok(())
}
