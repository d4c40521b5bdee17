//! Plans the clearance-path tour for an Area-Clearing scene, prints the plan
//! and executes it.

use pushnav::env::{ActionMode, Env, EnvConfig, EnvKind};
use pushnav::metrics::evaluate;
use pushnav::planners::{plan_clearance, Decision, GtspPolicy, Policy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = EnvConfig::defaults_for(EnvKind::AreaClearing);
    config.action_mode = ActionMode::Waypoint;
    config.seed = 11;
    let mut env = Env::new(config)?;

    let plan = plan_clearance(&env)?;
    println!(
        "{} boxes, {} GTSP vertices, planned cost {:.2} m",
        plan.set_count, plan.vertex_count, plan.cost
    );
    for p in &plan.paths {
        println!(
            "  box {} out through {:?}, push {:.2} m",
            p.box_index,
            p.edge,
            p.push_length()
        );
    }

    let mut policy = GtspPolicy::default();
    policy.reset(0);
    while !env.status().is_done() {
        match policy.act(&env.observe(), &env)? {
            Decision::Act(a) => {
                env.step(a)?;
            }
            Decision::Done => break,
        }
    }
    let m = evaluate(&env.episode_record())?;
    println!(
        "executed in {} waypoint actions: S = {:.2}, E = {:.3}, I = {:.3}",
        env.status().steps,
        m.success_score().unwrap_or(0.0),
        m.efficiency(),
        m.effort()
    );
    Ok(())
}
