//! Environment configs: JSON files with defaults per kind, plus dotted
//! key overrides of the kind the command line uses.

use pushnav::env::EnvConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = EnvConfig::from_json_str(r#"{"kind": "box_delivery", "box_count": 4}"#)?;
    println!("box_delivery: {} boxes, max {} steps", config.box_count, config.max_steps);

    let tuned = config.with_overrides([("physics.dt", "0.01"), ("max_steps", "300"), ("kind", "area_clearing")])?;
    println!(
        "{}: {} boxes, dt {}, max {} steps",
        tuned.kind, tuned.box_count, tuned.physics.dt, tuned.max_steps
    );

    match config.with_overrides([("resolution", "-0.1")]) {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("rejected: {e}"),
    }
    println!("{} keys, e.g. {:?}", EnvConfig::keys().len(), &EnvConfig::keys()[..5]);
    Ok(())
}
