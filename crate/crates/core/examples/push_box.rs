//! Drives the robot straight into a free box and prints how far each body
//! travelled. The robot pays for pushing: its effort share drops.

use pushnav::geometry::{ConvexPolygon, Pose};
use pushnav::physics::{Body, BodyKind, DriveCommand, PhysicsConfig, WorldState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = PhysicsConfig::default();
    let mut world = WorldState::new();
    let robot = ConvexPolygon::rectangle(0.7, 0.5)?;
    world.add_body(Body::new(0, BodyKind::Robot, robot, Pose::new(0.0, 0.0, 0.0), 2.0)?)?;
    let crate_box = ConvexPolygon::rectangle(0.44, 0.44)?;
    world.add_body(Body::new(1, BodyKind::Movable, crate_box, Pose::new(1.0, 0.05, 0.0), 1.0)?)?;

    let mut contacts = 0;
    for _ in 0..150 {
        let info = world.step(DriveCommand::Unicycle { angular_velocity: 0.0 }, &config)?;
        contacts += info.collisions.len();
    }
    for b in &world.bodies {
        println!(
            "{:?} {}: at ({:.3}, {:.3}), heading {:.3}, travelled {:.3} m",
            b.kind, b.id, b.pose.x, b.pose.y, b.pose.theta, b.traveled
        );
    }
    let (r, m) = (&world.bodies[0], &world.bodies[1]);
    let effort = r.mass() * r.traveled / (r.mass() * r.traveled + m.mass() * m.traveled);
    println!("contact events: {contacts}");
    println!("interaction effort so far: {effort:.4}");
    Ok(())
}
