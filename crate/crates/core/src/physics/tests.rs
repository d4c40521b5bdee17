use std::f64::consts::FRAC_PI_2;

use proptest::prelude::*;

use super::*;
use crate::geometry::Rect;

fn robot_at(id: BodyId, x: f64, y: f64, theta: f64, mass: f64) -> Body {
    Body::new(
        id,
        BodyKind::Robot,
        ConvexPolygon::rectangle(0.7, 0.5).unwrap(),
        Pose::new(x, y, theta),
        mass,
    )
    .unwrap()
}

fn box_at(id: BodyId, x: f64, y: f64, side: f64, mass: f64) -> Body {
    Body::new(
        id,
        BodyKind::Movable,
        ConvexPolygon::rectangle(side, side).unwrap(),
        Pose::new(x, y, 0.0),
        mass,
    )
    .unwrap()
}

fn wall(id: BodyId, rect: Rect) -> Body {
    Body::from_world_polygon(id, BodyKind::Static, &rect.to_polygon().unwrap(), 0.0).unwrap()
}

/// Velocities after a 1D collision of a pusher into a resting body.
fn one_d_push(m_pusher: f64, m_box: f64, v: f64, e: f64) -> (f64, f64) {
    let total = m_pusher + m_box;
    let v_box = m_pusher * v * (1.0 + e) / total;
    let v_pusher = v - m_box * v * (1.0 + e) / total;
    (v_pusher, v_box)
}

/// Fourth-order Runge-Kutta integration of the unicycle ODE.
fn rk4_unicycle(pose: (f64, f64, f64), v: f64, w: f64, dt: f64, steps: usize) -> (f64, f64, f64) {
    let f = |s: (f64, f64, f64)| (v * s.2.cos(), v * s.2.sin(), w);
    let h = dt / steps as f64;
    let mut s = pose;
    for _ in 0..steps {
        let k1 = f(s);
        let k2 = f((s.0 + h / 2.0 * k1.0, s.1 + h / 2.0 * k1.1, s.2 + h / 2.0 * k1.2));
        let k3 = f((s.0 + h / 2.0 * k2.0, s.1 + h / 2.0 * k2.1, s.2 + h / 2.0 * k2.2));
        let k4 = f((s.0 + h * k3.0, s.1 + h * k3.1, s.2 + h * k3.2));
        s = (
            s.0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            s.1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
            s.2 + h / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2),
        );
    }
    s
}

#[test]
fn lone_robot_drives_straight() {
    let cfg = PhysicsConfig {
        dt: 0.1,
        robot_speed: 1.0,
        ..PhysicsConfig::default()
    };
    let mut w = WorldState::new();
    w.add_body(robot_at(0, 0.0, 0.0, 0.0, 2.0)).unwrap();
    let info = w
        .step(DriveCommand::Unicycle { angular_velocity: 0.0 }, &cfg)
        .unwrap();
    let r = w.robot().unwrap();
    assert!((r.pose.x - 0.1).abs() < 1e-12);
    assert!(r.pose.y.abs() < 1e-12);
    assert!((r.traveled - 0.1).abs() < 1e-12);
    assert!((info.displacement[0] - 0.1).abs() < 1e-12);
}

#[test]
fn unicycle_straight_and_quarter_turn() {
    let cfg = PhysicsConfig {
        dt: 0.1,
        robot_speed: 1.0,
        max_angular_velocity: 100.0,
        ..PhysicsConfig::default()
    };
    let p = apply_unicycle_command(Pose::new(1.0, 2.0, 0.3), 0.0, &cfg);
    assert!((p.position().distance(Vec2::new(1.0, 2.0)) - 0.1).abs() < 1e-12);

    let w = FRAC_PI_2 / cfg.dt;
    let p = apply_unicycle_command(Pose::new(0.0, 0.0, 0.0), w, &cfg);
    assert!((p.theta - FRAC_PI_2).abs() < 1e-12);
    // Quarter circle of radius v/w ends at (r, r).
    let r = cfg.robot_speed / w;
    assert!((p.x - r).abs() < 1e-12 && (p.y - r).abs() < 1e-12);
}

#[test]
fn unicycle_arc_matches_numerical_integration() {
    let cfg = PhysicsConfig {
        dt: 0.1,
        robot_speed: 1.0,
        ..PhysicsConfig::default()
    };
    let p = apply_unicycle_command(Pose::new(0.0, 0.0, 0.0), 0.5, &cfg);
    let (x, y, th) = rk4_unicycle((0.0, 0.0, 0.0), 1.0, 0.5, 0.1, 1000);
    assert!((p.x - x).abs() < 1e-9);
    assert!((p.y - y).abs() < 1e-9);
    assert!((p.theta - th).abs() < 1e-9);
}

#[test]
fn unicycle_command_is_clamped() {
    let cfg = PhysicsConfig::default();
    let a = apply_unicycle_command(Pose::default(), 50.0, &cfg);
    let b = apply_unicycle_command(Pose::default(), cfg.max_angular_velocity, &cfg);
    assert_eq!(a, b);
}

#[test]
fn sliding_box_comes_to_rest() {
    let cfg = PhysicsConfig::default();
    let mut w = WorldState::new();
    w.add_body(box_at(0, 0.0, 0.0, 0.5, 1.0)).unwrap();
    w.bodies[0].linear_velocity = Vec2::new(1.5, 0.5);
    let mut last_speed = w.bodies[0].linear_velocity.norm();
    let mut rested = false;
    for _ in 0..200 {
        w.step(DriveCommand::Stop, &cfg).unwrap();
        let s = w.bodies[0].linear_velocity.norm();
        if last_speed > 0.0 {
            assert!(s < last_speed);
        }
        if s == 0.0 {
            rested = true;
            break;
        }
        last_speed = s;
    }
    assert!(rested);
    let traveled = w.bodies[0].traveled;
    w.step(DriveCommand::Stop, &cfg).unwrap();
    assert_eq!(w.bodies[0].traveled, traveled);
    // v^2 / (2 mu g) up to the discrete-time error of one substep.
    let expected = 1.5f64.hypot(0.5).powi(2) / (2.0 * cfg.mu * cfg.g);
    assert!((traveled - expected).abs() < 1.6 * cfg.dt);
}

#[test]
fn head_on_push_transfers_momentum() {
    let cfg = PhysicsConfig {
        solver_iterations: 30,
        ..PhysicsConfig::default()
    };
    let (m_r, m_b) = (2.0, 1.0);
    let mut w = WorldState::new();
    w.add_body(robot_at(0, 0.0, 0.0, 0.0, m_r)).unwrap();
    // Box face exactly at the robot's front bumper.
    w.add_body(box_at(1, 0.35 + 0.25, 0.0, 0.5, m_b)).unwrap();
    let info = w
        .step(DriveCommand::Unicycle { angular_velocity: 0.0 }, &cfg)
        .unwrap();
    let (v_r, v_b) = one_d_push(m_r, m_b, cfg.robot_speed, cfg.restitution);
    let b = &w.bodies[1];
    let r = &w.bodies[0];
    assert!((b.linear_velocity.x - v_b).abs() < 1e-3, "{:?}", b.linear_velocity);
    assert!((r.linear_velocity.x - v_r).abs() < 2e-3);
    assert!(b.angular_velocity.abs() < 1e-3);
    assert!(info.displacement[1] > 0.0);
    assert!(info.robot_movable_contact);
    let ev = &info.collisions[0];
    assert!(ev.is_between(BodyKind::Robot, BodyKind::Movable));
    // Impulse equals the box's momentum change.
    assert!((ev.impulse - m_b * v_b).abs() < 2e-3);
}

#[test]
fn heading_step_in_empty_world() {
    let cfg = PhysicsConfig::default();
    let mut w = WorldState::new();
    w.add_body(robot_at(0, 0.0, 0.0, 1.0, 2.0)).unwrap();
    let (next, info) = apply_heading_step(&w, 0.0, 0.15, &cfg).unwrap();
    let r = next.robot().unwrap();
    assert!((r.pose.x - 0.15).abs() < 1e-12);
    assert!(r.pose.y.abs() < 1e-12);
    assert_eq!(r.pose.theta, 0.0);
    assert!(!info.immobilized);
}

#[test]
fn heading_step_blocked_by_wall() {
    let cfg = PhysicsConfig::default();
    let mut w = WorldState::new();
    w.add_body(robot_at(0, 0.0, 0.0, 0.0, 2.0)).unwrap();
    w.add_body(wall(1, Rect::new(0.40, -2.0, 0.9, 2.0))).unwrap();
    let (next, info) = apply_heading_step(&w, 0.0, 0.5, &cfg).unwrap();
    let x = next.robot().unwrap().pose.x;
    assert!((x - 0.05).abs() < 0.015, "x = {x}");
    assert!(info.robot_static_contact);
    assert!(info.immobilized);
    assert_eq!(info.displacement[1], 0.0);
}

#[test]
fn heading_step_pushes_box() {
    let cfg = PhysicsConfig::default();
    let mut w = WorldState::new();
    w.add_body(robot_at(0, 0.0, 0.0, 0.0, 2.0)).unwrap();
    w.add_body(box_at(1, 0.6, 0.0, 0.5, 1.0)).unwrap();

    // The first substep of the heading step is exactly a unicycle substep.
    let (single, _) = step_world(&w, DriveCommand::Unicycle { angular_velocity: 0.0 }, &cfg).unwrap();
    let (_, v_b) = one_d_push(2.0, 1.0, cfg.robot_speed, cfg.restitution);
    assert!((single.bodies[1].linear_velocity.x - v_b).abs() < 0.05);

    let (next, info) = apply_heading_step(&w, 0.0, 0.25, &cfg).unwrap();
    assert!(next.bodies[1].traveled > 0.1);
    assert!(next.bodies[1].pose.x > 0.6 + 0.1);
    assert!(info.robot_movable_contact);
}

#[test]
fn elastic_frictionless_collision_conserves_energy() {
    let cfg = PhysicsConfig {
        mu: 0.0,
        restitution: 1.0,
        solver_iterations: 30,
        ..PhysicsConfig::default()
    };
    let mut w = WorldState::new();
    w.add_body(box_at(0, -0.6, 0.0, 0.5, 1.0)).unwrap();
    w.add_body(box_at(1, 0.6, 0.0, 0.5, 1.0)).unwrap();
    w.bodies[0].linear_velocity = Vec2::new(1.0, 0.0);
    w.bodies[1].linear_velocity = Vec2::new(-1.0, 0.0);
    let e0 = w.kinetic_energy();
    let mut collided = false;
    for _ in 0..40 {
        let info = w.step(DriveCommand::Stop, &cfg).unwrap();
        collided |= !info.collisions.is_empty();
    }
    assert!(collided);
    assert!(w.bodies[0].linear_velocity.x < 0.0);
    let e1 = w.kinetic_energy();
    assert!((e1 - e0).abs() / e0 < 0.01, "{e0} -> {e1}");
}

#[test]
fn determinism_bit_identical() {
    let cfg = PhysicsConfig::default();
    let build = || {
        let mut w = WorldState::new();
        w.add_body(robot_at(0, 0.0, 0.0, 0.2, 2.0)).unwrap();
        for k in 0..5 {
            w.add_body(box_at(k + 1, 0.8 + 0.55 * k as f64, 0.1 * k as f64, 0.44, 1.0))
                .unwrap();
        }
        w.add_body(wall(9, Rect::new(4.0, -3.0, 4.5, 3.0))).unwrap();
        w
    };
    let run = || {
        let mut w = build();
        let mut infos = Vec::new();
        for i in 0..300 {
            let cmd = DriveCommand::Unicycle {
                angular_velocity: ((i as f64) * 0.05).sin(),
            };
            infos.push(w.step(cmd, &cfg).unwrap());
        }
        (w, infos)
    };
    let (a, ia) = run();
    let (b, ib) = run();
    assert_eq!(a, b);
    assert_eq!(ia, ib);
}

#[test]
fn non_finite_state_reports_divergence() {
    let cfg = PhysicsConfig::default();
    let mut w = WorldState::new();
    w.add_body(box_at(3, 0.0, 0.0, 0.5, 1.0)).unwrap();
    w.bodies[0].linear_velocity = Vec2::new(f64::NAN, 0.0);
    assert_eq!(
        w.step(DriveCommand::Stop, &cfg),
        Err(PhysicsError::Diverged { body: 3 })
    );
}

#[test]
fn rejects_second_robot_and_duplicate_ids() {
    let mut w = WorldState::new();
    w.add_body(robot_at(0, 0.0, 0.0, 0.0, 1.0)).unwrap();
    assert_eq!(
        w.add_body(robot_at(1, 2.0, 0.0, 0.0, 1.0)),
        Err(PhysicsError::MultipleRobots)
    );
    assert_eq!(
        w.add_body(box_at(0, 2.0, 0.0, 0.5, 1.0)),
        Err(PhysicsError::DuplicateId(0))
    );
}

fn pile_world(seed_vels: &[(f64, f64)]) -> WorldState {
    let mut w = WorldState::new();
    for (k, &(vx, vy)) in seed_vels.iter().enumerate() {
        let x = (k % 3) as f64 * 0.55;
        let y = (k / 3) as f64 * 0.55;
        let mut b = box_at(k as BodyId, x, y, 0.5, 1.0 + 0.3 * k as f64);
        b.linear_velocity = Vec2::new(vx, vy);
        w.add_body(b).unwrap();
    }
    let id = w.next_id();
    w.add_body(wall(id, Rect::new(-1.5, -1.5, 3.0, -1.0))).unwrap();
    w
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn friction_never_increases_kinetic_energy(
        vels in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 2..7)
    ) {
        let cfg = PhysicsConfig::default();
        let mut w = pile_world(&vels);
        let mut e = w.kinetic_energy();
        for _ in 0..100 {
            w.step(DriveCommand::Stop, &cfg).unwrap();
            let e1 = w.kinetic_energy();
            prop_assert!(e1 <= e + 1e-12, "{} -> {}", e, e1);
            e = e1;
        }
    }

    #[test]
    fn traveled_is_sum_of_displacements_and_statics_stay(
        vels in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 2..7),
        turn in -3.0f64..3.0,
    ) {
        let cfg = PhysicsConfig::default();
        let mut w = pile_world(&vels);
        let id = w.next_id();
        w.add_body(robot_at(id, 1.0, 2.5, -1.2, 2.0)).unwrap();
        let static_pose = w.bodies.iter().find(|b| b.is_static()).unwrap().pose;
        let mut sums = vec![0.0; w.bodies.len()];
        for _ in 0..80 {
            let info = w.step(DriveCommand::Unicycle { angular_velocity: turn }, &cfg).unwrap();
            for (i, b) in w.bodies.iter().enumerate() {
                if b.is_static() {
                    prop_assert_eq!(info.displacement[i], 0.0);
                }
                sums[i] += info.displacement[i];
            }
            for ev in &info.collisions {
                prop_assert!(ev.impulse >= 0.0);
            }
        }
        for (i, b) in w.bodies.iter().enumerate() {
            prop_assert!((b.traveled - sums[i]).abs() < 1e-9);
        }
        prop_assert_eq!(w.bodies.iter().find(|b| b.is_static()).unwrap().pose, static_pose);
    }

    #[test]
    fn heading_step_never_overshoots(
        heading in -3.1f64..3.1,
        dist in 0.01f64..1.0,
        boxes in prop::collection::vec((-0.5f64..1.0, -0.5f64..1.0), 0..4),
    ) {
        let cfg = PhysicsConfig::default();
        let mut w = WorldState::new();
        w.add_body(robot_at(0, 0.0, 0.0, 0.0, 2.0)).unwrap();
        for (k, &(x, y)) in boxes.iter().enumerate() {
            let b = box_at(k as BodyId + 1, 1.2 + x, 1.2 + y, 0.4, 1.0);
            w.add_body(b).unwrap();
        }
        let before = w.robot().unwrap().position();
        let (next, _) = apply_heading_step(&w, heading, dist, &cfg).unwrap();
        let moved = next.robot().unwrap().position().distance(before);
        prop_assert!(moved <= dist + cfg.robot_speed * cfg.dt + 1e-9);
    }
}
