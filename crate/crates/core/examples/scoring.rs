//! Scores hand-written episode records: a navigation run that reached the
//! goal after a detour, and a clearing run with two of three boxes out.

use pushnav::geometry::{Rect, Vec2};
use pushnav::grid::GoalGeometry;
use pushnav::metrics::{evaluate, EpisodeRecord, MetricReport, ObjectRecord, StaticMap, TaskClass};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let map = StaticMap::new(Rect::new(0.0, 0.0, 10.0, 10.0), 0.1, vec![]);

    let nav = EpisodeRecord {
        class: TaskClass::Navigation,
        robot_mass: 2.0,
        robot_path_length: 11.0,
        robot_start: Vec2::new(1.0, 1.0),
        robot_radius: 0.3,
        success: true,
        objects: vec![ObjectRecord {
            mass: 1.0,
            distance: 1.5,
            initial_position: Vec2::new(4.0, 4.0),
            radius: 0.25,
            success: false,
        }],
        goal: GoalGeometry::Disk {
            center: Vec2::new(7.0, 9.0),
            radius: 0.5,
        },
        static_map: map.clone(),
    };
    let m = evaluate(&nav)?;
    println!("navigation: E = {:.4}, I = {:.4}", m.efficiency(), m.effort());

    let boxes = [(Vec2::new(4.0, 5.0), true), (Vec2::new(6.0, 6.0), true), (Vec2::new(5.0, 7.5), false)];
    let clearing = EpisodeRecord {
        class: TaskClass::Manipulation,
        robot_mass: 2.0,
        robot_path_length: 14.0,
        robot_start: Vec2::new(5.0, 1.0),
        robot_radius: 0.3,
        success: false,
        objects: boxes
            .iter()
            .map(|&(p, done)| ObjectRecord {
                mass: 1.0,
                distance: if done { 2.5 } else { 0.4 },
                initial_position: p,
                radius: 0.22,
                success: done,
            })
            .collect(),
        goal: GoalGeometry::OutsideRect {
            rect: Rect::new(2.5, 3.0, 7.5, 8.0),
        },
        static_map: map,
    };
    let m = evaluate(&clearing)?;
    let report = MetricReport::new("area_clearing", 0, &clearing, &m);
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
