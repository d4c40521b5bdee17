//! Shortest static paths around a wall, as used for l0* and li*.

use pushnav::geometry::{Rect, Vec2};
use pushnav::grid::GoalGeometry;
use pushnav::metrics::{PathOracle, StaticMap};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let wall = Rect::new(4.0, 0.0, 4.4, 7.0).to_polygon()?;
    let map = StaticMap::new(Rect::new(0.0, 0.0, 10.0, 10.0), 0.1, vec![wall]);
    let mut oracle = PathOracle::new(&map);
    let start = Vec2::new(1.0, 1.0);
    let goal = GoalGeometry::Disk {
        center: Vec2::new(8.0, 1.0),
        radius: 0.3,
    };
    for inflation in [0.0, 0.3, 0.6] {
        let path = oracle.shortest(start, &goal, inflation)?;
        println!(
            "inflation {inflation:.1}: length {:.3} m via {} points, straight line {:.3} m",
            path.length,
            path.points.len(),
            start.distance(Vec2::new(8.0, 1.0)) - 0.3
        );
    }
    let out = GoalGeometry::OutsideRect {
        rect: Rect::new(2.5, 3.0, 7.5, 8.0),
    };
    let p = oracle.shortest(Vec2::new(5.0, 5.0), &out, 0.2)?;
    println!("leaving the clearance area from (5, 5): {:.3} m", p.length);
    Ok(())
}
