//! Solves a small generalized TSP directly: pick one vertex per set and an
//! open tour from the start of least total weight.

use pushnav::geometry::Vec2;
use pushnav::planners::{solve_exact, solve_heuristic, Gtsp};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Vertex 0 is the start; sets of two candidate points each.
    let points = [
        Vec2::new(0.0, 0.0),
        Vec2::new(1.0, 3.0),
        Vec2::new(2.0, 1.0),
        Vec2::new(5.0, 5.0),
        Vec2::new(4.0, 0.5),
        Vec2::new(6.0, 2.0),
        Vec2::new(1.0, 6.0),
    ];
    let weights: Vec<Vec<f64>> = points
        .iter()
        .map(|a| points.iter().map(|b| a.distance(*b)).collect())
        .collect();
    let problem = Gtsp {
        weights,
        sets: vec![vec![1, 2], vec![3, 4], vec![5, 6]],
        start: 0,
    };
    let exact = solve_exact(&problem)?;
    let heuristic = solve_heuristic(&problem)?;
    println!("exact:     {:?} cost {:.4}", exact.vertices, exact.cost);
    println!("heuristic: {:?} cost {:.4}", heuristic.vertices, heuristic.cost);
    Ok(())
}
