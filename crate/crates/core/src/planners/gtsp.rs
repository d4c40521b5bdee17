//! Generalized TSP over vertex sets with directed weights: visit exactly one
//! vertex of every set, starting at a fixed vertex, without returning.

use serde::{Deserialize, Serialize};

use super::PlannerError;

/// Largest set count solved by the exact subset DP.
pub const EXACT_SET_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gtsp {
    /// `weights[u][v]`, infinite when there is no edge.
    pub weights: Vec<Vec<f64>>,
    /// Disjoint vertex sets. The start vertex belongs to none of them.
    pub sets: Vec<Vec<usize>>,
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    /// One vertex per set, in visiting order, start excluded.
    pub vertices: Vec<usize>,
    pub cost: f64,
}

impl Gtsp {
    pub fn vertex_count(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<(), PlannerError> {
        let n = self.weights.len();
        if self.weights.iter().any(|row| row.len() != n) {
            return Err(PlannerError::InvalidInstance("weight matrix is not square".into()));
        }
        if self.start >= n {
            return Err(PlannerError::InvalidInstance("start vertex out of range".into()));
        }
        let mut seen = vec![false; n];
        seen[self.start] = true;
        for (k, set) in self.sets.iter().enumerate() {
            if set.is_empty() {
                return Err(PlannerError::InvalidInstance(format!("set {k} is empty")));
            }
            for &v in set {
                if v >= n || seen[v] {
                    return Err(PlannerError::InvalidInstance(format!(
                        "vertex {v} of set {k} is out of range or shared"
                    )));
                }
                seen[v] = true;
            }
        }
        if self
            .weights
            .iter()
            .flatten()
            .any(|w| w.is_nan() || *w < 0.0)
        {
            return Err(PlannerError::InvalidInstance("negative or NaN weight".into()));
        }
        Ok(())
    }

    fn set_of(&self) -> Vec<usize> {
        let mut s = vec![usize::MAX; self.weights.len()];
        for (k, set) in self.sets.iter().enumerate() {
            for &v in set {
                s[v] = k;
            }
        }
        s
    }

    /// Set that no tour can enter, if any.
    fn unreachable_set(&self) -> Option<usize> {
        let set_of = self.set_of();
        self.sets.iter().position(|set| {
            set.iter().all(|&v| {
                (0..self.weights.len())
                    .filter(|&u| u != v && set_of[u] != set_of[v])
                    .all(|u| !self.weights[u][v].is_finite())
            })
        })
    }

    fn infeasible(&self) -> PlannerError {
        match self.unreachable_set() {
            Some(k) => PlannerError::Infeasible(k),
            None => PlannerError::InvalidInstance("no finite tour visits every set".into()),
        }
    }
}

/// Cost of visiting `vertices` in order from the start.
pub fn tour_cost(g: &Gtsp, vertices: &[usize]) -> f64 {
    let mut at = g.start;
    let mut cost = 0.0;
    for &v in vertices {
        cost += g.weights[at][v];
        at = v;
    }
    cost
}

/// Exact subset DP: `dp[mask][v]` is the cheapest path from the start that
/// covers the sets in `mask` and ends at `v`.
pub fn solve_exact(g: &Gtsp) -> Result<Tour, PlannerError> {
    g.validate()?;
    let s = g.sets.len();
    if s == 0 {
        return Ok(Tour {
            vertices: vec![],
            cost: 0.0,
        });
    }
    if s > 20 {
        return Err(PlannerError::InvalidInstance(format!(
            "{s} sets is too many for the exact solver"
        )));
    }
    let n = g.vertex_count();
    let set_of = g.set_of();
    let full = (1usize << s) - 1;
    let mut dp = vec![f64::INFINITY; (full + 1) * n];
    let mut parent = vec![usize::MAX; (full + 1) * n];
    for (k, set) in g.sets.iter().enumerate() {
        for &v in set {
            dp[(1 << k) * n + v] = g.weights[g.start][v];
        }
    }
    for mask in 1..=full {
        for v in 0..n {
            let cur = dp[mask * n + v];
            if !cur.is_finite() {
                continue;
            }
            for (t, set) in g.sets.iter().enumerate() {
                if mask & (1 << t) != 0 {
                    continue;
                }
                let next = mask | (1 << t);
                for &u in set {
                    let c = cur + g.weights[v][u];
                    if c < dp[next * n + u] {
                        dp[next * n + u] = c;
                        parent[next * n + u] = v;
                    }
                }
            }
        }
    }
    let (end, cost) = (0..n)
        .filter(|&v| set_of[v] != usize::MAX)
        .map(|v| (v, dp[full * n + v]))
        .fold((usize::MAX, f64::INFINITY), |best, (v, c)| if c < best.1 { (v, c) } else { best });
    if !cost.is_finite() {
        return Err(g.infeasible());
    }
    let mut vertices = Vec::with_capacity(s);
    let (mut mask, mut v) = (full, end);
    while v != usize::MAX {
        vertices.push(v);
        let p = parent[mask * n + v];
        mask &= !(1 << set_of[v]);
        v = p;
    }
    vertices.reverse();
    Ok(Tour { vertices, cost })
}

/// Best vertex choice for a fixed set order (layered shortest path).
fn best_for_order(g: &Gtsp, order: &[usize]) -> Tour {
    let mut layer: Vec<(usize, f64, Vec<usize>)> = vec![(g.start, 0.0, vec![])];
    for &k in order {
        layer = g.sets[k]
            .iter()
            .map(|&u| {
                let (from, c) = layer
                    .iter()
                    .enumerate()
                    .map(|(i, (v, c, _))| (i, c + g.weights[*v][u]))
                    .fold((0, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b });
                let mut path = layer[from].2.clone();
                path.push(u);
                (u, c, path)
            })
            .collect();
    }
    let best = layer
        .into_iter()
        .fold(None::<(usize, f64, Vec<usize>)>, |b, x| match b {
            Some(b) if b.1 <= x.1 => Some(b),
            _ => Some(x),
        })
        .expect("at least the start layer");
    Tour {
        vertices: best.2,
        cost: best.1,
    }
}

/// Nearest-neighbour construction, then first-improvement 2-opt over the
/// set order with the vertex choice re-optimized for every order.
pub fn solve_heuristic(g: &Gtsp) -> Result<Tour, PlannerError> {
    g.validate()?;
    let s = g.sets.len();
    let set_of = g.set_of();
    let mut remaining = vec![true; s];
    let mut order = Vec::with_capacity(s);
    let mut at = g.start;
    for _ in 0..s {
        let (mut best_v, mut best_c) = (usize::MAX, f64::INFINITY);
        for (k, set) in g.sets.iter().enumerate() {
            if !remaining[k] {
                continue;
            }
            for &v in set {
                if g.weights[at][v] < best_c || best_v == usize::MAX {
                    best_c = g.weights[at][v];
                    best_v = v;
                }
            }
        }
        let k = set_of[best_v];
        remaining[k] = false;
        order.push(k);
        at = best_v;
    }

    let mut best = best_for_order(g, &order);
    'improve: loop {
        for i in 0..s {
            for j in i + 1..s {
                order[i..=j].reverse();
                let t = best_for_order(g, &order);
                if t.cost < best.cost - 1e-12 {
                    best = t;
                    continue 'improve;
                }
                order[i..=j].reverse();
            }
        }
        break;
    }
    if !best.cost.is_finite() {
        return Err(g.infeasible());
    }
    Ok(best)
}

/// Exact for up to [`EXACT_SET_LIMIT`] sets, heuristic beyond.
pub fn solve_gtsp(g: &Gtsp) -> Result<Tour, PlannerError> {
    if g.sets.len() <= EXACT_SET_LIMIT {
        solve_exact(g)
    } else {
        solve_heuristic(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(g: &Gtsp) -> f64 {
        fn rec(g: &Gtsp, at: usize, used: &mut Vec<bool>, cost: f64, best: &mut f64) {
            if used.iter().all(|u| *u) {
                *best = best.min(cost);
                return;
            }
            for k in 0..g.sets.len() {
                if used[k] {
                    continue;
                }
                used[k] = true;
                for &v in &g.sets[k] {
                    rec(g, v, used, cost + g.weights[at][v], best);
                }
                used[k] = false;
            }
        }
        let mut best = f64::INFINITY;
        rec(g, g.start, &mut vec![false; g.sets.len()], 0.0, &mut best);
        best
    }

    fn instance(sizes: &[usize], w: &[f64]) -> Gtsp {
        let n = 1 + sizes.iter().sum::<usize>();
        let mut sets = Vec::new();
        let mut next = 1;
        for &k in sizes {
            sets.push((next..next + k).collect());
            next += k;
        }
        let weights = (0..n)
            .map(|u| (0..n).map(|v| if u == v { 0.0 } else { w[(u * n + v) % w.len()] }).collect())
            .collect();
        Gtsp {
            weights,
            sets,
            start: 0,
        }
    }

    #[test]
    fn single_set_picks_cheapest_vertex() {
        let g = Gtsp {
            weights: vec![
                vec![0.0, 5.0, 2.0, 7.0],
                vec![0.0; 4],
                vec![0.0; 4],
                vec![0.0; 4],
            ],
            sets: vec![vec![1, 2, 3]],
            start: 0,
        };
        let t = solve_exact(&g).unwrap();
        assert_eq!(t.vertices, vec![2]);
        assert_eq!(t.cost, 2.0);
    }

    #[test]
    fn unreachable_set_is_named() {
        let inf = f64::INFINITY;
        let g = Gtsp {
            weights: vec![
                vec![0.0, 1.0, inf],
                vec![1.0, 0.0, inf],
                vec![inf, inf, 0.0],
            ],
            sets: vec![vec![1], vec![2]],
            start: 0,
        };
        assert_eq!(solve_exact(&g).unwrap_err(), PlannerError::Infeasible(1));
        assert_eq!(solve_heuristic(&g).unwrap_err(), PlannerError::Infeasible(1));
    }

    #[test]
    fn directed_weights_matter() {
        // Going 1 -> 2 is cheap, 2 -> 1 is expensive.
        let g = Gtsp {
            weights: vec![
                vec![0.0, 1.0, 1.0],
                vec![9.0, 0.0, 1.0],
                vec![9.0, 9.0, 0.0],
            ],
            sets: vec![vec![1], vec![2]],
            start: 0,
        };
        let t = solve_exact(&g).unwrap();
        assert_eq!(t.vertices, vec![1, 2]);
        assert_eq!(t.cost, 2.0);
    }

    #[test]
    fn rejects_malformed_instances() {
        let mut g = instance(&[2, 2], &[1.0]);
        g.sets[1].push(1);
        assert!(matches!(solve_exact(&g), Err(PlannerError::InvalidInstance(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn exact_matches_brute_force(
            sizes in prop::collection::vec(1usize..=4, 1..=5),
            w in prop::collection::vec(0.0f64..10.0, 50..80),
        ) {
            let g = instance(&sizes, &w);
            let t = solve_exact(&g).unwrap();
            let oracle = brute_force(&g);
            prop_assert!((t.cost - oracle).abs() < 1e-9);
            prop_assert!((tour_cost(&g, &t.vertices) - t.cost).abs() < 1e-9);
            // One vertex per set.
            let mut hit = vec![0; g.sets.len()];
            for v in &t.vertices {
                hit[g.sets.iter().position(|s| s.contains(v)).unwrap()] += 1;
            }
            prop_assert!(hit.iter().all(|h| *h == 1));

            let h = solve_heuristic(&g).unwrap();
            prop_assert!(h.cost >= t.cost - 1e-9);
            prop_assert!((tour_cost(&g, &h.vertices) - h.cost).abs() < 1e-9);
        }
    }

    #[test]
    fn heuristic_handles_large_instances() {
        let w: Vec<f64> = (0..997).map(|i| ((i * 7919) % 101) as f64 / 10.0).collect();
        let g = instance(&[4; 14], &w);
        let t = solve_gtsp(&g).unwrap();
        assert_eq!(t.vertices.len(), 14);
        assert!((tour_cost(&g, &t.vertices) - t.cost).abs() < 1e-9);
    }
}
