//! The completion graph behind L*(K') and its minimum spanning tree.

use serde::{Deserialize, Serialize};

use super::paths::PathOracle;
use super::{EpisodeRecord, MetricsError};
use crate::geometry::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum VertexRole {
    RobotStart,
    /// Initial position of a completed object (index into the record's objects).
    ObjectStart { object: usize },
    /// The goal point nearest to that object.
    GoalPoint { object: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeClass {
    RobotObject,
    ObjectObject,
    ObjectGoal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub position: Vec2,
    pub role: VertexRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
    pub class: EdgeClass,
}

/// Vertex 0 is the robot start, vertices `1..=K'` the completed objects'
/// starts and `K'+1..=2K'` their nearest goal points (same order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanningGraph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
}

impl SpanningGraph {
    pub fn completed(&self) -> usize {
        (self.vertices.len() - 1) / 2
    }

    pub fn weighted_edges(&self) -> Vec<(usize, usize, f64)> {
        self.edges.iter().map(|e| (e.u, e.v, e.weight)).collect()
    }
}

/// Builds the graph over the robot start and every completed object.
/// Travel edges use the robot's inflation; object-to-goal edges use each
/// object's own inflation (they are the objects' li*).
pub fn build_spanning_graph(
    record: &EpisodeRecord,
    oracle: &mut PathOracle<'_>,
) -> Result<SpanningGraph, MetricsError> {
    let done: Vec<usize> = record
        .objects
        .iter()
        .enumerate()
        .filter(|(_, o)| o.success)
        .map(|(i, _)| i)
        .collect();
    if done.is_empty() {
        return Err(MetricsError::InvalidRecord(
            "spanning graph needs at least one completed object".into(),
        ));
    }
    let k = done.len();
    let mut vertices = Vec::with_capacity(2 * k + 1);
    vertices.push(Vertex {
        position: record.robot_start,
        role: VertexRole::RobotStart,
    });
    for &i in &done {
        vertices.push(Vertex {
            position: record.objects[i].initial_position,
            role: VertexRole::ObjectStart { object: i },
        });
    }
    let mut edges = Vec::new();
    for (slot, &i) in done.iter().enumerate() {
        let obj = &record.objects[i];
        let path = oracle
            .shortest(obj.initial_position, &record.goal, obj.radius)
            .map_err(|_| MetricsError::Unreachable(format!("goal from vertex {}", slot + 1)))?;
        vertices.push(Vertex {
            position: path.end(),
            role: VertexRole::GoalPoint { object: i },
        });
        edges.push(Edge {
            u: slot + 1,
            v: k + slot + 1,
            weight: path.length,
            class: EdgeClass::ObjectGoal,
        });
    }

    // Travel edges from the robot and from every lower-numbered object.
    let r = record.robot_radius;
    for slot in 0..k {
        let target = vertices[slot + 1].position;
        for from in 0..=slot {
            let weight = oracle
                .point_distance(vertices[from].position, target, r)?
                .ok_or_else(|| {
                    MetricsError::Unreachable(format!("vertex {} from vertex {from}", slot + 1))
                })?;
            edges.push(Edge {
                u: from,
                v: slot + 1,
                weight,
                class: if from == 0 {
                    EdgeClass::RobotObject
                } else {
                    EdgeClass::ObjectObject
                },
            });
        }
    }
    edges.sort_by_key(|e| (e.u, e.v));
    Ok(SpanningGraph { vertices, edges })
}

/// Minimum spanning tree of an undirected graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    pub total: f64,
    /// Chosen edges as `(u, v)` with `u < v`, in selection order.
    pub edges: Vec<(usize, usize)>,
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

/// Kruskal's algorithm. Ties are broken by weight, then by the
/// `(lower, higher)` vertex pair.
pub fn minimum_spanning_tree(
    vertex_count: usize,
    edges: &[(usize, usize, f64)],
) -> Result<SpanningTree, MetricsError> {
    let mut sorted: Vec<(f64, usize, usize)> = Vec::with_capacity(edges.len());
    for &(u, v, w) in edges {
        if u >= vertex_count || v >= vertex_count || !(w >= 0.0) || !w.is_finite() {
            return Err(MetricsError::InvalidRecord(format!(
                "bad edge ({u}, {v}, {w}) for {vertex_count} vertices"
            )));
        }
        sorted.push((w, u.min(v), u.max(v)));
    }
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut dsu = DisjointSet::new(vertex_count);
    let mut tree = SpanningTree {
        total: 0.0,
        edges: Vec::new(),
    };
    for (w, u, v) in sorted {
        if u != v && dsu.union(u, v) {
            tree.total += w;
            tree.edges.push((u, v));
        }
    }
    if vertex_count > 0 && tree.edges.len() + 1 != vertex_count {
        let mut components: Vec<Vec<usize>> = Vec::new();
        let mut root_slot = std::collections::BTreeMap::new();
        for x in 0..vertex_count {
            let r = dsu.find(x);
            let slot = *root_slot.entry(r).or_insert_with(|| {
                components.push(Vec::new());
                components.len() - 1
            });
            components[slot].push(x);
        }
        return Err(MetricsError::Disconnected(components));
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_takes_two_lightest_edges() {
        let t = minimum_spanning_tree(3, &[(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0)]).unwrap();
        assert_eq!(t.total, 3.0);
        assert_eq!(t.edges, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn single_edge_is_its_weight() {
        let t = minimum_spanning_tree(2, &[(1, 0, 2.5)]).unwrap();
        assert_eq!(t.total, 2.5);
    }

    #[test]
    fn ties_prefer_lower_vertex_pairs() {
        let t = minimum_spanning_tree(3, &[(1, 2, 1.0), (0, 2, 1.0), (0, 1, 1.0)]).unwrap();
        assert_eq!(t.edges, vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn disconnected_graph_lists_components() {
        let err = minimum_spanning_tree(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap_err();
        assert_eq!(err, MetricsError::Disconnected(vec![vec![0, 1], vec![2, 3]]));
    }
}
