//! Efficiency, interaction-effort and success scores for navigation- and
//! manipulation-centric episodes.
//!
//! Navigation:
//!
//! * `E_nav = 1[success] * l0* / l0`, clamped to `[0, 1]`
//! * `I_nav = m0 l0 / sum_{i=0..K} mi li`
//!
//! Manipulation, with `K'` of `K` sub-tasks completed:
//!
//! * `S = K' / K`
//! * `E_manip = L*(K') / l0` (not clamped; 0 when `K' = 0`)
//! * `I_manip = (m0 l0 + sum_i 1[success_i] mi li*) / sum_{i=0..K} mi li`
//!
//! `L*(K')` is the total weight of the minimum spanning tree over the robot
//! start, the completed objects' starts and their nearest goal points.
//! Friction coefficient and gravity cancel out of both effort ratios, so
//! none of these depend on the physics configuration.

mod graph;
mod live;
mod paths;

pub use graph::{
    build_spanning_graph, minimum_spanning_tree, Edge, EdgeClass, SpanningGraph, SpanningTree,
    Vertex, VertexRole,
};
pub use live::LiveMetrics;
pub use paths::{shortest_static_path, PathOracle, StaticMap, StaticPath};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec2;
use crate::grid::GoalGeometry;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("invalid episode record: {0}")]
    InvalidRecord(String),
    #[error("unreachable: {0}")]
    Unreachable(String),
    #[error("graph is disconnected; components {0:?}")]
    Disconnected(Vec<Vec<usize>>),
    #[error("degenerate episode: {0}")]
    Degenerate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskClass {
    Navigation,
    Manipulation,
}

/// One movable object as seen by the metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub mass: f64,
    /// Centroid arc length over the episode (li).
    pub distance: f64,
    pub initial_position: Vec2,
    /// Inflation radius for this object's shortest push path.
    pub radius: f64,
    /// Sub-task indicator (delivered / cleared).
    pub success: bool,
}

/// Everything the metrics need from a finished (or in-progress) episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub class: TaskClass,
    pub robot_mass: f64,
    /// Robot path length l0 in meters.
    pub robot_path_length: f64,
    pub robot_start: Vec2,
    /// Inflation radius for robot paths on the static map.
    pub robot_radius: f64,
    /// Navigation goal reached. Unused for manipulation tasks.
    pub success: bool,
    pub objects: Vec<ObjectRecord>,
    pub goal: GoalGeometry,
    pub static_map: StaticMap,
}

impl EpisodeRecord {
    pub fn validate(&self) -> Result<(), MetricsError> {
        let bad = |msg: String| Err(MetricsError::InvalidRecord(msg));
        if !(self.robot_mass > 0.0 && self.robot_mass.is_finite()) {
            return bad(format!("robot mass {}", self.robot_mass));
        }
        if !(self.robot_path_length >= 0.0 && self.robot_path_length.is_finite()) {
            return bad(format!("robot path length {}", self.robot_path_length));
        }
        for (i, o) in self.objects.iter().enumerate() {
            if !(o.mass > 0.0 && o.mass.is_finite()) {
                return bad(format!("object {i} mass {}", o.mass));
            }
            if !(o.distance >= 0.0 && o.distance.is_finite()) {
                return bad(format!("object {i} distance {}", o.distance));
            }
        }
        Ok(())
    }

    /// K.
    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    /// K'.
    pub fn completed(&self) -> usize {
        self.objects.iter().filter(|o| o.success).count()
    }

    /// sum_{i=0..K} mi li, the robot included.
    pub fn total_work(&self) -> f64 {
        self.robot_mass * self.robot_path_length
            + self
                .objects
                .iter()
                .map(|o| o.mass * o.distance)
                .sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavMetrics {
    pub efficiency: f64,
    pub effort: f64,
    /// Shortest static path; `None` when the goal is unreachable.
    pub l0_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManipMetrics {
    pub success: Ratio<usize>,
    pub efficiency: f64,
    pub effort: f64,
    pub l_star: f64,
    /// li* for completed objects, `None` for the rest.
    pub object_shortest: Vec<Option<f64>>,
}

impl ManipMetrics {
    pub fn success_score(&self) -> f64 {
        ratio_to_f64(self.success)
    }
}

pub fn ratio_to_f64(r: Ratio<usize>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Metrics {
    Navigation(NavMetrics),
    Manipulation(ManipMetrics),
}

impl Metrics {
    pub fn efficiency(&self) -> f64 {
        match self {
            Metrics::Navigation(m) => m.efficiency,
            Metrics::Manipulation(m) => m.efficiency,
        }
    }

    pub fn effort(&self) -> f64 {
        match self {
            Metrics::Navigation(m) => m.effort,
            Metrics::Manipulation(m) => m.effort,
        }
    }

    pub fn success_score(&self) -> Option<f64> {
        match self {
            Metrics::Navigation(_) => None,
            Metrics::Manipulation(m) => Some(m.success_score()),
        }
    }
}

/// `1[success] * l0* / l0` clamped to `[0, 1]`. An unreachable goal
/// (`l0_star = None`) scores 0.
pub fn nav_efficiency(success: bool, l0_star: Option<f64>, l0: f64) -> Result<f64, MetricsError> {
    if !success {
        return Ok(0.0);
    }
    if l0 <= 0.0 {
        return Err(MetricsError::Degenerate(
            "goal reached with zero robot path length".into(),
        ));
    }
    let Some(star) = l0_star else {
        log::warn!("goal reported reached but no static path exists; efficiency set to 0");
        return Ok(0.0);
    };
    let e = star / l0;
    if e > 1.0 {
        log::debug!("efficiency {e} clamped to 1 (l0 = {l0}, l0* = {star})");
    }
    Ok(e.clamp(0.0, 1.0))
}

/// `m0 l0 / sum mi li`. An episode with no motion at all scores 1.
pub fn nav_interaction_effort(record: &EpisodeRecord) -> f64 {
    let total = record.total_work();
    if total <= 0.0 {
        return 1.0;
    }
    record.robot_mass * record.robot_path_length / total
}

pub fn manip_success(record: &EpisodeRecord) -> Result<Ratio<usize>, MetricsError> {
    let k = record.object_count();
    if k == 0 {
        return Err(MetricsError::InvalidRecord(
            "manipulation record without objects".into(),
        ));
    }
    Ok(Ratio::new(record.completed(), k))
}

/// `L* / l0`, never clamped. Zero when nothing was completed.
pub fn manip_efficiency(l_star: f64, l0: f64, completed: usize) -> f64 {
    if completed == 0 || l0 <= 0.0 {
        return 0.0;
    }
    l_star / l0
}

/// `(m0 l0 + sum 1[success_i] mi li*) / sum mi li`. `object_shortest[i]`
/// must be set for every completed object.
pub fn manip_interaction_effort(
    record: &EpisodeRecord,
    object_shortest: &[Option<f64>],
) -> Result<f64, MetricsError> {
    let mut minimal = record.robot_mass * record.robot_path_length;
    for (i, o) in record.objects.iter().enumerate() {
        if o.success {
            let li = object_shortest.get(i).copied().flatten().ok_or_else(|| {
                MetricsError::InvalidRecord(format!("missing shortest distance for object {i}"))
            })?;
            minimal += o.mass * li;
        }
    }
    let total = record.total_work();
    if total <= 0.0 {
        return Ok(1.0);
    }
    Ok(minimal / total)
}

pub fn evaluate_navigation(record: &EpisodeRecord) -> Result<NavMetrics, MetricsError> {
    record.validate()?;
    let mut oracle = PathOracle::new(&record.static_map);
    let l0_star = match oracle.shortest(record.robot_start, &record.goal, record.robot_radius) {
        Ok(p) => Some(p.length),
        Err(MetricsError::Unreachable(msg)) => {
            log::warn!("shortest path unavailable: {msg}");
            None
        }
        Err(e) => return Err(e),
    };
    Ok(NavMetrics {
        efficiency: nav_efficiency(record.success, l0_star, record.robot_path_length)?,
        effort: nav_interaction_effort(record),
        l0_star,
    })
}

pub fn evaluate_manipulation(record: &EpisodeRecord) -> Result<ManipMetrics, MetricsError> {
    record.validate()?;
    let success = manip_success(record)?;
    let mut oracle = PathOracle::new(&record.static_map);
    let (l_star, object_shortest) = completed_shortest(record, &mut oracle)?;
    Ok(ManipMetrics {
        success,
        efficiency: manip_efficiency(l_star, record.robot_path_length, record.completed()),
        effort: manip_interaction_effort(record, &object_shortest)?,
        l_star,
        object_shortest,
    })
}

/// `L*(K')` and the li* of every completed object. Depends only on which
/// objects are complete, not on how far anything has moved.
pub(crate) fn completed_shortest(
    record: &EpisodeRecord,
    oracle: &mut PathOracle,
) -> Result<(f64, Vec<Option<f64>>), MetricsError> {
    if record.completed() == 0 {
        return Ok((0.0, vec![None; record.objects.len()]));
    }
    let graph = build_spanning_graph(record, oracle)?;
    let tree = minimum_spanning_tree(graph.vertices.len(), &graph.weighted_edges())?;
    let mut shortest = vec![None; record.objects.len()];
    for e in graph.edges.iter().filter(|e| e.class == EdgeClass::ObjectGoal) {
        if let VertexRole::ObjectStart { object } = graph.vertices[e.u].role {
            shortest[object] = Some(e.weight);
        }
    }
    Ok((tree.total, shortest))
}

pub fn evaluate(record: &EpisodeRecord) -> Result<Metrics, MetricsError> {
    match record.class {
        TaskClass::Navigation => evaluate_navigation(record).map(Metrics::Navigation),
        TaskClass::Manipulation => evaluate_manipulation(record).map(Metrics::Manipulation),
    }
}

/// Per-object line of a [`MetricReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectReport {
    pub mass: f64,
    pub distance: f64,
    pub success: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shortest: Option<f64>,
}

/// One episode's scores as written to `episodes.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub env: String,
    pub seed: u64,
    #[serde(rename = "E")]
    pub efficiency: f64,
    #[serde(rename = "I")]
    pub effort: f64,
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    pub success_score: Option<f64>,
    pub l0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l0_star: Option<f64>,
    #[serde(rename = "L_star", default, skip_serializing_if = "Option::is_none")]
    pub l_star: Option<f64>,
    pub per_object: Vec<ObjectReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl MetricReport {
    pub fn new(env: impl Into<String>, seed: u64, record: &EpisodeRecord, metrics: &Metrics) -> Self {
        let shortest = match metrics {
            Metrics::Manipulation(m) => m.object_shortest.clone(),
            Metrics::Navigation(_) => vec![None; record.objects.len()],
        };
        Self {
            env: env.into(),
            seed,
            efficiency: metrics.efficiency(),
            effort: metrics.effort(),
            success_score: metrics.success_score(),
            l0: record.robot_path_length,
            l0_star: match metrics {
                Metrics::Navigation(m) => m.l0_star,
                Metrics::Manipulation(_) => None,
            },
            l_star: match metrics {
                Metrics::Manipulation(m) => Some(m.l_star),
                Metrics::Navigation(_) => None,
            },
            per_object: record
                .objects
                .iter()
                .zip(shortest)
                .map(|(o, s)| ObjectReport {
                    mass: o.mass,
                    distance: o.distance,
                    success: o.success,
                    shortest: s,
                })
                .collect(),
            error: None,
        }
    }

    /// Report for an episode that could not be completed: every score is 0.
    pub fn failed(env: impl Into<String>, seed: u64, class: TaskClass, error: impl Into<String>) -> Self {
        Self {
            env: env.into(),
            seed,
            efficiency: 0.0,
            effort: 0.0,
            success_score: (class == TaskClass::Manipulation).then_some(0.0),
            l0: 0.0,
            l0_star: None,
            l_star: None,
            per_object: Vec::new(),
            error: Some(error.into()),
        }
    }
}

#[cfg(test)]
mod tests;
