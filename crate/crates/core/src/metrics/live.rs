//! Scores of an episode that is still running, as if it ended now.

use super::{
    completed_shortest, evaluate, manip_efficiency, manip_interaction_effort, manip_success,
    nav_efficiency, nav_interaction_effort, EpisodeRecord, ManipMetrics, Metrics, MetricsError,
    NavMetrics, PathOracle, TaskClass,
};

/// Caches the static shortest paths of one episode so scores can be
/// refreshed every tick.
///
/// Navigation scores leave out the success indicator until the episode is
/// over. Manipulation scores are exactly the post-episode formulas applied
/// to the current sums.
#[derive(Debug, Default, Clone)]
pub struct LiveMetrics {
    l0_star: Option<Option<f64>>,
    /// Completion flags the cached values were computed for.
    manip: Option<(Vec<bool>, f64, Vec<Option<f64>>)>,
}

impl LiveMetrics {
    pub fn new() -> Self {
        Self::default()
    }

    /// Forget the cache; call when the episode changes.
    pub fn clear(&mut self) {
        *self = Self::default();
    }

    pub fn update(&mut self, record: &EpisodeRecord, finished: bool) -> Result<Metrics, MetricsError> {
        record.validate()?;
        match record.class {
            TaskClass::Navigation if finished => {
                // Same path as the offline evaluation, so the final tick agrees with it.
                evaluate(record)
            }
            TaskClass::Navigation => {
                let star = match self.l0_star {
                    Some(s) => s,
                    None => {
                        let mut oracle = PathOracle::new(&record.static_map);
                        let s = match oracle.shortest(record.robot_start, &record.goal, record.robot_radius) {
                            Ok(p) => Some(p.length),
                            Err(MetricsError::Unreachable(_)) => None,
                            Err(e) => return Err(e),
                        };
                        self.l0_star = Some(s);
                        s
                    }
                };
                let efficiency = if record.robot_path_length > 0.0 {
                    nav_efficiency(true, star, record.robot_path_length)?
                } else if star.is_some() {
                    1.0
                } else {
                    0.0
                };
                Ok(Metrics::Navigation(NavMetrics {
                    efficiency,
                    effort: nav_interaction_effort(record),
                    l0_star: star,
                }))
            }
            TaskClass::Manipulation => {
                let flags: Vec<bool> = record.objects.iter().map(|o| o.success).collect();
                let stale = !matches!(&self.manip, Some((f, _, _)) if *f == flags);
                if stale {
                    let mut oracle = PathOracle::new(&record.static_map);
                    let (l_star, shortest) = completed_shortest(record, &mut oracle)?;
                    self.manip = Some((flags, l_star, shortest));
                }
                let (_, l_star, shortest) = self.manip.as_ref().expect("cache filled above");
                Ok(Metrics::Manipulation(ManipMetrics {
                    success: manip_success(record)?,
                    efficiency: manip_efficiency(*l_star, record.robot_path_length, record.completed()),
                    effort: manip_interaction_effort(record, shortest)?,
                    l_star: *l_star,
                    object_shortest: shortest.clone(),
                }))
            }
        }
    }
}
