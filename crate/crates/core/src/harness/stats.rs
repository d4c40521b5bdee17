//! Box-plot statistics and the one-row summary table.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EpisodeRow, HarnessError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

/// Quantile of sorted data with linear interpolation between order
/// statistics (position `q * (n - 1)`).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn describe(values: &[f64]) -> Option<Stats> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(Stats {
        mean: v.iter().sum::<f64>() / v.len() as f64,
        median: quantile(&v, 0.5),
        q1: quantile(&v, 0.25),
        q3: quantile(&v, 0.75),
        min: v[0],
        max: v[v.len() - 1],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub env: String,
    pub policy: String,
    pub episodes: usize,
    pub failed: usize,
    pub efficiency: Option<Stats>,
    pub effort: Option<Stats>,
    /// Manipulation tasks only.
    pub success: Option<Stats>,
}

const METRICS: [&str; 3] = ["E", "I", "S"];
const FIELDS: [&str; 6] = ["mean", "median", "q1", "q3", "min", "max"];

impl Summary {
    pub fn from_rows(env: &str, policy: &str, rows: &[EpisodeRow]) -> Self {
        let e: Vec<f64> = rows.iter().map(|r| r.report.efficiency).collect();
        let i: Vec<f64> = rows.iter().map(|r| r.report.effort).collect();
        let s: Vec<f64> = rows.iter().filter_map(|r| r.report.success_score).collect();
        Self {
            env: env.to_string(),
            policy: policy.to_string(),
            episodes: rows.len(),
            failed: rows.iter().filter(|r| r.report.error.is_some()).count(),
            efficiency: describe(&e),
            effort: describe(&i),
            success: describe(&s),
        }
    }

    fn stats(&self) -> [Option<Stats>; 3] {
        [self.efficiency, self.effort, self.success]
    }

    pub fn headers() -> Vec<String> {
        let mut h: Vec<String> = ["env", "policy", "episodes", "failed"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for m in METRICS {
            for f in FIELDS {
                h.push(format!("{m}_{f}"));
            }
        }
        h
    }

    pub fn values(&self) -> Vec<String> {
        let mut v = vec![
            self.env.clone(),
            self.policy.clone(),
            self.episodes.to_string(),
            self.failed.to_string(),
        ];
        for s in self.stats() {
            match s {
                Some(s) => v.extend(
                    [s.mean, s.median, s.q1, s.q3, s.min, s.max]
                        .iter()
                        .map(|x| x.to_string()),
                ),
                None => v.extend(std::iter::repeat_n(String::new(), FIELDS.len())),
            }
        }
        v
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), HarnessError> {
        let csv_err = |e: csv::Error| HarnessError::Csv(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(Self::headers()).map_err(csv_err)?;
        w.write_record(self.values()).map_err(csv_err)?;
        w.flush().map_err(|e| HarnessError::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self, HarnessError> {
        let csv_err = |e: String| HarnessError::Csv(format!("{}: {e}", path.display()));
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(e.to_string()))?;
        let headers = r.headers().map_err(|e| csv_err(e.to_string()))?.clone();
        let row = r
            .records()
            .next()
            .ok_or_else(|| csv_err("no summary row".into()))?
            .map_err(|e| csv_err(e.to_string()))?;
        let get = |name: &str| -> Result<&str, HarnessError> {
            headers
                .iter()
                .position(|h| h == name)
                .and_then(|i| row.get(i))
                .ok_or_else(|| csv_err(format!("missing column {name}")))
        };
        let count = |name: &str| -> Result<usize, HarnessError> {
            get(name)?.parse().map_err(|e| csv_err(format!("{name}: {e}")))
        };
        let stats = |m: &str| -> Result<Option<Stats>, HarnessError> {
            let mut xs = [0.0; 6];
            for (x, f) in xs.iter_mut().zip(FIELDS) {
                let cell = get(&format!("{m}_{f}"))?;
                if cell.is_empty() {
                    return Ok(None);
                }
                *x = cell.parse().map_err(|e| csv_err(format!("{m}_{f}: {e}")))?;
            }
            Ok(Some(Stats {
                mean: xs[0],
                median: xs[1],
                q1: xs[2],
                q3: xs[3],
                min: xs[4],
                max: xs[5],
            }))
        };
        Ok(Self {
            env: get("env")?.to_string(),
            policy: get("policy")?.to_string(),
            episodes: count("episodes")?,
            failed: count("failed")?,
            efficiency: stats("E")?,
            effort: stats("I")?,
            success: stats("S")?,
        })
    }

    /// Largest absolute difference between matching statistics, or `None`
    /// if the two summaries do not have the same shape.
    pub fn max_difference(&self, other: &Summary) -> Option<f64> {
        if self.episodes != other.episodes || self.failed != other.failed {
            return None;
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.stats().iter().zip(other.stats()) {
            match (a, b) {
                (Some(a), Some(b)) => {
                    for (x, y) in [
                        (a.mean, b.mean),
                        (a.median, b.median),
                        (a.q1, b.q1),
                        (a.q3, b.q3),
                        (a.min, b.min),
                        (a.max, b.max),
                    ] {
                        worst = worst.max((x - y).abs());
                    }
                }
                (None, None) => {}
                _ => return None,
            }
        }
        Some(worst)
    }

    /// Human-readable table with four decimals.
    pub fn display_table(&self) -> String {
        let mut out = format!(
            "{} / {}: {} episodes, {} failed\n",
            self.env, self.policy, self.episodes, self.failed
        );
        out.push_str("metric      mean    median      q1        q3\n");
        for (name, s) in ["E", "I", "S"].iter().zip(self.stats()) {
            if let Some(s) = s {
                out.push_str(&format!(
                    "{name:<6} {:>9.4} {:>9.4} {:>9.4} {:>9.4}\n",
                    s.mean, s.median, s.q1, s.q3
                ));
            }
        }
        out
    }
}
