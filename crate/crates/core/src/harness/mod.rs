//! Seeded batch evaluation: the episode runner, per-episode logs, summary
//! statistics and log replay.
//!
//! Output directory layout:
//!
//! ```text
//! run.json              the run specification
//! episodes.jsonl        one scored episode per line, in index order
//! summary.csv           one row of mean/median/quartiles per metric
//! logs/episode_NNNNN.json       full action logs (replayable)
//! snapshots/episode_NNNNN.json  final world states, when requested
//! ```

pub mod stats;

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use stats::{describe, quantile, Stats, Summary};

use crate::env::{Action, Env, EnvConfig, EnvError, EpisodeStatus, RewardBreakdown};
use crate::geometry::Pose;
use crate::metrics::{evaluate, EpisodeRecord, MetricReport, TaskClass};
use crate::physics::WorldState;
use crate::planners::{policy_with_params, Decision, Policy, PlannerError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error("replay diverged at step {step}: {detail}")]
    Divergence { step: usize, detail: String },
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn json(path: &Path, source: serde_json::Error) -> Self {
        Self::Json {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Increment of the SplitMix64 generator.
pub const SEED_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function applied to `state`.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of episode `index`: output `index + 1` of a SplitMix64 stream
/// seeded with `base`. Every policy evaluated with the same base seed sees
/// the same layout at each index.
pub fn episode_seed(base: u64, index: u64) -> u64 {
    splitmix64(base.wrapping_add(SEED_GAMMA.wrapping_mul(index.wrapping_add(1))))
}

fn default_episodes() -> usize {
    200
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub config: EnvConfig,
    pub policy: String,
    #[serde(default)]
    pub policy_params: serde_json::Value,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Worker threads; all cores when unset.
    #[serde(default)]
    pub threads: Option<usize>,
    /// Write replayable per-episode logs.
    #[serde(default = "default_true")]
    pub save_logs: bool,
    /// Write the final world state of every episode.
    #[serde(default)]
    pub snapshots: bool,
}

impl RunSpec {
    pub fn new(config: EnvConfig, policy: &str) -> Self {
        Self {
            config,
            policy: policy.to_string(),
            policy_params: serde_json::Value::Null,
            episodes: default_episodes(),
            base_seed: 0,
            output: None,
            threads: None,
            save_logs: true,
            snapshots: false,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.config
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let policy = self.make_policy()?;
        if let Some(mode) = policy.required_mode() {
            if !self.config.kind.allows(mode) {
                return Err(HarnessError::Config(format!(
                    "policy {} needs {mode:?} actions, which {} does not accept",
                    self.policy, self.config.kind
                )));
            }
        }
        if self.threads == Some(0) {
            return Err(HarnessError::Config("threads must be at least 1".into()));
        }
        Ok(())
    }

    pub fn make_policy(&self) -> Result<Box<dyn Policy>, HarnessError> {
        policy_with_params(&self.policy, &self.policy_params).map_err(|e| HarnessError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub action: Action,
    pub reward: RewardBreakdown,
    /// Robot pose after the action.
    pub pose: Pose,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub index: usize,
    pub seed: u64,
    pub policy: String,
    /// The exact configuration the episode ran with.
    pub config: EnvConfig,
    pub steps: Vec<StepRecord>,
    pub status: EpisodeStatus,
    /// The policy stopped before the environment ended the episode.
    pub ended_by_policy: bool,
    pub record: Option<EpisodeRecord>,
    pub report: MetricReport,
    pub error: Option<String>,
    #[serde(skip)]
    pub wall_time: Duration,
    #[serde(skip)]
    pub final_world: Option<WorldState>,
}

/// Compares everything that is written to disk; wall time and the final
/// world are left out.
impl PartialEq for EpisodeLog {
    fn eq(&self, o: &Self) -> bool {
        self.index == o.index
            && self.seed == o.seed
            && self.policy == o.policy
            && self.config == o.config
            && self.steps == o.steps
            && self.status == o.status
            && self.ended_by_policy == o.ended_by_policy
            && self.record == o.record
            && self.report == o.report
            && self.error == o.error
    }
}

impl EpisodeLog {
    pub fn row(&self) -> EpisodeRow {
        EpisodeRow {
            index: self.index,
            policy: self.policy.clone(),
            steps: self.status.steps,
            terminated: self.status.terminated,
            truncated: self.status.truncated,
            report: self.report.clone(),
            record: self.record.clone(),
        }
    }

    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::json(path, e))
    }

    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        let text = serde_json::to_string(self).map_err(|e| HarnessError::json(path, e))?;
        fs::write(path, text).map_err(|e| HarnessError::io(path, e))
    }
}

/// One line of `episodes.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub index: usize,
    pub policy: String,
    pub steps: usize,
    pub terminated: bool,
    pub truncated: bool,
    #[serde(flatten)]
    pub report: MetricReport,
    /// Inputs of the metrics, so they can be recomputed offline.
    pub record: Option<EpisodeRecord>,
}

fn class_of(config: &EnvConfig) -> TaskClass {
    if config.kind.is_navigation() {
        TaskClass::Navigation
    } else {
        TaskClass::Manipulation
    }
}

/// Runs one episode to completion. Failures are recorded in the log, never
/// propagated, so a batch always yields one log per index.
pub fn run_episode(config: &EnvConfig, policy: &mut dyn Policy, index: usize, seed: u64) -> EpisodeLog {
    let started = Instant::now();
    let mut config = config.clone();
    config.seed = seed;
    if let Some(mode) = policy.required_mode() {
        config.action_mode = mode;
    }
    let env_name = config.kind.name().to_string();
    let mut log = EpisodeLog {
        index,
        seed,
        policy: policy.name().to_string(),
        config: config.clone(),
        steps: Vec::new(),
        status: EpisodeStatus::default(),
        ended_by_policy: false,
        record: None,
        report: MetricReport::failed(&env_name, seed, class_of(&config), "not run"),
        error: None,
        wall_time: Duration::ZERO,
        final_world: None,
    };

    let mut env = match Env::new(config.clone()) {
        Ok(env) => env,
        Err(e) => {
            log.error = Some(e.to_string());
            log.report = MetricReport::failed(&env_name, seed, class_of(&config), &e.to_string());
            log.wall_time = started.elapsed();
            return log;
        }
    };
    policy.reset(seed);
    let mut failure = None;
    while !env.status().is_done() {
        let obs = env.observe();
        let action = match policy.act(&obs, &env) {
            Ok(Decision::Act(a)) => a,
            Ok(Decision::Done) => {
                log.ended_by_policy = true;
                break;
            }
            Err(e) => {
                failure = Some(format!("policy: {e}"));
                break;
            }
        };
        match env.advance(action) {
            Ok(r) => log.steps.push(StepRecord {
                action,
                reward: r.reward,
                pose: env.robot_pose(),
            }),
            Err(e) => {
                failure = Some(format!("environment: {e}"));
                break;
            }
        }
    }
    log.status = env.status().clone();
    let record = env.episode_record();
    log.report = match (&failure, evaluate(&record)) {
        (None, Ok(m)) => MetricReport::new(&env_name, seed, &record, &m),
        (Some(f), _) => MetricReport::failed(&env_name, seed, record.class, f),
        (None, Err(e)) => {
            failure = Some(format!("metrics: {e}"));
            MetricReport::failed(&env_name, seed, record.class, &e.to_string())
        }
    };
    if let Some(f) = &failure {
        log::warn!("episode {index} (seed {seed}) failed: {f}");
    }
    log.error = failure;
    log.record = Some(record);
    log.final_world = Some(env.world().clone());
    log.wall_time = started.elapsed();
    log
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub spec: RunSpec,
    pub logs: Vec<EpisodeLog>,
    pub summary: Summary,
    pub wall_time: Duration,
}

impl Evaluation {
    pub fn rows(&self) -> Vec<EpisodeRow> {
        self.logs.iter().map(EpisodeLog::row).collect()
    }
}

fn prepare_output(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let probe = dir.join(".write_probe");
    fs::write(&probe, b"").map_err(|e| HarnessError::io(dir, e))?;
    fs::remove_file(&probe).map_err(|e| HarnessError::io(&probe, e))
}

/// Runs `spec.episodes` episodes in parallel and writes the outputs when
/// an output directory is set.
pub fn run_evaluation(spec: &RunSpec) -> Result<Evaluation, HarnessError> {
    spec.validate()?;
    if let Some(dir) = &spec.output {
        prepare_output(dir)?;
    }
    let started = Instant::now();
    let run = || -> Result<Vec<EpisodeLog>, HarnessError> {
        (0..spec.episodes)
            .into_par_iter()
            .map(|i| {
                let mut policy = spec.make_policy()?;
                let seed = episode_seed(spec.base_seed, i as u64);
                Ok(run_episode(&spec.config, policy.as_mut(), i, seed))
            })
            .collect()
    };
    let logs = match spec.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    let rows: Vec<EpisodeRow> = logs.iter().map(EpisodeLog::row).collect();
    let summary = Summary::from_rows(spec.config.kind.name(), &spec.policy, &rows);
    let eval = Evaluation {
        spec: spec.clone(),
        logs,
        summary,
        wall_time: started.elapsed(),
    };
    if let Some(dir) = &spec.output {
        write_outputs(dir, &eval)?;
    }
    Ok(eval)
}

pub fn log_file_name(index: usize) -> String {
    format!("episode_{index:05}.json")
}

pub fn write_outputs(dir: &Path, eval: &Evaluation) -> Result<(), HarnessError> {
    let spec_path = dir.join("run.json");
    let text = serde_json::to_string_pretty(&eval.spec).map_err(|e| HarnessError::json(&spec_path, e))?;
    fs::write(&spec_path, text).map_err(|e| HarnessError::io(&spec_path, e))?;

    write_jsonl(&dir.join("episodes.jsonl"), &eval.rows())?;
    eval.summary.write_csv(&dir.join("summary.csv"))?;

    if eval.spec.save_logs {
        let logs = dir.join("logs");
        fs::create_dir_all(&logs).map_err(|e| HarnessError::io(&logs, e))?;
        for log in &eval.logs {
            log.write(&logs.join(log_file_name(log.index)))?;
        }
    }
    if eval.spec.snapshots {
        let snaps = dir.join("snapshots");
        fs::create_dir_all(&snaps).map_err(|e| HarnessError::io(&snaps, e))?;
        for log in &eval.logs {
            if let Some(world) = &log.final_world {
                let path = snaps.join(log_file_name(log.index));
                let text = serde_json::to_string(world).map_err(|e| HarnessError::json(&path, e))?;
                fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
            }
        }
    }
    Ok(())
}

pub fn write_jsonl(path: &Path, rows: &[EpisodeRow]) -> Result<(), HarnessError> {
    let file = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        serde_json::to_writer(&mut w, row).map_err(|e| HarnessError::json(path, e))?;
        w.write_all(b"\n").map_err(|e| HarnessError::io(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_jsonl(path: &Path) -> Result<Vec<EpisodeRow>, HarnessError> {
    let file = fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut rows = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|e| HarnessError::json(path, e))?);
    }
    Ok(rows)
}

/// A row whose stored scores disagree with scores recomputed from its
/// record.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMismatch {
    pub index: usize,
    pub stored: MetricReport,
    pub recomputed: MetricReport,
}

/// Recomputes every row's metrics from its stored record and rebuilds the
/// summary from the recomputed scores.
pub fn recompute_metrics(rows: &[EpisodeRow]) -> (Vec<EpisodeRow>, Vec<MetricMismatch>) {
    let mut out = Vec::with_capacity(rows.len());
    let mut mismatches = Vec::new();
    for row in rows {
        let mut fresh = row.clone();
        if let (Some(record), None) = (&row.record, &row.report.error) {
            fresh.report = match evaluate(record) {
                Ok(m) => MetricReport::new(&row.report.env, row.report.seed, record, &m),
                Err(e) => MetricReport::failed(&row.report.env, row.report.seed, record.class, &e.to_string()),
            };
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-9;
            let same = close(fresh.report.efficiency, row.report.efficiency)
                && close(fresh.report.effort, row.report.effort)
                && fresh.report.success_score.zip(row.report.success_score).is_none_or(|(a, b)| close(a, b))
                && fresh.report.success_score.is_some() == row.report.success_score.is_some();
            if !same {
                mismatches.push(MetricMismatch {
                    index: row.index,
                    stored: row.report.clone(),
                    recomputed: fresh.report.clone(),
                });
            }
        }
        out.push(fresh);
    }
    (out, mismatches)
}

/// Re-simulates a logged episode and checks every step against the log.
pub fn replay(log: &EpisodeLog) -> Result<EpisodeRecord, HarnessError> {
    let mut env = Env::new(log.config.clone())?;
    for (k, step) in log.steps.iter().enumerate() {
        let r = env.advance(step.action).map_err(|e| HarnessError::Divergence {
            step: k,
            detail: format!("action rejected: {e}"),
        })?;
        if r.reward != step.reward {
            return Err(HarnessError::Divergence {
                step: k,
                detail: format!("reward {:?}, logged {:?}", r.reward, step.reward),
            });
        }
        let pose = env.robot_pose();
        if pose != step.pose {
            return Err(HarnessError::Divergence {
                step: k,
                detail: format!("robot pose {pose:?}, logged {:?}", step.pose),
            });
        }
    }
    let record = env.episode_record();
    if log.record.as_ref() != Some(&record) {
        return Err(HarnessError::Divergence {
            step: log.steps.len(),
            detail: "final episode record differs from the log".into(),
        });
    }
    Ok(record)
}

#[cfg(test)]
mod tests;
