//! Command-line front end: batch evaluation, metric recomputation, log
//! replay, observation dumps and the teleoperation server.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error,
//! 3 divergence (replay mismatch or metrics that do not recompute).

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Arg, ArgMatches, Args, Command, CommandFactory, FromArgMatches, Parser, Subcommand};
use pushnav::env::{EnvConfig, EnvError, EnvKind};
use pushnav::harness::{
    read_jsonl, recompute_metrics, replay, run_evaluation, write_jsonl, EpisodeLog, HarnessError, RunSpec,
    Summary,
};
use pushnav::planners::POLICY_NAMES;
use pushnav_teleop::{ServeConfig, DEFAULT_TICK_HZ};

#[derive(Parser)]
#[command(name = "pushnav", version, about = "Benchmark for navigation by pushing")]
struct Cli {
    /// More log output (repeat for debug/trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Run a seeded batch of episodes and write scores.
    Run(RunArgs),
    /// Recompute scores from an episodes.jsonl file.
    Metrics(MetricsArgs),
    /// Re-simulate episode logs and check they reproduce exactly.
    Replay(ReplayArgs),
    /// Serve live sessions over WebSocket.
    Teleop(TeleopArgs),
    /// Dump the first observation of an environment.
    Observe(ObserveArgs),
}

/// Flags shared by every verb that builds an environment. Every config key
/// (dotted for nested ones, e.g. `--physics.dt`) is also accepted as a flag.
#[derive(Args)]
struct EnvArgs {
    /// Environment kind: maze, ship_ice, box_delivery, area_clearing.
    #[arg(long)]
    env: Option<EnvKind>,
    /// JSON environment config file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    env: EnvArgs,
    /// JSON run specification; flags given here override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    policy: Option<String>,
    /// Policy parameter as key=value; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Base seed; episode seeds are derived from it and the episode index.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Skip the per-episode replay logs.
    #[arg(long)]
    no_logs: bool,
    /// Also write final world states.
    #[arg(long)]
    snapshots: bool,
}

#[derive(Args)]
struct MetricsArgs {
    /// episodes.jsonl, or a run directory containing one.
    input: PathBuf,
    /// Summary to check against; defaults to summary.csv next to the input.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Write the recomputed episodes.jsonl and summary.csv here.
    #[arg(long)]
    write: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// An episode log, or a run directory whose logs/ are all replayed.
    log: PathBuf,
}

#[derive(Args)]
struct TeleopArgs {
    #[command(flatten)]
    env: EnvArgs,
    #[arg(long, default_value = "127.0.0.1:8765")]
    bind: SocketAddr,
    #[arg(long, default_value_t = DEFAULT_TICK_HZ)]
    tick_hz: f64,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ObserveArgs {
    #[command(flatten)]
    env: EnvArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// pgm (one file per channel) or json (one tensor).
    #[arg(long, default_value = "pgm")]
    format: String,
    #[arg(long, default_value = "observation")]
    out: PathBuf,
}

/// Error classes that map to dedicated exit codes.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug)]
struct Diverged(String);

impl std::fmt::Display for Diverged {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Diverged {}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() || cause.is::<EnvError>() {
            return 2;
        }
        if cause.is::<Diverged>() {
            return 3;
        }
        if let Some(h) = cause.downcast_ref::<HarnessError>() {
            return match h {
                HarnessError::Config(_) | HarnessError::Env(_) | HarnessError::Planner(_) => 2,
                HarnessError::Divergence { .. } => 3,
                _ => 1,
            };
        }
    }
    1
}

/// Config keys exposed as flags. `seed` and `kind` have their own flags.
fn config_keys() -> Vec<String> {
    EnvConfig::keys()
        .into_iter()
        .filter(|k| k != "seed" && k != "kind")
        .collect()
}

fn with_config_flags(cmd: Command) -> Command {
    config_keys().into_iter().fold(cmd, |cmd, key| {
        cmd.arg(
            Arg::new(key.clone())
                .long(key)
                .value_name("VALUE")
                .hide(true)
                .help_heading("Environment config"),
        )
    })
}

fn build_command() -> Command {
    let mut cmd = Cli::command();
    for verb in ["run", "teleop", "observe"] {
        cmd = cmd.mut_subcommand(verb, with_config_flags);
    }
    cmd
}

fn config_overrides(matches: &ArgMatches) -> Vec<(String, String)> {
    config_keys()
        .into_iter()
        .filter_map(|k| {
            let v = matches.try_get_one::<String>(&k).ok().flatten()?;
            Some((k.clone(), v.clone()))
        })
        .collect()
}

fn read_json(path: &Path) -> Result<serde_json::Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
}

/// Defaults for the kind, then the config file, then `--env`, then key flags.
fn build_config(
    args: &EnvArgs,
    base: Option<EnvConfig>,
    overrides: &[(String, String)],
) -> Result<EnvConfig> {
    let mut config = match (&args.config, base) {
        (Some(path), _) => EnvConfig::from_json_value(read_json(path)?)?,
        (None, Some(c)) => c,
        (None, None) => EnvConfig::defaults_for(args.env.unwrap_or_default()),
    };
    if let Some(kind) = args.env {
        if kind != config.kind {
            config = config.with_overrides([("kind", kind.name())])?;
        }
    }
    let pairs: Vec<(&str, &str)> = overrides.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
    Ok(config.with_overrides(pairs)?)
}

fn parse_params(params: &[String], base: serde_json::Value) -> Result<serde_json::Value> {
    let mut map = match base {
        serde_json::Value::Object(m) => m,
        serde_json::Value::Null => serde_json::Map::new(),
        other => return Err(config_error(format!("policy_params must be an object, got {other}"))),
    };
    for p in params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| config_error(format!("--param expects KEY=VALUE, got {p}")))?;
        let value = serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.to_string()));
        map.insert(k.to_string(), value);
    }
    Ok(serde_json::Value::Object(map))
}

fn cmd_run(args: RunArgs, overrides: &[(String, String)]) -> Result<()> {
    let mut spec = match &args.spec {
        Some(path) => serde_json::from_value::<RunSpec>(read_json(path)?)
            .map_err(|e| config_error(format!("{}: {e}", path.display())))?,
        None => RunSpec::new(EnvConfig::default(), "dt_descent"),
    };
    let base = args.spec.is_some().then(|| spec.config.clone());
    spec.config = build_config(&args.env, base, overrides)?;
    if let Some(p) = args.policy {
        if !POLICY_NAMES.contains(&p.as_str()) {
            return Err(config_error(format!(
                "unknown policy {p}; expected one of {}",
                POLICY_NAMES.join(", ")
            )));
        }
        spec.policy = p;
    }
    spec.policy_params = parse_params(&args.params, spec.policy_params.take())?;
    if let Some(n) = args.episodes {
        spec.episodes = n;
    }
    if let Some(s) = args.seed {
        spec.base_seed = s;
    }
    if args.out.is_some() {
        spec.output = args.out;
    }
    if args.threads.is_some() {
        spec.threads = args.threads;
    }
    if args.no_logs {
        spec.save_logs = false;
    }
    if args.snapshots {
        spec.snapshots = true;
    }
    log::info!(
        "running {} episodes of {} with {}",
        spec.episodes,
        spec.config.kind,
        spec.policy
    );
    let eval = run_evaluation(&spec)?;
    print!("{}", eval.summary.display_table());
    println!("wall time {:.2}s", eval.wall_time.as_secs_f64());
    if let Some(dir) = &spec.output {
        println!("wrote {}", dir.display());
    }
    Ok(())
}

fn cmd_metrics(args: MetricsArgs) -> Result<()> {
    let (jsonl, dir) = if args.input.is_dir() {
        (args.input.join("episodes.jsonl"), args.input.clone())
    } else {
        let dir = args.input.parent().map(Path::to_path_buf).unwrap_or_default();
        (args.input.clone(), dir)
    };
    let rows = read_jsonl(&jsonl)?;
    let first = rows.first().ok_or_else(|| anyhow!("{} has no episodes", jsonl.display()))?;
    let (env, policy) = (first.report.env.clone(), first.policy.clone());
    let (fresh, mismatches) = recompute_metrics(&rows);
    let summary = Summary::from_rows(&env, &policy, &fresh);
    print!("{}", summary.display_table());

    let mut problems = Vec::new();
    for m in &mismatches {
        problems.push(format!(
            "episode {}: stored E={} I={} S={:?}, recomputed E={} I={} S={:?}",
            m.index,
            m.stored.efficiency,
            m.stored.effort,
            m.stored.success_score,
            m.recomputed.efficiency,
            m.recomputed.effort,
            m.recomputed.success_score
        ));
    }
    let csv = args.summary.unwrap_or_else(|| dir.join("summary.csv"));
    if csv.exists() {
        let stored = Summary::read_csv(&csv)?;
        match summary.max_difference(&stored) {
            Some(d) if d <= 1e-9 => println!("summary matches {} (max difference {d:.3e})", csv.display()),
            Some(d) => problems.push(format!("summary differs from {} by {d:.3e}", csv.display())),
            None => problems.push(format!("summary shape differs from {}", csv.display())),
        }
    }
    if let Some(out) = args.write {
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        write_jsonl(&out.join("episodes.jsonl"), &fresh)?;
        summary.write_csv(&out.join("summary.csv"))?;
        println!("wrote {}", out.display());
    }
    if !problems.is_empty() {
        for p in &problems {
            eprintln!("{p}");
        }
        return Err(Diverged(format!("{} metric mismatch(es)", problems.len())).into());
    }
    Ok(())
}

fn cmd_replay(args: ReplayArgs) -> Result<()> {
    let logs: Vec<PathBuf> = if args.log.is_dir() {
        let dir = args.log.join("logs");
        let mut v: Vec<PathBuf> = fs::read_dir(&dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        v.sort();
        v
    } else {
        vec![args.log.clone()]
    };
    if logs.is_empty() {
        bail!("no episode logs under {}", args.log.display());
    }
    for path in &logs {
        let log = EpisodeLog::read(path)?;
        match replay(&log) {
            Ok(_) => println!("{}: identical ({} steps)", path.display(), log.steps.len()),
            Err(HarnessError::Divergence { step, detail }) => {
                return Err(Diverged(format!("{}: diverged at step {step}: {detail}", path.display())).into())
            }
            Err(e) => return Err(e).with_context(|| format!("replaying {}", path.display())),
        }
    }
    Ok(())
}

fn cmd_teleop(args: TeleopArgs, overrides: &[(String, String)]) -> Result<()> {
    let mut env = build_config(&args.env, None, overrides)?;
    if let Some(s) = args.seed {
        env.seed = s;
    }
    let mut cfg = ServeConfig::new(args.bind, env);
    cfg.tick_hz = args.tick_hz;
    if !(cfg.tick_hz.is_finite() && cfg.tick_hz > 0.0) {
        return Err(config_error(format!("--tick-hz must be positive, got {}", cfg.tick_hz)));
    }
    println!("teleop on ws://{}/ws at {} Hz", cfg.bind, cfg.tick_hz);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(pushnav_teleop::serve(cfg))?;
    Ok(())
}

fn cmd_observe(args: ObserveArgs, overrides: &[(String, String)]) -> Result<()> {
    let mut config = build_config(&args.env, None, overrides)?;
    if let Some(s) = args.seed {
        config.seed = s;
    }
    let env = pushnav::env::Env::new(config)?;
    let obs = env.observe();
    match args.format.as_str() {
        "pgm" => {
            for p in obs.write_pgm(&args.out, "obs")? {
                println!("{}", p.display());
            }
        }
        "json" => {
            fs::create_dir_all(&args.out)?;
            let path = args.out.join("obs.json");
            fs::write(&path, serde_json::to_string(&obs.to_json_tensor())?)?;
            println!("{}", path.display());
        }
        other => return Err(config_error(format!("unknown format {other}; use pgm or json"))),
    }
    Ok(())
}

fn main() -> ExitCode {
    let matches = build_command().get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let overrides = matches
        .subcommand()
        .map(|(_, m)| config_overrides(m))
        .unwrap_or_default();

    let result = match cli.verb {
        Verb::Run(a) => cmd_run(a, &overrides),
        Verb::Metrics(a) => cmd_metrics(a),
        Verb::Replay(a) => cmd_replay(a),
        Verb::Teleop(a) => cmd_teleop(a, &overrides),
        Verb::Observe(a) => cmd_observe(a, &overrides),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
