use super::*;
use crate::env::{ActionMode, EnvKind, MazeLayout};
use crate::planners::{DtDescent, GtspPolicy, RandomPolicy};

fn empty_maze() -> EnvConfig {
    let mut c = EnvConfig::defaults_for(EnvKind::Maze);
    c.layout = MazeLayout::Open;
    c.obstacle_count = 0;
    c
}

#[test]
fn seeds_follow_the_splitmix_stream() {
    // Reference outputs of SplitMix64 seeded with 0.
    assert_eq!(episode_seed(0, 0), 0xE220_A839_7B1D_CDAF);
    assert_eq!(episode_seed(0, 1), 0x6E78_9E6A_A1B9_65F4);
    assert_eq!(episode_seed(0, 2), 0x06C4_5D18_8009_454F);
    assert_ne!(episode_seed(1, 0), episode_seed(0, 0));
}

#[test]
fn descent_in_empty_maze_succeeds() {
    let log = run_episode(&empty_maze(), &mut DtDescent::default(), 0, 5);
    assert!(log.error.is_none(), "{:?}", log.error);
    assert!(log.status.terminated && log.status.goal_reached);
    assert_eq!(log.report.efficiency, log.report.efficiency.clamp(0.9, 1.0));
    assert_eq!(log.steps.len(), log.status.steps);
}

#[test]
fn same_seed_same_log_and_replay_matches() {
    let mut c = EnvConfig::defaults_for(EnvKind::Maze);
    c.max_steps = 300;
    let a = run_episode(&c, &mut RandomPolicy::default(), 3, 77);
    let b = run_episode(&c, &mut RandomPolicy::default(), 3, 77);
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(replay(&a).unwrap(), *a.record.as_ref().unwrap());

    // Round trip through JSON keeps the log replayable.
    let text = serde_json::to_string(&a).unwrap();
    let back: EpisodeLog = serde_json::from_str(&text).unwrap();
    assert_eq!(back, a);
    replay(&back).unwrap();
}

#[test]
fn perturbed_action_diverges_at_that_step() {
    let mut c = EnvConfig::defaults_for(EnvKind::Maze);
    c.max_steps = 120;
    let mut log = run_episode(&c, &mut RandomPolicy::default(), 0, 11);
    let k = 40;
    log.steps[k].action = match log.steps[k].action {
        Action::AngularVelocity { omega } => Action::AngularVelocity { omega: -omega + 0.5 },
        other => panic!("{other:?}"),
    };
    match replay(&log) {
        Err(HarnessError::Divergence { step, .. }) => assert_eq!(step, k),
        other => panic!("{other:?}"),
    }
}

#[test]
fn failed_episode_is_scored_as_failure() {
    // The clearing planner cannot drive a maze; the batch still gets a row.
    let log = run_episode(&empty_maze(), &mut GtspPolicy::default(), 0, 1);
    assert!(log.error.is_some());
    assert_eq!(log.report.efficiency, 0.0);
    assert_eq!(log.report.effort, 0.0);
}

#[test]
fn gtsp_runs_in_waypoint_mode() {
    let mut c = EnvConfig::defaults_for(EnvKind::AreaClearing);
    c.box_count = 3;
    let log = run_episode(&c, &mut GtspPolicy::default(), 0, 9);
    assert!(log.error.is_none(), "{:?}", log.error);
    assert_eq!(log.config.action_mode, ActionMode::Waypoint);
    let s = log.report.success_score.unwrap();
    assert!((0.0..=1.0).contains(&s));
    replay(&log).unwrap();
}

#[test]
fn evaluation_writes_rows_summary_and_logs() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = RunSpec::new(empty_maze(), "dt_descent");
    spec.episodes = 4;
    spec.base_seed = 3;
    spec.output = Some(dir.path().to_path_buf());
    spec.snapshots = true;
    let eval = run_evaluation(&spec).unwrap();
    assert_eq!(eval.logs.len(), 4);
    assert!(eval.logs.iter().enumerate().all(|(i, l)| l.index == i));

    let rows = read_jsonl(&dir.path().join("episodes.jsonl")).unwrap();
    assert_eq!(rows, eval.rows());
    let csv = Summary::read_csv(&dir.path().join("summary.csv")).unwrap();
    let text = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
    let again = Summary::from_rows("maze", "dt_descent", &rows);
    assert!(again.max_difference(&csv).unwrap() <= 1e-9);

    let (fresh, mismatches) = recompute_metrics(&rows);
    assert!(mismatches.is_empty(), "{mismatches:?}");
    assert_eq!(fresh.len(), 4);

    for i in 0..4 {
        let log = EpisodeLog::read(&dir.path().join("logs").join(log_file_name(i))).unwrap();
        assert_eq!(log, eval.logs[i]);
        replay(&log).unwrap();
        assert!(dir.path().join("snapshots").join(log_file_name(i)).exists());
    }
    let spec_back: RunSpec =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(spec_back, spec);
}

#[test]
fn single_episode_summary_is_degenerate() {
    let mut spec = RunSpec::new(empty_maze(), "dt_descent");
    spec.episodes = 1;
    let eval = run_evaluation(&spec).unwrap();
    let e = eval.summary.efficiency.unwrap();
    assert_eq!(e.mean, e.median);
    assert_eq!(e.q1, e.q3);
    assert_eq!(e.mean, eval.logs[0].report.efficiency);
}

#[test]
fn policies_share_layouts_per_index() {
    let c = EnvConfig::defaults_for(EnvKind::Maze);
    let mut a = RunSpec::new(c.clone(), "dt_descent");
    let mut b = RunSpec::new(c, "random");
    for s in [&mut a, &mut b] {
        s.episodes = 3;
        s.base_seed = 42;
        s.config.max_steps = 20;
    }
    let (ea, eb) = (run_evaluation(&a).unwrap(), run_evaluation(&b).unwrap());
    for (la, lb) in ea.logs.iter().zip(&eb.logs) {
        assert_eq!(la.seed, lb.seed);
        let (wa, wb) = (Env::new(la.config.clone()).unwrap(), Env::new(lb.config.clone()).unwrap());
        assert_eq!(wa.scene(), wb.scene());
    }
    assert_ne!(ea.logs[0].config.seed, ea.logs[1].config.seed);
}

#[test]
fn thread_count_does_not_change_results() {
    let mut spec = RunSpec::new(EnvConfig::defaults_for(EnvKind::Maze), "random");
    spec.episodes = 3;
    spec.config.max_steps = 50;
    spec.threads = Some(1);
    let one = run_evaluation(&spec).unwrap();
    spec.threads = Some(3);
    let three = run_evaluation(&spec).unwrap();
    assert_eq!(one.logs, three.logs);
}

#[test]
fn bad_specs_are_rejected_up_front() {
    let mut spec = RunSpec::new(empty_maze(), "gtsp");
    assert!(matches!(run_evaluation(&spec), Err(HarnessError::Config(_))));
    spec.policy = "nope".into();
    assert!(matches!(run_evaluation(&spec), Err(HarnessError::Config(_))));

    let file = tempfile::NamedTempFile::new().unwrap();
    let mut spec = RunSpec::new(empty_maze(), "random");
    spec.output = Some(file.path().join("sub"));
    spec.episodes = 1;
    assert!(matches!(run_evaluation(&spec), Err(HarnessError::Io { .. })));
}
