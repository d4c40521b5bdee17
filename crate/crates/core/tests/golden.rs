//! Replays an episode log recorded on another machine.

use std::path::Path;

use pushnav::harness::{replay, EpisodeLog};

#[test]
fn shipped_log_replays_identically() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden_episode.json");
    let log = EpisodeLog::read(&path).unwrap();
    assert!(log.steps.len() > 100, "the log should exercise a full episode");
    let record = replay(&log).unwrap();
    assert_eq!(log.record.as_ref(), Some(&record));
    assert!(log.error.is_none());
}
