mod common;

use common::{mixed_config, short_calendar};
use evosim::calibration::NoiseParams;
use evosim::config::RunConfig;
use evosim::harness::{event_study, EventStudySpec};
use evosim::types::NANOS_PER_SEC;

const OPEN: u64 = (9 * 3600 + 30 * 60) * NANOS_PER_SEC;

fn base(noise: NoiseParams) -> RunConfig {
    let mut c = mixed_config(31, 1, 1);
    c.calendar = short_calendar(1, 10);
    c.oracle.noise = noise;
    c
}

fn spec(magnitude: u64, repeats: usize) -> EventStudySpec {
    EventStudySpec { asset: 0, event_time: OPEN + 300 * NANOS_PER_SEC, magnitude, repeats }
}

#[test]
fn zero_magnitude_without_base_noise_equals_baseline() {
    let r = event_study(&base(NoiseParams { sigma0_sq: 0.0, alpha: 2.0 }), &spec(0, 3)).unwrap();
    assert!(r.prefix_identical);
    for d in 0..2 {
        assert_eq!(r.mean[d], r.baseline);
        for run in &r.runs[d] {
            assert_eq!(run, &r.baseline);
        }
    }
}

#[test]
fn jumps_move_the_mean_mid_in_their_direction() {
    let r = event_study(&base(NoiseParams { sigma0_sq: 1.0, alpha: 0.01 }), &spec(30, 10)).unwrap();
    assert!(r.prefix_identical);
    assert_eq!(r.runs[0].len(), 10);
    let up = r.displacement(0, 0).unwrap();
    let down = r.displacement(1, 0).unwrap();
    assert!(up > 0.0 && down < 0.0, "up {up} down {down}");
    assert!(r.to_csv().lines().count() == r.grid.len() + 1);
}

#[test]
fn zero_repeats_is_rejected() {
    assert!(event_study(&base(NoiseParams::default()), &spec(10, 0)).is_err());
}

#[test]
fn symmetric_book_gives_antisymmetric_displacement() {
    use evosim::book::LobSnapshot;
    use evosim::harness::io::write_snapshots;
    let bids: Vec<_> = (0..10).map(|i| (999 - i, 10)).collect();
    let asks: Vec<_> = (0..10).map(|i| (1001 + i, 10)).collect();
    let book = LobSnapshot::from_sides(0, OPEN + NANOS_PER_SEC, 10, &bids, &asks);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("open.csv");
    std::fs::write(&path, write_snapshots(&[book])).unwrap();
    let mut c = RunConfig { workers: 1, ..RunConfig::default() };
    c.calendar = short_calendar(1, 5);
    c.replay.initial_snapshot = Some(path);
    let spec = EventStudySpec { asset: 0, event_time: OPEN + 30 * NANOS_PER_SEC, magnitude: 25, repeats: 4 };

    // 25 lots clear two levels and leave five on the third: mid moves one tick.
    let exact = event_study(&c, &spec).unwrap();
    assert_eq!(exact.displacement(0, 0), Some(1.0));
    assert_eq!(exact.displacement(1, 0), Some(-1.0));

    c.oracle.noise = NoiseParams { sigma0_sq: 0.25, alpha: 0.0 };
    let noisy = event_study(&c, &EventStudySpec { repeats: 10, ..spec }).unwrap();
    let (up, down) = (noisy.displacement(0, 0).unwrap(), noisy.displacement(1, 0).unwrap());
    assert!((up + down).abs() < 0.5, "up {up} down {down}");
}
