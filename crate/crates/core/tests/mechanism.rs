mod common;

use common::checks::{bands_and_sessions, t1_availability, two_day_config};
use evosim::engine::{simulate, SimOptions};

#[test]
fn bought_lots_become_sellable_next_day() {
    assert!(t1_availability(&two_day_config(2)) > 0);
}

#[test]
fn two_day_run_respects_bands_and_sessions() {
    let cfg = two_day_config(2);
    let r = simulate(&cfg, SimOptions::default()).unwrap();
    assert_eq!((r.report.band_violations, r.report.session_violations), (0, 0));
    bands_and_sessions(&cfg, &r);
}
