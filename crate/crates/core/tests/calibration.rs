mod common;

use std::time::Instant;

use common::{mixed_config, price_mse, reference_walk, short_calendar};
use evosim::calibration::{perturb, NoiseParams, OracleSource};
use evosim::engine::{SimOptions, Simulation};
use evosim::rng::SimRng;
use evosim::types::NANOS_PER_SEC;
use rand::SeedableRng;

const OPEN: u64 = (9 * 3600 + 30 * 60) * NANOS_PER_SEC;

fn hour_config(seed: u64) -> evosim::config::RunConfig {
    let mut c = mixed_config(seed, 1, 2);
    c.calendar = short_calendar(1, 60);
    c.calibration.enabled = true;
    c
}

#[test]
fn zero_noise_calibration_tracks_reference() {
    let cfg = hour_config(3);
    let reference = reference_walk(9, 1, OPEN, 3 * NANOS_PER_SEC, 1200, 10);
    let t0 = Instant::now();
    let r = Simulation::with_reference(&cfg, SimOptions::default(), reference.clone()).unwrap().run().unwrap();
    let wall = t0.elapsed().as_secs_f64();
    assert_eq!(r.report.calibrations, 1200);
    let mse = price_mse(&r.snapshots, &reference, 5, 0.01);
    assert!(mse <= 1e-3, "mse {mse}");
    assert!(wall <= 60.0, "{wall} s");
}

#[test]
fn calibration_is_deterministic() {
    let mut cfg = hour_config(4);
    cfg.calendar = short_calendar(1, 5);
    cfg.oracle.noise = NoiseParams { sigma0_sq: 1.0, alpha: 0.1 };
    let reference = reference_walk(2, 1, OPEN, 3 * NANOS_PER_SEC, 100, 10);
    let run = || Simulation::with_reference(&cfg, SimOptions::default(), reference.clone()).unwrap().run().unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.text.snapshots, b.text.snapshots);
    assert_eq!(a.text.calibration, b.text.calibration);
}

fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
}

#[test]
fn noise_variance_follows_law() {
    let noise = NoiseParams { sigma0_sq: 2.0, alpha: 0.05 };
    let mut rng = SimRng::seed_from_u64(1);
    for v in [0u64, 10, 100, 1000] {
        let draws: Vec<f64> = (0..100_000).map(|_| noise.sample(v, &mut rng)).collect();
        let expect = 2.0 + 0.05 * v as f64;
        let got = sample_variance(&draws);
        assert!((got / expect - 1.0).abs() < 0.05, "V={v}: {got} vs {expect}");
    }
}

#[test]
fn perturbed_levels_carry_the_noise() {
    // Wide, deep book so repair never fires; rounding adds 1/12 to the price variance.
    use evosim::book::LobSnapshot;
    let bids: Vec<_> = (0..5).map(|i| (5000 - 200 * i, 100_000)).collect();
    let asks: Vec<_> = (0..5).map(|i| (5200 + 200 * i, 100_000)).collect();
    let reference = LobSnapshot::from_sides(0, 0, 5, &bids, &asks);
    let noise = NoiseParams { sigma0_sq: 9.0, alpha: 0.0 };
    let mut rng = SimRng::seed_from_u64(2);
    let mut dp = Vec::new();
    for _ in 0..20_000 {
        let s = perturb(&reference, 5, &noise, 0, &mut rng);
        for (i, &(p, _)) in bids.iter().enumerate() {
            dp.push((s.price(evosim::types::Side::Buy, i) - p) as f64);
        }
    }
    let got = sample_variance(&dp);
    assert!((got / (9.0 + 1.0 / 12.0) - 1.0).abs() < 0.05, "{got}");
}

#[test]
fn zero_noise_oracle_returns_reference() {
    let reference = reference_walk(5, 2, 0, NANOS_PER_SEC, 50, 10);
    let o = OracleSource::new(reference.clone(), 2, NoiseParams::default(), 10, 7);
    for r in &reference {
        for v in [0, 10, 100, 1000] {
            assert_eq!(&o.query(r.asset, r.timestamp, 0, v).unwrap(), r);
        }
    }
}
