//! Throughput stress, breadth scaling and engine ablations.

use std::path::Path;
use std::process::Command;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::{RunConfig, StressSpec};
use crate::engine::{prepare_dir, OutputMode, RunReport, SimOptions, Simulation};
use crate::error::{Error, Result};
use crate::exchange::{AssetSpec, CalendarSpec, SessionKind, SessionSpec};

fn clock(secs: u64) -> String {
    format!("{:02}:{:02}:{:02}", secs / 3600, secs % 3600 / 60, secs % 60)
}

/// One continuous session from 09:30 lasting at least `duration_s`.
pub fn bench_calendar(duration_s: f64) -> CalendarSpec {
    let open = 9 * 3600 + 30 * 60;
    let len = duration_s.ceil() as u64 + 1;
    CalendarSpec {
        days: vec![0],
        sessions: vec![SessionSpec { kind: SessionKind::ContinuousTrading, start: clock(open), end: clock(open + len) }],
    }
}

/// A stress workload over `assets` assets, agents removed.
pub fn stress_config(base: &RunConfig, rate: f64, duration_s: f64, assets: usize) -> RunConfig {
    let mut c = base.clone();
    c.assets = vec![base.assets.first().cloned().unwrap_or_else(AssetSpec::default); assets];
    c.population.agents.clear();
    c.population_path = None;
    c.calendar = bench_calendar(duration_s);
    c.calendar_path = None;
    c.calibration.enabled = false;
    c.replay = Default::default();
    c.interventions.clear();
    c.stress = Some(StressSpec { rate_per_asset: rate, duration_s, ..base.stress.clone().unwrap_or_default() });
    c
}

/// Runs a stress workload in-process with all outputs discarded.
pub fn stress_throughput(base: &RunConfig, rate: f64, duration_s: f64, assets: usize) -> Result<RunReport> {
    let c = stress_config(base, rate, duration_s, assets);
    let opts = SimOptions { outputs: OutputMode::Discard, capture_snapshots: false, trace_dispatch: false };
    Ok(Simulation::new(&c, opts)?.run()?.report)
}

/// Parses `key=value` tokens separated by whitespace.
pub fn parse_kv(line: &str) -> Vec<(String, String)> {
    line.split_whitespace().filter_map(|t| t.split_once('=')).map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BreadthPoint {
    pub assets: usize,
    pub wall_clock_s: f64,
    pub peak_memory_bytes: u64,
    pub processed: u64,
}

/// Breadth sweep, one fresh process per asset count so peak memory is per run.
pub fn breadth_scaling(exe: &Path, asset_counts: &[usize], rate: f64, duration_s: f64, workers: usize) -> Result<Vec<BreadthPoint>> {
    let mut out = Vec::new();
    for &m in asset_counts {
        let o = Command::new(exe)
            .args(["bench", "--rates", &rate.to_string(), "--duration", &duration_s.to_string()])
            .args(["--assets", &m.to_string(), "--workers", &workers.to_string()])
            .env("EVOSIM_LOG_LEVEL", "error")
            .output()?;
        if !o.status.success() {
            return Err(Error::Worker(format!("bench subprocess failed: {}", String::from_utf8_lossy(&o.stderr))));
        }
        let stdout = String::from_utf8_lossy(&o.stdout);
        let line = stdout.lines().find(|l| l.starts_with("rate=")).ok_or_else(|| Error::Worker("bench printed no report".into()))?;
        let kv = parse_kv(line);
        let get = |k: &str| kv.iter().find(|x| x.0 == k).map(|x| x.1.clone()).unwrap_or_default();
        out.push(BreadthPoint {
            assets: m,
            wall_clock_s: get("wall_clock_s").parse().unwrap_or(f64::NAN),
            peak_memory_bytes: get("peak_memory_bytes").parse().unwrap_or(0),
            processed: get("processed").parse().unwrap_or(0),
        });
    }
    Ok(out)
}

/// Engine toggles of one ablation configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct AblationConfig {
    pub label: &'static str,
    pub workers: usize,
    pub async_queries: bool,
    pub cadence_ms: u64,
    pub main_log: bool,
}

/// C0 (everything off) through C4 (workers, async, 30 s cadence, no main log).
pub fn ablation_configs(workers: usize) -> Vec<AblationConfig> {
    let c = |label, workers, async_queries, cadence_ms, main_log| AblationConfig { label, workers, async_queries, cadence_ms, main_log };
    vec![
        c("C0", 0, false, 3000, true),
        c("C1", workers, false, 3000, true),
        c("C2", workers, true, 3000, true),
        c("C3", workers, true, 30000, true),
        c("C4", workers, true, 30000, false),
    ]
}

/// Runs `base` under every ablation configuration, writing logs under `dir`.
pub fn ablation_suite(base: &RunConfig, workers: usize, dir: &Path) -> Result<Vec<(AblationConfig, RunReport)>> {
    let mut out = Vec::new();
    for a in ablation_configs(workers) {
        let mut c = base.clone();
        c.workers = a.workers;
        c.async_queries = a.async_queries;
        c.snapshot_cadence_ms = a.cadence_ms;
        c.logs.main_log = a.main_log;
        let d = dir.join(a.label);
        prepare_dir(&d, true)?;
        let opts = SimOptions { outputs: OutputMode::Dir(d), capture_snapshots: false, trace_dispatch: false };
        let r = Simulation::new(&c, opts)?.run()?.report;
        out.push((a, r));
    }
    Ok(out)
}

/// One-sided paired t-test of `a > b`: returns `(t, p)`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let t = mean / (var / n).sqrt();
    if !t.is_finite() {
        let p = if mean > 0.0 { 0.0 } else { 1.0 };
        return (t, p);
    }
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).expect("n >= 2");
    (t, 1.0 - dist.cdf(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_test_matches_table() {
        // d = [1, 2, 3, 4]: mean 2.5, sd 1.29099, t = 3.87298, df 3.
        let (t, p) = paired_t_test(&[1.0, 2.0, 3.0, 4.0], &[0.0; 4]);
        assert!((t - 3.872983).abs() < 1e-5);
        assert!((p - 0.015229).abs() < 1e-4);
    }

    #[test]
    fn stress_accounting_is_exact() {
        let base = RunConfig { workers: 0, ..RunConfig::default() };
        let a = stress_throughput(&base, 100.0, 5.0, 2).unwrap();
        let b = stress_throughput(&base, 200.0, 5.0, 2).unwrap();
        assert_eq!(a.emitted, 1000);
        assert_eq!(b.emitted, 2000);
        assert_eq!(a.processed, a.emitted - a.rejected);
        assert_eq!(b.processed, b.emitted - b.rejected);
        let z = stress_throughput(&base, 0.0, 5.0, 2).unwrap();
        assert_eq!((z.processed, z.trades), (0, 0));
    }
}
