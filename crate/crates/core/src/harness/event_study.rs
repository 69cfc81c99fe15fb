//! Step-jump event studies with repeated calibrated runs.

use crate::book::LobSnapshot;
use crate::config::{InterventionSpec, Primitive, RunConfig};
use crate::engine::{OutputMode, SimOptions, Simulation};
use crate::error::{Error, Result};
use crate::rng;
use crate::types::{AssetId, Lots, TimeNs};

#[derive(Clone, Debug)]
pub struct EventStudySpec {
    pub asset: AssetId,
    pub event_time: TimeNs,
    pub magnitude: Lots,
    pub repeats: usize,
}

/// Mid-price paths on the checkpoint grid. Index 0 of `up`/`down` is +1/-1.
#[derive(Clone, Debug, Default)]
pub struct EventStudyResult {
    /// Checkpoint times of the traced asset.
    pub grid: Vec<TimeNs>,
    /// First grid index at or after the event.
    pub event_index: usize,
    pub baseline: Vec<Option<f64>>,
    pub runs: [Vec<Vec<Option<f64>>>; 2],
    pub mean: [Vec<Option<f64>>; 2],
    /// Every calibrated run's pre-event snapshots equal the baseline's.
    pub prefix_identical: bool,
}

impl EventStudyResult {
    /// Mean trajectory minus baseline at `offset` checkpoints after the event.
    pub fn displacement(&self, direction: usize, offset: usize) -> Option<f64> {
        let i = self.event_index + offset;
        Some(self.mean[direction].get(i).copied()?? - self.baseline.get(i).copied()??)
    }

    /// `event_offset,baseline,mean_up,mean_down` rows.
    pub fn to_csv(&self) -> String {
        let f = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        let mut s = String::from("time_ns,event_offset,baseline,mean_up,mean_down\n");
        for (i, t) in self.grid.iter().enumerate() {
            let off = i as i64 - self.event_index as i64;
            s += &format!("{t},{off},{},{},{}\n", f(self.baseline[i]), f(self.mean[0][i]), f(self.mean[1][i]));
        }
        s
    }
}

fn run(cfg: &RunConfig, reference: Option<Vec<LobSnapshot>>) -> Result<Vec<LobSnapshot>> {
    let opts = SimOptions { outputs: OutputMode::Discard, capture_snapshots: true, trace_dispatch: false };
    let sim = match reference {
        Some(r) => Simulation::with_reference(cfg, opts, r)?,
        None => Simulation::new(cfg, opts)?,
    };
    Ok(sim.run()?.snapshots)
}

fn mids(snaps: &[LobSnapshot], asset: AssetId) -> Vec<Option<f64>> {
    snaps.iter().filter(|s| s.asset == asset).map(|s| s.mid()).collect()
}

fn mean_path(runs: &[Vec<Option<f64>>]) -> Vec<Option<f64>> {
    let n = runs.first().map_or(0, |r| r.len());
    (0..n)
        .map(|i| {
            let v: Vec<f64> = runs.iter().filter_map(|r| r.get(i).copied().flatten()).collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect()
}

/// Baseline once; then per direction the uncalibrated shocked run as the
/// oracle series and `repeats` calibrated runs against its noisy queries.
/// `base` carries the population, noise parameters and calibration budget.
pub fn event_study(base: &RunConfig, spec: &EventStudySpec) -> Result<EventStudyResult> {
    if spec.repeats == 0 {
        return Err(Error::Config("event study needs at least one repeat".into()));
    }
    let mut plain = base.clone();
    plain.calibration.enabled = false;
    plain.interventions.clear();
    plain.validate()?;
    let baseline = run(&plain, None)?;
    let grid: Vec<TimeNs> = baseline.iter().filter(|s| s.asset == spec.asset).map(|s| s.timestamp).collect();
    let event_index = grid.partition_point(|&t| t < spec.event_time);
    let prefix: Vec<&LobSnapshot> = baseline.iter().filter(|s| s.timestamp < spec.event_time).collect();

    let mut out = EventStudyResult { grid, event_index, baseline: mids(&baseline, spec.asset), prefix_identical: true, ..Default::default() };
    for (d, direction) in [1i8, -1].into_iter().enumerate() {
        let mut shocked = plain.clone();
        shocked.interventions = vec![InterventionSpec {
            primitive: Primitive::StepJump,
            direction,
            event_time_ns: spec.event_time,
            magnitude: spec.magnitude,
            asset: spec.asset,
        }];
        shocked.validate()?;
        let reference = run(&shocked, None)?;
        for r in 0..spec.repeats {
            let mut c = shocked.clone();
            c.calibration.enabled = true;
            c.oracle.noise_from_ns = spec.event_time;
            c.oracle.seed = Some(rng::derive_seed(base.seed, &[d as u64, r as u64]));
            let snaps = run(&c, Some(reference.clone()))?;
            let pre: Vec<&LobSnapshot> = snaps.iter().filter(|s| s.timestamp < spec.event_time).collect();
            out.prefix_identical &= pre == prefix;
            out.runs[d].push(mids(&snaps, spec.asset));
        }
        out.mean[d] = mean_path(&out.runs[d]);
    }
    Ok(out)
}
