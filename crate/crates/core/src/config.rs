//! Run configuration, parsed from a single TOML file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{FactorSpec, PopulationSpec};
use crate::calibration::{CalibrationParams, NoiseParams};
use crate::error::{Error, Result};
use crate::exchange::{AssetSpec, CalendarSpec, SessionCalendar, SessionKind};
use crate::kernel::LatencyModel;
use crate::types::{AssetId, Lots, TimeNs, NANOS_PER_MILLI};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Reference snapshot file; calibration needs it.
    pub reference: Option<PathBuf>,
    pub noise: NoiseParams,
    /// Queries before this event time are noise-free.
    pub noise_from_ns: TimeNs,
    /// Abort on a missing reference timestamp instead of using the nearest earlier one.
    pub strict: bool,
    /// Noise stream seed; the run seed when unset.
    pub seed: Option<u64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { reference: None, noise: NoiseParams::default(), noise_from_ns: 0, strict: false, seed: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplayConfig {
    pub path: Option<PathBuf>,
    /// Rows seeding each day's opening book.
    pub initial_snapshot: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Primitive {
    #[default]
    StepJump,
}

/// An aggressive market sweep injected at `event_time_ns`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterventionSpec {
    #[serde(default)]
    pub primitive: Primitive,
    /// +1 sweeps the ask side, -1 the bid side.
    pub direction: i8,
    pub event_time_ns: TimeNs,
    /// Lots swept. Zero is a null intervention.
    pub magnitude: Lots,
    pub asset: AssetId,
}

/// Synthetic order flow for throughput runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StressSpec {
    pub rate_per_asset: f64,
    pub duration_s: f64,
    /// Offset of the first order from the start of the first continuous session.
    pub start_offset_ms: u64,
    pub market_frac: f64,
    pub cancel_frac: f64,
    pub seed: Option<u64>,
}

impl Default for StressSpec {
    fn default() -> Self {
        StressSpec { rate_per_asset: 1000.0, duration_s: 10.0, start_offset_ms: 0, market_frac: 0.1, cancel_frac: 0.2, seed: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogConfig {
    pub snapshot_log: bool,
    pub main_log: bool,
    pub trade_tape: bool,
    pub order_trace: bool,
    pub coverage_trace: bool,
    pub calibration_log: bool,
}

impl Default for LogConfig {
    fn default() -> Self {
        LogConfig { snapshot_log: true, main_log: true, trade_tape: true, order_trace: true, coverage_trace: false, calibration_log: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub slice_width_ns: TimeNs,
    pub default_latency_ns: TimeNs,
    /// Per-pair overrides keyed `sender->receiver`.
    pub latency_pairs: BTreeMap<String, TimeNs>,
    pub workers: usize,
    pub batch: usize,
    #[serde(rename = "async")]
    pub async_queries: bool,
    pub snapshot_cadence_ms: u64,
    pub depth: usize,
    pub preserve_day_orders: bool,
    pub replay_bypass: bool,
    pub output_dir: PathBuf,
    pub logs: LogConfig,
    pub calendar_path: Option<PathBuf>,
    pub calendar: CalendarSpec,
    pub assets: Vec<AssetSpec>,
    pub population_path: Option<PathBuf>,
    pub population: PopulationSpec,
    pub factor: FactorSpec,
    pub oracle: OracleConfig,
    pub calibration: CalibrationParams,
    pub replay: ReplayConfig,
    pub interventions: Vec<InterventionSpec>,
    pub stress: Option<StressSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            slice_width_ns: 100 * NANOS_PER_MILLI,
            default_latency_ns: NANOS_PER_MILLI,
            latency_pairs: BTreeMap::new(),
            workers: 4,
            batch: crate::exchange::DEFAULT_BATCH,
            async_queries: true,
            snapshot_cadence_ms: 3000,
            depth: 10,
            preserve_day_orders: false,
            replay_bypass: true,
            output_dir: PathBuf::from("runs"),
            logs: LogConfig::default(),
            calendar_path: None,
            calendar: CalendarSpec::default(),
            assets: vec![AssetSpec::default()],
            population_path: None,
            population: PopulationSpec::default(),
            factor: FactorSpec::default(),
            oracle: OracleConfig::default(),
            calibration: CalibrationParams::default(),
            replay: ReplayConfig::default(),
            interventions: Vec::new(),
            stress: None,
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Parses TOML text, mapping errors to the offending line.
pub fn parse_toml<T: serde::de::DeserializeOwned>(text: &str, path: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(0);
        Error::parse(path, line, e.message().to_string())
    })
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    /// Loads a config file and inlines the calendar and population files it names.
    /// Relative paths resolve against the config file's directory.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|_| Error::MissingFile(path.to_path_buf()))?;
        let mut cfg: RunConfig = parse_toml(&text, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.inline_files()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.calendar_path,
            &mut self.population_path,
            &mut self.oracle.reference,
            &mut self.replay.path,
            &mut self.replay.initial_snapshot,
        ]
        .into_iter()
        .flatten()
        {
            *p = resolve(base, p);
        }
    }

    /// Replaces `calendar_path`/`population_path` with their parsed contents.
    pub fn inline_files(&mut self) -> Result<()> {
        if let Some(p) = self.calendar_path.take() {
            let text = std::fs::read_to_string(&p).map_err(|_| Error::MissingFile(p.clone()))?;
            self.calendar = parse_toml(&text, &p.display().to_string())?;
        }
        if let Some(p) = self.population_path.take() {
            let text = std::fs::read_to_string(&p).map_err(|_| Error::MissingFile(p.clone()))?;
            self.population = parse_toml(&text, &p.display().to_string())?;
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn latency(&self) -> Result<LatencyModel> {
        let mut m = LatencyModel::constant(self.default_latency_ns);
        m.pairs = self.latency_pairs.clone();
        m.resolve().map_err(Error::Config)?;
        Ok(m)
    }

    pub fn cadence_ns(&self) -> TimeNs {
        self.snapshot_cadence_ms * NANOS_PER_MILLI
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with(false)
    }

    /// As [`RunConfig::validate`]; `external_reference` means the oracle
    /// series is supplied in memory rather than by `oracle.reference`.
    pub fn validate_with(&self, external_reference: bool) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.slice_width_ns == 0 {
            return bad("slice_width_ns must be positive".into());
        }
        if self.snapshot_cadence_ms == 0 {
            return bad("snapshot_cadence_ms must be positive".into());
        }
        if self.depth == 0 || self.depth > 50 {
            return bad("depth must be in 1..=50".into());
        }
        if self.workers > 256 {
            return bad("workers must be at most 256".into());
        }
        if self.batch == 0 {
            return bad("batch must be positive".into());
        }
        if self.assets.is_empty() {
            return bad("at least one asset is required".into());
        }
        for (j, a) in self.assets.iter().enumerate() {
            a.validate().map_err(|m| Error::Config(format!("assets[{j}]: {m}")))?;
        }
        self.latency()?;
        let cal = SessionCalendar::from_spec(&self.calendar).map_err(Error::Config)?;
        self.oracle.noise.validate().map_err(Error::Config)?;
        self.calibration.validate().map_err(Error::Config)?;
        if self.calibration.enabled && self.calibration.levels > self.depth {
            return bad("calibration.levels exceeds depth".into());
        }
        if self.calibration.enabled && self.oracle.reference.is_none() && !external_reference {
            return bad("calibration is enabled but oracle.reference is not set".into());
        }
        for p in [&self.calendar_path, &self.population_path, &self.oracle.reference, &self.replay.path, &self.replay.initial_snapshot]
            .into_iter()
            .flatten()
        {
            if !p.exists() {
                return Err(Error::MissingFile(p.clone()));
            }
        }
        let continuous = cal.windows(SessionKind::ContinuousTrading);
        for (i, iv) in self.interventions.iter().enumerate() {
            if iv.direction != 1 && iv.direction != -1 {
                return bad(format!("interventions[{i}]: direction must be +1 or -1"));
            }
            if iv.asset >= self.assets.len() {
                return bad(format!("interventions[{i}]: asset {} out of range", iv.asset));
            }
            if !continuous.iter().any(|&(s, e)| iv.event_time_ns >= s && iv.event_time_ns < e) {
                return bad(format!("interventions[{i}]: event time {} is outside continuous trading", iv.event_time_ns));
            }
        }
        if let Some(s) = &self.stress {
            if !(s.rate_per_asset >= 0.0 && s.duration_s >= 0.0) {
                return bad("stress rate and duration must be nonnegative".into());
            }
            if !(s.market_frac >= 0.0 && s.cancel_frac >= 0.0 && s.market_frac + s.cancel_frac <= 1.0) {
                return bad("stress market_frac + cancel_frac must lie in [0, 1]".into());
            }
        }
        Ok(())
    }

    /// Short stable hash of the effective config, used to name run directories.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut c = self.clone();
        c.seed = 0;
        c.output_dir = PathBuf::new();
        let d = Sha256::digest(c.to_toml().as_bytes());
        d[..6].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(format!("{}-s{}", self.hash(), self.seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let mut c = RunConfig::default();
        c.interventions.push(InterventionSpec {
            primitive: Primitive::StepJump,
            direction: -1,
            event_time_ns: 10 * 3600 * 1_000_000_000,
            magnitude: 50,
            asset: 0,
        });
        c.stress = Some(StressSpec::default());
        c.oracle.reference = Some("ref.csv".into());
        let text = c.to_toml();
        let back: RunConfig = parse_toml(&text, "echo").unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml(), text);
    }

    #[test]
    fn parse_error_names_line() {
        let err = parse_toml::<RunConfig>("seed = 1\nworkers = \"x\"\n", "c.cfg").unwrap_err();
        match err {
            Error::Parse { line, path, .. } => {
                assert_eq!(line, 2);
                assert_eq!(path, "c.cfg");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(parse_toml::<RunConfig>("sead = 1\n", "c.cfg").is_err());
    }

    #[test]
    fn missing_reference_named() {
        let mut c = RunConfig::default();
        c.calibration.enabled = true;
        c.oracle.reference = Some("/nonexistent/ref.csv".into());
        match c.validate() {
            Err(Error::MissingFile(p)) => assert_eq!(p, PathBuf::from("/nonexistent/ref.csv")),
            r => panic!("unexpected {r:?}"),
        }
    }

    #[test]
    fn intervention_outside_continuous_rejected() {
        let mut c = RunConfig::default();
        c.interventions.push(InterventionSpec { primitive: Primitive::StepJump, direction: 1, event_time_ns: 12 * 3600 * 1_000_000_000, magnitude: 1, asset: 0 });
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}
