use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use evosim::config::RunConfig;
use evosim::engine::{prepare_dir, OutputMode, SimOptions, Simulation};
use evosim::exchange::{SessionCalendar, SessionKind};
use evosim::harness::{self, io, EventStudySpec};
use evosim::types::NANOS_PER_SEC;
use evosim::Error;

#[derive(Parser)]
#[command(name = "evosim", version, about = "Multi-asset limit order book simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Asynchronous agent queries (true/false).
    #[arg(long = "async")]
    async_queries: Option<bool>,
    #[arg(long)]
    cadence_ms: Option<u64>,
    /// Main log on/off (true/false).
    #[arg(long)]
    main_log: Option<bool>,
    /// Parent directory for run directories.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Replace an existing run directory.
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the configured population.
    Simulate(Common),
    /// Replay a delimited order stream.
    Replay {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        orders: PathBuf,
        #[arg(long)]
        initial_snapshot: Option<PathBuf>,
    },
    /// Run with checkpoint calibration against a reference snapshot file.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Step-jump event study.
    EventStudy {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        asset: usize,
        #[arg(long)]
        event_time_ns: u64,
        #[arg(long)]
        magnitude: u64,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
    },
    /// Correlation matrix of bucketed mid log returns from a snapshot log.
    Correlate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        snapshots: PathBuf,
        #[arg(long, default_value_t = 60)]
        bucket_s: u64,
    },
    /// Synthetic throughput runs over a list of rates.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Orders per second per asset, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1000,10000,50000")]
        rates: Vec<f64>,
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
        #[arg(long, default_value_t = 1)]
        assets: usize,
    },
    /// Engine ablation table.
    Ablate {
        #[command(flatten)]
        common: Common,
    },
}

fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::Parse { .. } | Error::MissingFile(_) | Error::UnknownAgentType(_) | Error::OutputExists(_))
}

fn load(c: &Common) -> evosim::Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(w) = c.workers {
        cfg.workers = w;
    }
    if let Some(a) = c.async_queries {
        cfg.async_queries = a;
    }
    if let Some(m) = c.cadence_ms {
        cfg.snapshot_cadence_ms = m;
    }
    if let Some(m) = c.main_log {
        cfg.logs.main_log = m;
    }
    if let Some(o) = &c.output {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn echo(cfg: &RunConfig) {
    println!("# effective config\n{}", cfg.to_toml());
}

fn run_dir(cfg: &RunConfig, force: bool) -> evosim::Result<PathBuf> {
    let d = cfg.run_dir();
    prepare_dir(&d, force)?;
    std::fs::write(d.join("config.toml"), cfg.to_toml())?;
    Ok(d)
}

fn run_sim(cfg: &RunConfig, force: bool) -> evosim::Result<()> {
    cfg.validate()?;
    echo(cfg);
    let dir = run_dir(cfg, force)?;
    let opts = SimOptions { outputs: OutputMode::Dir(dir.clone()), capture_snapshots: false, trace_dispatch: false };
    let r = Simulation::new(cfg, opts)?.run()?;
    print!("{}{}", r.report.to_kv(), r.report.perf_kv());
    println!("run_dir={}", dir.display());
    Ok(())
}

fn dispatch(cmd: Cmd) -> evosim::Result<()> {
    match cmd {
        Cmd::Simulate(c) => run_sim(&load(&c)?, c.force),
        Cmd::Replay { common, orders, initial_snapshot } => {
            let mut cfg = load(&common)?;
            cfg.population.agents.clear();
            cfg.calibration.enabled = false;
            cfg.replay.path = Some(orders);
            cfg.replay.initial_snapshot = initial_snapshot.or(cfg.replay.initial_snapshot);
            run_sim(&cfg, common.force)
        }
        Cmd::Calibrate { common, reference } => {
            let mut cfg = load(&common)?;
            cfg.calibration.enabled = true;
            if let Some(r) = reference {
                cfg.oracle.reference = Some(r);
            }
            run_sim(&cfg, common.force)
        }
        Cmd::EventStudy { common, asset, event_time_ns, magnitude, repeats } => {
            let cfg = load(&common)?;
            cfg.validate_with(true)?;
            echo(&cfg);
            let spec = EventStudySpec { asset, event_time: event_time_ns, magnitude, repeats };
            let dir = run_dir(&cfg, common.force)?;
            let r = harness::event_study(&cfg, &spec)?;
            std::fs::write(dir.join("event_study.csv"), r.to_csv())?;
            println!("prefix_identical={}", r.prefix_identical);
            for (d, name) in ["up", "down"].iter().enumerate() {
                println!("first_window_displacement_{name}={}", r.displacement(d, 0).map_or("nan".into(), |x| x.to_string()));
            }
            println!("run_dir={}", dir.display());
            Ok(())
        }
        Cmd::Correlate { common, snapshots, bucket_s } => {
            let cfg = load(&common)?;
            cfg.validate()?;
            echo(&cfg);
            let snaps = io::read_snapshots(&snapshots)?;
            let assets = snaps.iter().map(|s| s.asset + 1).max().unwrap_or(0);
            let cal = SessionCalendar::from_spec(&cfg.calendar).map_err(Error::Config)?;
            let c = harness::cross_asset_correlation(&snaps, assets, &cal.windows(SessionKind::ContinuousTrading), bucket_s * NANOS_PER_SEC)?;
            let mut out = String::new();
            for row in &c.values {
                let cells: Vec<String> = row.iter().map(|v| if v.is_nan() { String::new() } else { format!("{v:.6}") }).collect();
                out += &cells.join(",");
                out.push('\n');
            }
            print!("{out}");
            println!("buckets={} mean_abs_offdiag={}", c.buckets, c.mean_abs_offdiag());
            Ok(())
        }
        Cmd::Bench { common, rates, duration, assets } => {
            let cfg = load(&common)?;
            cfg.validate()?;
            echo(&cfg);
            for rate in rates {
                let r = harness::stress_throughput(&cfg, rate, duration, assets)?;
                println!(
                    "rate={rate} assets={assets} workers={} emitted={} processed={} trades={} wall_clock_s={} throughput={} peak_memory_bytes={}",
                    r.workers, r.emitted, r.processed, r.trades, r.wall_clock_s, r.throughput, r.peak_memory_bytes
                );
            }
            Ok(())
        }
        Cmd::Ablate { common } => {
            let cfg = load(&common)?;
            cfg.validate()?;
            echo(&cfg);
            let dir = run_dir(&cfg, common.force)?;
            let rows = harness::ablation_suite(&cfg, cfg.workers.max(1), &dir)?;
            let mut table = String::from("config,workers,async,cadence_ms,main_log,processed,wall_clock_s,throughput,log_size_bytes\n");
            for (a, r) in &rows {
                table += &format!(
                    "{},{},{},{},{},{},{:.3},{:.0},{}\n",
                    a.label, a.workers, a.async_queries, a.cadence_ms, a.main_log, r.processed, r.wall_clock_s, r.throughput, r.log_size_bytes
                );
            }
            std::fs::write(dir.join("ablation.csv"), &table)?;
            print!("{table}");
            Ok(())
        }
    }
}

fn init_logging() {
    let level = std::env::var("EVOSIM_LOG_LEVEL").unwrap_or_else(|_| "warn".into());
    env_logger::Builder::new().parse_filters(&level).format_timestamp(None).init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if is_config_error(&e) {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

