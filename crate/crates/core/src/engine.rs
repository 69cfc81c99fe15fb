//! The simulation loop: one kernel, one exchange, a population of agents and
//! any number of order sources, driven to the end of the calendar horizon.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::agents::{spawn_population, Agent, CoverageRow, FactorState, Instruction, MarketView};
use crate::book::LobSnapshot;
use crate::calibration::{CalibrationReport, OracleSource};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::exchange::{Committed, Exchange, ExchangeConfig, ExchangeStats, PortfolioState, SessionCalendar, SessionKind, SettlementRow};
use crate::harness::io::{self, write_order_row, ORDER_HEADER};
use crate::harness::stress::StressSource;
use crate::kernel::{Endpoint, Event, Kernel, KernelCounters, Payload};
use crate::rng::{self, SimRng};
use crate::types::{fmt_time, AgentId, Lots, Order, OrderId, Origin, Receipt, RejectReason, Ticks, TimeNs};

/// Base of engine-assigned agent order ids.
const AGENT_ID_BASE: u64 = 1 << 41;
/// Base of orders seeded from an initial-snapshot file.
const SEED_ID_BASE: u64 = 1 << 60;

/// A lazily consumed stream of orders stamped with their arrival times.
pub trait OrderSource: Send {
    fn next_order(&mut self) -> Option<Order>;
}

pub struct VecSource(std::vec::IntoIter<Order>);

impl VecSource {
    pub fn new(orders: Vec<Order>) -> Self {
        VecSource(orders.into_iter())
    }
}

impl OrderSource for VecSource {
    fn next_order(&mut self) -> Option<Order> {
        self.0.next()
    }
}

enum Sink {
    Off,
    Memory(String),
    File(BufWriter<File>),
}

/// One output stream and the bytes written to it.
pub struct Stream {
    sink: Sink,
    bytes: u64,
}

impl Stream {
    fn open(mode: &OutputMode, name: &str, enabled: bool) -> Result<Self> {
        let sink = match mode {
            _ if !enabled => Sink::Off,
            OutputMode::Discard => Sink::Off,
            OutputMode::Memory => Sink::Memory(String::new()),
            OutputMode::Dir(d) => Sink::File(BufWriter::new(File::create(d.join(name))?)),
        };
        Ok(Stream { sink, bytes: 0 })
    }

    pub fn is_on(&self) -> bool {
        !matches!(self.sink, Sink::Off)
    }

    fn write(&mut self, s: &str) -> Result<()> {
        self.bytes += s.len() as u64;
        match &mut self.sink {
            Sink::Off => {}
            Sink::Memory(m) => m.push_str(s),
            Sink::File(f) => f.write_all(s.as_bytes())?,
        }
        Ok(())
    }

    fn finish(self) -> Result<String> {
        match self.sink {
            Sink::Memory(m) => Ok(m),
            Sink::File(mut f) => {
                f.flush()?;
                Ok(String::new())
            }
            Sink::Off => Ok(String::new()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OutputMode {
    /// No output streams at all.
    Discard,
    /// Streams kept as strings in the result.
    Memory,
    /// Streams written as files into an existing directory.
    Dir(PathBuf),
}

#[derive(Clone, Debug)]
pub struct SimOptions {
    pub outputs: OutputMode,
    /// Keep every recorded snapshot in the result.
    pub capture_snapshots: bool,
    /// Keep the kernel's dispatch trace.
    pub trace_dispatch: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { outputs: OutputMode::Memory, capture_snapshots: true, trace_dispatch: false }
    }
}

struct Outputs {
    snapshots: Stream,
    main: Stream,
    trades: Stream,
    orders: Stream,
    coverage: Stream,
    calibration: Stream,
    settlement: Stream,
}

/// Output file names inside a run directory.
pub mod files {
    pub const SNAPSHOTS: &str = "snapshots.csv";
    pub const MAIN_LOG: &str = "main.log";
    pub const TRADES: &str = "trades.csv";
    pub const ORDERS: &str = "orders.csv";
    pub const COVERAGE: &str = "coverage.csv";
    pub const CALIBRATION: &str = "calibration.csv";
    pub const SETTLEMENT: &str = "settlement.csv";
    pub const REPORT: &str = "report.txt";
    pub const PERF: &str = "perf.txt";
}

/// Stream contents when run with [`OutputMode::Memory`].
#[derive(Clone, Debug, Default)]
pub struct OutputText {
    pub snapshots: String,
    pub main: String,
    pub trades: String,
    pub orders: String,
    pub coverage: String,
    pub calibration: String,
    pub settlement: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    pub seed: u64,
    pub assets: usize,
    pub agents: usize,
    pub workers: usize,
    pub events_dispatched: u64,
    pub slices_visited: u64,
    pub max_slice_occupancy: usize,
    pub dispatch_digest: u64,
    pub syncs: u64,
    pub emitted: u64,
    pub routed: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub processed: u64,
    pub trades: u64,
    pub traded_lots: u64,
    pub band_violations: u64,
    pub session_violations: u64,
    pub snapshot_violations: u64,
    pub snapshots_logged: u64,
    pub calibrations: u64,
    pub calibration_orders: u64,
    pub mean_post_norm: f64,
    pub cash_start: i64,
    pub cash_end: i64,
    pub initial_snapshot_used: bool,
    pub wall_clock_s: f64,
    pub throughput: f64,
    pub peak_memory_bytes: u64,
    pub snapshot_log_bytes: u64,
    pub main_log_bytes: u64,
    pub log_size_bytes: u64,
}

impl RunReport {
    /// Deterministic `key=value` lines.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        macro_rules! kv {
            ($($f:ident),*) => { $( let _ = writeln!(s, concat!(stringify!($f), "={}"), self.$f); )* };
        }
        kv!(
            seed, assets, agents, workers, events_dispatched, slices_visited, max_slice_occupancy, dispatch_digest, syncs, emitted, routed,
            accepted, rejected, processed, trades, traded_lots, band_violations, session_violations, snapshot_violations, snapshots_logged,
            calibrations, calibration_orders, mean_post_norm, cash_start, cash_end, initial_snapshot_used, snapshot_log_bytes, main_log_bytes,
            log_size_bytes
        );
        s
    }

    /// Hardware-dependent measurements.
    pub fn perf_kv(&self) -> String {
        format!("wall_clock_s={}\nthroughput={}\npeak_memory_bytes={}\n", self.wall_clock_s, self.throughput, self.peak_memory_bytes)
    }
}

pub struct RunResult {
    pub report: RunReport,
    pub text: OutputText,
    pub snapshots: Vec<LobSnapshot>,
    pub calibrations: Vec<CalibrationReport>,
    pub settlement: Vec<SettlementRow>,
    pub coverage: Vec<CoverageRow>,
    pub portfolios: Vec<PortfolioState>,
    pub stats: ExchangeStats,
    pub counters: KernelCounters,
    pub dispatch_trace: Option<Vec<crate::kernel::EventKey>>,
}

/// Peak resident set size of this process, from `/proc/self/status`.
pub fn peak_rss_bytes() -> u64 {
    std::fs::read_to_string("/proc/self/status")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("VmHWM:"))
                .and_then(|l| l.split_whitespace().nth(1))
                .and_then(|kb| kb.parse::<u64>().ok())
        })
        .map_or(0, |kb| kb * 1024)
}

#[derive(Default)]
struct AssetTally {
    last_price: Option<Ticks>,
    trades: u64,
    lots: Lots,
}

pub struct Simulation {
    cfg: RunConfig,
    opts: SimOptions,
    calendar: SessionCalendar,
    kernel: Kernel,
    exchange: Exchange,
    agents: Vec<Box<dyn Agent>>,
    rngs: Vec<SimRng>,
    factor: FactorState,
    sources: Vec<Box<dyn OrderSource>>,
    oracle: Option<OracleSource>,
    targets: Option<Vec<Option<LobSnapshot>>>,
    intervened: Vec<Lots>,
    next_agent_order: u64,
    out: Outputs,
    scratch: String,
    tally: Vec<AssetTally>,
    report: RunReport,
    snapshots: Vec<LobSnapshot>,
    calibrations: Vec<CalibrationReport>,
    settlement: Vec<SettlementRow>,
    coverage: Vec<CoverageRow>,
    post_norm_sum: f64,
}

/// Limit orders rebuilding every level of the given snapshots, at each snapshot's time.
fn seed_orders(snaps: &[LobSnapshot]) -> Vec<Order> {
    let mut out = Vec::new();
    let mut n = SEED_ID_BASE;
    for s in snaps {
        for side in [crate::types::Side::Buy, crate::types::Side::Sell] {
            for (p, v) in s.side_levels(side) {
                out.push(Order::limit(n, s.asset, side, p, v).at(s.timestamp));
                n += 1;
            }
        }
    }
    out.sort_by_key(|o| o.recv_time);
    out
}

/// Stable merge by arrival time; `a` wins ties.
fn merge(a: Vec<Order>, b: Vec<Order>) -> Vec<Order> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (a.into_iter().peekable(), b.into_iter().peekable());
    loop {
        match (i.peek(), j.peek()) {
            (Some(x), Some(y)) if x.recv_time <= y.recv_time => out.extend(i.next()),
            (Some(_), Some(_)) => out.extend(j.next()),
            (Some(_), None) => out.extend(i.next()),
            (None, Some(_)) => out.extend(j.next()),
            (None, None) => return out,
        }
    }
}

impl Simulation {
    pub fn new(cfg: &RunConfig, opts: SimOptions) -> Result<Simulation> {
        Self::build(cfg, opts, None)
    }

    /// Uses `reference` as the oracle series instead of reading `oracle.reference`.
    pub fn with_reference(cfg: &RunConfig, opts: SimOptions, reference: Vec<LobSnapshot>) -> Result<Simulation> {
        Self::build(cfg, opts, Some(reference))
    }

    fn build(cfg: &RunConfig, opts: SimOptions, reference: Option<Vec<LobSnapshot>>) -> Result<Simulation> {
        cfg.validate_with(reference.is_some())?;
        let cfg = cfg.clone();
        let m = cfg.assets.len();
        let calendar = SessionCalendar::from_spec(&cfg.calendar).map_err(Error::Config)?;
        let factor = FactorState::new(&cfg.factor, m, rng::derive_seed(cfg.seed, &[rng::tag::FACTOR]));
        let spawned = spawn_population(&cfg.population, m, cfg.seed, &factor)?;
        let n_agents = spawned.agents.len();
        let exchange = Exchange::new(
            ExchangeConfig {
                assets: cfg.assets.clone(),
                depth: cfg.depth,
                workers: cfg.workers,
                batch: cfg.batch,
                preserve_day_orders: cfg.preserve_day_orders,
                replay_bypass: cfg.replay_bypass,
            },
            spawned.portfolios,
        );
        let mut kernel = Kernel::new(cfg.slice_width_ns, cfg.latency()?);
        if opts.trace_dispatch {
            kernel.record_trace();
        }

        let mut sources: Vec<Box<dyn OrderSource>> = Vec::new();
        let mut report = RunReport { seed: cfg.seed, assets: m, agents: n_agents, workers: cfg.workers, ..RunReport::default() };
        let replayed = match &cfg.replay.path {
            Some(p) => io::read_orders(p)?,
            None => Vec::new(),
        };
        let seeded = match &cfg.replay.initial_snapshot {
            Some(p) => {
                log::info!("seeding opening books from {}", p.display());
                report.initial_snapshot_used = true;
                seed_orders(&io::read_snapshots(p)?)
            }
            None => Vec::new(),
        };
        if !replayed.is_empty() || !seeded.is_empty() {
            sources.push(Box::new(VecSource::new(merge(seeded, replayed))));
        }
        if let Some(s) = &cfg.stress {
            let start = calendar.windows(SessionKind::ContinuousTrading).first().map_or(0, |w| w.0);
            sources.push(Box::new(StressSource::new(s, &cfg.assets, start, cfg.seed)));
        }

        let oracle = if cfg.calibration.enabled {
            let series = match reference {
                Some(r) => r,
                None => {
                    let path = cfg.oracle.reference.as_ref().ok_or_else(|| Error::Config("calibration needs oracle.reference".into()))?;
                    io::read_snapshots(path)?
                }
            };
            let mut o = OracleSource::new(
                series,
                m,
                cfg.oracle.noise,
                cfg.calibration.levels,
                rng::derive_seed(cfg.oracle.seed.unwrap_or(cfg.seed), &[rng::tag::ORACLE]),
            );
            o.noise_from = cfg.oracle.noise_from_ns;
            o.strict = cfg.oracle.strict;
            Some(o)
        } else {
            None
        };

        let out = Outputs {
            snapshots: Stream::open(&opts.outputs, files::SNAPSHOTS, cfg.logs.snapshot_log)?,
            main: Stream::open(&opts.outputs, files::MAIN_LOG, cfg.logs.main_log)?,
            trades: Stream::open(&opts.outputs, files::TRADES, cfg.logs.trade_tape)?,
            orders: Stream::open(&opts.outputs, files::ORDERS, cfg.logs.order_trace)?,
            coverage: Stream::open(&opts.outputs, files::COVERAGE, cfg.logs.coverage_trace)?,
            calibration: Stream::open(&opts.outputs, files::CALIBRATION, cfg.logs.calibration_log && cfg.calibration.enabled)?,
            settlement: Stream::open(&opts.outputs, files::SETTLEMENT, true)?,
        };
        let rngs = (0..n_agents).map(|i| rng::stream(cfg.seed, &[rng::tag::AGENT, i as u64])).collect();
        Ok(Simulation {
            opts,
            calendar,
            kernel,
            exchange,
            agents: spawned.agents,
            rngs,
            factor,
            sources,
            oracle,
            targets: None,
            intervened: vec![0; m],
            next_agent_order: AGENT_ID_BASE,
            out,
            scratch: String::new(),
            tally: (0..m).map(|_| AssetTally::default()).collect(),
            report,
            snapshots: Vec::new(),
            calibrations: Vec::new(),
            settlement: Vec::new(),
            coverage: Vec::new(),
            post_norm_sum: 0.0,
            cfg,
        })
    }

    /// Replaces the spawned population, for callers that build agents directly.
    pub fn with_agents(mut self, agents: Vec<Box<dyn Agent>>, portfolios: Vec<PortfolioState>) -> Result<Self> {
        let cfg = &self.cfg;
        self.exchange = Exchange::new(
            ExchangeConfig {
                assets: cfg.assets.clone(),
                depth: cfg.depth,
                workers: cfg.workers,
                batch: cfg.batch,
                preserve_day_orders: cfg.preserve_day_orders,
                replay_bypass: cfg.replay_bypass,
            },
            portfolios,
        );
        self.rngs = (0..agents.len()).map(|i| rng::stream(cfg.seed, &[rng::tag::AGENT, i as u64])).collect();
        self.report.agents = agents.len();
        self.agents = agents;
        Ok(self)
    }

    pub fn add_source(&mut self, source: Box<dyn OrderSource>) {
        self.sources.push(source);
    }

    fn write_headers(&mut self) -> Result<()> {
        let h = LobSnapshot::header(self.cfg.depth);
        self.out.snapshots.write(&h)?;
        self.out.trades.write("trade_id,time_ns,asset,price,volume,aggressor_order_id,resting_order_id,aggressor_side\n")?;
        self.out.orders.write(ORDER_HEADER)?;
        self.out.coverage.write("time_ns,agent_type,side,price,mid,size\n")?;
        self.out.calibration.write("asset,time_ns,checkpoint,pre_gap_norm,post_gap_norm,orders_used,lots_used,residual_flag,budget_exhausted\n")?;
        self.out.settlement.write("day,account,asset,bought,sold,pend_released,cash_delta\n")?;
        Ok(())
    }

    /// Structural events go in first so they precede flow at equal times.
    fn schedule_structure(&mut self) -> Result<()> {
        let days = self.calendar.days();
        let last = self.calendar.sessions().len() - 1;
        let mut structural: Vec<(TimeNs, Payload)> = Vec::new();
        for (t, day, session) in self.calendar.transitions() {
            structural.push((t, Payload::SessionTransition { day, session }));
            if session == last {
                let end = self.calendar.session_bounds(day, session).1;
                structural.push((end, Payload::SessionTransition { day, session: usize::MAX }));
            }
        }
        for (n, iv) in self.cfg.interventions.iter().enumerate() {
            if iv.magnitude == 0 {
                continue;
            }
            let side = if iv.direction > 0 { crate::types::Side::Buy } else { crate::types::Side::Sell };
            let mut o = Order::market(0, iv.asset, side, iv.magnitude).with_origin(Origin::Intervention).at(iv.event_time_ns);
            o.id = OrderId::intervention(n as u64);
            structural.push((iv.event_time_ns, Payload::for_order(o, None)));
        }
        let cadence = self.cfg.cadence_ns();
        let mut k = 0;
        for (s, e) in self.calendar.windows(SessionKind::ContinuousTrading) {
            let mut t = s;
            while t < e {
                structural.push((t, Payload::OracleTrigger { checkpoint: k }));
                structural.push((t, Payload::RecordingCheckpoint { checkpoint: k }));
                k += 1;
                t += cadence;
            }
        }
        // Stable: equal times keep transition < intervention < checkpoint order.
        structural.sort_by_key(|x| x.0);
        for (t, p) in structural {
            self.kernel.schedule_at(p, t)?;
        }
        debug_assert!(days > 0);

        let start = self.calendar.transitions().first().map_or(0, |x| x.0);
        for a in 0..self.agents.len() {
            if let Some(t) = self.agents[a].first_wakeup(start, &mut self.rngs[a]) {
                self.kernel.schedule_wakeup(a, t.max(start))?;
            }
        }
        for s in 0..self.sources.len() {
            self.pull(s)?;
        }
        Ok(())
    }

    fn pull(&mut self, s: usize) -> Result<()> {
        if let Some(o) = self.sources[s].next_order() {
            self.report.emitted += 1;
            let at = o.recv_time.max(self.kernel.now());
            self.kernel.schedule_at(Payload::for_order(o, Some(s as u32)), at)?;
        }
        Ok(())
    }

    fn commit(&mut self) -> Result<()> {
        let c = self.exchange.sync(self.kernel.now())?;
        self.absorb(c)
    }

    fn absorb(&mut self, c: Committed) -> Result<()> {
        let now = self.kernel.now();
        for (a, r) in c.responses {
            self.kernel.send_between(Payload::ExchangeResponse { agent: a, receipt: r }, now, Endpoint::Exchange, Endpoint::Agent)?;
        }
        let tape = self.exchange.take_tape();
        for t in &tape {
            let x = &mut self.tally[t.asset];
            x.last_price = Some(t.price);
            x.trades += 1;
            x.lots += t.volume;
        }
        if self.out.trades.is_on() {
            self.scratch.clear();
            for t in &tape {
                let _ = writeln!(
                    self.scratch,
                    "{},{},{},{},{},{},{},{}",
                    t.trade_id,
                    t.time,
                    t.asset,
                    t.price,
                    t.volume,
                    t.aggressor_order_id,
                    t.resting_order_id,
                    t.aggressor_side.code()
                );
            }
            self.out.trades.write(&self.scratch)?;
        }
        for r in c.calibrations {
            self.report.calibrations += 1;
            self.report.calibration_orders += r.orders_used as u64;
            self.post_norm_sum += r.post_norm;
            if self.out.calibration.is_on() {
                self.scratch.clear();
                let _ = writeln!(
                    self.scratch,
                    "{},{},{},{},{},{},{},{},{}",
                    r.asset,
                    r.time,
                    r.checkpoint,
                    r.pre_norm,
                    r.post_norm,
                    r.orders_used,
                    r.lots_used,
                    u8::from(r.residual),
                    u8::from(r.budget_exhausted)
                );
                self.out.calibration.write(&self.scratch)?;
            }
            self.calibrations.push(r);
        }
        for (j, p, v) in c.auctions {
            log::debug!("{} opening auction asset {j}: price {p}, volume {v}", fmt_time(now));
            if self.out.main.is_on() {
                self.scratch.clear();
                let _ = writeln!(self.scratch, "{} auction asset={j} price={p} volume={v}", fmt_time(now));
                self.out.main.write(&self.scratch)?;
            }
        }
        Ok(())
    }

    fn respond(&mut self, agent: AgentId, receipt: Receipt) -> Result<()> {
        let now = self.kernel.now();
        self.kernel.send_between(Payload::ExchangeResponse { agent, receipt }, now, Endpoint::Exchange, Endpoint::Agent)?;
        Ok(())
    }

    fn on_order(&mut self, mut order: Order, source: Option<u32>) -> Result<()> {
        order.recv_time = self.kernel.now();
        if let Some(s) = source {
            self.pull(s as usize)?;
        }
        if order.origin == Origin::Intervention && order.asset < self.intervened.len() {
            self.intervened[order.asset] += order.volume;
        }
        match self.exchange.route_order(order)? {
            Ok(()) => {
                if self.out.orders.is_on() {
                    self.scratch.clear();
                    write_order_row(&order, &mut self.scratch);
                    self.out.orders.write(&self.scratch)?;
                }
            }
            Err(r) => {
                if let Some(a) = order.origin.agent() {
                    self.respond(a, r)?;
                }
            }
        }
        Ok(())
    }

    fn on_wakeup(&mut self, agent: AgentId) -> Result<()> {
        let now = self.kernel.now();
        match self.calendar.next_trading_time(now) {
            None => return Ok(()),
            Some(t) if t > now => {
                self.kernel.schedule_wakeup(agent, t)?;
                return Ok(());
            }
            _ => {}
        }
        if !self.cfg.async_queries {
            self.commit()?;
        }
        let factor = self.factor.value_at(now);
        let decision = {
            let view = MarketView {
                time: now,
                day: self.exchange.day(),
                phase: self.exchange.phase(),
                snapshots: self.exchange.views(),
                bands: self.exchange.bands(),
                portfolio: self.exchange.portfolio(agent),
                open_orders: self.exchange.open_orders(agent),
                factor,
            };
            self.agents[agent].on_wakeup(&view, &mut self.rngs[agent])
        };
        let m = self.exchange.assets();
        let delay = self.kernel.latency().delay(Endpoint::Agent, Endpoint::Exchange);
        let mut orders = Vec::with_capacity(decision.batch.len());
        for ins in &decision.batch {
            let id = self.next_agent_order;
            self.next_agent_order += 1;
            let o = match *ins {
                Instruction::Limit { asset, side, price, volume } => Order::limit(id, asset, side, price, volume),
                Instruction::Market { asset, side, volume } => Order::market(id, asset, side, volume),
                Instruction::Cancel { asset, target } => Order::cancel(id, asset, target),
            };
            orders.push(o.with_origin(Origin::Agent(agent)).at(now + delay));
        }
        if orders.iter().any(|o| o.asset >= m || !o.is_well_formed()) {
            log::warn!("agent {agent} ({}) sent a malformed batch at {}; rejected", self.agents[agent].kind(), fmt_time(now));
            for o in &orders {
                self.respond(agent, Receipt::rejected(o, RejectReason::Malformed))?;
            }
        } else {
            for o in orders {
                if o.order_type == crate::types::OrderType::Limit && (self.out.coverage.is_on() || self.opts.capture_snapshots) {
                    let row = CoverageRow {
                        time: now,
                        agent_type: self.agents[agent].kind().to_string(),
                        side: o.side,
                        price: o.price,
                        mid: self.exchange.views()[o.asset].mid(),
                        size: o.volume,
                    };
                    if self.out.coverage.is_on() {
                        self.scratch.clear();
                        let mid = row.mid.map(|x| x.to_string()).unwrap_or_default();
                        let _ = writeln!(self.scratch, "{},{},{},{},{},{}", row.time, row.agent_type, row.side.code(), row.price, mid, row.size);
                        self.out.coverage.write(&self.scratch)?;
                    }
                    if self.opts.capture_snapshots {
                        self.coverage.push(row);
                    }
                }
                self.kernel.send(Payload::for_order(o, None), now, delay)?;
            }
        }
        if let Some(t) = decision.next_wakeup {
            self.kernel.schedule_wakeup(agent, t.max(now))?;
        }
        Ok(())
    }

    /// Returns `false` once the horizon has ended.
    fn on_transition(&mut self, day: usize, session: usize) -> Result<bool> {
        self.commit()?;
        let now = self.kernel.now();
        if session == usize::MAX {
            self.exchange.set_phase(day, SessionKind::Closed);
            log::info!("{} day {day} closed", fmt_time(now));
            return Ok(day + 1 < self.calendar.days());
        }
        let kind = self.calendar.sessions()[session].kind;
        let prev = self.exchange.phase();
        self.exchange.set_phase(day, kind);
        log::info!("{} {}", fmt_time(now), kind.label());
        match kind {
            SessionKind::ContinuousTrading if prev == SessionKind::PreopenAuction => {
                let c = self.exchange.open_auction(now)?;
                self.absorb(c)?;
            }
            SessionKind::EodClearing => {
                let (rows, c) = self.exchange.end_of_day(now)?;
                self.absorb(c)?;
                self.scratch.clear();
                for r in &rows {
                    let _ = writeln!(self.scratch, "{},{},{},{},{},{},{}", r.day, r.account, r.asset, r.bought, r.sold, r.pend_released, r.cash_delta);
                }
                self.out.settlement.write(&self.scratch)?;
                self.settlement.extend(rows);
            }
            _ => {}
        }
        Ok(true)
    }

    fn on_oracle(&mut self, checkpoint: usize) -> Result<()> {
        let Some(oracle) = &self.oracle else {
            return Ok(());
        };
        let now = self.kernel.now();
        let mut targets = Vec::with_capacity(self.intervened.len());
        for j in 0..self.intervened.len() {
            let v = std::mem::take(&mut self.intervened[j]);
            match oracle.query(j, now, checkpoint, v) {
                Ok(s) => targets.push(Some(s)),
                Err(Error::NoReference { .. }) if !oracle.strict => targets.push(None),
                Err(e) => return Err(e),
            }
        }
        self.targets = Some(targets);
        Ok(())
    }

    fn on_checkpoint(&mut self, checkpoint: usize) -> Result<()> {
        let now = self.kernel.now();
        if let Some(targets) = self.targets.take() {
            self.exchange.calibrate(now, checkpoint, targets, &self.cfg.calibration)?;
        }
        let (snaps, c) = self.exchange.record(now)?;
        self.absorb(c)?;
        let processed = self.exchange.stats().processed;
        for s in snaps {
            if s.check().is_err() {
                self.report.snapshot_violations += 1;
            }
            self.report.snapshots_logged += 1;
            if self.out.snapshots.is_on() {
                self.scratch.clear();
                s.write_row(&mut self.scratch);
                self.out.snapshots.write(&self.scratch)?;
            }
            if self.out.main.is_on() {
                let x = std::mem::take(&mut self.tally[s.asset]);
                self.tally[s.asset].last_price = x.last_price;
                self.scratch.clear();
                let fmt = |p: Option<Ticks>| p.map_or_else(|| "-".to_string(), |p| p.to_string());
                let _ = writeln!(
                    self.scratch,
                    "{} checkpoint={checkpoint} asset={} phase={} bid={} ask={} mid={} last={} trades={} lots={} processed={processed}",
                    fmt_time(now),
                    s.asset,
                    self.exchange.phase().label(),
                    fmt(s.best_bid()),
                    fmt(s.best_ask()),
                    s.mid().map_or_else(|| "-".to_string(), |m| format!("{m:.1}")),
                    fmt(x.last_price),
                    x.trades,
                    x.lots,
                );
                self.out.main.write(&self.scratch)?;
            }
            if self.opts.capture_snapshots {
                self.snapshots.push(s);
            }
        }
        Ok(())
    }

    fn dispatch(&mut self, ev: Event) -> Result<bool> {
        match ev.payload {
            Payload::OrderArrival { order, source } | Payload::Cancel { order, source } => self.on_order(order, source)?,
            Payload::ExchangeResponse { agent, receipt } => self.agents[agent].on_receipt(&receipt),
            Payload::AgentWakeup { agent } => self.on_wakeup(agent)?,
            Payload::SessionTransition { day, session } => return self.on_transition(day, session),
            Payload::OracleTrigger { checkpoint } => self.on_oracle(checkpoint)?,
            Payload::RecordingCheckpoint { checkpoint } => self.on_checkpoint(checkpoint)?,
        }
        Ok(true)
    }

    pub fn run(mut self) -> Result<RunResult> {
        let started = Instant::now();
        self.report.cash_start = self.exchange.total_cash();
        self.write_headers()?;
        self.schedule_structure()?;
        let mut slice = None;
        while let Some(t) = self.kernel.peek_time() {
            let b = self.kernel.slice_of(t);
            if slice != Some(b) {
                if self.exchange.pending_commands() > 0 {
                    self.commit()?;
                }
                slice = Some(b);
            }
            let ev = self.kernel.next_event().expect("peeked");
            if !self.dispatch(ev)? {
                break;
            }
        }
        self.commit()?;
        let wall = started.elapsed().as_secs_f64();

        let stats = self.exchange.stats();
        let counters = self.kernel.counters();
        let r = &mut self.report;
        r.events_dispatched = counters.events_dispatched;
        r.slices_visited = counters.slices_visited;
        r.max_slice_occupancy = counters.max_slice_occupancy;
        r.dispatch_digest = counters.dispatch_digest;
        r.syncs = self.exchange.syncs();
        r.routed = stats.routed;
        r.accepted = stats.accepted;
        r.rejected = stats.rejected;
        r.processed = stats.processed;
        r.trades = stats.trades;
        r.traded_lots = stats.traded_lots;
        r.band_violations = stats.band_violations;
        r.session_violations = stats.session_violations;
        r.mean_post_norm = if r.calibrations > 0 { self.post_norm_sum / r.calibrations as f64 } else { 0.0 };
        r.cash_end = self.exchange.total_cash();
        r.wall_clock_s = wall;
        r.throughput = if wall > 0.0 { stats.processed as f64 / wall } else { 0.0 };
        r.peak_memory_bytes = peak_rss_bytes();
        r.snapshot_log_bytes = self.out.snapshots.bytes;
        r.main_log_bytes = self.out.main.bytes;
        r.log_size_bytes = r.snapshot_log_bytes + r.main_log_bytes;

        let portfolios = self.exchange.portfolios().to_vec();
        let dispatch_trace = self.kernel.trace().map(|t| t.to_vec());
        let o = self.out;
        let text = OutputText {
            snapshots: o.snapshots.finish()?,
            main: o.main.finish()?,
            trades: o.trades.finish()?,
            orders: o.orders.finish()?,
            coverage: o.coverage.finish()?,
            calibration: o.calibration.finish()?,
            settlement: o.settlement.finish()?,
        };
        if let OutputMode::Dir(d) = &self.opts.outputs {
            std::fs::write(d.join(files::REPORT), self.report.to_kv())?;
            std::fs::write(d.join(files::PERF), self.report.perf_kv())?;
        }
        Ok(RunResult {
            report: self.report,
            text,
            snapshots: self.snapshots,
            calibrations: self.calibrations,
            settlement: self.settlement,
            coverage: self.coverage,
            portfolios,
            stats,
            counters,
            dispatch_trace,
        })
    }
}

/// Builds and runs a simulation.
pub fn simulate(cfg: &RunConfig, opts: SimOptions) -> Result<RunResult> {
    Simulation::new(cfg, opts)?.run()
}

/// Creates `dir`, refusing an existing one unless `force`.
pub fn prepare_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        if !force {
            return Err(Error::OutputExists(dir.to_path_buf()));
        }
        std::fs::remove_dir_all(dir)?;
    }
    std::fs::create_dir_all(dir)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AgentGroup, ParamValue, PopulationSpec};

    fn group(kind: &str, count: usize, params: &[(&str, f64)]) -> AgentGroup {
        AgentGroup {
            kind: kind.into(),
            count,
            seed: None,
            cash: 10_000_000_000,
            holdings: 10_000,
            params: params.iter().map(|(k, v)| (k.to_string(), ParamValue::Fixed(*v))).collect(),
        }
    }

    fn mixed(workers: usize) -> RunConfig {
        let mut c = RunConfig { seed: 11, workers, ..RunConfig::default() };
        c.assets = vec![Default::default(); 2];
        c.population = PopulationSpec { agents: vec![group("quote_updater", 2, &[]), group("zi", 6, &[("rate", 0.5)])] };
        c
    }

    #[test]
    fn mixed_day_is_sound_and_worker_invariant() {
        let a = simulate(&mixed(0), SimOptions::default()).unwrap();
        assert!(a.report.trades > 0, "{}", a.report.to_kv());
        assert_eq!(a.report.snapshot_violations, 0);
        assert_eq!(a.report.band_violations, 0);
        assert_eq!(a.report.session_violations, 0);
        assert_eq!(a.report.cash_start, a.report.cash_end);
        for w in [1, 3] {
            let b = simulate(&mixed(w), SimOptions::default()).unwrap();
            assert_eq!(a.text.snapshots, b.text.snapshots);
            assert_eq!(a.text.trades, b.text.trades);
        }
    }

    #[test]
    fn empty_run_logs_empty_books() {
        let r = simulate(&RunConfig { workers: 0, ..RunConfig::default() }, SimOptions::default()).unwrap();
        assert_eq!(r.report.trades, 0);
        assert_eq!(r.snapshots.len(), 4 * 3600 / 3);
        assert!(r.snapshots.iter().all(|s| s.best_bid().is_none()));
    }
}
