//! Reusable end-to-end checks. Each panics with a message on failure.

use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use evosim::agents::{spawn_population, Agent, AgentDecision, FactorState, Instruction, MarketView};
use evosim::config::RunConfig;
use evosim::engine::{RunResult, SimOptions, Simulation};
use evosim::exchange::{PortfolioState, SessionCalendar, SessionKind};
use evosim::kernel::{Kernel, LatencyModel, Payload};
use evosim::rng::SimRng;
use evosim::types::{Receipt, ReceiptStatus, RejectReason, Side, Ticks, TimeNs, NANOS_PER_SEC};

use super::{mixed_config, short_calendar, FlatQueue};

pub const DELTA: TimeNs = 100_000_000;

/// Drives the kernel and the flat queue with identical inserts, including
/// inserts made while dispatching, and compares the pop order.
pub fn drive(seed: u64, initial: usize, total: usize, span: TimeNs) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k = Kernel::new(DELTA, LatencyModel::constant(0));
    let mut q = FlatQueue::default();
    let mut seq = 0u64;
    let mut inserted = 0;
    let push = |k: &mut Kernel, q: &mut FlatQueue, now: TimeNs, rng: &mut ChaCha8Rng, seq: &mut u64| {
        let delay = match rng.random_range(0..4) {
            0 => 0,
            1 => rng.random_range(0..1_000),
            2 => rng.random_range(0..DELTA),
            _ => rng.random_range(0..span),
        };
        let key = k.send(Payload::AgentWakeup { agent: *seq as usize }, now, delay).unwrap();
        assert_eq!((key.due_time, key.seq), (now + delay, *seq));
        q.push(now + delay, *seq);
        *seq += 1;
    };
    for _ in 0..initial {
        push(&mut k, &mut q, 0, &mut rng, &mut seq);
        inserted += 1;
    }
    let mut popped = 0;
    while let Some(ev) = k.next_event() {
        let expect = q.pop().expect("oracle empty early");
        assert_eq!((ev.due_time, ev.seq), expect, "pop {popped}");
        popped += 1;
        let n = if inserted < total { rng.random_range(0..3) } else { 0 };
        for _ in 0..n {
            push(&mut k, &mut q, ev.due_time, &mut rng, &mut seq);
            inserted += 1;
        }
    }
    assert!(q.pop().is_none());
    assert_eq!(popped, inserted);
    popped
}

#[derive(Default)]
struct ProbeLog {
    /// (day, avail, pend) at each continuous-session wakeup.
    seen: Vec<(usize, u64, u64)>,
    bought: [u64; 2],
    receipts: Vec<Receipt>,
}

/// Buys on day 0, then tries to sell one lot more than it may.
struct Probe {
    log: Arc<Mutex<ProbeLog>>,
    step: usize,
    sold_day1: bool,
}

impl Agent for Probe {
    fn kind(&self) -> &'static str {
        "probe"
    }

    fn first_wakeup(&mut self, start: TimeNs, _rng: &mut SimRng) -> Option<TimeNs> {
        Some(start)
    }

    fn on_wakeup(&mut self, view: &MarketView, _rng: &mut SimRng) -> AgentDecision {
        let next_wakeup = Some(view.time + 20 * NANOS_PER_SEC);
        if view.phase != SessionKind::ContinuousTrading {
            return AgentDecision { batch: Vec::new(), next_wakeup };
        }
        let p = view.portfolio;
        self.log.lock().unwrap().seen.push((view.day, p.avail[0], p.pend[0]));
        self.step += 1;
        let oversell = Instruction::Limit { asset: 0, side: Side::Sell, price: view.bands[0].p_max, volume: p.avail[0] + 1 };
        let batch = match (view.day, self.step) {
            (0, 3) => vec![Instruction::Market { asset: 0, side: Side::Buy, volume: 20 }],
            (0, 6) => vec![oversell],
            (1, _) if !self.sold_day1 => {
                self.sold_day1 = true;
                vec![oversell]
            }
            _ => Vec::new(),
        };
        AgentDecision { batch, next_wakeup }
    }

    fn on_receipt(&mut self, r: &Receipt) {
        let mut log = self.log.lock().unwrap();
        // Only the market buy can be processed; the oversized sells are rejected.
        if r.status == ReceiptStatus::Processed {
            let day = log.seen.last().map_or(0, |s| s.0);
            log.bought[day] += r.filled;
        }
        log.receipts.push(r.clone());
    }
}


pub fn two_day_config(workers: usize) -> RunConfig {
    let mut c = mixed_config(21, 2, workers);
    c.calendar = short_calendar(2, 20);
    c
}

/// Runs `cfg` with a probe agent appended and checks T+1 availability.
/// Returns the lots the probe bought on day 0.
pub fn t1_availability(cfg: &RunConfig) -> u64 {
    let m = cfg.assets.len();
    let factor = FactorState::new(&cfg.factor, m, 0);
    let mut spawned = spawn_population(&cfg.population, m, cfg.seed, &factor).unwrap();
    let log = Arc::new(Mutex::new(ProbeLog::default()));
    spawned.agents.push(Box::new(Probe { log: log.clone(), step: 0, sold_day1: false }));
    spawned.portfolios.push(PortfolioState::new(m, 10_000_000_000, 50));
    let r = Simulation::new(cfg, SimOptions::default()).unwrap().with_agents(spawned.agents, spawned.portfolios).unwrap().run().unwrap();
    assert!(r.report.trades > 0);

    let log = log.lock().unwrap();
    let bought = log.bought[0];
    assert!(bought > 0, "probe bought nothing");
    let day0_last = log.seen.iter().rev().find(|s| s.0 == 0).unwrap();
    let day1_first = log.seen.iter().find(|s| s.0 == 1).expect("probe woke on day 1");
    // Purchases sit in pending for the rest of the day and never become sellable early.
    assert_eq!(day0_last.2, bought);
    assert!(log.seen.iter().filter(|s| s.0 == 0).all(|s| s.1 <= 50));
    // Oversized sells are rejected on both days.
    let rejects = log.receipts.iter().filter(|r| r.status == ReceiptStatus::Rejected(RejectReason::InsufficientAvailable)).count();
    assert!(rejects >= 2, "{rejects} rejections");
    // Day 1 opens with the previous purchases available.
    assert_eq!(day1_first.1, 50 + bought, "day-1 availability");
    assert_eq!(day1_first.2, 0);

    let id = (r.portfolios.len() - 1).to_string();
    let row = r.settlement.iter().find(|row| row.day == 0 && row.account == id && row.asset == 0).expect("probe settlement row");
    assert_eq!((row.bought, row.pend_released), (bought, bought));
    bought
}

fn band(p_ref: Ticks, eta: f64) -> (Ticks, Ticks) {
    (((p_ref as f64) * (1.0 - eta)).round() as Ticks, ((p_ref as f64) * (1.0 + eta)).round() as Ticks)
}

/// Trades stay inside each day's band (re-referenced on the previous close)
/// and inside continuous sessions; every bought lot is released at day end.
/// Returns the number of trades checked.
pub fn bands_and_sessions(cfg: &RunConfig, r: &RunResult) -> usize {
    let cal = SessionCalendar::from_spec(&cfg.calendar).unwrap();
    let windows = cal.windows(SessionKind::ContinuousTrading);
    let mut trades: Vec<(TimeNs, usize, Ticks, u64)> = Vec::new();
    for line in r.text.trades.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        trades.push((f[1].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap(), f[4].parse().unwrap()));
    }
    assert!(trades.len() > 100, "only {} trades", trades.len());
    let day_of = |t: TimeNs| windows.iter().position(|w| w.0 <= t && t < w.1);
    let mut p_ref: Vec<Ticks> = cfg.assets.iter().map(|a| a.p_ref).collect();
    for (d, &(start, end)) in windows.iter().enumerate() {
        for j in 0..cfg.assets.len() {
            let (lo, hi) = band(p_ref[j], cfg.assets[j].eta);
            let day: Vec<_> = trades.iter().filter(|t| t.1 == j && t.0 >= start && t.0 < end).collect();
            assert!(day.iter().all(|t| lo <= t.2 && t.2 <= hi), "band breach on day {d} asset {j}");
            if let Some(last) = day.last() {
                p_ref[j] = last.2;
            }
        }
    }
    assert!(trades.iter().all(|t| day_of(t.0).is_some()), "trade outside continuous trading");
    assert!(trades.iter().any(|t| day_of(t.0) == Some(1)), "no day-2 trades");
    assert_eq!(r.report.cash_start, r.report.cash_end, "cash not conserved");
    for s in &r.snapshots {
        s.check().unwrap();
    }
    let bought: u64 = r.settlement.iter().map(|s| s.bought).sum();
    let released: u64 = r.settlement.iter().map(|s| s.pend_released).sum();
    assert_eq!(bought, released, "pending not released");
    assert_eq!(bought, trades.iter().map(|t| t.3).sum::<u64>());
    trades.len()
}
