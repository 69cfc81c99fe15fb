//! Multi-asset exchange: session gating, price limits, T+1 accounting and
//! the commit step that makes matching results visible.

mod auction;
mod band;
mod calendar;
mod portfolio;
mod worker;

pub use auction::{crossing_curve, run_call_auction, select_price, AuctionResult, Crossing};
pub use band::PriceBand;
pub use calendar::{parse_clock, CalendarSpec, Phase, Session, SessionCalendar, SessionKind, SessionSpec};
pub use portfolio::PortfolioState;
pub use worker::{AssetEngine, Command, Mode, Outcome, OutcomeKind, WorkerPool, DEFAULT_BATCH};

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::book::LobSnapshot;
use crate::calibration::{CalibrationParams, CalibrationReport};
use crate::error::Result;
use crate::types::{AgentId, AssetId, Lots, Order, OrderId, OrderType, Origin, Receipt, ReceiptStatus, RejectReason, Side, Ticks, TimeNs, TradeRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssetSpec {
    /// Listing price in ticks; the first day's reference price.
    pub p_ref: Ticks,
    pub eta: f64,
    /// Currency units per tick.
    pub tick_size: f64,
    /// Shares per lot.
    pub lot_size: u64,
}

impl Default for AssetSpec {
    fn default() -> Self {
        AssetSpec { p_ref: 1000, eta: 0.10, tick_size: 0.01, lot_size: 100 }
    }
}

impl AssetSpec {
    /// Cash (hundredths of a currency unit) per tick per share.
    pub fn cents_per_tick(&self) -> i64 {
        (self.tick_size * 100.0).round() as i64
    }

    pub fn value(&self, price: Ticks, lots: Lots) -> i64 {
        price * lots as i64 * self.lot_size as i64 * self.cents_per_tick()
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.p_ref < 1 {
            return Err("asset p_ref must be at least one tick".into());
        }
        if !(0.0..1.0).contains(&self.eta) {
            return Err("asset eta must lie in [0, 1)".into());
        }
        if self.cents_per_tick() < 1 || ((self.tick_size * 100.0) - self.cents_per_tick() as f64).abs() > 1e-9 {
            return Err("tick_size must be a positive multiple of 0.01".into());
        }
        if self.lot_size == 0 {
            return Err("lot_size must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ExchangeConfig {
    pub assets: Vec<AssetSpec>,
    /// Depth of committed views and recorded snapshots.
    pub depth: usize,
    pub workers: usize,
    pub batch: usize,
    /// Keep unfilled orders across the end-of-day clearing.
    pub preserve_day_orders: bool,
    /// Skip the band check for replayed orders.
    pub replay_bypass: bool,
}

/// Registry entry for an order that may still rest or fill.
#[derive(Clone, Copy, Debug)]
struct OpenOrder {
    origin: Origin,
    asset: AssetId,
    side: Side,
    /// Price the cash reservation was computed at (buys only).
    reserve_price: Ticks,
    remaining: Lots,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct DayFlow {
    bought: Lots,
    sold: Lots,
    cash_delta: i64,
}

/// One line of the end-of-day settlement report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SettlementRow {
    pub day: usize,
    pub account: String,
    pub asset: AssetId,
    pub bought: Lots,
    pub sold: Lots,
    pub pend_released: Lots,
    pub cash_delta: i64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExchangeStats {
    pub routed: u64,
    pub accepted: u64,
    pub rejected: u64,
    /// Accepted messages whose matching outcome has been committed.
    pub processed: u64,
    pub trades: u64,
    pub traded_lots: u64,
    pub band_violations: u64,
    pub session_violations: u64,
    pub rejected_by: [u64; 5],
}

#[derive(Clone, Debug, Default)]
pub struct Committed {
    pub responses: Vec<(AgentId, Receipt)>,
    pub snapshots: Vec<LobSnapshot>,
    pub calibrations: Vec<CalibrationReport>,
    pub auctions: Vec<(AssetId, Ticks, Lots)>,
}

fn reject_index(r: RejectReason) -> usize {
    match r {
        RejectReason::OutsideSession => 0,
        RejectReason::PriceBand => 1,
        RejectReason::InsufficientAvailable => 2,
        RejectReason::InsufficientCash => 3,
        RejectReason::Malformed => 4,
    }
}

fn account_label(o: Origin) -> String {
    match o {
        Origin::Agent(i) => i.to_string(),
        other => other.label().to_string(),
    }
}

pub struct Exchange {
    cfg: ExchangeConfig,
    phase: SessionKind,
    day: usize,
    bands: Vec<PriceBand>,
    closes: Vec<Option<Ticks>>,
    accounts: Vec<PortfolioState>,
    /// Cash of the replay, calibration and intervention sinks.
    sink_cash: [i64; 3],
    registry: HashMap<OrderId, OpenOrder>,
    agent_open: Vec<BTreeSet<OrderId>>,
    flows: BTreeMap<(Origin, AssetId), DayFlow>,
    pool: WorkerPool,
    next_seq: u64,
    next_trade_id: u64,
    touched: Vec<bool>,
    views: Vec<LobSnapshot>,
    tape: Vec<TradeRecord>,
    stats: ExchangeStats,
}

fn sink_index(o: Origin) -> usize {
    match o {
        Origin::Replay => 0,
        Origin::Calibration => 1,
        Origin::Intervention => 2,
        Origin::Agent(_) => unreachable!(),
    }
}

impl Exchange {
    pub fn new(cfg: ExchangeConfig, accounts: Vec<PortfolioState>) -> Self {
        let m = cfg.assets.len();
        let bands = cfg.assets.iter().map(|a| PriceBand::new(a.p_ref, a.eta)).collect();
        let pool = WorkerPool::with_batch(m, cfg.workers, cfg.batch);
        let views = (0..m).map(|j| LobSnapshot::empty(j, 0, cfg.depth)).collect();
        Exchange {
            phase: SessionKind::Closed,
            day: 0,
            bands,
            closes: vec![None; m],
            agent_open: vec![BTreeSet::new(); accounts.len()],
            accounts,
            sink_cash: [0; 3],
            registry: HashMap::new(),
            flows: BTreeMap::new(),
            pool,
            next_seq: 0,
            next_trade_id: 0,
            touched: vec![false; m],
            views,
            tape: Vec::new(),
            stats: ExchangeStats::default(),
            cfg,
        }
    }

    pub fn assets(&self) -> usize {
        self.cfg.assets.len()
    }

    pub fn asset_spec(&self, j: AssetId) -> &AssetSpec {
        &self.cfg.assets[j]
    }

    pub fn depth(&self) -> usize {
        self.cfg.depth
    }

    pub fn phase(&self) -> SessionKind {
        self.phase
    }

    pub fn day(&self) -> usize {
        self.day
    }

    pub fn set_phase(&mut self, day: usize, kind: SessionKind) {
        self.day = day;
        self.phase = kind;
    }

    pub fn band(&self, j: AssetId) -> &PriceBand {
        &self.bands[j]
    }

    pub fn bands(&self) -> &[PriceBand] {
        &self.bands
    }

    pub fn views(&self) -> &[LobSnapshot] {
        &self.views
    }

    pub fn portfolio(&self, agent: AgentId) -> &PortfolioState {
        &self.accounts[agent]
    }

    pub fn portfolios(&self) -> &[PortfolioState] {
        &self.accounts
    }

    pub fn open_orders(&self, agent: AgentId) -> &BTreeSet<OrderId> {
        &self.agent_open[agent]
    }

    pub fn sink_cash(&self) -> [i64; 3] {
        self.sink_cash
    }

    /// Agent cash (free plus reserved) plus all sink balances.
    pub fn total_cash(&self) -> i64 {
        self.accounts.iter().map(|p| p.total_cash()).sum::<i64>() + self.sink_cash.iter().sum::<i64>()
    }

    pub fn stats(&self) -> ExchangeStats {
        self.stats
    }

    pub fn pending_commands(&self) -> usize {
        self.pool.pending()
    }

    pub fn syncs(&self) -> u64 {
        self.pool.syncs()
    }

    /// Trades committed since the last call.
    pub fn take_tape(&mut self) -> Vec<TradeRecord> {
        std::mem::take(&mut self.tape)
    }

    fn seq(&mut self) -> u64 {
        let s = self.next_seq;
        self.next_seq += 1;
        s
    }

    fn enqueue(&mut self, cmd: Command) -> Result<()> {
        self.touched[cmd.asset()] = true;
        self.pool.submit(cmd)
    }

    fn reject(&mut self, order: &Order, reason: RejectReason) -> Receipt {
        self.stats.rejected += 1;
        self.stats.rejected_by[reject_index(reason)] += 1;
        Receipt::rejected(order, reason)
    }

    /// Validates an arriving message and hands it to its asset engine.
    pub fn route_order(&mut self, order: Order) -> Result<std::result::Result<(), Receipt>> {
        self.stats.routed += 1;
        if order.asset >= self.assets() || !order.is_well_formed() {
            return Ok(Err(self.reject(&order, RejectReason::Malformed)));
        }
        let mode = match (self.phase, order.order_type) {
            (SessionKind::ContinuousTrading, _) => Mode::Continuous,
            (SessionKind::PreopenAuction, OrderType::Limit | OrderType::Cancel) => Mode::Auction,
            _ => return Ok(Err(self.reject(&order, RejectReason::OutsideSession))),
        };
        if order.order_type == OrderType::Cancel {
            let target = order.target.expect("well-formed cancel");
            if let Some(e) = self.registry.get(&target) {
                if e.origin != order.origin || e.asset != order.asset {
                    return Ok(Err(self.reject(&order, RejectReason::Malformed)));
                }
            }
        } else {
            let exempt = order.origin == Origin::Calibration || (order.origin == Origin::Replay && self.cfg.replay_bypass);
            let band = self.bands[order.asset];
            if order.order_type == OrderType::Limit && !exempt && !band.contains(order.price) {
                return Ok(Err(self.reject(&order, RejectReason::PriceBand)));
            }
            let reserve_price = match order.order_type {
                OrderType::Limit => order.price,
                _ => band.p_max,
            };
            if let Origin::Agent(a) = order.origin {
                let value = self.cfg.assets[order.asset].value(reserve_price, order.volume);
                let p = &mut self.accounts[a];
                let ok = match order.side {
                    Side::Buy => p.try_reserve_cash(value),
                    Side::Sell => p.try_reserve_lots(order.asset, order.volume),
                };
                if !ok {
                    let reason = match order.side {
                        Side::Buy => RejectReason::InsufficientCash,
                        Side::Sell => RejectReason::InsufficientAvailable,
                    };
                    return Ok(Err(self.reject(&order, reason)));
                }
                self.agent_open[a].insert(order.id);
            }
            self.registry.insert(
                order.id,
                OpenOrder { origin: order.origin, asset: order.asset, side: order.side, reserve_price, remaining: order.volume },
            );
        }
        self.stats.accepted += 1;
        let seq = self.seq();
        self.enqueue(Command::Submit { seq, order, mode })?;
        Ok(Ok(()))
    }

    /// Drops an order from the registry, returning its reservation.
    fn release(&mut self, id: OrderId) -> Option<OpenOrder> {
        let e = self.registry.remove(&id)?;
        if let Origin::Agent(a) = e.origin {
            let p = &mut self.accounts[a];
            match e.side {
                Side::Buy => p.release_cash(self.cfg.assets[e.asset].value(e.reserve_price, e.remaining)),
                Side::Sell => p.release_lots(e.asset, e.remaining),
            }
            self.agent_open[a].remove(&id);
        }
        Some(e)
    }

    fn fill(&mut self, id: OrderId, lots: Lots) -> Option<OpenOrder> {
        let e = self.registry.get_mut(&id)?;
        let before = *e;
        e.remaining -= lots;
        if e.remaining == 0 {
            self.registry.remove(&id);
            if let Origin::Agent(a) = before.origin {
                self.agent_open[a].remove(&id);
            }
        }
        Some(before)
    }

    fn settle_leg(&mut self, entry: Option<OpenOrder>, side: Side, asset: AssetId, price: Ticks, lots: Lots) {
        let spec = &self.cfg.assets[asset];
        let value = spec.value(price, lots);
        let origin = entry.map_or(Origin::Replay, |e| e.origin);
        match (origin, side) {
            (Origin::Agent(a), Side::Buy) => {
                let reserved = spec.value(entry.expect("agent order").reserve_price, lots);
                self.accounts[a].settle_buy(asset, lots, value, reserved);
            }
            (Origin::Agent(a), Side::Sell) => self.accounts[a].settle_sell(asset, lots, value),
            (sink, _) => self.sink_cash[sink_index(sink)] -= side.sign() * value,
        }
        let f = self.flows.entry((origin, asset)).or_default();
        match side {
            Side::Buy => f.bought += lots,
            Side::Sell => f.sold += lots,
        }
        f.cash_delta -= side.sign() * value;
    }

    fn settle(&mut self, mut t: TradeRecord) {
        t.trade_id = self.next_trade_id;
        self.next_trade_id += 1;
        let buy = self.fill(t.buy_order(), t.volume);
        let sell = self.fill(t.sell_order(), t.volume);
        self.settle_leg(buy, Side::Buy, t.asset, t.price, t.volume);
        self.settle_leg(sell, Side::Sell, t.asset, t.price, t.volume);
        if !self.bands[t.asset].contains(t.price) {
            self.stats.band_violations += 1;
        }
        self.closes[t.asset] = Some(t.price);
        self.stats.trades += 1;
        self.stats.traded_lots += t.volume;
        self.tape.push(t);
    }

    /// Applies a message's own receipt after its trades were settled.
    fn close_out(&mut self, order: &Order, receipt: &Receipt) {
        match receipt.status {
            ReceiptStatus::Canceled => {
                self.release(receipt.target.unwrap_or(order.id));
            }
            ReceiptStatus::Processed if order.order_type == OrderType::Market || receipt.resting == 0 => {
                self.release(order.id);
            }
            _ => {}
        }
    }

    /// Waits for all matching work, commits it in sequence order and refreshes views.
    pub fn sync(&mut self, now: TimeNs) -> Result<Committed> {
        let mut committed = Committed::default();
        if self.pool.pending() == 0 {
            return Ok(committed);
        }
        for j in 0..self.assets() {
            if std::mem::take(&mut self.touched[j]) {
                let seq = self.seq();
                self.pool.submit(Command::Snapshot { seq, asset: j, time: now, depth: self.cfg.depth })?;
            }
        }
        for o in self.pool.sync()? {
            match o.kind {
                OutcomeKind::Order { order, receipt, trades } => {
                    self.stats.processed += 1;
                    if self.phase != SessionKind::ContinuousTrading && !trades.is_empty() {
                        self.stats.session_violations += 1;
                    }
                    for t in trades {
                        self.settle(t);
                    }
                    self.close_out(&order, &receipt);
                    if let Origin::Agent(a) = order.origin {
                        committed.responses.push((a, receipt));
                    }
                }
                OutcomeKind::Auction(r) => {
                    for t in r.trades {
                        self.settle(t);
                    }
                    committed.auctions.push((o.asset, r.clearing_price, r.volume));
                }
                OutcomeKind::Expired(orders) => {
                    for r in orders {
                        if let Some(e) = self.release(r.id) {
                            if let Origin::Agent(a) = e.origin {
                                let receipt = Receipt {
                                    order_id: r.id,
                                    target: None,
                                    status: ReceiptStatus::Expired,
                                    filled: 0,
                                    resting: 0,
                                    canceled: r.volume,
                                    discarded: 0,
                                };
                                committed.responses.push((a, receipt));
                            }
                        }
                    }
                }
                OutcomeKind::Calibrated(c) => {
                    let mut trades = c.trades.into_iter().peekable();
                    for (order, receipt) in &c.orders {
                        if order.order_type == OrderType::Limit {
                            self.registry.insert(
                                order.id,
                                OpenOrder { origin: Origin::Calibration, asset: order.asset, side: order.side, reserve_price: order.price, remaining: order.volume },
                            );
                        }
                        while let Some(t) = trades.next_if(|t| t.aggressor_order_id == order.id) {
                            self.settle(t);
                        }
                        self.close_out(order, receipt);
                    }
                    debug_assert!(trades.next().is_none());
                    committed.calibrations.push(c.report);
                }
                OutcomeKind::Snapshot(s) => {
                    self.views[o.asset] = s.clone();
                    committed.snapshots.push(s);
                }
            }
        }
        Ok(committed)
    }

    /// Runs the opening auction on every asset. Call after a sync.
    pub fn open_auction(&mut self, time: TimeNs) -> Result<Committed> {
        for j in 0..self.assets() {
            let seq = self.seq();
            let p_ref = self.bands[j].p_ref;
            self.enqueue(Command::Auction { seq, asset: j, time, p_ref })?;
        }
        self.sync(time)
    }

    /// Calibrates each asset toward `targets[j]` (skipping `None`).
    pub fn calibrate(&mut self, time: TimeNs, checkpoint: usize, targets: Vec<Option<LobSnapshot>>, params: &CalibrationParams) -> Result<()> {
        for (j, t) in targets.into_iter().enumerate() {
            if let Some(target) = t {
                let seq = self.seq();
                let b = self.bands[j];
                self.enqueue(Command::Calibrate { seq, asset: j, time, checkpoint, target: Box::new(target), params: params.clone(), band: (b.p_min, b.p_max) })?;
            }
        }
        Ok(())
    }

    /// Snapshots of every asset at `time`, after committing everything queued.
    pub fn record(&mut self, time: TimeNs) -> Result<(Vec<LobSnapshot>, Committed)> {
        for j in 0..self.assets() {
            let seq = self.seq();
            self.pool.submit(Command::Snapshot { seq, asset: j, time, depth: self.cfg.depth })?;
            self.touched[j] = false;
        }
        let mut c = self.sync(time)?;
        let snaps = std::mem::take(&mut c.snapshots);
        Ok((snaps, c))
    }

    /// End-of-day clearing: expire day orders, release pending holdings, roll the bands.
    pub fn end_of_day(&mut self, now: TimeNs) -> Result<(Vec<SettlementRow>, Committed)> {
        let next_bands: Vec<PriceBand> = (0..self.assets()).map(|j| self.bands[j].rebased(self.closes[j].unwrap_or(self.bands[j].p_ref))).collect();
        for (j, nb) in next_bands.iter().enumerate() {
            let seq = self.seq();
            let keep = self.cfg.preserve_day_orders.then_some((nb.p_min, nb.p_max));
            self.enqueue(Command::Expire { seq, asset: j, keep })?;
        }
        let committed = self.sync(now)?;
        let mut released: BTreeMap<(Origin, AssetId), Lots> = BTreeMap::new();
        for (a, p) in self.accounts.iter_mut().enumerate() {
            for (j, r) in p.clear_pending().into_iter().enumerate() {
                if r > 0 {
                    released.insert((Origin::Agent(a), j), r);
                }
            }
        }
        let flows = std::mem::take(&mut self.flows);
        let mut keys: BTreeSet<(Origin, AssetId)> = flows.keys().copied().collect();
        keys.extend(released.keys().copied());
        let rows = keys
            .into_iter()
            .map(|k| {
                let f = flows.get(&k).copied().unwrap_or_default();
                SettlementRow {
                    day: self.day,
                    account: account_label(k.0),
                    asset: k.1,
                    bought: f.bought,
                    sold: f.sold,
                    pend_released: released.get(&k).copied().unwrap_or(0),
                    cash_delta: f.cash_delta,
                }
            })
            .collect();
        self.bands = next_bands;
        self.closes = vec![None; self.assets()];
        Ok((rows, committed))
    }

    /// Stops the workers and hands back the per-asset engines.
    pub fn into_engines(self) -> Result<Vec<AssetEngine>> {
        self.pool.into_engines()
    }
}
