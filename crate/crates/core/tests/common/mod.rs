//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

pub mod checks;

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use evosim::agents::{AgentGroup, ParamValue, PopulationSpec};
use evosim::book::{LobSnapshot, RestingOrder};
use evosim::config::RunConfig;
use evosim::exchange::{CalendarSpec, SessionKind, SessionSpec};
use evosim::types::{Lots, Order, OrderId, OrderType, Receipt, ReceiptStatus, Side, Ticks, TimeNs, TradeRecord};

/// Linear-scan price-time book.
#[derive(Default)]
pub struct NaiveBook {
    pub asset: usize,
    /// (id, side, price, volume, arrival)
    orders: Vec<(OrderId, Side, Ticks, Lots, u64)>,
    arrivals: u64,
    trades: u64,
}

impl NaiveBook {
    pub fn new(asset: usize) -> Self {
        NaiveBook { asset, ..Default::default() }
    }

    fn best_opposite(&self, side: Side, limit: Option<Ticks>) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, o) in self.orders.iter().enumerate() {
            if o.1 == side {
                continue;
            }
            let ok = match (side, limit) {
                (_, None) => true,
                (Side::Buy, Some(l)) => o.2 <= l,
                (Side::Sell, Some(l)) => o.2 >= l,
            };
            if !ok {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(b) => {
                    let cur = &self.orders[b];
                    let better_price = match side {
                        Side::Buy => o.2 < cur.2,
                        Side::Sell => o.2 > cur.2,
                    };
                    if better_price || (o.2 == cur.2 && o.4 < cur.4) {
                        Some(i)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        best
    }

    pub fn submit(&mut self, order: &Order, trades: &mut Vec<TradeRecord>) -> Receipt {
        let mut r = Receipt { order_id: order.id, target: None, status: ReceiptStatus::Processed, filled: 0, resting: 0, canceled: 0, discarded: 0 };
        if order.order_type == OrderType::Cancel {
            let target = order.target.unwrap();
            r.target = Some(target);
            match self.orders.iter().position(|o| o.0 == target) {
                Some(i) => {
                    r.status = ReceiptStatus::Canceled;
                    r.canceled = self.orders.remove(i).3;
                }
                None => r.status = ReceiptStatus::CancelNoop,
            }
            return r;
        }
        let limit = (order.order_type == OrderType::Limit).then_some(order.price);
        let mut remaining = order.volume;
        while remaining > 0 {
            let Some(i) = self.best_opposite(order.side, limit) else { break };
            let q = remaining.min(self.orders[i].3);
            trades.push(TradeRecord {
                trade_id: self.trades,
                asset: self.asset,
                price: self.orders[i].2,
                volume: q,
                aggressor_order_id: order.id,
                resting_order_id: self.orders[i].0,
                aggressor_side: order.side,
                time: order.recv_time,
            });
            self.trades += 1;
            remaining -= q;
            self.orders[i].3 -= q;
            if self.orders[i].3 == 0 {
                self.orders.remove(i);
            }
        }
        r.filled = order.volume - remaining;
        match limit {
            Some(p) if remaining > 0 => {
                self.orders.push((order.id, order.side, p, remaining, self.arrivals));
                self.arrivals += 1;
                r.resting = remaining;
            }
            Some(_) => {}
            None => r.discarded = remaining,
        }
        r
    }

    pub fn snapshot(&self, depth: usize, t: TimeNs) -> LobSnapshot {
        let side = |s: Side| {
            let mut levels: Vec<(Ticks, Lots)> = Vec::new();
            let mut px: Vec<Ticks> = self.orders.iter().filter(|o| o.1 == s).map(|o| o.2).collect();
            px.sort_unstable();
            px.dedup();
            if s == Side::Buy {
                px.reverse();
            }
            for p in px.into_iter().take(depth) {
                levels.push((p, self.orders.iter().filter(|o| o.1 == s && o.2 == p).map(|o| o.3).sum()));
            }
            levels
        };
        LobSnapshot::from_sides(self.asset, t, depth, &side(Side::Buy), &side(Side::Sell))
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }
}

/// Mixed limit/market/cancel stream around a drifting center price.
pub fn random_stream(seed: u64, n: usize) -> Vec<Order> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<u64> = Vec::new();
    let mut center: Ticks = 1000;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let id = i as u64 + 1;
        let t = i as TimeNs * 1000;
        let u: f64 = rng.random();
        let side = if rng.random_bool(0.5) { Side::Buy } else { Side::Sell };
        let o = if u < 0.3 && !ids.is_empty() {
            let k = rng.random_range(0..ids.len());
            let target = if rng.random_bool(0.9) { ids.swap_remove(k) } else { ids[k] + 1_000_000 };
            Order::cancel(id, 0, OrderId(target))
        } else if u < 0.38 {
            Order::market(id, 0, side, rng.random_range(1..=30))
        } else {
            center = (center + rng.random_range(-1..=1)).clamp(950, 1050);
            let off: i64 = rng.random_range(-3..=12);
            ids.push(id);
            Order::limit(id, 0, side, center - side.sign() * off, rng.random_range(1..=20))
        };
        out.push(o.at(t));
    }
    out
}

/// Tick-enumeration auction oracle: `(price, executable, |imbalance|)` at
/// every candidate tick in `[lo, hi]`.
pub fn enumerate_auction(orders: &[RestingOrder]) -> Vec<(Ticks, Lots, u64)> {
    let lo = orders.iter().map(|o| o.price).min();
    let hi = orders.iter().map(|o| o.price).max();
    let (Some(lo), Some(hi)) = (lo, hi) else { return Vec::new() };
    (lo..=hi)
        .map(|p| {
            let d: Lots = orders.iter().filter(|o| o.side == Side::Buy && o.price >= p).map(|o| o.volume).sum();
            let s: Lots = orders.iter().filter(|o| o.side == Side::Sell && o.price <= p).map(|o| o.volume).sum();
            (p, d.min(s), (d as i64 - s as i64).unsigned_abs())
        })
        .collect()
}

pub fn random_batch(rng: &mut ChaCha8Rng, n: usize) -> Vec<RestingOrder> {
    (0..n)
        .map(|i| RestingOrder {
            id: OrderId(i as u64 + 1),
            side: if rng.random_bool(0.5) { Side::Buy } else { Side::Sell },
            price: rng.random_range(990..=1010),
            volume: rng.random_range(1..=50),
            arrival: i as u64,
        })
        .collect()
}

/// Flat binary-heap event queue keyed by `(due_time, seq)`.
#[derive(Default)]
pub struct FlatQueue(BinaryHeap<Reverse<(TimeNs, u64)>>);

impl FlatQueue {
    pub fn push(&mut self, due: TimeNs, seq: u64) {
        self.0.push(Reverse((due, seq)));
    }

    pub fn pop(&mut self) -> Option<(TimeNs, u64)> {
        self.0.pop().map(|r| r.0)
    }
}

pub fn group(kind: &str, count: usize, params: &[(&str, f64)]) -> AgentGroup {
    AgentGroup {
        kind: kind.into(),
        count,
        seed: None,
        cash: 10_000_000_000,
        holdings: 10_000,
        params: params.iter().map(|(k, v)| (k.to_string(), ParamValue::Fixed(*v))).collect(),
    }
}

/// One-session calendar of `minutes` of continuous trading from 09:30.
pub fn short_calendar(days: u32, minutes: u64) -> CalendarSpec {
    let end = 9 * 60 + 30 + minutes;
    CalendarSpec {
        days: (0..days).collect(),
        sessions: vec![
            SessionSpec { kind: SessionKind::PreopenAuction, start: "09:15".into(), end: "09:30".into() },
            SessionSpec { kind: SessionKind::ContinuousTrading, start: "09:30".into(), end: format!("{:02}:{:02}", end / 60, end % 60) },
            SessionSpec { kind: SessionKind::EodClearing, start: format!("{:02}:{:02}", end / 60, end % 60), end: format!("{:02}:{:02}", (end + 30) / 60, (end + 30) % 60) },
        ],
    }
}

/// Quote updaters and zero-intelligence traders on every asset.
pub fn mixed_config(seed: u64, assets: usize, workers: usize) -> RunConfig {
    let mut c = RunConfig { seed, workers, ..RunConfig::default() };
    c.assets = vec![Default::default(); assets];
    c.population = PopulationSpec { agents: vec![group("quote_updater", assets, &[]), group("zi", 4 * assets, &[("rate", 0.5)])] };
    c
}

/// Random-walk reference book sampled every `cadence` from `start`, `n` per asset.
pub fn reference_walk(seed: u64, assets: usize, start: TimeNs, cadence: TimeNs, n: usize, depth: usize) -> Vec<LobSnapshot> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(assets * n);
    for j in 0..assets {
        let mut mid2: Ticks = 2000;
        for k in 0..n {
            mid2 = (mid2 + rng.random_range(-2..=2)).clamp(1900, 2100);
            let half = rng.random_range(1..=3);
            let bid0 = (mid2 - half) / 2;
            let ask0 = (mid2 + half + 1) / 2;
            let mut bids = Vec::new();
            let mut asks = Vec::new();
            let (mut pb, mut pa) = (bid0, ask0.max(bid0 + 1));
            for _ in 0..depth {
                bids.push((pb, rng.random_range(1..=60)));
                asks.push((pa, rng.random_range(1..=60)));
                pb -= rng.random_range(1..=2);
                pa += rng.random_range(1..=2);
            }
            out.push(LobSnapshot::from_sides(j, start + k as TimeNs * cadence, depth, &bids, &asks));
        }
    }
    out
}

/// Mean squared price error over levels `1..=levels` of both sides, in currency units.
pub fn price_mse(sim: &[LobSnapshot], reference: &[LobSnapshot], levels: usize, tick: f64) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for r in reference {
        let s = sim.iter().find(|s| s.asset == r.asset && s.timestamp == r.timestamp).expect("recorded snapshot at reference time");
        for side in [Side::Buy, Side::Sell] {
            for i in 0..levels {
                let d = (s.price(side, i) - r.price(side, i)) as f64 * tick;
                sum += d * d;
                n += 1;
            }
        }
    }
    sum / n as f64
}

/// Quote updaters, noise traders and factor traders over `assets` assets.
pub fn factor_config(seed: u64, assets: usize, minutes: u64) -> RunConfig {
    let mut c = RunConfig { seed, workers: 1, ..RunConfig::default() };
    c.assets = vec![Default::default(); assets];
    c.calendar = short_calendar(1, minutes);
    c.population = PopulationSpec {
        agents: vec![group("quote_updater", assets, &[]), group("zi", 3 * assets, &[("rate", 0.5)]), group("factor", 4, &[("threshold", 0.3)])],
    };
    c
}
