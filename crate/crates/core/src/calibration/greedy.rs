//! Greedy corrective-order synthesis.
//!
//! Works on a private copy of the relevant part of the book: each step
//! re-measures the gap, takes the largest entry that maps to a feasible
//! change, turns it into one or two orders and matches them on the copy.
//! The returned sequence is the shortest prefix that reached the lowest
//! gap norm seen.

use super::gap::{compute_gap, GapEntry};
use super::CalibrationParams;
use crate::book::{LobSnapshot, OrderBook};
use crate::types::{Lots, Order, OrderId, Origin, Side, Ticks, TradeRecord};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CorrectiveSequence {
    pub orders: Vec<Order>,
    pub lots: Lots,
    pub pre_norm: f64,
    /// Gap norm the sequence reaches on the working copy.
    pub post_norm: f64,
    pub budget_exhausted: bool,
    /// Gap entries whose correction needs a price outside the band.
    pub infeasible: usize,
}

/// Target volume at `price` among the first `levels` rows of one side.
fn target_volume(target: &LobSnapshot, side: Side, price: Ticks, levels: usize) -> Lots {
    target.volume_at(side, price, levels)
}

/// The `(side, price, volume)` that resolves one gap entry.
fn desired(sim: &LobSnapshot, target: &LobSnapshot, e: &GapEntry, levels: usize) -> Option<(Side, Ticks, Lots)> {
    let (side, i) = (e.side, e.level);
    let (sp, tp) = (sim.price(side, i), target.price(side, i));
    let tv = target.volume(side, i);
    if tp == 0 {
        return (sp != 0).then(|| (side, sp, target_volume(target, side, sp, levels)));
    }
    if sp == 0 || sp == tp || side.better(tp, sp) {
        Some((side, tp, tv))
    } else {
        Some((side, sp, target_volume(target, side, sp, levels)))
    }
}

struct Synth<'a> {
    book: &'a mut OrderBook,
    target: &'a LobSnapshot,
    params: &'a CalibrationParams,
    band: (Ticks, Ticks),
    next_id: &'a mut dyn FnMut() -> OrderId,
}

impl Synth<'_> {
    fn limit(&mut self, side: Side, price: Ticks, volume: Lots) -> Order {
        let id = (self.next_id)();
        Order { id, ..Order::limit(0, self.book.asset(), side, price, volume) }.with_origin(Origin::Calibration)
    }

    fn cancel(&mut self, target: OrderId) -> Order {
        let id = (self.next_id)();
        Order { id, ..Order::cancel(0, self.book.asset(), target) }.with_origin(Origin::Calibration)
    }

    /// Calibration-owned orders at a level, newest first, whose total stays within `need`.
    fn own_cancellable(&self, side: Side, price: Ticks, mut need: Lots) -> Vec<(OrderId, Lots)> {
        let mut out = Vec::new();
        for (id, v) in self.book.queue_at(side, price).into_iter().rev() {
            if id.is_calibration() && v <= need {
                need -= v;
                out.push((id, v));
            }
        }
        out
    }

    /// Orders that move resting volume at `(side, price)` to `volume`.
    fn plan(&mut self, side: Side, price: Ticks, volume: Lots) -> Vec<Order> {
        let current = self.book.volume_at(side, price);
        if volume > current {
            let crossing = self.book.volume_crossing(side.opposite(), price);
            return vec![self.limit(side, price, volume - current + crossing)];
        }
        let mut need = current - volume;
        let mut out = Vec::new();
        for (id, v) in self.own_cancellable(side, price, need) {
            need -= v;
            out.push(self.cancel(id));
        }
        if need > 0 {
            let ahead = self.book.volume_better_than(side, price);
            out.push(self.limit(side.opposite(), price, ahead + need));
        }
        out
    }

    /// Deepest level worse than `price` whose surplus can only be removed by a sweep.
    fn pending_sweep(&self, sim: &LobSnapshot, side: Side, price: Ticks) -> Option<(Ticks, Lots)> {
        let l = self.params.levels.min(sim.depth());
        let boundary = self.target.price(side, l - 1);
        let mut found = None;
        for i in 0..l {
            let sp = sim.price(side, i);
            if sp == 0 {
                break;
            }
            if !side.better(price, sp) || (boundary != 0 && side.better(boundary, sp)) {
                continue;
            }
            let want = target_volume(self.target, side, sp, l);
            let have = sim.volume(side, i);
            if want < have {
                let own: Lots = self.own_cancellable(side, sp, have - want).iter().map(|x| x.1).sum();
                if own < have - want {
                    found = Some((sp, want));
                }
            }
        }
        found
    }

    fn in_band(&self, price: Ticks) -> bool {
        self.band.0 <= price && price <= self.band.1
    }

    fn norm(&self) -> f64 {
        let sim = self.book.snapshot(self.target.depth(), 0);
        compute_gap(&sim, self.target, self.params.levels).expect("same depth").norm(self.params.price_weight)
    }

    fn run(&mut self) -> CorrectiveSequence {
        let l = self.params.levels;
        let depth = self.target.depth();
        let max_orders = self.params.max_orders();
        let guard = self.params.iteration_guard();
        let mut seq = CorrectiveSequence { pre_norm: self.norm(), ..Default::default() };
        let (mut best_norm, mut best_len, mut best_lots) = (seq.pre_norm, 0, 0);
        let mut scratch: Vec<TradeRecord> = Vec::new();

        'outer: for _ in 0..guard {
            let sim = self.book.snapshot(depth, 0);
            let gap = compute_gap(&sim, self.target, l).expect("same depth");
            if gap.is_zero() {
                break;
            }
            seq.infeasible = 0;
            for e in gap.sorted_entries(self.params.price_weight) {
                let Some((side, price, volume)) = desired(&sim, self.target, &e, l) else { continue };
                if !self.in_band(price) {
                    seq.infeasible += 1;
                    continue;
                }
                if self.book.volume_at(side, price) == volume {
                    continue;
                }
                let (side, price, volume) = if volume > self.book.volume_at(side, price) {
                    match self.pending_sweep(&sim, side, price) {
                        Some((p, v)) if self.in_band(p) => (side, p, v),
                        _ => (side, price, volume),
                    }
                } else {
                    (side, price, volume)
                };
                let orders = self.plan(side, price, volume);
                let lots: Lots = orders.iter().map(|o| o.volume).sum();
                if seq.orders.len() + orders.len() > max_orders || seq.lots + lots > self.params.max_lots {
                    seq.budget_exhausted = true;
                    break 'outer;
                }
                for o in orders {
                    scratch.clear();
                    self.book.submit(&o, &mut scratch);
                    seq.orders.push(o);
                }
                seq.lots += lots;
                let n = self.norm();
                if n < best_norm {
                    (best_norm, best_len, best_lots) = (n, seq.orders.len(), seq.lots);
                }
                continue 'outer;
            }
            break;
        }
        seq.orders.truncate(best_len);
        seq.lots = best_lots;
        seq.post_norm = best_norm;
        seq
    }
}

/// Synthesizes corrective orders against `window`, which is modified in place.
pub fn greedy_synthesize(
    window: &mut OrderBook,
    target: &LobSnapshot,
    params: &CalibrationParams,
    band: (Ticks, Ticks),
    next_id: &mut dyn FnMut() -> OrderId,
) -> CorrectiveSequence {
    Synth { book: window, target, params, band, next_id }.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> CalibrationParams {
        CalibrationParams { levels: 3, max_orders: Some(100), ..CalibrationParams::default() }
    }

    fn book(bids: &[(Ticks, Lots)], asks: &[(Ticks, Lots)]) -> OrderBook {
        let mut b = OrderBook::new(0);
        let mut t = Vec::new();
        let mut id = 1;
        for &(p, v) in bids {
            b.match_limit(&Order::limit(id, 0, Side::Buy, p, v), &mut t);
            id += 1;
        }
        for &(p, v) in asks {
            b.match_limit(&Order::limit(id, 0, Side::Sell, p, v), &mut t);
            id += 1;
        }
        b
    }

    fn ids() -> impl FnMut() -> OrderId {
        let mut n = 0;
        move || {
            n += 1;
            OrderId::calibration(0, n)
        }
    }

    #[test]
    fn zero_gap_is_empty() {
        let mut b = book(&[(1000, 5)], &[(1002, 5)]);
        let target = b.snapshot(3, 0);
        let s = greedy_synthesize(&mut b, &target, &params(), (900, 1100), &mut ids());
        assert!(s.orders.is_empty());
        assert_eq!(s.pre_norm, 0.0);
    }

    #[test]
    fn moves_best_ask_down_one_tick() {
        let mut b = book(&[], &[(1002, 5)]);
        let target = LobSnapshot::from_sides(0, 0, 3, &[], &[(1001, 5)]);
        let s = greedy_synthesize(&mut b, &target, &params(), (900, 1100), &mut ids());
        let kinds: Vec<_> = s.orders.iter().map(|o| (o.side, o.price, o.volume)).collect();
        assert_eq!(kinds, vec![(Side::Buy, 1002, 5), (Side::Sell, 1001, 5)]);
        assert_eq!(s.post_norm, 0.0);
    }

    #[test]
    fn respects_order_budget() {
        let mut b = book(&[(1000, 5)], &[(1002, 5)]);
        let target = LobSnapshot::from_sides(0, 0, 3, &[(999, 1), (998, 2), (997, 3)], &[(1003, 1), (1004, 2), (1005, 3)]);
        let p = CalibrationParams { max_orders: Some(2), ..params() };
        let s = greedy_synthesize(&mut b, &target, &p, (900, 1100), &mut ids());
        assert!(s.orders.len() <= 2);
        assert!(s.post_norm <= s.pre_norm);
    }
}
