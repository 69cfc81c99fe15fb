//! In-run self-calibration: at a recording checkpoint the book is pushed
//! toward an oracle snapshot with a short, budgeted corrective order flow.

mod gap;
mod greedy;
mod oracle;

pub use gap::{compute_gap, GapEntry, GapKind, GapTensor};
pub use greedy::{greedy_synthesize, CorrectiveSequence};
pub use oracle::{perturb, repair, NoiseParams, OracleSource};

use serde::{Deserialize, Serialize};

use crate::book::{LobSnapshot, OrderBook};
use crate::types::{AssetId, Lots, Order, OrderId, Receipt, Side, Ticks, TimeNs, TradeRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationParams {
    pub enabled: bool,
    /// Levels `1..=levels` enter the gap.
    pub levels: usize,
    /// Orders per asset per checkpoint; defaults to `2 * levels`.
    pub max_orders: Option<usize>,
    pub max_lots: Lots,
    /// Lots that one tick of price gap is worth when ranking entries.
    pub price_weight: f64,
    /// Step cap for the synthesis loop; defaults to `8 * levels + 16`.
    pub max_steps: Option<usize>,
}

impl Default for CalibrationParams {
    fn default() -> Self {
        CalibrationParams { enabled: false, levels: 5, max_orders: None, max_lots: 100_000, price_weight: 1.0, max_steps: None }
    }
}

impl CalibrationParams {
    pub fn max_orders(&self) -> usize {
        self.max_orders.unwrap_or(2 * self.levels)
    }

    pub fn iteration_guard(&self) -> usize {
        self.max_steps.unwrap_or(8 * self.levels + 16)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.levels == 0 || self.levels > 10 {
            return Err("calibration.levels must be in 1..=10".into());
        }
        if self.max_orders() == 0 {
            return Err("calibration budget must be positive".into());
        }
        if !(self.price_weight > 0.0) {
            return Err("calibration.price_weight must be positive".into());
        }
        Ok(())
    }
}

/// One calibration-log row.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationReport {
    pub asset: AssetId,
    pub time: TimeNs,
    pub checkpoint: usize,
    pub pre_norm: f64,
    pub post_norm: f64,
    pub orders_used: usize,
    pub lots_used: Lots,
    pub residual: bool,
    pub budget_exhausted: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationOutcome {
    pub report: CalibrationReport,
    pub orders: Vec<(Order, Receipt)>,
    pub trades: Vec<TradeRecord>,
}

fn deepest(s: &LobSnapshot, side: Side, levels: usize) -> Option<Ticks> {
    s.side_levels(side).into_iter().take(levels).map(|x| x.0).last()
}

/// Gap, synthesis on a window copy, then matching on the real book.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_book(
    book: &mut OrderBook,
    target: &LobSnapshot,
    params: &CalibrationParams,
    band: (Ticks, Ticks),
    time: TimeNs,
    checkpoint: usize,
    counter: &mut u64,
) -> CalibrationOutcome {
    let depth = target.depth();
    let l = params.levels.min(depth);
    let sim = book.snapshot(depth, time);
    let bid_floor = [deepest(&sim, Side::Buy, l), deepest(target, Side::Buy, l)].into_iter().flatten().min().unwrap_or(Ticks::MAX);
    let ask_ceiling = [deepest(&sim, Side::Sell, l), deepest(target, Side::Sell, l)].into_iter().flatten().max().unwrap_or(Ticks::MIN);
    let mut window = book.window(bid_floor, ask_ceiling, 2 * l);
    let asset = book.asset();
    let mut next = *counter;
    let mut ids = || {
        next += 1;
        OrderId::calibration(asset, next)
    };
    let seq = greedy_synthesize(&mut window, target, params, band, &mut ids);
    let mut trades = Vec::new();
    let mut orders = Vec::with_capacity(seq.orders.len());
    for mut o in seq.orders {
        o.recv_time = time;
        let r = book.submit(&o, &mut trades);
        orders.push((o, r));
    }
    // Ids past the kept prefix are burned; the counter only has to stay unique.
    *counter = next;
    let post = compute_gap(&book.snapshot(depth, time), target, l).expect("same depth").norm(params.price_weight);
    CalibrationOutcome {
        report: CalibrationReport {
            asset,
            time,
            checkpoint,
            pre_norm: seq.pre_norm,
            post_norm: post,
            orders_used: orders.len(),
            lots_used: seq.lots,
            residual: post > 0.0,
            budget_exhausted: seq.budget_exhausted,
        },
        orders,
        trades,
    }
}
