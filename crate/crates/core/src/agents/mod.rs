//! Agent interface and reference agent families.

mod coverage;
mod factor;
mod population;
mod quote;
mod zi;

pub use coverage::{coverage_stats, log_bin, symlog_bin, tick_offset, CoverageRow, CoverageStats};
pub use factor::{FactorAgent, FactorSpec, FactorState};
pub use population::{spawn_population, AgentGroup, ParamValue, PopulationSpec, Spawned};
pub use quote::QuoteUpdater;
pub use zi::ZeroIntelligence;

use std::collections::BTreeSet;

use crate::book::LobSnapshot;
use crate::exchange::{PortfolioState, PriceBand, SessionKind};
use crate::rng::SimRng;
use crate::types::{OrderId, Receipt, Side, Ticks, TimeNs};

/// Read-only state handed to an agent at wakeup. Snapshots are the last
/// committed ones, never newer than the wakeup time.
pub struct MarketView<'a> {
    pub time: TimeNs,
    pub day: usize,
    pub phase: SessionKind,
    pub snapshots: &'a [LobSnapshot],
    pub bands: &'a [PriceBand],
    pub portfolio: &'a PortfolioState,
    /// This agent's orders that are still open, oldest first.
    pub open_orders: &'a BTreeSet<OrderId>,
    /// Shared factor value at `time`.
    pub factor: f64,
}

impl MarketView<'_> {
    /// Twice the mid of asset `j`, falling back to twice the reference price.
    pub fn mid2_or_ref(&self, j: usize) -> Ticks {
        self.snapshots[j].mid2().unwrap_or(2 * self.bands[j].p_ref)
    }

    pub fn clamp(&self, j: usize, price: Ticks) -> Ticks {
        price.clamp(self.bands[j].p_min, self.bands[j].p_max)
    }
}

/// One instruction in a decision. The engine assigns ids and arrival times.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Instruction {
    Limit { asset: usize, side: Side, price: Ticks, volume: u64 },
    Market { asset: usize, side: Side, volume: u64 },
    Cancel { asset: usize, target: OrderId },
}

impl Instruction {
    pub fn side(&self) -> Option<Side> {
        match *self {
            Instruction::Limit { side, .. } | Instruction::Market { side, .. } => Some(side),
            Instruction::Cancel { .. } => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AgentDecision {
    pub batch: Vec<Instruction>,
    pub next_wakeup: Option<TimeNs>,
}

pub trait Agent: Send {
    /// Type label carried into order traces.
    fn kind(&self) -> &'static str;

    /// First wakeup at or after `start`.
    fn first_wakeup(&mut self, start: TimeNs, rng: &mut SimRng) -> Option<TimeNs>;

    fn on_wakeup(&mut self, view: &MarketView, rng: &mut SimRng) -> AgentDecision;

    fn on_receipt(&mut self, _receipt: &Receipt) {}

    /// Which asset a cancel refers to, for agents that track it.
    fn asset_of(&self, _order: OrderId) -> Option<usize> {
        None
    }
}
