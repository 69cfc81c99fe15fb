use rand::Rng;
use rand_distr::{Distribution, Exp, Geometric, LogNormal};

use super::{Agent, AgentDecision, Instruction, MarketView};
use crate::exchange::SessionKind;
use crate::rng::SimRng;
use crate::types::{Side, TimeNs, NANOS_PER_SEC};

/// Zero-intelligence trader: Poisson wakeups, random side, geometric tick
/// offset from the mid, log-normal size.
#[derive(Clone, Debug)]
pub struct ZeroIntelligence {
    pub asset: usize,
    /// Wakeups per second.
    pub rate: f64,
    /// Success probability of the geometric tick offset.
    pub offset_p: f64,
    /// Probability that a limit order is placed through the mid.
    pub aggression: f64,
    pub market_prob: f64,
    pub size_mu: f64,
    pub size_sigma: f64,
    /// Oldest open orders beyond this count are cancelled.
    pub max_open: usize,
}

impl Default for ZeroIntelligence {
    fn default() -> Self {
        ZeroIntelligence { asset: 0, rate: 1.0, offset_p: 0.3, aggression: 0.1, market_prob: 0.05, size_mu: 1.5, size_sigma: 1.0, max_open: 4 }
    }
}

impl ZeroIntelligence {
    fn next_after(&self, t: TimeNs, rng: &mut SimRng) -> Option<TimeNs> {
        if self.rate <= 0.0 {
            return None;
        }
        let dt = Exp::new(self.rate).expect("positive rate").sample(rng);
        Some(t + 1 + (dt * NANOS_PER_SEC as f64) as TimeNs)
    }
}

impl Agent for ZeroIntelligence {
    fn kind(&self) -> &'static str {
        "zero_intelligence"
    }

    fn first_wakeup(&mut self, start: TimeNs, rng: &mut SimRng) -> Option<TimeNs> {
        self.next_after(start, rng)
    }

    fn on_wakeup(&mut self, view: &MarketView, rng: &mut SimRng) -> AgentDecision {
        let next_wakeup = self.next_after(view.time, rng);
        if self.rate <= 0.0 || !view.phase.accepts_orders() {
            return AgentDecision { batch: Vec::new(), next_wakeup };
        }
        let j = self.asset;
        let mut batch = Vec::new();
        let excess = (view.open_orders.len() + 1).saturating_sub(self.max_open);
        for &target in view.open_orders.iter().take(excess) {
            batch.push(Instruction::Cancel { asset: j, target });
        }

        let mut side = if rng.random_bool(0.5) { Side::Buy } else { Side::Sell };
        let size = LogNormal::new(self.size_mu, self.size_sigma).expect("valid size law").sample(rng).round().max(1.0) as u64;
        let continuous = view.phase == SessionKind::ContinuousTrading;
        let market = continuous && rng.random_bool(self.market_prob);
        let offset = Geometric::new(self.offset_p).expect("valid offset law").sample(rng) as i64;
        let aggressive = rng.random_bool(self.aggression);

        let avail = view.portfolio.sellable(j);
        if side == Side::Sell && avail == 0 {
            side = Side::Buy;
        }
        let volume = if side == Side::Sell { size.min(avail) } else { size };
        if market {
            batch.push(Instruction::Market { asset: j, side, volume });
        } else {
            let m2 = view.mid2_or_ref(j);
            let (below, above) = (m2.div_euclid(2), (m2 + 1).div_euclid(2));
            let price = match (side, aggressive) {
                (Side::Buy, false) => below - offset,
                (Side::Buy, true) => above + offset,
                (Side::Sell, false) => above + offset,
                (Side::Sell, true) => below - offset,
            };
            batch.push(Instruction::Limit { asset: j, side, price: view.clamp(j, price), volume });
        }
        AgentDecision { batch, next_wakeup }
    }
}
