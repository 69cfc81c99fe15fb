use super::{Agent, AgentDecision, Instruction, MarketView};
use crate::exchange::SessionKind;
use crate::rng::SimRng;
use crate::types::{Side, TimeNs};

/// Re-quotes a symmetric pair around the mid every `period`, cancelling the previous pair.
#[derive(Clone, Debug)]
pub struct QuoteUpdater {
    pub asset: usize,
    pub period: TimeNs,
    /// Half-spread in ticks.
    pub offset: i64,
    pub size: u64,
}

impl Agent for QuoteUpdater {
    fn kind(&self) -> &'static str {
        "quote_updater"
    }

    fn first_wakeup(&mut self, start: TimeNs, _rng: &mut SimRng) -> Option<TimeNs> {
        Some(start)
    }

    fn on_wakeup(&mut self, view: &MarketView, _rng: &mut SimRng) -> AgentDecision {
        let next_wakeup = Some(view.time + self.period);
        if view.phase != SessionKind::ContinuousTrading {
            return AgentDecision { batch: Vec::new(), next_wakeup };
        }
        let j = self.asset;
        let mut batch: Vec<Instruction> = view.open_orders.iter().map(|&target| Instruction::Cancel { asset: j, target }).collect();
        let m2 = view.mid2_or_ref(j);
        let bid = view.clamp(j, m2.div_euclid(2) - self.offset);
        let ask = view.clamp(j, (m2 + 1).div_euclid(2) + self.offset);
        batch.push(Instruction::Limit { asset: j, side: Side::Buy, price: bid, volume: self.size });
        batch.push(Instruction::Limit { asset: j, side: Side::Sell, price: ask, volume: self.size });
        AgentDecision { batch, next_wakeup }
    }
}
