use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Agent, AgentDecision, Instruction, MarketView};
use crate::exchange::SessionKind;
use crate::rng::{self, SimRng};
use crate::types::{Side, TimeNs, NANOS_PER_SEC};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FactorSpec {
    /// AR(1) coefficient.
    pub phi: f64,
    pub sigma: f64,
    pub step_ms: u64,
    /// Fixed per-asset loadings; drawn uniformly in [-1, 1] when empty.
    pub loadings: Vec<f64>,
}

impl Default for FactorSpec {
    fn default() -> Self {
        FactorSpec { phi: 0.98, sigma: 0.2, step_ms: 1000, loadings: Vec::new() }
    }
}

/// Common AR(1) factor path and per-asset loadings.
#[derive(Clone, Debug)]
pub struct FactorState {
    pub phi: f64,
    pub sigma: f64,
    pub step: TimeNs,
    pub loadings: Vec<f64>,
    path: Vec<f64>,
    rng: SimRng,
}

impl FactorState {
    pub fn new(spec: &FactorSpec, assets: usize, seed: u64) -> Self {
        let mut draw = rng::stream(seed, &[rng::tag::FACTOR, 0]);
        let loadings = if spec.loadings.is_empty() {
            use rand::Rng;
            (0..assets).map(|_| draw.random_range(-1.0..=1.0)).collect()
        } else {
            spec.loadings.clone()
        };
        FactorState {
            phi: spec.phi,
            sigma: spec.sigma,
            step: spec.step_ms.max(1) * (NANOS_PER_SEC / 1000),
            loadings,
            path: vec![0.0],
            rng: rng::stream(seed, &[rng::tag::FACTOR, 1]),
        }
    }

    /// Factor value in effect at `t`.
    pub fn value_at(&mut self, t: TimeNs) -> f64 {
        let k = (t / self.step) as usize;
        let noise = Normal::new(0.0, self.sigma.max(0.0)).expect("finite sigma");
        while self.path.len() <= k {
            let x = *self.path.last().expect("seeded path");
            let e = if self.sigma > 0.0 { noise.sample(&mut self.rng) } else { 0.0 };
            self.path.push(self.phi * x + e);
        }
        self.path[k]
    }

    pub fn loading(&self, j: usize) -> f64 {
        self.loadings.get(j).copied().unwrap_or(0.0)
    }
}

/// Trades a basket at market when `loading * factor` leaves `[-threshold, threshold]`.
#[derive(Clone, Debug)]
pub struct FactorAgent {
    pub assets: Vec<usize>,
    pub loadings: Vec<f64>,
    pub period: TimeNs,
    pub threshold: f64,
    pub size: u64,
}

impl Agent for FactorAgent {
    fn kind(&self) -> &'static str {
        "factor"
    }

    fn first_wakeup(&mut self, start: TimeNs, _rng: &mut SimRng) -> Option<TimeNs> {
        Some(start)
    }

    fn on_wakeup(&mut self, view: &MarketView, _rng: &mut SimRng) -> AgentDecision {
        let next_wakeup = Some(view.time + self.period);
        let mut batch = Vec::new();
        if view.phase == SessionKind::ContinuousTrading {
            for (k, &j) in self.assets.iter().enumerate() {
                let s = self.loadings[k] * view.factor;
                let side = if s > self.threshold {
                    Side::Buy
                } else if s < -self.threshold {
                    Side::Sell
                } else {
                    continue;
                };
                let volume = match side {
                    Side::Buy => self.size,
                    Side::Sell => self.size.min(view.portfolio.sellable(j)),
                };
                if volume > 0 {
                    batch.push(Instruction::Market { asset: j, side, volume });
                }
            }
        }
        AgentDecision { batch, next_wakeup }
    }
}
