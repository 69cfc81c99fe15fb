//! Synthetic order flow at a fixed rate per asset.

use std::collections::VecDeque;

use rand::Rng;

use crate::config::StressSpec;
use crate::engine::OrderSource;
use crate::exchange::{AssetSpec, PriceBand};
use crate::rng::{self, SimRng};
use crate::types::{Order, OrderId, Side, Ticks, TimeNs, NANOS_PER_MILLI, NANOS_PER_SEC};

/// Ids of generated orders start here.
pub const STRESS_ID_BASE: u64 = 1 << 40;
const RECENT: usize = 64;

/// Emits exactly `round(rate * assets * duration)` orders, evenly spaced,
/// round-robin over assets.
pub struct StressSource {
    total: u64,
    emitted: u64,
    start: TimeNs,
    duration_ns: TimeNs,
    market_frac: f64,
    cancel_frac: f64,
    centers: Vec<Ticks>,
    bands: Vec<PriceBand>,
    recent: Vec<VecDeque<u64>>,
    rng: SimRng,
}

impl StressSource {
    pub fn new(spec: &StressSpec, assets: &[AssetSpec], session_start: TimeNs, seed: u64) -> Self {
        let m = assets.len();
        let total = (spec.rate_per_asset * m as f64 * spec.duration_s).round() as u64;
        StressSource {
            total,
            emitted: 0,
            start: session_start + spec.start_offset_ms * NANOS_PER_MILLI,
            duration_ns: (spec.duration_s * NANOS_PER_SEC as f64).round() as TimeNs,
            market_frac: spec.market_frac,
            cancel_frac: spec.cancel_frac,
            centers: assets.iter().map(|a| a.p_ref).collect(),
            bands: assets.iter().map(|a| PriceBand::new(a.p_ref, a.eta)).collect(),
            recent: vec![VecDeque::with_capacity(RECENT); m],
            rng: rng::stream(spec.seed.unwrap_or(seed), &[rng::tag::GENERATOR]),
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

impl OrderSource for StressSource {
    fn next_order(&mut self) -> Option<Order> {
        if self.emitted >= self.total {
            return None;
        }
        let i = self.emitted;
        self.emitted += 1;
        let m = self.centers.len() as u64;
        let j = (i % m) as usize;
        let t = self.start + ((i as u128 * self.duration_ns as u128) / self.total as u128) as TimeNs;
        let id = STRESS_ID_BASE + i;
        let u: f64 = self.rng.random();
        if u < self.cancel_frac && !self.recent[j].is_empty() {
            let k = self.rng.random_range(0..self.recent[j].len());
            let target = self.recent[j].remove(k).expect("in range");
            return Some(Order::cancel(id, j, OrderId(target)).at(t));
        }
        let side = if self.rng.random_bool(0.5) { Side::Buy } else { Side::Sell };
        let volume = self.rng.random_range(1..=10);
        if u < self.cancel_frac + self.market_frac {
            return Some(Order::market(id, j, side, volume).at(t));
        }
        let band = self.bands[j];
        let step: i64 = self.rng.random_range(-1..=1);
        self.centers[j] = (self.centers[j] + step).clamp(band.p_min + 20, band.p_max - 20);
        let offset = (self.rng.random::<f64>().ln() / 0.7f64.ln()).floor() as Ticks;
        // A few limits cross the spread.
        let offset = if self.rng.random_bool(0.1) { -offset.min(3) - 1 } else { offset + 1 };
        let price = (self.centers[j] - side.sign() * offset).clamp(band.p_min, band.p_max);
        if self.recent[j].len() == RECENT {
            self.recent[j].pop_front();
        }
        self.recent[j].push_back(id);
        Some(Order::limit(id, j, side, price, volume).at(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(rate: f64) -> u64 {
        let spec = StressSpec { rate_per_asset: rate, duration_s: 2.0, ..StressSpec::default() };
        let mut s = StressSource::new(&spec, &[AssetSpec::default(), AssetSpec::default()], 0, 1);
        let mut n = 0;
        let mut last = 0;
        while let Some(o) = s.next_order() {
            assert!(o.recv_time >= last && o.recv_time < 2 * NANOS_PER_SEC);
            assert!(o.is_well_formed());
            last = o.recv_time;
            n += 1;
        }
        n
    }

    #[test]
    fn emits_exact_count() {
        assert_eq!(count(0.0), 0);
        assert_eq!(count(100.0), 400);
        assert_eq!(count(200.0), 800);
    }
}
