use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::book::LobSnapshot;
use crate::error::{Error, Result};
use crate::rng::{self, SimRng};
use crate::types::{AssetId, Lots, Side, Ticks, TimeNs};

/// Variance law `sigma^2(V) = sigma0_sq + alpha * V`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseParams {
    pub sigma0_sq: f64,
    pub alpha: f64,
}

impl NoiseParams {
    pub fn variance(&self, intervened: Lots) -> f64 {
        self.sigma0_sq + self.alpha * intervened as f64
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.sigma0_sq >= 0.0 && self.alpha >= 0.0) {
            return Err("noise parameters must be nonnegative".into());
        }
        Ok(())
    }

    /// One raw perturbation draw.
    pub fn sample(&self, intervened: Lots, rng: &mut SimRng) -> f64 {
        let sd = self.variance(intervened).sqrt();
        if sd == 0.0 {
            return 0.0;
        }
        Normal::new(0.0, sd).expect("finite sd").sample(rng)
    }
}

/// Reference snapshots per asset plus the noise model applied on query.
#[derive(Clone, Debug)]
pub struct OracleSource {
    series: Vec<Vec<LobSnapshot>>,
    pub noise: NoiseParams,
    /// Levels perturbed on query.
    pub levels: usize,
    /// Queries before this instant are noise-free.
    pub noise_from: TimeNs,
    /// Abort instead of falling back to the nearest earlier reference.
    pub strict: bool,
    seed: u64,
}

impl OracleSource {
    pub fn new(snapshots: Vec<LobSnapshot>, assets: usize, noise: NoiseParams, levels: usize, seed: u64) -> Self {
        let mut series = vec![Vec::new(); assets];
        for s in snapshots {
            if s.asset < assets {
                series[s.asset].push(s);
            }
        }
        for v in &mut series {
            v.sort_by_key(|s| s.timestamp);
        }
        OracleSource { series, noise, levels, noise_from: 0, strict: false, seed }
    }

    pub fn assets(&self) -> usize {
        self.series.len()
    }

    pub fn series(&self, asset: AssetId) -> &[LobSnapshot] {
        &self.series[asset]
    }

    /// Reference at `t`, or the nearest earlier one. The flag is false on fallback.
    pub fn reference(&self, asset: AssetId, t: TimeNs) -> Result<(&LobSnapshot, bool)> {
        let s = &self.series[asset];
        let i = s.partition_point(|x| x.timestamp <= t);
        if i == 0 {
            return Err(Error::NoReference { asset, time: t });
        }
        let r = &s[i - 1];
        let exact = r.timestamp == t;
        if !exact && self.strict {
            return Err(Error::NoReference { asset, time: t });
        }
        Ok((r, exact))
    }

    /// Noisy reference for checkpoint `k` at `t`, given the intervened volume
    /// since the previous checkpoint.
    pub fn query(&self, asset: AssetId, t: TimeNs, checkpoint: usize, intervened: Lots) -> Result<LobSnapshot> {
        let (r, exact) = self.reference(asset, t)?;
        if !exact {
            log::warn!("oracle: no reference for asset {asset} at t={t}, using t={}", r.timestamp);
        }
        let mut out = if t < self.noise_from || self.noise.variance(intervened) == 0.0 {
            r.clone()
        } else {
            let mut rng = rng::stream(self.seed, &[rng::tag::ORACLE, asset as u64, checkpoint as u64]);
            perturb(r, self.levels, &self.noise, intervened, &mut rng)
        };
        out.timestamp = t;
        Ok(out)
    }
}

/// Adds Gaussian noise to prices and depths of levels `1..=levels`, then repairs.
pub fn perturb(reference: &LobSnapshot, levels: usize, noise: &NoiseParams, intervened: Lots, rng: &mut SimRng) -> LobSnapshot {
    let mut sides: [Vec<(Ticks, i64)>; 2] = [Vec::new(), Vec::new()];
    for (k, side) in [Side::Buy, Side::Sell].into_iter().enumerate() {
        for i in 0..reference.depth() {
            let (p, v) = (reference.price(side, i), reference.volume(side, i));
            if p == 0 {
                break;
            }
            if i < levels {
                let dp = noise.sample(intervened, rng);
                let dv = noise.sample(intervened, rng);
                sides[k].push(((p as f64 + dp).round() as Ticks, (v as f64 + dv).round() as i64));
            } else {
                sides[k].push((p, v as i64));
            }
        }
    }
    let [bids, asks] = sides;
    repair(reference.asset, reference.timestamp, reference.depth(), bids, asks, reference.mid())
}

/// Restores snapshot invariants: clamp depths at zero, drop empty levels,
/// merge equal prices, re-sort, then drop crossed best levels (the one
/// farther from `anchor_mid` first; the bid on ties).
pub fn repair(
    asset: AssetId,
    timestamp: TimeNs,
    depth: usize,
    bids: Vec<(Ticks, i64)>,
    asks: Vec<(Ticks, i64)>,
    anchor_mid: Option<f64>,
) -> LobSnapshot {
    let clean = |levels: Vec<(Ticks, i64)>, side: Side| -> Vec<(Ticks, Lots)> {
        let mut v: Vec<(Ticks, Lots)> = levels.into_iter().filter(|&(p, q)| p >= 1 && q > 0).map(|(p, q)| (p, q as Lots)).collect();
        v.sort_by_key(|&(p, _)| if side == Side::Buy { -p } else { p });
        let mut merged: Vec<(Ticks, Lots)> = Vec::with_capacity(v.len());
        for (p, q) in v {
            match merged.last_mut() {
                Some(last) if last.0 == p => last.1 += q,
                _ => merged.push((p, q)),
            }
        }
        merged
    };
    let mut bids = clean(bids, Side::Buy);
    let mut asks = clean(asks, Side::Sell);
    let (mut bi, mut ai) = (0, 0);
    while bi < bids.len() && ai < asks.len() && bids[bi].0 >= asks[ai].0 {
        let (b, a) = (bids[bi].0 as f64, asks[ai].0 as f64);
        let m = anchor_mid.unwrap_or((a + b) / 2.0);
        if (m - b).abs() >= (a - m).abs() {
            bi += 1;
        } else {
            ai += 1;
        }
    }
    bids.drain(..bi);
    asks.drain(..ai);
    LobSnapshot::from_sides(asset, timestamp, depth, &bids, &asks)
}
