use crate::book::LobSnapshot;
use crate::error::{Error, Result};
use crate::types::{Side, Ticks};

/// Level-aligned `target - simulated` differences over levels `1..=L`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapTensor {
    pub bid_price: Vec<i64>,
    pub bid_depth: Vec<i64>,
    pub ask_price: Vec<i64>,
    pub ask_depth: Vec<i64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GapKind {
    Price,
    Depth,
}

/// One entry of the tensor, addressed by side, level (0-based) and kind.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapEntry {
    pub side: Side,
    pub level: usize,
    pub kind: GapKind,
    pub value: i64,
    pub magnitude: f64,
}

impl GapTensor {
    pub fn levels(&self) -> usize {
        self.bid_price.len()
    }

    pub fn is_zero(&self) -> bool {
        [&self.bid_price, &self.bid_depth, &self.ask_price, &self.ask_depth].iter().all(|v| v.iter().all(|&x| x == 0))
    }

    pub fn price(&self, side: Side) -> &[i64] {
        match side {
            Side::Buy => &self.bid_price,
            Side::Sell => &self.ask_price,
        }
    }

    pub fn depth(&self, side: Side) -> &[i64] {
        match side {
            Side::Buy => &self.bid_depth,
            Side::Sell => &self.ask_depth,
        }
    }

    /// `sqrt(sum (w_p * dp)^2 + dv^2)`.
    pub fn norm(&self, price_weight: f64) -> f64 {
        let mut s = 0.0;
        for side in [Side::Buy, Side::Sell] {
            for &p in self.price(side) {
                s += (price_weight * p as f64).powi(2);
            }
            for &v in self.depth(side) {
                s += (v as f64).powi(2);
            }
        }
        s.sqrt()
    }

    /// Non-zero entries by descending weighted magnitude. Ties keep
    /// level order, bids before asks, price before depth.
    pub fn sorted_entries(&self, price_weight: f64) -> Vec<GapEntry> {
        let mut out = Vec::new();
        for level in 0..self.levels() {
            for side in [Side::Buy, Side::Sell] {
                for kind in [GapKind::Price, GapKind::Depth] {
                    let value = match kind {
                        GapKind::Price => self.price(side)[level],
                        GapKind::Depth => self.depth(side)[level],
                    };
                    if value == 0 {
                        continue;
                    }
                    let magnitude = match kind {
                        GapKind::Price => price_weight * (value as f64).abs(),
                        GapKind::Depth => (value as f64).abs(),
                    };
                    out.push(GapEntry { side, level, kind, value, magnitude });
                }
            }
        }
        out.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude));
        out
    }
}

/// Gap over the first `levels` rows. Padded rows count as `(0, 0)`.
pub fn compute_gap(simulated: &LobSnapshot, target: &LobSnapshot, levels: usize) -> Result<GapTensor> {
    if simulated.depth() != target.depth() {
        return Err(Error::LevelMismatch { simulated: simulated.depth(), target: target.depth() });
    }
    let l = levels.min(target.depth());
    let diff = |side: Side, f: &dyn Fn(&LobSnapshot, Side, usize) -> i64| -> Vec<i64> {
        (0..l).map(|i| f(target, side, i) - f(simulated, side, i)).collect()
    };
    let price = |s: &LobSnapshot, side, i| s.price(side, i) as Ticks;
    let depth = |s: &LobSnapshot, side, i| s.volume(side, i) as i64;
    Ok(GapTensor {
        bid_price: diff(Side::Buy, &price),
        bid_depth: diff(Side::Buy, &depth),
        ask_price: diff(Side::Sell, &price),
        ask_depth: diff(Side::Sell, &depth),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_gap_sign() {
        let sim = LobSnapshot::from_sides(0, 0, 2, &[(1000, 30)], &[(1001, 5)]);
        let tgt = LobSnapshot::from_sides(0, 0, 2, &[(1000, 50)], &[(1001, 5)]);
        let g = compute_gap(&sim, &tgt, 2).unwrap();
        assert_eq!(g.bid_depth, vec![20, 0]);
        assert_eq!(g.norm(1.0), 20.0);
        assert!(compute_gap(&sim, &tgt.truncated(3), 2).is_err());
    }

    #[test]
    fn sorted_by_weighted_magnitude() {
        let sim = LobSnapshot::from_sides(0, 0, 1, &[(1000, 10)], &[(1003, 10)]);
        let tgt = LobSnapshot::from_sides(0, 0, 1, &[(1000, 14)], &[(1001, 10)]);
        let g = compute_gap(&sim, &tgt, 1).unwrap();
        let e = g.sorted_entries(1.0);
        assert_eq!((e[0].side, e[0].kind, e[0].value), (Side::Buy, GapKind::Depth, 4));
        let e = g.sorted_entries(3.0);
        assert_eq!((e[0].side, e[0].kind, e[0].value), (Side::Sell, GapKind::Price, -2));
    }
}
