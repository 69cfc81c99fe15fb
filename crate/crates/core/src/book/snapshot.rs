use std::fmt::Write as _;

use crate::types::{AssetId, Lots, Side, Ticks, TimeNs};

/// One row of the snapshot matrix: `(b_p, b_v, a_p, a_v)` at a given depth.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct LevelRow {
    pub bid_price: Ticks,
    pub bid_volume: Lots,
    pub ask_price: Ticks,
    pub ask_volume: Lots,
}

/// Best-`l` levels of a book. Absent levels are `(0, 0)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LobSnapshot {
    pub asset: AssetId,
    pub timestamp: TimeNs,
    pub levels: Vec<LevelRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnapshotViolation {
    BidsNotDecreasing(usize),
    AsksNotIncreasing(usize),
    Crossed,
    PaddingGap(Side, usize),
    VolumeWithoutPrice(Side, usize),
}

impl LobSnapshot {
    pub fn empty(asset: AssetId, timestamp: TimeNs, depth: usize) -> Self {
        LobSnapshot { asset, timestamp, levels: vec![LevelRow::default(); depth] }
    }

    /// Builds a snapshot from per-side `(price, volume)` lists, best first.
    pub fn from_sides(
        asset: AssetId,
        timestamp: TimeNs,
        depth: usize,
        bids: &[(Ticks, Lots)],
        asks: &[(Ticks, Lots)],
    ) -> Self {
        let mut s = LobSnapshot::empty(asset, timestamp, depth);
        for (row, &(p, v)) in s.levels.iter_mut().zip(bids) {
            row.bid_price = p;
            row.bid_volume = v;
        }
        for (row, &(p, v)) in s.levels.iter_mut().zip(asks) {
            row.ask_price = p;
            row.ask_volume = v;
        }
        s
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn price(&self, side: Side, level: usize) -> Ticks {
        let r = &self.levels[level];
        match side {
            Side::Buy => r.bid_price,
            Side::Sell => r.ask_price,
        }
    }

    pub fn volume(&self, side: Side, level: usize) -> Lots {
        let r = &self.levels[level];
        match side {
            Side::Buy => r.bid_volume,
            Side::Sell => r.ask_volume,
        }
    }

    pub fn set(&mut self, side: Side, level: usize, price: Ticks, volume: Lots) {
        let r = &mut self.levels[level];
        match side {
            Side::Buy => {
                r.bid_price = price;
                r.bid_volume = volume;
            }
            Side::Sell => {
                r.ask_price = price;
                r.ask_volume = volume;
            }
        }
    }

    /// Non-padded `(price, volume)` pairs on one side, best first.
    pub fn side_levels(&self, side: Side) -> Vec<(Ticks, Lots)> {
        (0..self.depth())
            .map(|i| (self.price(side, i), self.volume(side, i)))
            .take_while(|&(p, _)| p != 0)
            .collect()
    }

    /// Aggregated volume shown at `price` on `side` within the first `upto` rows.
    pub fn volume_at(&self, side: Side, price: Ticks, upto: usize) -> Lots {
        (0..upto.min(self.depth()))
            .find(|&i| self.price(side, i) == price)
            .map_or(0, |i| self.volume(side, i))
    }

    pub fn best_bid(&self) -> Option<Ticks> {
        self.levels.first().map(|r| r.bid_price).filter(|&p| p != 0)
    }

    pub fn best_ask(&self) -> Option<Ticks> {
        self.levels.first().map(|r| r.ask_price).filter(|&p| p != 0)
    }

    /// `best_bid + best_ask` (twice the mid) when both sides are present.
    pub fn mid2(&self) -> Option<Ticks> {
        Some(self.best_bid()? + self.best_ask()?)
    }

    /// Mid-price in ticks.
    pub fn mid(&self) -> Option<f64> {
        self.mid2().map(|m| m as f64 / 2.0)
    }

    /// Keeps only the first `depth` rows (or pads up to it).
    pub fn truncated(&self, depth: usize) -> LobSnapshot {
        let mut s = self.clone();
        s.levels.resize(depth, LevelRow::default());
        s
    }

    /// Checks the ordering and sign constraints of a snapshot matrix.
    pub fn check(&self) -> Result<(), SnapshotViolation> {
        for side in [Side::Buy, Side::Sell] {
            let mut padded = false;
            for i in 0..self.depth() {
                let (p, v) = (self.price(side, i), self.volume(side, i));
                if p == 0 {
                    if v != 0 {
                        return Err(SnapshotViolation::VolumeWithoutPrice(side, i));
                    }
                    padded = true;
                    continue;
                }
                if padded {
                    return Err(SnapshotViolation::PaddingGap(side, i));
                }
                if i > 0 {
                    let prev = self.price(side, i - 1);
                    if !side.better(prev, p) {
                        return Err(match side {
                            Side::Buy => SnapshotViolation::BidsNotDecreasing(i),
                            Side::Sell => SnapshotViolation::AsksNotIncreasing(i),
                        });
                    }
                }
            }
        }
        if let (Some(b), Some(a)) = (self.best_bid(), self.best_ask()) {
            if b >= a {
                return Err(SnapshotViolation::Crossed);
            }
        }
        Ok(())
    }

    /// Appends one delimited row: `asset,time_ns,b1p,b1v,a1p,a1v,...`.
    pub fn write_row(&self, out: &mut String) {
        let _ = write!(out, "{},{}", self.asset, self.timestamp);
        for r in &self.levels {
            let _ = write!(out, ",{},{},{},{}", r.bid_price, r.bid_volume, r.ask_price, r.ask_volume);
        }
        out.push('\n');
    }

    pub fn header(depth: usize) -> String {
        let mut h = String::from("asset,time_ns");
        for i in 1..=depth {
            let _ = write!(h, ",bid{i}_price,bid{i}_volume,ask{i}_price,ask{i}_volume");
        }
        h.push('\n');
        h
    }

    /// Parses the fields of a row written by [`LobSnapshot::write_row`].
    pub fn parse_fields<'a>(fields: impl IntoIterator<Item = &'a str>) -> Result<LobSnapshot, String> {
        let mut it = fields.into_iter();
        let asset = next_num::<usize>(&mut it, "asset")?;
        let timestamp = next_num::<TimeNs>(&mut it, "time_ns")?;
        let rest: Vec<&str> = it.collect();
        if rest.is_empty() || rest.len() % 4 != 0 {
            return Err(format!("expected 4*l level columns, found {}", rest.len()));
        }
        let mut levels = Vec::with_capacity(rest.len() / 4);
        for c in rest.chunks(4) {
            let num = |s: &str, what: &str| -> Result<i64, String> {
                s.trim().parse::<i64>().map_err(|_| format!("bad {what} `{s}`"))
            };
            let (bp, bv, ap, av) = (num(c[0], "price")?, num(c[1], "volume")?, num(c[2], "price")?, num(c[3], "volume")?);
            if bv < 0 || av < 0 || bp < 0 || ap < 0 {
                return Err("negative price or volume".into());
            }
            levels.push(LevelRow { bid_price: bp, bid_volume: bv as Lots, ask_price: ap, ask_volume: av as Lots });
        }
        Ok(LobSnapshot { asset, timestamp, levels })
    }
}

fn next_num<'a, T: std::str::FromStr>(it: &mut impl Iterator<Item = &'a str>, what: &str) -> Result<T, String> {
    let s = it.next().ok_or_else(|| format!("missing {what}"))?;
    s.trim().parse().map_err(|_| format!("bad {what} `{s}`"))
}
