use serde::{Deserialize, Serialize};

use crate::types::{AssetId, Lots};

/// Cash in integer hundredths of a currency unit plus per-asset holdings.
///
/// Open buy orders lock cash in `cash_reserved`; open sell orders lock
/// holdings in `reserved`. Lots bought today sit in `pend` until clearing.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortfolioState {
    pub cash: i64,
    pub cash_reserved: i64,
    pub avail: Vec<Lots>,
    pub reserved: Vec<Lots>,
    pub pend: Vec<Lots>,
}

impl PortfolioState {
    pub fn new(assets: usize, cash: i64, lots: Lots) -> Self {
        PortfolioState {
            cash,
            cash_reserved: 0,
            avail: vec![lots; assets],
            reserved: vec![0; assets],
            pend: vec![0; assets],
        }
    }

    /// Total holdings of an asset, locked or not.
    pub fn holdings(&self, asset: AssetId) -> Lots {
        self.avail[asset] + self.reserved[asset] + self.pend[asset]
    }

    /// Lots that may be sold right now.
    pub fn sellable(&self, asset: AssetId) -> Lots {
        self.avail[asset]
    }

    pub fn total_cash(&self) -> i64 {
        self.cash + self.cash_reserved
    }

    pub fn try_reserve_cash(&mut self, amount: i64) -> bool {
        if amount > self.cash {
            return false;
        }
        self.cash -= amount;
        self.cash_reserved += amount;
        true
    }

    pub fn release_cash(&mut self, amount: i64) {
        debug_assert!(amount <= self.cash_reserved);
        self.cash_reserved -= amount;
        self.cash += amount;
    }

    pub fn try_reserve_lots(&mut self, asset: AssetId, lots: Lots) -> bool {
        if lots > self.avail[asset] {
            return false;
        }
        self.avail[asset] -= lots;
        self.reserved[asset] += lots;
        true
    }

    pub fn release_lots(&mut self, asset: AssetId, lots: Lots) {
        self.reserved[asset] -= lots;
        self.avail[asset] += lots;
    }

    /// Buy fill paid out of reserved cash; `reserved_value` is what the fill had locked.
    pub fn settle_buy(&mut self, asset: AssetId, lots: Lots, value: i64, reserved_value: i64) {
        self.cash_reserved -= reserved_value;
        self.cash += reserved_value - value;
        self.pend[asset] += lots;
    }

    pub fn settle_sell(&mut self, asset: AssetId, lots: Lots, value: i64) {
        self.reserved[asset] -= lots;
        self.cash += value;
    }

    /// End-of-day clearing: today's purchases become sellable. Returns lots released per asset.
    pub fn clear_pending(&mut self) -> Vec<Lots> {
        let released = std::mem::replace(&mut self.pend, vec![0; self.avail.len()]);
        for (a, r) in self.avail.iter_mut().zip(&released) {
            *a += r;
        }
        released
    }
}
