use serde::{Deserialize, Serialize};

use crate::types::Ticks;

/// Daily price limits around a reference price.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceBand {
    pub p_ref: Ticks,
    pub eta: f64,
    pub p_min: Ticks,
    pub p_max: Ticks,
}

/// Scale used to turn `eta` into an exact integer ratio.
const ETA_SCALE: i128 = 1_000_000;

/// `round(num / den)` with halves rounded away from zero; `den > 0`.
fn div_round_half_away(num: i128, den: i128) -> i128 {
    let q = num / den;
    let r = num % den;
    if 2 * r.abs() >= den {
        q + num.signum()
    } else {
        q
    }
}

impl PriceBand {
    pub fn new(p_ref: Ticks, eta: f64) -> Self {
        assert!((0.0..1.0).contains(&eta), "eta must lie in [0, 1)");
        let e = (eta * ETA_SCALE as f64).round() as i128;
        let p = p_ref as i128;
        let p_min = div_round_half_away((ETA_SCALE - e) * p, ETA_SCALE) as Ticks;
        let p_max = div_round_half_away((ETA_SCALE + e) * p, ETA_SCALE) as Ticks;
        PriceBand { p_ref, eta, p_min: p_min.max(1), p_max }
    }

    pub fn contains(&self, price: Ticks) -> bool {
        self.p_min <= price && price <= self.p_max
    }

    pub fn rebased(&self, p_ref: Ticks) -> Self {
        PriceBand::new(p_ref, self.eta)
    }
}
