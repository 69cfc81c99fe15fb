use std::collections::BTreeMap;

use crate::types::{Side, Ticks, TimeNs};

/// One row of the order trace used for coverage statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageRow {
    pub time: TimeNs,
    pub agent_type: String,
    pub side: Side,
    pub price: Ticks,
    /// Contemporaneous mid in ticks; `None` when the book had no two-sided quote.
    pub mid: Option<f64>,
    pub size: u64,
}

/// Offset of `price` from `mid` in ticks of size `tick`.
pub fn tick_offset(price: f64, mid: f64, tick: f64) -> f64 {
    (price - mid) / tick
}

/// Symmetric log bin: four bins per decade of `1 + |x|`, signed.
pub fn symlog_bin(x: f64) -> i32 {
    let b = (4.0 * (1.0 + x.abs()).log10()).floor() as i32;
    if x < 0.0 {
        -b
    } else {
        b
    }
}

/// Four bins per decade of `q >= 1`.
pub fn log_bin(q: u64) -> i32 {
    (4.0 * (q.max(1) as f64).log10()).floor() as i32
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoverageStats {
    /// Per agent type: `(offset bin, size bin) -> count`.
    pub histograms: BTreeMap<String, BTreeMap<(i32, i32), u64>>,
    /// Orders without a defined mid.
    pub excluded: u64,
}

pub fn coverage_stats<'a>(rows: impl IntoIterator<Item = &'a CoverageRow>) -> CoverageStats {
    let mut s = CoverageStats::default();
    for r in rows {
        let Some(m) = r.mid else {
            s.excluded += 1;
            continue;
        };
        let key = (symlog_bin(tick_offset(r.price as f64, m, 1.0)), log_bin(r.size));
        *s.histograms.entry(r.agent_type.clone()).or_default().entry(key).or_default() += 1;
    }
    s
}
