//! Cross-asset correlation of bucketed mid-price log returns.

use crate::book::LobSnapshot;
use crate::error::{Error, Result};
use crate::types::TimeNs;

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix {
    /// Row-major; undefined entries are NaN.
    pub values: Vec<Vec<f64>>,
    /// Assets with zero return variance.
    pub undefined: Vec<bool>,
    pub buckets: usize,
}

impl CorrelationMatrix {
    /// Mean |C_ij| over defined pairs i < j.
    pub fn mean_abs_offdiag(&self) -> f64 {
        let n = self.values.len();
        let (mut sum, mut k) = (0.0, 0usize);
        for i in 0..n {
            for j in i + 1..n {
                if !self.undefined[i] && !self.undefined[j] {
                    sum += self.values[i][j].abs();
                    k += 1;
                }
            }
        }
        if k == 0 {
            f64::NAN
        } else {
            sum / k as f64
        }
    }
}

/// Mid at the end of each bucket of each window, forward-filled.
///
/// Buckets tile each `[start, end)` window from its start. The mid at a
/// bucket end is the last snapshot at or before it with both sides quoted;
/// leading gaps take the first valid mid.
pub fn bucket_mids(snaps: &[LobSnapshot], assets: usize, windows: &[(TimeNs, TimeNs)], bucket: TimeNs) -> Vec<Vec<f64>> {
    let mut ends = Vec::new();
    for &(s, e) in windows {
        let mut t = s + bucket;
        while t <= e {
            ends.push(t);
            t += bucket;
        }
    }
    (0..assets)
        .map(|j| {
            let mut series: Vec<&LobSnapshot> = snaps.iter().filter(|s| s.asset == j).collect();
            series.sort_by_key(|s| s.timestamp);
            let mut out: Vec<Option<f64>> = Vec::with_capacity(ends.len());
            let mut k = 0;
            let mut last = None;
            for &t in &ends {
                while k < series.len() && series[k].timestamp <= t {
                    if let Some(m) = series[k].mid() {
                        last = Some(m);
                    }
                    k += 1;
                }
                out.push(last);
            }
            let first = out.iter().flatten().next().copied();
            out.into_iter().map(|m| m.or(first).unwrap_or(f64::NAN)).collect()
        })
        .collect()
}

pub fn log_returns(mids: &[f64]) -> Vec<f64> {
    mids.windows(2).map(|w| w[1].ln() - w[0].ln()).collect()
}

/// Two-pass Pearson matrix of equal-length series.
pub fn pearson(series: &[Vec<f64>]) -> CorrelationMatrix {
    let n = series.len();
    let len = series.first().map_or(0, |s| s.len());
    let centered: Vec<Vec<f64>> = series
        .iter()
        .map(|s| {
            let mean = s.iter().sum::<f64>() / len as f64;
            s.iter().map(|x| x - mean).collect()
        })
        .collect();
    let ss: Vec<f64> = centered.iter().map(|c| c.iter().map(|x| x * x).sum()).collect();
    let undefined: Vec<bool> = ss.iter().map(|&v| !(v > 0.0) || !v.is_finite()).collect();
    let mut values = vec![vec![f64::NAN; n]; n];
    for i in 0..n {
        values[i][i] = 1.0;
        for j in i + 1..n {
            if undefined[i] || undefined[j] {
                continue;
            }
            let cov: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            let r = (cov / (ss[i].sqrt() * ss[j].sqrt())).clamp(-1.0, 1.0);
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    CorrelationMatrix { values, undefined, buckets: len }
}

/// Correlation of bucketed mid log returns across assets.
pub fn cross_asset_correlation(snaps: &[LobSnapshot], assets: usize, windows: &[(TimeNs, TimeNs)], bucket: TimeNs) -> Result<CorrelationMatrix> {
    if assets < 2 {
        return Err(Error::Config("correlation needs at least two assets".into()));
    }
    let returns: Vec<Vec<f64>> = bucket_mids(snaps, assets, windows, bucket).iter().map(|m| log_returns(m)).collect();
    let len = returns[0].len();
    if len < 30 {
        return Err(Error::Config(format!("correlation needs at least 30 return buckets, found {len}")));
    }
    let c = pearson(&returns);
    for (j, u) in c.undefined.iter().enumerate() {
        if *u {
            log::warn!("asset {j} has zero return variance; its correlations are undefined");
        }
    }
    Ok(c)
}
