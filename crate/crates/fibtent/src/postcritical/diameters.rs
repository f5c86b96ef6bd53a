//! Diameters `|D_k| = |c_{S(k)}|` and the ratios built from them.

use crate::error::{Error, Result};
use crate::kneading::CutTimes;
use crate::numerics::{Ball, SignCertificate};
use crate::par;

use super::OrbitCache;

#[derive(Clone, Debug)]
pub struct DiameterRow {
    pub k: u32,
    pub s_k: u64,
    /// `|D_k|`
    pub d: Ball,
    /// `ν_k = |D_k| / |D_{k+1}|`
    pub nu: Ball,
    /// `C_k = ν_k λ^{-S(k)}`
    pub c_ratio: Ball,
    /// `L_k = λ^{S(k+1)} |D_k|`
    pub l: Ball,
}

#[derive(Clone, Debug)]
pub struct DiameterStats {
    pub rows: Vec<DiameterRow>,
    /// `L_{k_max}` widened by its last increment.
    pub beta_estimate: Ball,
}

impl DiameterStats {
    pub fn row(&self, k: u32) -> Option<&DiameterRow> {
        self.rows.iter().find(|r| r.k == k)
    }

    /// `|L_{k+1} - L_k|` for consecutive rows.
    pub fn l_increments(&self) -> Vec<(u32, Ball)> {
        self.rows.windows(2).map(|w| (w[0].k, (&w[1].l - &w[0].l).abs())).collect()
    }
}

fn diameter(cache: &OrbitCache, s: &CutTimes, k: u32) -> Result<Ball> {
    let d = cache.abs(s.at(k as i64));
    if d.sign() != SignCertificate::Positive {
        return Err(Error::Unresolved(format!("|D_{k}| is not certified positive")));
    }
    Ok(d)
}

/// Rows for `k = 0..=k_max`; the cache must reach `S(k_max + 1)`.
pub fn diameter_stats(cache: &OrbitCache, s: &CutTimes, k_max: u32) -> Result<DiameterStats> {
    cache.require(s.at(k_max as i64 + 1))?;
    let lambda = cache.lambda();
    let ds = par::map_range(0, k_max as usize + 2, |k| diameter(cache, s, k as u32));
    let ds = ds.into_iter().collect::<Result<Vec<_>>>()?;
    let rows = par::map_range(0, k_max as usize + 1, |k| {
        let nu = ds[k].div(&ds[k + 1]).expect("certified positive");
        let c_ratio = nu.div(&lambda.powi(s.get(k as i64))).expect("λ > 0");
        let l = &lambda.powi(s.get(k as i64 + 1)) * &ds[k];
        DiameterRow { k: k as u32, s_k: s.get(k as i64), d: ds[k].clone(), nu, c_ratio, l }
    });
    let last = &rows[rows.len() - 1].l;
    let spread = match rows.len() {
        n if n >= 2 => (last - &rows[n - 2].l).abs().upper(),
        _ => rug::Float::new(32),
    };
    let beta_estimate = last.inflate(&spread);
    Ok(DiameterStats { rows, beta_estimate })
}

/// Both sides of `λ^{S(k-1)} |D_k| = |D_{k-1}| + |D_{k+1}|`.
pub fn length_identity(cache: &OrbitCache, s: &CutTimes, k: u32) -> Result<(Ball, Ball)> {
    cache.require(s.at(k as i64 + 1))?;
    let lhs = &cache.lambda().powi(s.get(k as i64 - 1)) * &diameter(cache, s, k)?;
    let rhs = &diameter(cache, s, k - 1)? + &diameter(cache, s, k + 1)?;
    Ok((lhs, rhs))
}
