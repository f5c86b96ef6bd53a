//! Backward derivative cocycle along the critical orbit, read as a chain in
//! the natural extension: `x_{-n} = h(c_{m-n})`.

use crate::conjugacy::{log_abs_h_prime, ConjugacyParams, LOG_PREC};
use crate::error::{Error, Result};
use crate::kneading::CutTimes;
use crate::lyapunov::{log_deriv_n, log_lambda};
use crate::numerics::Ball;
use crate::par;
use crate::postcritical::partition::{in_interval, interval_endpoints, Label};
use crate::postcritical::OrbitCache;

#[derive(Clone, Debug)]
pub struct BackwardEntry {
    pub n: usize,
    /// `b_n = -(1/n) log|D f̄^{-n}|`
    pub b_n: Ball,
    /// `Some(i)` when `c_{m-n}` is the `i`-th backward close return.
    pub tag: Option<u32>,
}

#[derive(Clone, Debug)]
pub struct BackwardChain {
    pub m: usize,
    pub depth: usize,
    pub k_hat: u32,
    /// First `n >= 0` with `c_{m-n} ∈ I_{k̂}`.
    pub offset: Option<usize>,
    pub entries: Vec<BackwardEntry>,
    /// `(i, n_i)` for the tagged backward returns.
    pub tagged: Vec<(u32, usize)>,
}

impl BackwardChain {
    pub fn max_tagged(&self) -> Option<&BackwardEntry> {
        self.entries.iter().filter(|e| e.tag.is_some()).max_by(|a, b| a.b_n.to_f64().total_cmp(&b.b_n.to_f64()))
    }

    pub fn window_min(&self) -> Option<&BackwardEntry> {
        self.entries.iter().min_by(|a, b| a.b_n.to_f64().total_cmp(&b.b_n.to_f64()))
    }

    pub fn window_max(&self) -> Option<&BackwardEntry> {
        self.entries.iter().max_by(|a, b| a.b_n.to_f64().total_cmp(&b.b_n.to_f64()))
    }

    /// Whether every tagged time sits in its predicted window.
    pub fn tags_within_windows(&self, s: &CutTimes) -> bool {
        let Some(t) = self.offset else { return self.tagged.is_empty() };
        self.tagged.iter().all(|&(i, n)| {
            let (lo, hi) = backward_window(s, self.k_hat, i);
            n >= t && lo <= (n - t) as u64 && (n - t) as u64 <= hi
        })
    }
}

/// `S(k̂+i+1) - S(k̂+1) <= n_i - t <= S(k̂+i+2) - S(k̂+2)`.
pub fn backward_window(s: &CutTimes, k_hat: u32, i: u32) -> (u64, u64) {
    let g = |d: u32| s.get((k_hat + d) as i64);
    (g(i + 1) - g(1), g(i + 2) - g(2))
}

pub fn backward_return_windows(s: &CutTimes, k_hat: u32, depth: u32) -> Vec<(u32, u64, u64)> {
    (1..=depth).map(|i| {
        let (lo, hi) = backward_window(s, k_hat, i);
        (i, lo, hi)
    }).collect()
}

fn in_i(cache: &OrbitCache, s: &CutTimes, k: u32, idx: usize) -> Result<bool> {
    let (a, b) = interval_endpoints(s, Label::I { k, n: 0 });
    cache.require(a.max(b))?;
    in_interval(cache, a, b, idx).ok_or_else(|| Error::Unresolved(format!("membership of c_{idx} in I_{k}")))
}

/// `b_n = log λ - (1/n) log|h'(c_{m-n})| + (1/n) log|h'(c_m)|` for
/// `n = 1..=depth`, tagging backward visits to `I_{k̂+i}`.
pub fn backward_series(p: &ConjugacyParams, cache: &OrbitCache, s: &CutTimes, m: usize, depth: usize, k_hat: u32) -> Result<BackwardChain> {
    if depth >= m {
        return Err(Error::Config(format!("backward depth {depth} must stay below the anchor {m}")));
    }
    cache.require(m)?;
    let ll = log_lambda(cache);
    let anchor = log_abs_h_prime(p, cache.point(m))?;

    let mut offset = None;
    let mut tagged = Vec::new();
    for n in 0..=depth {
        let i = tagged.len() as u32 + if offset.is_some() { 1 } else { 0 };
        if in_i(cache, s, k_hat + i, m - n)? {
            if offset.is_none() {
                offset = Some(n);
            } else {
                tagged.push((i, n));
            }
        }
    }

    let entries = par::map_range(1, depth + 1, |n| -> Result<BackwardEntry> {
        let inv_n = Ball::from_i64(n as i64, LOG_PREC).recip().unwrap();
        let corr = &anchor - &log_abs_h_prime(p, cache.point(m - n))?;
        let b_n = &ll + &(&inv_n * &corr);
        let tag = tagged.iter().find(|&&(_, t)| t == n).map(|&(i, _)| i);
        Ok(BackwardEntry { n, b_n, tag })
    });
    Ok(BackwardChain { m, depth, k_hat, offset, entries: entries.into_iter().collect::<Result<_>>()?, tagged })
}

/// `n b_n + log|D f̄^{-n}|`, with the backward derivative taken as the
/// reciprocal of the forward cocycle from `c_{m-n}`; zero up to ball error.
pub fn cocycle_defect(p: &ConjugacyParams, cache: &OrbitCache, chain: &BackwardChain, n: usize) -> Result<Ball> {
    let e = &chain.entries[n - 1];
    let log_back = -log_deriv_n(p, cache, chain.m - n, n)?;
    Ok(&(&e.b_n * &Ball::from_i64(n as i64, LOG_PREC)) + &log_back)
}
