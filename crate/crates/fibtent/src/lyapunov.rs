//! Derivative cocycles of `f` along the critical orbit.
//!
//! Since `h` conjugates `f` to the tent map, the chain rule telescopes:
//! `log|(f^n)'(h(c_j))| = n log λ + log|h'(c_{j+n})| - log|h'(c_j)|`.
//! Everything here uses that closed form; the direct product over the
//! orbit exists only as an oracle for tests.

use serde::Serialize;

use crate::conjugacy::{f_eval, f_prime, log_abs_f_prime_at_preimage, log_abs_h, log_abs_h_prime, ConjugacyParams, LOG_PREC};
use crate::error::{Error, Result};
use crate::kneading::{CutTimes, TentParams};
use crate::measure::ZPhi;
use crate::numerics::{Ball, SignCertificate};
use crate::par;
use crate::postcritical::partition::{interval_endpoints, Label};
use crate::postcritical::{entry_time, forward_return_times, side_rule, OrbitCache, ReturnTimes, Side};

pub fn log_lambda(cache: &OrbitCache) -> Ball {
    cache.lambda().with_prec(LOG_PREC).ln().expect("λ > 0")
}

/// `log|(f^n)'(h(c_j))|` from the closed form.
pub fn log_deriv_n(p: &ConjugacyParams, cache: &OrbitCache, j: usize, n: usize) -> Result<Ball> {
    if n == 0 {
        return Ok(Ball::zero(LOG_PREC));
    }
    let end = cache.get(j + n)?;
    let start = cache.get(j)?;
    let n_log = &Ball::from_i64(n as i64, LOG_PREC) * &log_lambda(cache);
    Ok(&(&n_log + &log_abs_h_prime(p, end)?) - &log_abs_h_prime(p, start)?)
}

/// `Σ_{i<n} log|f'(f^i(x0))|` by iterating `f` itself.
pub fn log_deriv_direct(p: &ConjugacyParams, params: &TentParams, x0: &Ball, n: usize) -> Result<Ball> {
    let mut x = x0.clone();
    let mut sum = Ball::zero(x0.prec());
    for _ in 0..n {
        let d = f_prime(p, params, &x)?.abs();
        sum = &sum + &d.ln().ok_or_else(|| Error::Unresolved("f' not separated from 0".into()))?;
        x = f_eval(p, params, &x)?;
    }
    Ok(sum)
}

#[derive(Clone, Debug)]
pub struct IntervalTerm {
    pub n: u32,
    pub side: Side,
    /// `μ(J_n)` times the grid minimum.
    pub term: Ball,
    pub grid_min: Ball,
    pub partial_sum: Ball,
    pub skipped: usize,
}

/// Sample points of `J_n`: half uniform, half geometric in `|x|`, endpoints included.
fn j_grid(cache: &OrbitCache, s: &CutTimes, n: u32, count: usize) -> Result<Vec<Ball>> {
    let (a, b) = interval_endpoints(s, Label::J { k: n, n: 0 });
    let (a, b) = (cache.get(a)?.clone(), cache.get(b)?.clone());
    let half = (count / 2).max(2);
    let width = &b - &a;
    let mut pts = Vec::with_capacity(count);
    for i in 0..half {
        let t = Ball::from_f64(i as f64 / (half - 1) as f64, cache.precision_bits());
        pts.push((&a + &(&width * &t)).with_prec(LOG_PREC));
    }
    let (la, lb) = (a.abs().with_prec(LOG_PREC).ln(), b.abs().with_prec(LOG_PREC).ln());
    if let (Some(la), Some(lb)) = (la, lb) {
        let negative = a.sign() == SignCertificate::Negative;
        for i in 1..half - 1 {
            let t = Ball::from_f64(i as f64 / (half - 1) as f64, LOG_PREC);
            let one_minus = &Ball::from_i64(1, LOG_PREC) - &t;
            let mag = (&(&la * &one_minus) + &(&lb * &t)).exp();
            pts.push(if negative { -mag } else { mag });
        }
    }
    Ok(pts)
}

fn mu_j(n: u32) -> Ball {
    ZPhi::phi_inv_pow(n + 1).to_ball(LOG_PREC)
}

fn interval_terms(
    cache: &OrbitCache,
    s: &CutTimes,
    ns: std::ops::RangeInclusive<u32>,
    grid: usize,
    value: impl Fn(&Ball) -> Result<Ball> + Sync + Send,
) -> Result<Vec<IntervalTerm>> {
    let ns: Vec<u32> = ns.collect();
    let mins = par::map_slice(&ns, |&n| -> Result<(Ball, usize)> {
        let mut best: Option<Ball> = None;
        let mut skipped = 0;
        for x in j_grid(cache, s, n, grid)? {
            match value(&x) {
                Ok(v) => {
                    best = Some(match best {
                        Some(b) => b.min(&v),
                        None => v,
                    })
                }
                Err(_) => skipped += 1,
            }
        }
        best.map(|b| (b, skipped)).ok_or_else(|| Error::Unresolved(format!("no certified grid point in J_{n}")))
    });
    let mut out = Vec::with_capacity(ns.len());
    let mut sum = Ball::zero(LOG_PREC);
    for (n, m) in ns.into_iter().zip(mins) {
        let (grid_min, skipped) = m?;
        let term = &mu_j(n) * &grid_min;
        sum = &sum + &term;
        out.push(IntervalTerm { n, side: side_rule(n - 1), term, grid_min, partial_sum: sum.clone(), skipped });
    }
    Ok(out)
}

/// `μ(J_n) · min_{x ∈ J_n} log|f'(h(x))|` over a sample grid.
pub fn positive_part_terms(p: &ConjugacyParams, cache: &OrbitCache, s: &CutTimes, ns: std::ops::RangeInclusive<u32>, grid: usize) -> Result<Vec<IntervalTerm>> {
    let params = cache.params().clone();
    interval_terms(cache, s, ns, grid, |x| log_abs_f_prime_at_preimage(p, &params, x))
}

/// `μ(J_n) · min_{x ∈ J_n} |log|h(x) - c̃||` over a sample grid.
pub fn logdist_terms(p: &ConjugacyParams, cache: &OrbitCache, s: &CutTimes, ns: std::ops::RangeInclusive<u32>, grid: usize) -> Result<Vec<IntervalTerm>> {
    interval_terms(cache, s, ns, grid, |x| Ok(log_abs_h(p, x)?.abs()))
}

#[derive(Clone, Debug, Serialize)]
pub struct NegativeRecord {
    /// Iterate count along the orbit of `h(c_1)`.
    pub n: usize,
    /// Orbit index `n + 1` of the point `h(c_{n+1})`.
    pub orbit_index: usize,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct NegativePart {
    pub records: Vec<NegativeRecord>,
    /// `(N, (1/N) Σ_{n<N} max(0, -log|f'(f^n(h(c_1)))|))`
    pub averages: Vec<(u64, Ball)>,
    pub unresolved: usize,
}

/// Records of the negative part of `log|f'|` along the orbit of `h(c_1)`
/// for `n < n_max`, with Birkhoff averages at the given checkpoints.
pub fn negative_part_growth(p: &ConjugacyParams, cache: &OrbitCache, n_max: usize, checkpoints: &[u64]) -> Result<NegativePart> {
    cache.require(n_max + 1)?;
    let logs = par::map_range(1, cache.i_max() + 1, |i| log_abs_h_prime(p, cache.point(i)).ok());
    let ll = log_lambda(cache);
    let zero = Ball::zero(LOG_PREC);
    let mut records = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut sum = Ball::zero(LOG_PREC);
    let mut averages = Vec::new();
    let mut unresolved = 0;
    for n in 0..n_max {
        let (Some(a), Some(b)) = (&logs[n], &logs[n + 1]) else {
            unresolved += 1;
            continue;
        };
        let lf = &(&ll + b) - a;
        let neg = (-&lf).max(&zero);
        sum = &sum + &neg;
        let v = neg.to_f64();
        if v > best {
            best = v;
            records.push(NegativeRecord { n, orbit_index: n + 1, value: v });
        }
        if checkpoints.contains(&(n as u64 + 1)) {
            averages.push((n as u64 + 1, sum.div(&Ball::from_i64(n as i64 + 1, LOG_PREC)).unwrap()));
        }
    }
    Ok(NegativePart { records, averages, unresolved })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Classification {
    CloseReturn(u32),
    Far,
}

#[derive(Clone, Debug)]
pub struct PointwiseEntry {
    pub n: usize,
    pub a_n: Ball,
    pub class: Classification,
}

#[derive(Clone, Debug)]
pub struct PointwiseSeries {
    pub j: usize,
    pub k: u32,
    /// First `l` with `c_{j+l} ∈ I_k`.
    pub entry: usize,
    pub returns: ReturnTimes,
    pub entries: Vec<PointwiseEntry>,
}

impl PointwiseSeries {
    fn extreme(&self, close: bool, max: bool) -> Option<&PointwiseEntry> {
        let it = self.entries.iter().filter(|e| matches!(e.class, Classification::CloseReturn(_)) == close);
        if max {
            it.max_by(|a, b| a.a_n.to_f64().total_cmp(&b.a_n.to_f64()))
        } else {
            it.min_by(|a, b| a.a_n.to_f64().total_cmp(&b.a_n.to_f64()))
        }
    }

    /// Smallest `a_n` over close-return times.
    pub fn min_close(&self) -> Option<&PointwiseEntry> {
        self.extreme(true, false)
    }

    /// Largest `a_n` over the remaining times.
    pub fn max_far(&self) -> Option<&PointwiseEntry> {
        self.extreme(false, true)
    }
}

/// `a_n = (1/n) log|(f^n)'(h(c_j))|` for `n = 1..=depth`, with the close
/// returns of `c_j` into `I_{k+i}` tagged.
pub fn pointwise_series(p: &ConjugacyParams, cache: &OrbitCache, s: &CutTimes, j: usize, k: u32, depth: usize) -> Result<PointwiseSeries> {
    cache.require(j + depth)?;
    let entry = entry_time(cache, s, j, k, depth)?.ok_or_else(|| Error::Unresolved(format!("c_{j} does not enter I_{k} within {depth} steps")))?;
    let start = j + entry;
    let mut levels = 0;
    while s.at((k + levels + 3) as i64) - s.at(k as i64 + 2) + start <= cache.i_max() && s.get((k + levels + 1) as i64) - s.get(k as i64) <= depth as u64 {
        levels += 1;
    }
    let mut returns = forward_return_times(cache, s, start, k, levels)?;
    returns.times.retain(|&t| entry + t as usize <= depth);
    let entries = par::map_range(1, depth + 1, |n| -> Result<PointwiseEntry> {
        let a_n = log_deriv_n(p, cache, j, n)?.div(&Ball::from_i64(n as i64, LOG_PREC)).unwrap();
        let class = match returns.times.iter().position(|&t| entry + t as usize == n) {
            Some(i) => Classification::CloseReturn(i as u32 + 1),
            None => Classification::Far,
        };
        Ok(PointwiseEntry { n, a_n, class })
    });
    Ok(PointwiseSeries { j, k, entry, returns, entries: entries.into_iter().collect::<Result<_>>()? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::postcritical::orbit_points;

    fn setup() -> (ConjugacyParams, OrbitCache) {
        let t = TentParams::from_decimal("1.729211931708721357526648740287270635519108559201477839877139244004915", 512).unwrap();
        let cache = orbit_points(&t, 60, 80).unwrap();
        (ConjugacyParams::new("2", "1.2", 512).unwrap(), cache)
    }

    #[test]
    fn empty_product_and_telescoping() {
        let (p, cache) = setup();
        assert!(log_deriv_n(&p, &cache, 3, 0).unwrap().is_exact_zero());
        for (j, n, m) in [(1, 5, 7), (2, 13, 8), (4, 20, 21)] {
            let whole = log_deriv_n(&p, &cache, j, n + m).unwrap();
            let parts = &log_deriv_n(&p, &cache, j, n).unwrap() + &log_deriv_n(&p, &cache, j + n, m).unwrap();
            assert!(whole.overlaps(&parts));
        }
    }
}
