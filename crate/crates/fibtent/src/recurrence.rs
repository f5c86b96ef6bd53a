//! Closest returns of the singularity `c̃ = 0` of `f` to itself.
//!
//! `f^{S(k)}(c̃) = h(c_{S(k)})`, so the return distances are
//! `|D_k|^{a_side}` with the side fixed by `k mod 4`.

use serde::Serialize;

use crate::conjugacy::{log_abs_h, ConjugacyParams, LOG_PREC};
use crate::error::Result;
use crate::kneading::CutTimes;
use crate::lyapunov::log_lambda;
use crate::numerics::Ball;
use crate::par;
use crate::postcritical::{side_rule, OrbitCache, Side};

#[derive(Clone, Debug)]
pub struct RecurrenceRow {
    pub k: u32,
    pub side: Side,
    /// `|f^{S(k)}(c̃) - c̃|`
    pub dist: Ball,
    pub log_dist: Ball,
    /// `-log(dist) / S(k)`
    pub exponent: Ball,
}

pub fn closest_returns(p: &ConjugacyParams, cache: &OrbitCache, s: &CutTimes, k_max: u32) -> Result<Vec<RecurrenceRow>> {
    cache.require(s.at(k_max as i64))?;
    let rows = par::map_range(1, k_max as usize + 1, |k| -> Result<RecurrenceRow> {
        let k = k as u32;
        let c = cache.point(s.at(k as i64));
        let side = cache.side(s.at(k as i64)).unwrap_or_else(|| side_rule(k));
        let log_dist = log_abs_h(p, c)?;
        let exponent = (-&log_dist).div(&Ball::from_i64(s.get(k as i64) as i64, LOG_PREC)).unwrap();
        Ok(RecurrenceRow { k, side, dist: log_dist.exp(), log_dist, exponent })
    });
    rows.into_iter().collect()
}

/// `exponent_k · S(k) / (S(k+1) · a_side · log λ)`, which tends to one.
pub fn exponent_ratio(p: &ConjugacyParams, cache: &OrbitCache, s: &CutTimes, row: &RecurrenceRow) -> Ball {
    let num = &row.exponent * &Ball::from_i64(s.get(row.k as i64) as i64, LOG_PREC);
    let den = &(&Ball::from_i64(s.get(row.k as i64 + 1) as i64, LOG_PREC) * &p.a(row.side).with_prec(LOG_PREC)) * &log_lambda(cache);
    num.div(&den).unwrap()
}

/// `-log(value) / (S(k) log λ)`: the λ-power slope of a quantity at level `k`.
fn slope(log_value: &Ball, s_k: u64, ll: &Ball) -> Ball {
    (-log_value).div(&(&Ball::from_i64(s_k as i64, LOG_PREC) * ll)).unwrap()
}

#[derive(Clone, Debug)]
pub struct AnnulusRow {
    pub k: u32,
    pub side: Side,
    /// `|h(A_k^±)| = |D_k|^a - |D_{k+1}|^a`
    pub h_annulus: Ball,
    /// `-log|h(A_k^±)| / (S(k) log λ)`
    pub slope: Ball,
    pub alpha_lo: Ball,
    pub alpha_hi: Ball,
    pub rho: f64,
}

impl AnnulusRow {
    /// `α' <= slope <= α''` (certified).
    pub fn within(&self) -> bool {
        self.alpha_lo.lower() <= self.slope.lower() && self.slope.upper() <= self.alpha_hi.upper()
            && self.alpha_lo.upper() <= self.slope.upper()
            && self.slope.lower() <= self.alpha_hi.lower()
    }
}

#[derive(Clone, Debug)]
pub struct AnnulusReport {
    pub rows: Vec<AnnulusRow>,
    /// Smallest `Q` making the two-sided λ-power bounds hold on every row.
    pub q_fit: f64,
}

fn h_of_d(p: &ConjugacyParams, cache: &OrbitCache, s: &CutTimes, side: Side, k: u32) -> Ball {
    let d = cache.abs(s.at(k as i64)).with_prec(LOG_PREC);
    (&p.a(side).with_prec(LOG_PREC) * &d.ln().expect("|D_k| > 0")).exp()
}

/// `ρ_k = S(k+1) / S(k)`.
pub fn rho(s: &CutTimes, k: u32) -> f64 {
    s.get(k as i64 + 1) as f64 / s.get(k as i64) as f64
}

/// Two-sided λ-power bounds for the images of the annuli
/// `A_k^± = D_k^± \ D_{k+1}^±` with `α' = a` and `α'' = ρ_k² a - 1`.
pub fn annulus_checks(p: &ConjugacyParams, cache: &OrbitCache, s: &CutTimes, ks: std::ops::RangeInclusive<u32>) -> Result<AnnulusReport> {
    cache.require(s.at(*ks.end() as i64 + 1))?;
    let ll = log_lambda(cache);
    let mut rows = Vec::new();
    for k in ks {
        for side in [Side::Right, Side::Left] {
            let h_annulus = &h_of_d(p, cache, s, side, k) - &h_of_d(p, cache, s, side, k + 1);
            let log_h = h_annulus.ln().expect("annulus image has positive length");
            let a = p.a(side).with_prec(LOG_PREC);
            let r = rho(s, k);
            let alpha_hi = &(&a * &Ball::from_f64(r * r, LOG_PREC)) - &Ball::from_i64(1, LOG_PREC);
            rows.push(AnnulusRow { k, side, slope: slope(&log_h, s.get(k as i64), &ll), h_annulus, alpha_lo: a, alpha_hi, rho: r });
        }
    }
    let ll_f = ll.to_f64();
    let q_fit = rows
        .iter()
        .map(|r| {
            let sk = s.get(r.k as i64) as f64 * ll_f;
            let e = r.slope.to_f64();
            ((r.alpha_lo.to_f64() - e) * sk).max((e - r.alpha_hi.to_f64()) * sk)
        })
        .fold(0.0f64, f64::max)
        .exp();
    Ok(AnnulusReport { rows, q_fit })
}

/// Both sides of `Σ_{m=0}^{n} |h(A_{k+m})| = |h(D_k)| - |h(D_{k+n+1})|`.
pub fn telescoping(p: &ConjugacyParams, cache: &OrbitCache, s: &CutTimes, side: Side, k: u32, n: u32) -> Result<(Ball, Ball)> {
    cache.require(s.at((k + n + 1) as i64))?;
    let mut sum = Ball::zero(LOG_PREC);
    for m in 0..=n {
        sum = &sum + &(&h_of_d(p, cache, s, side, k + m) - &h_of_d(p, cache, s, side, k + m + 1));
    }
    Ok((sum, &h_of_d(p, cache, s, side, k) - &h_of_d(p, cache, s, side, k + n + 1)))
}

#[derive(Clone, Debug)]
pub struct SandwichRow {
    pub k: u32,
    pub slope: Ball,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
}

impl SandwichRow {
    pub fn within(&self) -> bool {
        self.alpha_lo <= self.slope.lower() && self.slope.upper() <= self.alpha_hi
    }
}

/// λ-power slopes of the return distances against `α' = min(a⁺, a⁻)` and
/// `α'' = max_side ρ_k² a_side - 1`; also returns the fitted `Θ`.
pub fn recurrence_sandwich(p: &ConjugacyParams, cache: &OrbitCache, s: &CutTimes, rows: &[RecurrenceRow]) -> (Vec<SandwichRow>, f64) {
    let ll = log_lambda(cache);
    let (ap, am) = (p.a_plus.to_f64(), p.a_minus.to_f64());
    let out: Vec<SandwichRow> = rows
        .iter()
        .map(|r| {
            let rr = rho(s, r.k).powi(2);
            SandwichRow { k: r.k, slope: slope(&r.log_dist, s.get(r.k as i64), &ll), alpha_lo: ap.min(am), alpha_hi: (rr * ap - 1.0).max(rr * am - 1.0) }
        })
        .collect();
    let ll_f = ll.to_f64();
    let theta = out
        .iter()
        .map(|r| {
            let sk = s.get(r.k as i64) as f64 * ll_f;
            let e = r.slope.to_f64();
            ((r.alpha_lo - e) * sk).max((e - r.alpha_hi) * sk)
        })
        .fold(0.0f64, f64::max)
        .exp();
    (out, theta)
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpRecurrence {
    pub value: f64,
    pub value_ball: String,
    pub argmax: usize,
    pub window: usize,
    /// `Some(k)` when the maximum sits at the cut time `S(k)`.
    pub cut_time_level: Option<u32>,
}

/// `max_{1 <= n <= n_max} -log|f^n(c̃) - c̃| / n`.
pub fn exponential_recurrence_estimate(p: &ConjugacyParams, cache: &OrbitCache, s: &CutTimes, n_max: usize) -> Result<ExpRecurrence> {
    cache.require(n_max)?;
    let vals = par::map_range(1, n_max + 1, |n| -> Result<Ball> {
        Ok((-&log_abs_h(p, cache.point(n))?).div(&Ball::from_i64(n as i64, LOG_PREC)).unwrap())
    });
    let vals = vals.into_iter().collect::<Result<Vec<_>>>()?;
    let (i, best) = vals.iter().enumerate().max_by(|a, b| a.1.to_f64().total_cmp(&b.1.to_f64())).expect("n_max >= 1");
    let argmax = i + 1;
    let cut_time_level = s.cut_level(argmax as u64);
    Ok(ExpRecurrence { value: best.to_f64(), value_ball: best.to_string(), argmax, window: n_max, cut_time_level })
}
