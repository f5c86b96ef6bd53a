//! The power-law conjugacy `h(x) = sign(x)|x|^{a±}` and the map
//! `f = h ∘ T ∘ h⁻¹`, whose turning point becomes a singularity of `f'`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kneading::{tent_step, CutTimes, TentParams};
use crate::numerics::{Ball, SignCertificate};
use crate::postcritical::partition::{interval_endpoints, Label};
use crate::postcritical::{OrbitCache, Side};

/// Precision used for logarithms of orbit quantities. Orbit points carry
/// far more absolute accuracy, but their logs only need a few hundred bits.
pub const LOG_PREC: u32 = 256;

#[derive(Clone, Debug)]
pub struct ConjugacyParams {
    pub a_plus: Ball,
    pub a_minus: Ball,
    pub a_plus_text: String,
    pub a_minus_text: String,
}

impl ConjugacyParams {
    pub fn new(a_plus: &str, a_minus: &str, prec: u32) -> Result<ConjugacyParams> {
        let p = ConjugacyParams {
            a_plus: Ball::from_decimal(a_plus, prec)?,
            a_minus: Ball::from_decimal(a_minus, prec)?,
            a_plus_text: a_plus.trim().to_string(),
            a_minus_text: a_minus.trim().to_string(),
        };
        let one = Ball::from_i64(1, prec);
        for (name, a) in [("a_plus", &p.a_plus), ("a_minus", &p.a_minus)] {
            if (a - &one).sign() != SignCertificate::Positive {
                return Err(Error::Config(format!("{name} must exceed 1")));
            }
        }
        Ok(p)
    }

    pub fn a(&self, side: Side) -> &Ball {
        match side {
            Side::Right => &self.a_plus,
            Side::Left => &self.a_minus,
        }
    }

    /// Critical order of `h'`: `α = a - 1`.
    pub fn alpha(&self, side: Side) -> Ball {
        let a = self.a(side);
        a - &Ball::from_i64(1, a.prec())
    }

    /// Singularity order of `f'`: `ℓ = α / (α + 1) = 1 - 1/a`.
    pub fn ell(&self, side: Side) -> Ball {
        let a = self.a(side);
        &Ball::from_i64(1, a.prec()) - &a.recip().expect("a > 1")
    }

    /// `α★ = max(α⁺, α⁻)`.
    pub fn alpha_star(&self) -> Ball {
        self.alpha(Side::Right).max(&self.alpha(Side::Left))
    }

    /// Non-flatness constant `M = |log a|`, exact for power laws.
    pub fn nonflatness(&self, side: Side) -> Ball {
        self.a(side).ln().expect("a > 1").abs()
    }

    pub fn alpha_star_f64(&self) -> f64 {
        self.alpha_star().to_f64()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HFn {
    H,
    HInv,
    HPrime,
}

fn side_of(x: &Ball) -> Option<Side> {
    match x.sign() {
        SignCertificate::Positive => Some(Side::Right),
        SignCertificate::Negative => Some(Side::Left),
        SignCertificate::Unresolved => None,
    }
}

pub fn h_family_eval(p: &ConjugacyParams, which: HFn, x: &Ball) -> Result<Ball> {
    let Some(side) = side_of(x) else {
        if x.is_exact_zero() && which != HFn::HPrime {
            return Ok(Ball::zero(x.prec()));
        }
        return Err(Error::Unresolved(format!("{which:?} at a point not separated from 0")));
    };
    let a = p.a(side).with_prec(x.prec().max(p.a(side).prec()));
    let ax = x.abs();
    let signed = |v: Ball| if side == Side::Left { -v } else { v };
    Ok(match which {
        HFn::H => signed(ax.pow(&a).expect("|x| > 0")),
        HFn::HInv => signed(ax.pow(&a.recip().expect("a > 1")).expect("|x| > 0")),
        HFn::HPrime => {
            let alpha = &a - &Ball::from_i64(1, a.prec());
            &a * &ax.pow(&alpha).expect("|x| > 0")
        }
    })
}

/// `log|h'(x)| = log a + (a - 1) log|x|`, evaluated at [`LOG_PREC`] bits.
pub fn log_abs_h_prime(p: &ConjugacyParams, x: &Ball) -> Result<Ball> {
    let side = side_of(x).ok_or_else(|| Error::Unresolved("log|h'| at a point not separated from 0".into()))?;
    let x = x.with_prec(LOG_PREC);
    let a = p.a(side).with_prec(LOG_PREC);
    let alpha = &a - &Ball::from_i64(1, LOG_PREC);
    Ok(&a.ln().expect("a > 1") + &(&alpha * &x.abs().ln().expect("|x| > 0")))
}

/// `log|h(x)| = a log|x|`.
pub fn log_abs_h(p: &ConjugacyParams, x: &Ball) -> Result<Ball> {
    let side = side_of(x).ok_or_else(|| Error::Unresolved("log|h| at a point not separated from 0".into()))?;
    let x = x.with_prec(LOG_PREC);
    Ok(&p.a(side).with_prec(LOG_PREC) * &x.abs().ln().expect("|x| > 0"))
}

pub fn f_eval(p: &ConjugacyParams, params: &TentParams, x: &Ball) -> Result<Ball> {
    let y = h_family_eval(p, HFn::HInv, x)?;
    h_family_eval(p, HFn::H, &tent_step(&params.lambda.with_prec(x.prec()), &y))
}

/// `f'(x) = -sign(y) λ h'(T(y)) / h'(y)` with `y = h⁻¹(x)`.
pub fn f_prime(p: &ConjugacyParams, params: &TentParams, x: &Ball) -> Result<Ball> {
    let y = h_family_eval(p, HFn::HInv, x)?;
    let lambda = params.lambda.with_prec(x.prec());
    let num = h_family_eval(p, HFn::HPrime, &tent_step(&lambda, &y))?;
    let den = h_family_eval(p, HFn::HPrime, &y)?;
    let q = num.div(&den).ok_or_else(|| Error::Unresolved("h'(y) not separated from 0".into()))?;
    let d = &lambda * &q;
    Ok(if side_of(&y) == Some(Side::Right) { -d } else { d })
}

/// `log|f'(h(y))| = log λ + log|h'(T y)| - log|h'(y)|` for a tent-side point `y`.
pub fn log_abs_f_prime_at_preimage(p: &ConjugacyParams, params: &TentParams, y: &Ball) -> Result<Ball> {
    let lambda = params.lambda.with_prec(y.prec().max(LOG_PREC));
    let ty = tent_step(&lambda, y);
    let log_lambda = lambda.with_prec(LOG_PREC).ln().expect("λ > 0");
    Ok(&(&log_lambda + &log_abs_h_prime(p, &ty)?) - &log_abs_h_prime(p, y)?)
}

/// The two critical points of `f`, `h(±(λ-1)/λ)`.
pub fn critical_points(p: &ConjugacyParams, params: &TentParams) -> Result<(Ball, Ball)> {
    let l = &params.lambda;
    let t = (l - &Ball::from_i64(1, l.prec())).div(l).expect("λ > 0");
    Ok((h_family_eval(p, HFn::H, &-&t)?, h_family_eval(p, HFn::H, &t)?))
}

#[derive(Clone, Debug, Serialize)]
pub struct SingularityFit {
    pub side: &'static str,
    /// `(log|x - c̃|, log|f'(x)|)`
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub expected: f64,
}

/// Least-squares slope of `log|f'(x)|` against `log|x|` on one side of
/// the singularity, over `decades` decades starting at `10^{-3}` with 16
/// points per decade.
pub fn fit_singularity_order(p: &ConjugacyParams, params: &TentParams, side: Side, decades: u32) -> Result<SingularityFit> {
    const PREC: u32 = 256;
    let per_decade = 16;
    let count = decades * per_decade + 1;
    let xs: Vec<Result<(f64, f64)>> = crate::par::map_range(0, count as usize, |i| {
        let exponent = -3.0 - i as f64 / per_decade as f64;
        let d = Ball::from_f64(10f64.powf(exponent), PREC);
        let x = if side == Side::Left { -d.clone() } else { d.clone() };
        let fp = f_prime(p, params, &x)?;
        Ok((d.ln().unwrap().to_f64(), fp.abs().ln().ok_or_else(|| Error::Unresolved("f' = 0".into()))?.to_f64()))
    });
    let points = xs.into_iter().collect::<Result<Vec<_>>>()?;
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    Ok(SingularityFit {
        side: side.as_str(),
        slope: sxy / sxx,
        expected: -p.ell(side).to_f64(),
        points,
    })
}

/// Certified bounds `W1 <= |h'(T x)| <= W2` for `x ∈ I_k`, read off the
/// endpoints of `T(I_k) = [c_{S(k)+1}, c_1]`, which avoids the turning point.
pub fn estimate_h_prime_bounds(p: &ConjugacyParams, cache: &OrbitCache, s: &CutTimes, k: u32) -> Result<(Ball, Ball)> {
    let (a, b) = interval_endpoints(s, Label::I { k, n: 1 });
    let (a, b) = (cache.get(a)?, cache.get(b)?);
    let sa = a.sign();
    if sa == SignCertificate::Unresolved || sa != b.sign() {
        return Err(Error::Unresolved(format!("T(I_{k}) is not certified to avoid the turning point")));
    }
    let ha = h_family_eval(p, HFn::HPrime, &a.with_prec(LOG_PREC))?;
    let hb = h_family_eval(p, HFn::HPrime, &b.with_prec(LOG_PREC))?;
    Ok((ha.min(&hb), ha.max(&hb)))
}
