//! Midpoint-radius arithmetic on top of MPFR.
//!
//! A [`Ball`] stores a center at some working precision and a short radius
//! rounded upward, so the represented real always lies in
//! `[center - radius, center + radius]`. Every operation adds its own rounding
//! error to the radius; non-linear functions are evaluated at both endpoints
//! with directed rounding and re-centered.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rug::float::Round;
use rug::{Float, Rational};

use crate::error::{Error, Result};

/// Precision of the radius. Radii only need a few significant bits.
const RAD_PREC: u32 = 32;

/// Working precision never drops below this.
pub const MIN_PRECISION: u32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SignCertificate {
    Negative,
    Positive,
    Unresolved,
}

#[derive(Clone, Debug)]
pub struct Ball {
    mid: Float,
    rad: Float,
}

fn rad_zero() -> Float {
    Float::new(RAD_PREC)
}

fn up<T>(v: T) -> Float
where
    Float: rug::ops::AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(RAD_PREC, v, Round::Up).0
}

fn down<T>(v: T) -> Float
where
    Float: rug::ops::AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(RAD_PREC, v, Round::Down).0
}

/// One unit in the last place of `x`; an upper bound for the error of a
/// round-to-nearest result.
fn ulp(x: &Float) -> Float {
    match x.get_exp() {
        Some(e) => Float::with_val(RAD_PREC, Float::u_exp(1, e - x.prec() as i32)),
        None => {
            let mut t = rad_zero();
            t.next_up();
            t
        }
    }
}

fn rounding_error(x: &Float, ord: Ordering) -> Float {
    if ord == Ordering::Equal {
        rad_zero()
    } else {
        ulp(x)
    }
}

fn sum_up(terms: &[&Float]) -> Float {
    let mut acc = rad_zero();
    for t in terms {
        acc = up(&acc + *t);
    }
    acc
}

impl Ball {
    /// An exact ball around `mid`.
    pub fn exact(mid: Float) -> Ball {
        Ball { mid, rad: rad_zero() }
    }

    pub fn zero(prec: u32) -> Ball {
        Ball::exact(Float::new(prec))
    }

    pub fn from_i64(v: i64, prec: u32) -> Ball {
        let (mid, ord) = Float::with_val_round(prec, v, Round::Nearest);
        let rad = rounding_error(&mid, ord);
        Ball { mid, rad }
    }

    /// Exact for any finite `v` when `prec >= 53`.
    pub fn from_f64(v: f64, prec: u32) -> Ball {
        let (mid, ord) = Float::with_val_round(prec, v, Round::Nearest);
        let rad = rounding_error(&mid, ord);
        Ball { mid, rad }
    }

    pub fn from_rational(q: &Rational, prec: u32) -> Ball {
        let (mid, ord) = Float::with_val_round(prec, q, Round::Nearest);
        let rad = rounding_error(&mid, ord);
        Ball { mid, rad }
    }

    /// Parses a decimal literal such as `"1.2"`; the ball encloses the exact
    /// decimal value.
    pub fn from_decimal(s: &str, prec: u32) -> Result<Ball> {
        let parse = |r| {
            Float::parse(s.trim())
                .map(|p| Float::with_val_round(prec, p, r).0)
                .map_err(|e| Error::Config(format!("not a decimal number `{s}`: {e}")))
        };
        let lo = parse(Round::Down)?;
        let hi = parse(Round::Up)?;
        Ok(Ball::from_interval(&lo, &hi, prec))
    }

    /// Smallest ball (up to rounding) containing `[lo, hi]`.
    pub fn from_interval(lo: &Float, hi: &Float, prec: u32) -> Ball {
        debug_assert!(lo <= hi, "from_interval with lo > hi");
        let mid = Float::with_val(prec, lo + hi) / 2u32;
        let r1 = up(hi - &mid);
        let r2 = up(&mid - lo);
        let rad = if r1 > r2 { r1 } else { r2 };
        Ball { mid, rad }
    }

    pub fn mid(&self) -> &Float {
        &self.mid
    }

    pub fn rad(&self) -> &Float {
        &self.rad
    }

    pub fn prec(&self) -> u32 {
        self.mid.prec()
    }

    /// Lower endpoint, rounded down at the center's precision.
    pub fn lower(&self) -> Float {
        Float::with_val_round(self.prec(), &self.mid - &self.rad, Round::Down).0
    }

    /// Upper endpoint, rounded up at the center's precision.
    pub fn upper(&self) -> Float {
        Float::with_val_round(self.prec(), &self.mid + &self.rad, Round::Up).0
    }

    pub fn sign(&self) -> SignCertificate {
        certified_sign(self)
    }

    pub fn is_exact_zero(&self) -> bool {
        self.mid.is_zero() && self.rad.is_zero()
    }

    pub fn is_exact(&self) -> bool {
        self.rad.is_zero()
    }

    /// Rounds the center to `prec` bits, widening the radius accordingly.
    pub fn with_prec(&self, prec: u32) -> Ball {
        if prec >= self.prec() {
            let mut mid = self.mid.clone();
            mid.set_prec(prec);
            return Ball { mid, rad: self.rad.clone() };
        }
        let (mid, ord) = Float::with_val_round(prec, &self.mid, Round::Nearest);
        let err = rounding_error(&mid, ord);
        let rad = up(&self.rad + &err);
        Ball { mid, rad }
    }

    pub fn to_f64(&self) -> f64 {
        self.mid.to_f64()
    }

    /// `log2` of the radius, or `-inf` for exact balls.
    pub fn rad_log2(&self) -> f64 {
        match self.rad.get_exp() {
            Some(e) => e as f64 + self.rad.clone().to_f64_exp().0.log2(),
            None => f64::NEG_INFINITY,
        }
    }

    /// Approximate `log2 |mid|`, valid far outside the f64 exponent range.
    pub fn mid_log2(&self) -> f64 {
        match self.mid.get_exp() {
            Some(e) => e as f64 + self.mid.to_f64_exp().0.abs().log2(),
            None => f64::NEG_INFINITY,
        }
    }

    /// Exact containment test for a rational; intended for oracles.
    pub fn contains_rational(&self, q: &Rational) -> bool {
        let m = self.mid.to_rational().expect("finite center");
        let r = self.rad.to_rational().expect("finite radius");
        let lo = Rational::from(&m - &r);
        let hi = m + r;
        &lo <= q && q <= &hi
    }

    /// Certified disjointness: no real lies in both balls.
    pub fn is_disjoint(&self, other: &Ball) -> bool {
        let gap = down(Float::with_val(self.prec().max(other.prec()) + 1, &self.mid - &other.mid).abs());
        let reach = up(&self.rad + &other.rad);
        gap > reach
    }

    pub fn overlaps(&self, other: &Ball) -> bool {
        !self.is_disjoint(other)
    }

    /// `other` lies inside `self`.
    pub fn contains(&self, other: &Ball) -> bool {
        self.lower() <= other.lower() && other.upper() <= self.upper()
    }

    /// Certified `self < other`; `None` when the balls cannot be ordered.
    pub fn lt(&self, other: &Ball) -> Option<bool> {
        match (other - self).sign() {
            SignCertificate::Positive => Some(true),
            SignCertificate::Negative => Some(false),
            SignCertificate::Unresolved => None,
        }
    }

    /// Certified comparison with `Equal` meaning "could not separate".
    pub fn certified_cmp(&self, other: &Ball) -> Option<Ordering> {
        match (self - other).sign() {
            SignCertificate::Positive => Some(Ordering::Greater),
            SignCertificate::Negative => Some(Ordering::Less),
            SignCertificate::Unresolved => None,
        }
    }

    pub fn abs(&self) -> Ball {
        match self.sign() {
            SignCertificate::Positive => self.clone(),
            SignCertificate::Negative => -self,
            SignCertificate::Unresolved => {
                let far = up(self.mid.abs_ref());
                let far = Float::with_val_round(self.prec(), &far + &self.rad, Round::Up).0;
                Ball::from_interval(&Float::new(self.prec()), &far, self.prec())
            }
        }
    }

    pub fn div(&self, o: &Ball) -> Option<Ball> {
        if o.sign() == SignCertificate::Unresolved {
            return None;
        }
        let p = self.prec().max(o.prec());
        let (mid, _) = Float::with_val_round(p, &self.mid / &o.mid, Round::Nearest);
        let den = down(Float::with_val_round(RAD_PREC, o.mid.abs_ref(), Round::Down).0 - &o.rad);
        let q_err = up(up(o.mid.abs_ref()) * ulp(&mid));
        let num = sum_up(&[&q_err, &self.rad, &up(up(mid.abs_ref()) * &o.rad)]);
        let rad = up(&num / &den);
        Some(Ball { mid, rad })
    }

    /// Reciprocal, `None` if the ball contains zero.
    pub fn recip(&self) -> Option<Ball> {
        Ball::from_i64(1, self.prec()).div(self)
    }

    fn monotone(&self, increasing: bool, f: impl Fn(&mut Float, Round) -> Ordering) -> Ball {
        let p = self.prec();
        let mut lo = self.lower();
        let mut hi = self.upper();
        if increasing {
            f(&mut lo, Round::Down);
            f(&mut hi, Round::Up);
            Ball::from_interval(&lo, &hi, p)
        } else {
            f(&mut lo, Round::Up);
            f(&mut hi, Round::Down);
            Ball::from_interval(&hi, &lo, p)
        }
    }

    /// Natural logarithm; `None` unless the ball is certified positive.
    pub fn ln(&self) -> Option<Ball> {
        (self.sign() == SignCertificate::Positive).then(|| self.monotone(true, |x, r| x.ln_round(r)))
    }

    pub fn exp(&self) -> Ball {
        self.monotone(true, |x, r| x.exp_round(r))
    }

    pub fn sqrt(&self) -> Option<Ball> {
        (self.sign() == SignCertificate::Positive).then(|| self.monotone(true, |x, r| x.sqrt_round(r)))
    }

    /// `self^e` for a certified positive base.
    pub fn pow(&self, e: &Ball) -> Option<Ball> {
        Some((&self.ln()? * e).exp())
    }

    pub fn powi(&self, mut n: u64) -> Ball {
        let mut base = self.clone();
        let mut acc = Ball::from_i64(1, self.prec());
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Enclosure of `min(x, y)` over both balls.
    pub fn min(&self, o: &Ball) -> Ball {
        let p = self.prec().max(o.prec());
        let lo = self.lower().min(&o.lower()).clone();
        let hi = self.upper().min(&o.upper()).clone();
        Ball::from_interval(&lo, &hi, p)
    }

    pub fn max(&self, o: &Ball) -> Ball {
        let p = self.prec().max(o.prec());
        let lo = self.lower().max(&o.lower()).clone();
        let hi = self.upper().max(&o.upper()).clone();
        Ball::from_interval(&lo, &hi, p)
    }

    /// Widens the radius by `extra` (rounded up).
    pub fn inflate(&self, extra: &Float) -> Ball {
        Ball { mid: self.mid.clone(), rad: up(&self.rad + extra) }
    }

    /// `mid` to `digits` significant decimal digits, without the radius.
    pub fn mid_digits(&self, digits: usize) -> String {
        self.mid.to_string_radix_round(10, Some(digits.max(2)), Round::Nearest)
    }

    /// Decimal center with as many digits as the radius justifies, followed
    /// by the radius: `2.98194e0±3.1e-9`.
    pub fn to_decimal(&self) -> String {
        let digits = if self.rad.is_zero() {
            ((self.prec() as f64) * std::f64::consts::LOG10_2).min(40.0) as usize
        } else {
            let gap = self.mid_log2() - self.rad_log2();
            ((gap * std::f64::consts::LOG10_2).ceil() as i64 + 2).clamp(2, 40) as usize
        };
        let mid = self.mid.to_string_radix_round(10, Some(digits.max(2)), Round::Nearest);
        if self.rad.is_zero() {
            return mid;
        }
        format!("{mid}±{}", self.rad.to_string_radix_round(10, Some(2), Round::Up))
    }

    /// Golden ratio `(1 + √5) / 2`.
    pub fn phi(prec: u32) -> Ball {
        let s5 = Ball::from_i64(5, prec).sqrt().expect("5 > 0");
        let sum = &s5 + &Ball::from_i64(1, prec);
        Ball { mid: Float::with_val(prec, &sum.mid / 2u32), rad: up(&sum.rad / 2u32) }
    }
}

impl fmt::Display for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal())
    }
}

pub fn certified_sign(x: &Ball) -> SignCertificate {
    if x.mid.is_zero() {
        return SignCertificate::Unresolved;
    }
    match x.mid.cmp_abs(&x.rad) {
        Some(Ordering::Greater) if x.mid.is_sign_positive() => SignCertificate::Positive,
        Some(Ordering::Greater) => SignCertificate::Negative,
        _ => SignCertificate::Unresolved,
    }
}

fn add_sub(a: &Ball, b: &Ball, negate: bool) -> Ball {
    let p = a.prec().max(b.prec());
    let (mid, ord) = if negate {
        Float::with_val_round(p, &a.mid - &b.mid, Round::Nearest)
    } else {
        Float::with_val_round(p, &a.mid + &b.mid, Round::Nearest)
    };
    let err = rounding_error(&mid, ord);
    let rad = sum_up(&[&a.rad, &b.rad, &err]);
    Ball { mid, rad }
}

fn mul(a: &Ball, b: &Ball) -> Ball {
    let p = a.prec().max(b.prec());
    let (mid, ord) = Float::with_val_round(p, &a.mid * &b.mid, Round::Nearest);
    let err = rounding_error(&mid, ord);
    let t1 = up(up(a.mid.abs_ref()) * &b.rad);
    let t2 = up(up(b.mid.abs_ref()) * &a.rad);
    let t3 = up(&a.rad * &b.rad);
    let rad = sum_up(&[&t1, &t2, &t3, &err]);
    Ball { mid, rad }
}

impl Add for &Ball {
    type Output = Ball;
    fn add(self, o: &Ball) -> Ball {
        add_sub(self, o, false)
    }
}

impl Sub for &Ball {
    type Output = Ball;
    fn sub(self, o: &Ball) -> Ball {
        add_sub(self, o, true)
    }
}

impl Mul for &Ball {
    type Output = Ball;
    fn mul(self, o: &Ball) -> Ball {
        mul(self, o)
    }
}

impl Neg for &Ball {
    type Output = Ball;
    fn neg(self) -> Ball {
        Ball { mid: Float::with_val(self.prec(), -&self.mid), rad: self.rad.clone() }
    }
}

impl Neg for Ball {
    type Output = Ball;
    fn neg(self) -> Ball {
        -&self
    }
}

/// Working precision that keeps an `n_steps` orbit with expansion `slope`
/// accurate to `target_bits`, plus 32 guard bits.
pub fn precision_budget(n_steps: u64, slope: &Ball, target_bits: u32) -> u32 {
    let s = slope.upper().to_f64_round(Round::Up);
    let growth = (n_steps as f64 * s.log2()).ceil().max(0.0);
    growth as u32 + target_bits + 32
}

/// A computation gave up because a sign could not be certified.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stall {
    pub index: Option<usize>,
}

/// Retry-at-double-precision policy with a hard ceiling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrecisionPolicy {
    pub start_bits: u32,
    pub max_bits: u32,
}

impl PrecisionPolicy {
    pub fn new(start_bits: u32, max_bits: u32) -> PrecisionPolicy {
        PrecisionPolicy { start_bits, max_bits }
    }

    /// Runs `attempt` at increasing precision until it stops stalling.
    pub fn run<T>(&self, mut attempt: impl FnMut(u32) -> Result<T, Stall>) -> Result<T> {
        let mut bits = self.start_bits.clamp(MIN_PRECISION, self.max_bits.max(MIN_PRECISION));
        loop {
            match attempt(bits) {
                Ok(v) => return Ok(v),
                Err(stall) if bits >= self.max_bits => {
                    return Err(Error::PrecisionCeiling { bits, index: stall.index })
                }
                Err(_) => bits = bits.saturating_mul(2).min(self.max_bits),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(x: f64, r: f64) -> Ball {
        Ball::from_f64(x, 128).inflate(&Float::with_val(RAD_PREC, r))
    }

    #[test]
    fn sign_examples() {
        assert_eq!(b(-1.0, 0.5).sign(), SignCertificate::Negative);
        assert_eq!(b(0.0, 0.1).sign(), SignCertificate::Unresolved);
        assert_eq!(b(2f64.powi(-60), 2f64.powi(-80)).sign(), SignCertificate::Positive);
        assert_eq!(Ball::zero(64).sign(), SignCertificate::Unresolved);
        assert!(Ball::zero(64).is_exact_zero());
    }

    #[test]
    fn budget_examples() {
        let s = Ball::from_decimal("1.73", 128).unwrap();
        assert_eq!(precision_budget(0, &s, 53), 85);
        // 1000 * log2(1.73) = 790.77...
        let expected = (1000.0 * 1.73f64.log2()).ceil() as u32 + 96;
        assert_eq!(expected, 887);
        assert_eq!(precision_budget(1000, &s, 64), 887);
        assert_eq!(precision_budget(6765, &Ball::from_i64(2, 64), 64), 6861);
    }

    #[test]
    fn decimal_parse_encloses_value() {
        let x = Ball::from_decimal("1.2", 80).unwrap();
        assert!(x.contains_rational(&Rational::from((6, 5))));
        assert!(!x.is_exact());
        let y = Ball::from_decimal("0.5", 80).unwrap();
        assert!(y.is_exact());
    }

    #[test]
    fn functions_enclose_known_values() {
        let two = Ball::from_i64(2, 200);
        let ln2 = two.ln().unwrap();
        let reference = Float::with_val(400, rug::float::Constant::Log2);
        assert!(ln2.contains(&Ball::exact(Float::with_val(200, &reference))) || ln2.overlaps(&Ball::exact(reference)));
        let e = Ball::from_i64(1, 200).exp();
        assert!((e.to_f64() - std::f64::consts::E).abs() < 1e-15);
        let phi = Ball::phi(200);
        let lhs = &phi * &phi;
        let rhs = &phi + &Ball::from_i64(1, 200);
        assert!(lhs.overlaps(&rhs));
        assert!(Ball::zero(64).ln().is_none());
        assert!(b(0.0, 0.1).recip().is_none());
    }

    #[test]
    fn abs_of_straddling_ball() {
        let x = b(-0.1, 0.3);
        let a = x.abs();
        assert!(a.lower() <= 0);
        assert!(a.upper() >= 0.4);
    }

    #[test]
    fn escalation_hits_ceiling_with_index() {
        let policy = PrecisionPolicy::new(64, 256);
        let mut seen = Vec::new();
        let r: Result<()> = policy.run(|bits| {
            seen.push(bits);
            Err(Stall { index: Some(7) })
        });
        assert_eq!(seen, vec![64, 128, 256]);
        match r {
            Err(Error::PrecisionCeiling { bits: 256, index: Some(7) }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let ok = policy.run(|bits| if bits >= 128 { Ok(bits) } else { Err(Stall { index: None }) });
        assert_eq!(ok.unwrap(), 128);
    }

    #[test]
    fn decimal_rendering() {
        let x = Ball::from_decimal("2.5", 64).unwrap();
        assert!(x.to_decimal().starts_with("2.5"));
        let y = b(1.0, 1e-6);
        let s = y.to_decimal();
        assert!(s.contains('±'), "{s}");
    }

    fn rat() -> impl Strategy<Value = Rational> {
        (-10_000i64..10_000, 1i64..1000).prop_map(|(n, d)| Rational::from((n, d)))
    }

    proptest! {
        #[test]
        fn arithmetic_contains_exact_result(x in rat(), y in rat(), prec in 53u32..160) {
            let bx = Ball::from_rational(&x, prec);
            let by = Ball::from_rational(&y, prec);
            prop_assert!((&bx + &by).contains_rational(&Rational::from(&x + &y)));
            prop_assert!((&bx - &by).contains_rational(&Rational::from(&x - &y)));
            prop_assert!((&bx * &by).contains_rational(&Rational::from(&x * &y)));
            prop_assert!(bx.abs().contains_rational(&Rational::from(x.abs_ref())));
            if y != 0 {
                prop_assert!(bx.div(&by).unwrap().contains_rational(&Rational::from(&x / &y)));
            }
        }

        #[test]
        fn refinement_never_disjoint(x in 1i64..10_000, y in 1i64..10_000, lo in 60u32..120) {
            let q = Rational::from((x, y));
            let run = |p: u32| {
                let base = Ball::from_rational(&q, p).exp();
                base.pow(&Ball::from_rational(&q, p)).unwrap().ln().unwrap()
            };
            let coarse = run(lo);
            let fine = run(4 * lo);
                        prop_assert!(coarse.overlaps(&fine));
            prop_assert!(fine.rad_log2() <= coarse.rad_log2());
        }

        #[test]
        fn powi_matches_repeated_product(x in rat(), n in 0u64..12) {
            let bx = Ball::from_rational(&x, 100);
            let mut q = Rational::from(1);
            for _ in 0..n { q *= &x; }
            prop_assert!(bx.powi(n).contains_rational(&q));
        }
    }
}
