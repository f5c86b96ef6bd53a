//! Kneading maps, cut times, itineraries and the parameter solver.

use std::fmt;

use rug::Float;

use crate::error::{Error, Result};
use crate::numerics::{Ball, PrecisionPolicy, SignCertificate, Stall};

/// A kneading map `Q`, required to satisfy `Q(k) < k`.
pub struct KneadingMap {
    q: Box<dyn Fn(u32) -> u32 + Send + Sync>,
}

impl KneadingMap {
    pub fn from_fn(q: impl Fn(u32) -> u32 + Send + Sync + 'static) -> KneadingMap {
        KneadingMap { q: Box::new(q) }
    }

    /// `Q(k) = max(0, k - 2)`.
    pub fn fibonacci() -> KneadingMap {
        KneadingMap::from_fn(|k| k.saturating_sub(2))
    }

    pub fn q(&self, k: u32) -> u32 {
        (self.q)(k)
    }
}

impl fmt::Debug for KneadingMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head: Vec<u32> = (1..=8).map(|k| self.q(k)).collect();
        write!(f, "KneadingMap {head:?}..")
    }
}

/// The cut times `S(0..=k_max)`, with `S(-2) = 0` and `S(-1) = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutTimes {
    s: Vec<u64>,
}

impl CutTimes {
    /// `S(k)` for `k >= -2`.
    pub fn get(&self, k: i64) -> u64 {
        match k {
            -2 => 0,
            -1 => 1,
            k if k >= 0 => self.s[k as usize],
            _ => panic!("cut time index {k} below -2"),
        }
    }

    /// `S(k)` as an orbit index.
    pub fn at(&self, k: i64) -> usize {
        self.get(k) as usize
    }

    pub fn k_max(&self) -> u32 {
        self.s.len() as u32 - 1
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.s
    }

    /// `Some(k)` when `n = S(k)`.
    pub fn cut_level(&self, n: u64) -> Option<u32> {
        self.s.binary_search(&n).ok().map(|k| k as u32)
    }
}

pub fn cut_times(qmap: &KneadingMap, k_max: u32) -> Result<CutTimes> {
    let mut s = vec![1u64];
    for k in 1..=k_max {
        let q = qmap.q(k);
        if q >= k {
            return Err(Error::InvalidKneadingMap { k, q });
        }
        let next = s[k as usize - 1].checked_add(s[q as usize]).ok_or(Error::CutTimeOverflow(k))?;
        s.push(next);
    }
    Ok(CutTimes { s })
}

/// Fibonacci cut times `1, 2, 3, 5, 8, ...` up to `S(k_max)`.
pub fn fibonacci_cut_times(k_max: u32) -> CutTimes {
    cut_times(&KneadingMap::fibonacci(), k_max).expect("Fibonacci cut times fit up to k = 90")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symbol {
    Zero,
    One,
    C,
}

impl Symbol {
    pub fn bit(self) -> Option<u8> {
        match self {
            Symbol::Zero => Some(0),
            Symbol::One => Some(1),
            Symbol::C => None,
        }
    }

    fn from_bit(b: u8) -> Symbol {
        if b == 0 {
            Symbol::Zero
        } else {
            Symbol::One
        }
    }
}

/// A finite itinerary; position 0 holds the first symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Itinerary {
    symbols: Vec<Symbol>,
    certified: Vec<bool>,
}

impl Itinerary {
    pub fn from_bits(bits: &[u8]) -> Itinerary {
        Itinerary { symbols: bits.iter().map(|&b| Symbol::from_bit(b)).collect(), certified: vec![true; bits.len()] }
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn certified(&self) -> &[bool] {
        &self.certified
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn prefix(&self, n: usize) -> Itinerary {
        Itinerary { symbols: self.symbols[..n].to_vec(), certified: self.certified[..n].to_vec() }
    }

    /// The symbols as `0/1`, `None` if a `C` occurs.
    pub fn bits(&self) -> Option<Vec<u8>> {
        self.symbols.iter().map(|s| s.bit()).collect()
    }
}

impl fmt::Display for Itinerary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.symbols {
            f.write_str(match s {
                Symbol::Zero => "0",
                Symbol::One => "1",
                Symbol::C => "C",
            })?;
        }
        Ok(())
    }
}

/// Kneading sequence `e_1 e_2 ...` generated by `qmap`, truncated to `length`.
pub fn kneading_from_map(qmap: &KneadingMap, length: usize) -> Result<Itinerary> {
    Ok(Itinerary::from_bits(&kneading_bits(qmap, length)?))
}

fn kneading_bits(qmap: &KneadingMap, length: usize) -> Result<Vec<u8>> {
    // e[0] is unused so that e[i] = e_i.
    let mut e: Vec<u8> = vec![0, 1];
    let mut s: Vec<usize> = vec![1];
    let mut k = 1u32;
    while e.len() - 1 < length {
        let q = qmap.q(k);
        if q >= k {
            return Err(Error::InvalidKneadingMap { k, q });
        }
        let sq = s[q as usize];
        for i in 1..sq {
            e.push(e[i]);
        }
        e.push(1 - e[sq]);
        s.push(s[k as usize - 1] + sq);
        k += 1;
    }
    e.truncate(length + 1);
    e.remove(0);
    Ok(e)
}

/// Recovers cut times and `Q` from a kneading sequence by locating the
/// first disagreement with the shift by each previous cut time.
pub fn kneading_map_from_sequence(it: &Itinerary) -> Option<(Vec<u64>, Vec<u32>)> {
    let e = it.bits()?;
    let sym = |n: usize| e[n - 1];
    let mut s = vec![1usize];
    let mut q = Vec::new();
    loop {
        let last = *s.last().unwrap();
        let next = (last + 1..=e.len()).find(|&n| sym(n) != sym(n - last))?;
        let gap = next - last;
        let qk = s.iter().position(|&v| v == gap)?;
        s.push(next);
        q.push(qk as u32);
        if next == e.len() {
            break;
        }
    }
    Some((s.into_iter().map(|v| v as u64).collect(), q))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KneadingOrder {
    Less,
    EqualOnPrefix,
    Greater,
}

/// Parity-lexicographic comparison. A `C` on either side ends the
/// comparison as [`KneadingOrder::EqualOnPrefix`].
pub fn kneading_compare(a: &Itinerary, b: &Itinerary) -> KneadingOrder {
    compare_symbols(a.symbols.iter().copied(), b.symbols.iter().copied()).0
}

fn compare_symbols(a: impl Iterator<Item = Symbol>, b: impl Iterator<Item = Symbol>) -> (KneadingOrder, usize) {
    let mut odd = false;
    for (j, (x, y)) in a.zip(b).enumerate() {
        let (Some(x), Some(y)) = (x.bit(), y.bit()) else {
            return (KneadingOrder::EqualOnPrefix, j);
        };
        if x != y {
            let less = (x < y) != odd;
            return (if less { KneadingOrder::Less } else { KneadingOrder::Greater }, j);
        }
        odd ^= x == 1;
    }
    (KneadingOrder::EqualOnPrefix, usize::MAX)
}

#[derive(Clone, Debug)]
pub struct TentParams {
    pub lambda: Ball,
}

impl TentParams {
    pub fn new(lambda: Ball) -> TentParams {
        TentParams { lambda }
    }

    pub fn from_decimal(s: &str, prec: u32) -> Result<TentParams> {
        Ok(TentParams::new(Ball::from_decimal(s, prec)?))
    }
}

/// One step of `T(x) = λ(1 - |x|) - 1`.
pub fn tent_step(lambda: &Ball, x: &Ball) -> Ball {
    let one = Ball::from_i64(1, x.prec());
    &(lambda * &(&one - &x.abs())) - &one
}

fn classify(x: &Ball) -> Option<Symbol> {
    match x.sign() {
        SignCertificate::Positive => Some(Symbol::One),
        SignCertificate::Negative => Some(Symbol::Zero),
        SignCertificate::Unresolved if x.is_exact_zero() => Some(Symbol::C),
        SignCertificate::Unresolved => None,
    }
}

/// Symbols of `T(x), ..., T^n(x)`, escalating precision as needed.
pub fn itinerary(params: &TentParams, x: &Ball, n: usize, max_precision: u32) -> Result<Itinerary> {
    let start = crate::numerics::precision_budget(n as u64, &params.lambda, 32).min(max_precision);
    PrecisionPolicy::new(start, max_precision).run(|bits| {
        let lambda = params.lambda.with_prec(bits);
        let mut y = x.with_prec(bits);
        let mut symbols = Vec::with_capacity(n);
        for i in 0..n {
            y = tent_step(&lambda, &y);
            symbols.push(classify(&y).ok_or(Stall { index: Some(i + 1) })?);
        }
        Ok(Itinerary { certified: vec![true; n], symbols })
    })
}

/// Compares the kneading sequence of the exact slope `lambda` against
/// `target`, stopping at the first disagreement. Returns the order and the
/// 1-based position where it was decided.
fn compare_with_target(lambda: &Float, target: &[u8], start_bits: u32, max_bits: u32) -> Result<(KneadingOrder, usize)> {
    PrecisionPolicy::new(start_bits, max_bits).run(|bits| {
        let lam = Ball::exact(Float::with_val(bits.max(lambda.prec()), lambda));
        let mut y = Ball::zero(bits);
        let mut odd = false;
        for (i, &t) in target.iter().enumerate() {
            y = tent_step(&lam, &y);
            let s = match classify(&y).ok_or(Stall { index: Some(i + 1) })? {
                Symbol::C => return Ok((KneadingOrder::EqualOnPrefix, i + 1)),
                s => s.bit().unwrap(),
            };
            if s != t {
                let less = (s < t) != odd;
                return Ok((if less { KneadingOrder::Less } else { KneadingOrder::Greater }, i + 1));
            }
            odd ^= s == 1;
        }
        Ok((KneadingOrder::EqualOnPrefix, target.len()))
    })
}

/// `(c_n, dc_n/dλ)` in plain floating point, for proposing Newton probes.
fn orbit_and_derivative(lambda: &Float, n: u64) -> (Float, Float) {
    let p = lambda.prec();
    let mut x = Float::new(p);
    let mut d = Float::new(p);
    for _ in 0..n {
        let one_minus = Float::with_val(p, 1 - Float::with_val(p, x.abs_ref()));
        let mut slope = Float::with_val(p, lambda * &d);
        if x.is_sign_positive() {
            slope = -slope;
        }
        d = Float::with_val(p, &one_minus + &slope);
        x = Float::with_val(p, lambda * &one_minus) - 1u32;
    }
    (x, d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Bisection,
    Newton,
}

/// One accepted bracket update.
#[derive(Clone, Debug)]
pub struct SolverStep {
    pub kind: StepKind,
    pub lo: Float,
    pub hi: Float,
}

impl SolverStep {
    pub fn width(&self) -> Float {
        Float::with_val(self.lo.prec().max(self.hi.prec()) + 1, &self.hi - &self.lo)
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub prefix_depth_k: u32,
    pub max_precision: u32,
    pub bracket: (String, String),
}

impl SolverConfig {
    pub fn new(prefix_depth_k: u32, max_precision: u32) -> SolverConfig {
        SolverConfig { prefix_depth_k, max_precision, bracket: ("1.5".into(), "1.9".into()) }
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub params: TentParams,
    pub steps: Vec<SolverStep>,
    /// Working precision of the bracket endpoints.
    pub precision_bits: u32,
}

/// Solves for the slope whose kneading map is `Q(k) = max(0, k-2)`.
///
/// The kneading prefix of length `S(k)` pins the slope to roughly
/// `λ^{-S(k+2)}`, so the bracket is shrunk to that width. Bisection by
/// kneading comparison is accelerated by Newton steps on `c_{S(K)}(λ) = 0`;
/// every Newton proposal is itself certified by a kneading comparison
/// before it moves the bracket.
pub fn solve_fibonacci_parameter(prefix_depth_k: u32, max_precision: u32) -> Result<TentParams> {
    Ok(solve(&SolverConfig::new(prefix_depth_k, max_precision))?.params)
}

pub fn solve(cfg: &SolverConfig) -> Result<Solution> {
    let k = cfg.prefix_depth_k;
    if k < 4 {
        return Err(Error::Config(format!("prefix depth {k} is below 4")));
    }
    let s = fibonacci_cut_times(k + 12);
    let target = kneading_bits(&KneadingMap::fibonacci(), s.at(k as i64 + 6))?;

    let hi0 = Ball::from_decimal(&cfg.bracket.1, 64)?.upper().to_f64();
    let work = (s.get(k as i64 + 2) as f64 * hi0.log2()).ceil() as u32 + 400;
    if work > cfg.max_precision {
        return Err(Error::PrecisionCeiling { bits: cfg.max_precision, index: None });
    }
    // Endpoints live on a dyadic grid about as fine as the bracket width, so
    // midpoints are exact at the working precision.
    let grid = work - 32;
    let snap = |x: &Float, grid: u32, up: bool| -> Float {
        let mut y = Float::with_val(work, x) << grid;
        if up {
            y.ceil_mut();
        } else {
            y.floor_mut();
        }
        y >> grid
    };
    let mut lo = snap(&Ball::from_decimal(&cfg.bracket.0, work)?.lower(), 8, false);
    let mut hi = snap(&Ball::from_decimal(&cfg.bracket.1, work)?.upper(), 8, true);

    let probe = |x: &Float, hint_bits: f64| -> Result<KneadingOrder> {
        let start = (hint_bits * 1.25) as u32 + 128;
        let mut x = x.clone();
        for _ in 0..4 {
            match compare_with_target(&x, &target, start, cfg.max_precision) {
                Ok((KneadingOrder::EqualOnPrefix, _)) | Err(Error::PrecisionCeiling { .. }) => x.next_up(),
                Ok((order, _)) => return Ok(order),
                Err(e) => return Err(e),
            }
        }
        Err(Error::BracketLoss(format!("probe near {} never separated from the target", x.to_f64())))
    };

    if probe(&lo, 64.0)? != KneadingOrder::Less || probe(&hi, 64.0)? != KneadingOrder::Greater {
        return Err(Error::BracketLoss(format!("[{}, {}] does not bracket the target", cfg.bracket.0, cfg.bracket.1)));
    }

    let wbits = |lo: &Float, hi: &Float| -log2_float(&Float::with_val(work + 1, hi - lo));

    let mut steps = Vec::new();
    let mut extra_goal = 0u32;
    loop {
        let goal = (s.get(k as i64 + 2) as f64 * lo.to_f64().log2()).ceil() + 16.0 + extra_goal as f64;
        while wbits(&lo, &hi) < goal {
            let before = wbits(&lo, &hi);
            let log2l = lo.to_f64().log2();
            let level = (3..=k + 10).filter(|&kk| (s.get(kk as i64 + 1) as f64) * log2l < before - 16.0).max();
            if let Some(kk) = level.filter(|_| before > 40.0) {
                let dbits = ((s.get(kk as i64 + 2) as f64 * log2l) as i32 - 10).min(grid as i32 - 8);
                let p = (s.get(kk as i64 + 2) as f64 * log2l) as u32 + 128;
                let mut r = Float::with_val(p, &lo + &hi) / 2u32;
                for _ in 0..30 {
                    let (x, d) = orbit_and_derivative(&r, s.get(kk as i64));
                    if d.is_zero() {
                        break;
                    }
                    let step = Float::with_val(p, &x / &d);
                    r -= &step;
                    if step.is_zero() || step.get_exp().unwrap_or(i32::MIN) < -(p as i32) + 40 {
                        break;
                    }
                }
                let delta = Float::with_val(work, Float::i_exp(1, -dbits));
                let r = snap(&r, dbits as u32, false);
                for t in [Float::with_val(work, &r - &delta), Float::with_val(work, &r + &delta)] {
                    if t > lo && t < hi {
                        match probe(&t, dbits as f64)? {
                            KneadingOrder::Less => lo = t,
                            _ => hi = t,
                        }
                        steps.push(SolverStep { kind: StepKind::Newton, lo: lo.clone(), hi: hi.clone() });
                    }
                }
            }
            if wbits(&lo, &hi) - before < 8.0 {
                for _ in 0..8 {
                    let mid = Float::with_val(work, &lo + &hi) / 2u32;
                    let hint = wbits(&lo, &hi);
                    match probe(&mid, hint)? {
                        KneadingOrder::Less => lo = mid,
                        _ => hi = mid,
                    }
                    steps.push(SolverStep { kind: StepKind::Bisection, lo: lo.clone(), hi: hi.clone() });
                }
            }
        }

        let lambda = Ball::from_interval(&lo, &hi, work);
        let params = TentParams::new(lambda);
        let n = s.at(k as i64);
        match itinerary(&params, &Ball::zero(work), n, cfg.max_precision) {
            Ok(it) if it.bits().as_deref() == Some(&target[..n]) => {
                return Ok(Solution { params, steps, precision_bits: work });
            }
            Ok(_) => return Err(Error::BracketLoss("certified prefix differs from the target".into())),
            Err(Error::PrecisionCeiling { .. }) if extra_goal < 256 => extra_goal += 32,
            Err(e) => return Err(e),
        }
    }
}

/// `log2 x` for a positive float outside the `f64` range.
pub(crate) fn log2_float(x: &Float) -> f64 {
    let (m, e) = x.to_f64_exp();
    e as f64 + m.log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fibonacci_cut_times_examples() {
        let s = fibonacci_cut_times(15);
        assert_eq!(&s.as_slice()[..6], &[1, 2, 3, 5, 8, 13]);
        assert_eq!(s.get(15), 1597);
        assert_eq!(s.get(-2), 0);
        assert_eq!(s.get(-1), 1);
        let zero = cut_times(&KneadingMap::from_fn(|_| 0), 6).unwrap();
        assert_eq!(zero.as_slice(), &[1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(s.cut_level(377), Some(12));
        assert_eq!(s.cut_level(29), None);
    }

    #[test]
    fn invalid_map_is_rejected() {
        let bad = KneadingMap::from_fn(|k| k);
        assert!(matches!(cut_times(&bad, 3), Err(Error::InvalidKneadingMap { k: 1, q: 1 })));
        assert!(matches!(cut_times(&KneadingMap::from_fn(|k| k - 1), 100), Err(Error::CutTimeOverflow(_))));
    }

    #[test]
    fn kneading_prefix() {
        let e = kneading_from_map(&KneadingMap::fibonacci(), 21).unwrap();
        assert_eq!(e.to_string(), "100111011001010011100");
        let z = kneading_from_map(&KneadingMap::from_fn(|_| 0), 5).unwrap();
        assert_eq!(z.to_string(), "10000");
        for q in [KneadingMap::from_fn(|_| 0), KneadingMap::fibonacci(), KneadingMap::from_fn(|k| k / 2)] {
            assert_eq!(kneading_from_map(&q, 2).unwrap().symbols()[1], Symbol::Zero);
        }
    }

    #[test]
    fn parity_lex_examples() {
        let a = Itinerary::from_bits(&[1, 0, 0, 1, 1]);
        assert_eq!(kneading_compare(&a, &a.clone()), KneadingOrder::EqualOnPrefix);
        let b = Itinerary::from_bits(&[1, 1]);
        let c = Itinerary::from_bits(&[1, 0]);
        assert_eq!(kneading_compare(&b, &c), KneadingOrder::Less);
        assert_eq!(kneading_compare(&c, &b), KneadingOrder::Greater);
        let with_c = Itinerary { symbols: vec![Symbol::One, Symbol::C], certified: vec![true; 2] };
        assert_eq!(kneading_compare(&with_c, &c), KneadingOrder::EqualOnPrefix);
    }

    #[test]
    fn itineraries_of_simple_slopes() {
        let two = TentParams::new(Ball::from_i64(2, 64));
        let it = itinerary(&two, &Ball::zero(64), 4, 1024).unwrap();
        assert_eq!(it.to_string(), "1CCC".replace('C', "0"));
        // T(0) = 0.5, T(0.5) = -0.25, T(-0.25) = 0.125 at slope 3/2.
        let p = TentParams::from_decimal("1.5", 64).unwrap();
        assert_eq!(itinerary(&p, &Ball::zero(64), 3, 1024).unwrap().to_string(), "101");
        let a = itinerary(&TentParams::from_decimal("1.6", 256).unwrap(), &Ball::zero(256), 30, 4096).unwrap();
        let b = itinerary(&TentParams::from_decimal("1.8", 256).unwrap(), &Ball::zero(256), 30, 4096).unwrap();
        assert_eq!(kneading_compare(&a, &b), KneadingOrder::Less);
    }

    #[test]
    fn exact_hit_is_symbol_c() {
        // Slope 1 sends 0 to 0.
        let one = TentParams::new(Ball::from_i64(1, 64));
        assert_eq!(itinerary(&one, &Ball::zero(64), 2, 256).unwrap().to_string(), "CC");
    }

    #[test]
    fn requantised_map_is_recovered() {
        let s = fibonacci_cut_times(12);
        let e = kneading_from_map(&KneadingMap::fibonacci(), s.at(12)).unwrap();
        let (cuts, q) = kneading_map_from_sequence(&e).unwrap();
        assert_eq!(cuts, s.as_slice());
        let expected: Vec<u32> = (1..=12).map(|k: u32| k.saturating_sub(2)).collect();
        assert_eq!(q, expected);
    }

    #[test]
    fn solver_small_depth() {
        let sol = solve(&SolverConfig::new(8, 2048)).unwrap();
        let lam = sol.params.lambda.to_f64();
        assert!((lam - 1.7292119317087213).abs() < 1e-12, "{lam}");
        for w in sol.steps.windows(2) {
            assert!(w[1].width() <= w[0].width());
            if w[1].kind == StepKind::Bisection {
                assert_eq!(w[1].width() * 2u32, w[0].width());
            }
        }
    }

    proptest! {
        #[test]
        fn cut_time_recursion_and_golden_bound(k in 0u32..=40) {
            let s = fibonacci_cut_times(40);
            if k >= 1 {
                prop_assert_eq!(s.get(k as i64), s.get(k as i64 - 1) + s.get((k as i64 - 2).max(0)));
            }
            let phi = (1.0 + 5f64.sqrt()) / 2.0;
            prop_assert!(s.get(k as i64) as f64 >= phi.powi(k as i32 + 2) / 3.0);
        }

        #[test]
        fn kneading_is_monotone_in_slope(a in 1500u32..1900, b in 1500u32..1900) {
            prop_assume!(a != b);
            let ia = itinerary(&TentParams::from_decimal(&format!("{}e-3", a), 128).unwrap(), &Ball::zero(128), 40, 4096).unwrap();
            let ib = itinerary(&TentParams::from_decimal(&format!("{}e-3", b), 128).unwrap(), &Ball::zero(128), 40, 4096).unwrap();
            let ord = kneading_compare(&ia, &ib);
            if ord != KneadingOrder::EqualOnPrefix {
                prop_assert_eq!(ord == KneadingOrder::Less, a < b);
            }
        }
    }
}
