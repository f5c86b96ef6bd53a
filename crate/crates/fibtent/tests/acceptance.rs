//! The eleven acceptance criteria, one test each. Every test writes a single
//! PASS/FAIL line straight to stderr (bypassing output capture) and then
//! asserts, so `cargo test` shows both the summary and the failure.

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use fibtent::conjugacy::{fit_singularity_order, HFn, h_family_eval};
use fibtent::kneading::{fibonacci_cut_times, itinerary, kneading_from_map, solve, KneadingMap, SolverConfig};
use fibtent::lyapunov::{
    log_deriv_direct, log_deriv_n, logdist_terms, negative_part_growth, pointwise_series, positive_part_terms,
};
use fibtent::measure::{empirical_frequencies, measure_closed_form_exact, measure_recursion, normalization, ZPhi};
use fibtent::natext::{backward_series, backward_window, cocycle_defect};
use fibtent::postcritical::partition::Label;
use fibtent::postcritical::{
    build_partition, diameter_stats, length_identity, side_rule, verify_combinatorics, ClaimStatus, Side,
};
use fibtent::recurrence::{closest_returns, exponent_ratio, exponential_recurrence_estimate, telescoping};
use fibtent::report::{ExperimentConfig, Lab};
use fibtent::Ball;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rug::Rational;

const PHI: f64 = 1.618_033_988_749_895;

fn lab() -> &'static Lab {
    static LAB: OnceLock<Lab> = OnceLock::new();
    LAB.get_or_init(|| {
        let t = Instant::now();
        let lab = Lab::build(ExperimentConfig::default()).expect("default lab");
        line(&format!("setup: λ_F solved to depth 18 and orbit cached in {:.1?}", t.elapsed()));
        lab
    })
}

fn line(text: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{text}");
}

fn verdict(id: u32, title: &str, pass: bool, detail: String, elapsed: Duration, budget: Duration) {
    let in_time = elapsed <= budget;
    let ok = pass && in_time;
    line(&format!(
        "{} criterion {id:>2} {title}: {detail} [{elapsed:.2?}, budget {budget:?}]",
        if ok { "PASS" } else { "FAIL" }
    ));
    assert!(pass, "criterion {id} ({title}) failed: {detail}");
    assert!(in_time, "criterion {id} ({title}) exceeded its time budget: {elapsed:?} > {budget:?}");
}

#[test]
fn c01_kneading_prefix() {
    let t = Instant::now();
    let it = kneading_from_map(&KneadingMap::fibonacci(), 21).unwrap();
    let got = it.to_string();
    let el = t.elapsed();
    verdict(1, "kneading prefix", got == "100111011001010011100", got, el, Duration::from_millis(1));
}

#[test]
fn c02_lambda_solver() {
    let t = Instant::now();
    let s = fibonacci_cut_times(20);
    let sol = solve(&SolverConfig::new(14, 4096)).unwrap();
    let lam = &sol.params.lambda;
    let n = s.at(14);
    let target = kneading_from_map(&KneadingMap::fibonacci(), n).unwrap();
    let it = itinerary(&sol.params, &Ball::zero(lam.prec()), n, 4096).unwrap();
    let el = t.elapsed();
    let close = (lam - &Ball::from_f64(1.73, 64)).abs().upper() < 0.01;
    let pass = close && it == target && sol.precision_bits <= 4096;
    let detail = format!("λ_F = {} with {} bits, itinerary matches through S(14) = {n}: {}", lam.mid_digits(20), sol.precision_bits, it == target);
    verdict(2, "λ_F solver", pass, detail, el, Duration::from_secs(60));
}

#[test]
fn c03_combinatorics() {
    let lab = lab();
    let t = Instant::now();
    let rep = verify_combinatorics(&lab.cache, &lab.s, 12).unwrap();
    let sides_ok = (0..=12).all(|k| lab.cache.side(lab.s.at(k)) == Some(side_rule(k as u32)));
    let claims: std::collections::BTreeSet<&str> = rep.rows.iter().map(|r| r.claim).collect();
    let el = t.elapsed();
    let pass = rep.all_true() && rep.count(ClaimStatus::Unresolved) == 0 && sides_ok;
    let detail = format!(
        "{} certified rows over {:?}, {} false, {} unresolved",
        rep.count(ClaimStatus::True),
        claims,
        rep.count(ClaimStatus::False),
        rep.count(ClaimStatus::Unresolved)
    );
    verdict(3, "combinatorics for k <= 12", pass, detail, el, Duration::from_secs(30));
}

#[test]
fn c04_diameter_limit() {
    let lab = lab();
    let t = Instant::now();
    let stats = diameter_stats(&lab.cache, &lab.s, 14).unwrap();
    let ls: Vec<&Ball> = (10..=14).map(|k| &stats.row(k).unwrap().l).collect();
    let mut spread: f64 = 0.0;
    for a in &ls {
        for b in &ls {
            spread = spread.max(((*a - *b).abs().div(b).unwrap()).upper().to_f64());
        }
    }
    let c_monotone = stats.rows.windows(2).all(|w| w[1].c_ratio.lt(&w[0].c_ratio) != Some(true));
    let identity = (2..=14).all(|k| {
        let (a, b) = length_identity(&lab.cache, &lab.s, k).unwrap();
        a.overlaps(&b)
    });
    let el = t.elapsed();
    let detail = format!(
        "L_10..L_14 relative spread {spread:.1e}, L_14 = {}, C_k monotone {c_monotone}, length identity {identity}",
        stats.row(14).unwrap().l.mid_digits(12)
    );
    verdict(4, "diameter limit", spread < 1e-2 && c_monotone && identity, detail, el, Duration::from_secs(30));
}

#[test]
fn c05_measure() {
    let lab = lab();
    let t = Instant::now();
    let table = measure_recursion(40);
    let mut exact = true;
    for m in 1..=40 {
        let (i, j) = table.get(m);
        exact &= (i, j) == measure_closed_form_exact(m);
        exact &= normalization(&table, &lab.s, m) == ZPhi::ONE;
        if m >= 2 {
            let (ip, jp) = table.get(m - 1);
            exact &= i + j == ip && jp == i;
        }
    }
    let n = 100_000;
    let mut worst: f64 = 0.0;
    let mut unresolved: f64 = 0.0;
    for m in 1..=6u32 {
        let level = build_partition(&lab.cache, &lab.s, m).unwrap();
        let f = empirical_frequencies(&lab.symbolic, &level, n);
        let want = PHI.powi(-(m as i32));
        worst = worst.max((f.frequency(Label::I { k: m, n: 0 }) - want).abs() / want);
        unresolved = unresolved.max(f.unresolved_fraction());
    }
    let el = t.elapsed();
    let detail = format!("ℤ[φ] identities exact: {exact}; worst relative frequency error {worst:.2e}; unresolved {unresolved:.1e}");
    verdict(5, "measure", exact && worst < 0.05 && unresolved < 1e-3, detail, el, Duration::from_secs(120));
}

#[test]
fn c06_singularity_orders() {
    let lab = lab();
    let t = Instant::now();
    let r = fit_singularity_order(&lab.conj, &lab.params, Side::Right, 4).unwrap();
    let l = fit_singularity_order(&lab.conj, &lab.params, Side::Left, 4).unwrap();
    let decades = |f: &fibtent::conjugacy::SingularityFit| {
        let xs: Vec<f64> = f.points.iter().map(|p| p.0).collect();
        (xs[0] - xs[xs.len() - 1]).abs() / std::f64::consts::LN_10
    };
    let el = t.elapsed();
    let pass = (r.slope + 0.5).abs() < 1e-2 && (l.slope + 1.0 / 6.0).abs() < 1e-2 && decades(&r) >= 4.0 - 1e-9 && decades(&l) >= 4.0 - 1e-9;
    let detail = format!("right {:.5}, left {:.5} over {:.1} decades", r.slope, l.slope, decades(&r));
    verdict(6, "singularity orders", pass, detail, el, Duration::from_secs(30));
}

#[test]
fn c07_integrability_surrogates() {
    let lab = lab();
    let (p, cache, s) = (&lab.conj, &lab.cache, &lab.s);
    let t = Instant::now();
    let pos = positive_part_terms(p, cache, s, 8..=16, 64).unwrap();
    let ld = logdist_terms(p, cache, s, 8..=16, 64).unwrap();
    let n_max = s.at(16);
    let neg = negative_part_growth(p, cache, n_max, &[]).unwrap();
    let el = t.elapsed();

    let min_term = pos.iter().map(|t| t.term.lower().to_f64()).fold(f64::MAX, f64::min);
    let pos_ok = pos.iter().all(|t| t.term.lower() > 0.1)
        && pos.windows(2).all(|w| w[0].partial_sum.lt(&w[1].partial_sum) == Some(true))
        && pos.last().unwrap().partial_sum.lower() > 1.0;
    let ld_ok = ld.iter().all(|t| t.term.lower() > 0.0) && ld.windows(2).all(|w| w[0].partial_sum.lt(&w[1].partial_sum) == Some(true));
    let values: Vec<f64> = neg.records.iter().map(|r| r.value).collect();
    let increasing = values.windows(2).all(|w| w[0] < w[1]);
    // Record times are read as orbit indices: the iterate f^n(h(c_1)) is h(c_{n+1}).
    let at_cut = neg.records.iter().filter(|r| s.cut_level(r.orbit_index as u64 + 1).is_some()).count();
    let clustered = at_cut * 5 >= neg.records.len() * 4
        && neg.records.iter().rev().take(5).all(|r| s.cut_level(r.orbit_index as u64 + 1).is_some());
    let reaches_end = neg.records.last().is_some_and(|r| r.orbit_index as u64 + 1 > s.get(15));
    let neg_ok = increasing && clustered && reaches_end && neg.unresolved == 0;

    let sides: Vec<String> = pos.iter().map(|t| format!("{}{}:{:.4}", t.side.as_str(), t.n, t.term.to_f64())).collect();
    let detail = format!(
        "positive part min term {min_term:.4} ({}), partial sum {:.3}; logdist ok {ld_ok}; negative records {}/{} at S(k)-1, last {:.1} at orbit index {}",
        sides.join(" "),
        pos.last().unwrap().partial_sum.to_f64(),
        at_cut,
        neg.records.len(),
        values.last().copied().unwrap_or(0.0),
        neg.records.last().map_or(0, |r| r.orbit_index),
    );
    verdict(7, "positive/negative part surrogates", pos_ok && ld_ok && neg_ok, detail, el, Duration::from_secs(180));
}

#[test]
fn c08_pointwise_gap() {
    let lab = lab();
    let t = Instant::now();
    let depth = lab.s.at(14);
    let series = pointwise_series(&lab.conj, &lab.cache, &lab.s, 1, 4, depth).unwrap();
    let el = t.elapsed();
    let ll = lab.log_lambda().to_f64();
    let a_star = lab.conj.alpha_star_f64();
    let far = series.max_far().unwrap().a_n.to_f64();
    let close = series.min_close().unwrap().a_n.to_f64();
    let bound = (1.0 - a_star / PHI) * ll + 0.1;
    let start = series.returns.start_index;
    let windows_ok = series.returns.times.iter().enumerate().all(|(i, &n)| {
        let (lo, hi) = fibtent::postcritical::return_window(&lab.s, 4, i as u32 + 1);
        lo <= n && n <= hi
    }) && start == 1 + series.entry;
    let pass = far >= ll - 0.05 && close <= bound && far - close >= 0.15 && windows_ok;
    let detail = format!(
        "max far {far:.5} (need {:.5}), min close {close:.5} (need <= {bound:.5}), gap {:.5}, returns {:?} in windows {windows_ok}",
        ll - 0.05,
        far - close,
        series.returns.times
    );
    verdict(8, "pointwise gap", pass, detail, el, Duration::from_secs(120));
}

#[test]
fn c09_recurrence() {
    let lab = lab();
    let (p, cache, s) = (&lab.conj, &lab.cache, &lab.s);
    let t = Instant::now();
    let rows = closest_returns(p, cache, s, 14).unwrap();
    let decreasing = [Side::Left, Side::Right].iter().all(|&side| {
        let d: Vec<&Ball> = rows.iter().filter(|r| r.side == side).map(|r| &r.dist).collect();
        d.windows(2).all(|w| w[1].lt(w[0]) == Some(true))
    });
    let ratios: Vec<f64> = rows.iter().filter(|r| (10..=14).contains(&r.k)).map(|r| exponent_ratio(p, cache, s, r).to_f64()).collect();
    let ratio_ok = ratios.iter().all(|v| (0.9..=1.1).contains(v));
    let tele = [Side::Right, Side::Left].iter().all(|&side| {
        let (a, b) = telescoping(p, cache, s, side, 4, 9).unwrap();
        a.overlaps(&b)
    });
    let er = exponential_recurrence_estimate(p, cache, s, s.at(14)).unwrap();
    let el = t.elapsed();
    let er_ok = er.value.is_finite() && er.value > 0.0 && er.cut_time_level.is_some();
    let detail = format!(
        "dist decreasing per side {decreasing}, ratios {ratios:.4?}, telescoping {tele}, recurrence {:.5} at n = {} of {}",
        er.value, er.argmax, er.window
    );
    verdict(9, "closest returns", decreasing && ratio_ok && tele && er_ok, detail, el, Duration::from_secs(60));
}

#[test]
fn c10_backward_series() {
    let lab = lab();
    let (p, cache, s) = (&lab.conj, &lab.cache, &lab.s);
    let t = Instant::now();
    let m = s.at(16);
    let depth = s.at(12);
    let chain = backward_series(p, cache, s, m, depth, 4).unwrap();
    let consistent = (1..=depth).all(|n| cocycle_defect(p, cache, &chain, n).unwrap().contains_rational(&Rational::new()));
    let el = t.elapsed();
    let ll = lab.log_lambda().to_f64();
    let a_star = lab.conj.alpha_star_f64();
    let low = chain.window_min().unwrap().b_n.to_f64();
    let tagged = chain.max_tagged().map(|e| (e.n, e.b_n.to_f64()));
    let want = (1.0 + a_star) * ll - 0.1;
    let offset = chain.offset.unwrap_or(0);
    let in_windows = chain.tagged.iter().all(|&(i, n)| {
        let (lo, hi) = backward_window(s, 4, i);
        n >= offset && lo <= (n - offset) as u64 && (n - offset) as u64 <= hi
    });
    let pass = low <= ll + 0.05 && tagged.is_some_and(|(_, v)| v >= want) && consistent && in_windows;
    let detail = format!(
        "window min {low:.4} (need <= {:.4}), best tagged {tagged:?} (need >= {want:.4}), cocycle consistent {consistent}, tags {:?} in windows {in_windows}",
        ll + 0.05,
        chain.tagged
    );
    verdict(10, "backward series", pass, detail, el, Duration::from_secs(120));
}

#[test]
fn c11_numerics() {
    let t = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut contained = 0;
    let ops = 10_000;
    for _ in 0..ops {
        let q = |rng: &mut StdRng| Rational::from((rng.gen_range(-10_000i64..=10_000), rng.gen_range(1i64..=997)));
        let (x, y) = (q(&mut rng), q(&mut rng));
        let prec = rng.gen_range(24..=200);
        let (bx, by) = (Ball::from_rational(&x, prec), Ball::from_rational(&y, prec));
        let ok = match rng.gen_range(0..4) {
            0 => (&bx + &by).contains_rational(&Rational::from(&x + &y)),
            1 => (&bx - &by).contains_rational(&Rational::from(&x - &y)),
            2 => (&bx * &by).contains_rational(&Rational::from(&x * &y)),
            _ if y == 0 => bx.div(&by).is_none(),
            _ => bx.div(&by).is_some_and(|b| b.contains_rational(&Rational::from(&x / &y))),
        };
        contained += ok as usize;
    }

    let lab_params = fibtent::kneading::TentParams::from_decimal(
        "1.729211931708721357526648740287270635519108559201477839877139244004915211637630",
        512,
    )
    .unwrap();
    let cache = fibtent::postcritical::orbit_points(&lab_params, 260, 200).unwrap();
    let conj = fibtent::conjugacy::ConjugacyParams::new("2", "1.2", 512).unwrap();
    let mut worst: f64 = 0.0;
    let mut sample = None;
    for j in [1usize, 3, 50] {
        let x0 = h_family_eval(&conj, HFn::H, &cache.point(j).with_prec(512)).unwrap();
        let mut x = x0.clone();
        let mut direct = Ball::zero(512);
        for n in 1..=200usize {
            direct = &direct + &log_deriv_direct(&conj, &lab_params, &x, 1).unwrap();
            x = fibtent::conjugacy::f_eval(&conj, &lab_params, &x).unwrap();
            let closed = log_deriv_n(&conj, &cache, j, n).unwrap().to_f64();
            let d = direct.to_f64();
            let gap = (d - closed).abs() / closed.abs().max(1.0);
            worst = if gap.is_nan() { f64::INFINITY } else { worst.max(gap) };
        }
        let whole = log_deriv_direct(&conj, &lab_params, &x0, 200).unwrap().to_f64();
        let gap = (whole - direct.to_f64()).abs() / whole.abs().max(1.0);
        worst = if gap.is_nan() { f64::INFINITY } else { worst.max(gap) };
        sample = sample.or(Some((j, whole)));
    }
    let el = t.elapsed();
    let detail = format!("{contained}/{ops} random rational ops contained; closed form vs direct product worst relative gap {worst:.1e} (n = 200 from j = 1: {sample:?})");
    verdict(11, "numerics", contained == ops && worst < 1e-8, detail, el, Duration::from_secs(60));
}
