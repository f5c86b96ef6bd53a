//! Experiment configuration, the shared [`Lab`] state, and the suites that
//! turn module output into CSV/JSON reports plus pass/fail checks.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use rug::Float;
use sha2::{Digest, Sha256};

use crate::conjugacy::{fit_singularity_order, ConjugacyParams, LOG_PREC};
use crate::error::{Error, Result};
use crate::kneading::{
    fibonacci_cut_times, itinerary, kneading_from_map, solve, CutTimes, KneadingMap, SolverConfig, TentParams,
};
use crate::lyapunov::{log_lambda, logdist_terms, negative_part_growth, pointwise_series, positive_part_terms, Classification};
use crate::measure::{empirical_frequencies, measure_closed_form, measure_recursion, normalization};
use crate::natext::{backward_series, cocycle_defect};
use crate::numerics::Ball;
use crate::postcritical::partition::Label;
use crate::postcritical::{
    build_partition, diameter_stats, length_identity, orbit_points, verify_combinatorics, ClaimStatus, OrbitCache,
    Side, SymbolicOrbit,
};
use crate::recurrence::{
    annulus_checks, closest_returns, exponent_ratio, exponential_recurrence_estimate, recurrence_sandwich, telescoping,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub a_plus: String,
    pub a_minus: String,
    pub prefix_depth_k: u32,
    pub k_max: u32,
    /// Forward window for the pointwise series.
    pub depth: usize,
    pub n_empirical: usize,
    /// Orbit points are certified to `2^{-target_bits}`; `None` picks a
    /// budget from `prefix_depth_k`.
    pub target_bits: Option<u32>,
    pub max_precision: u32,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            a_plus: "2".into(),
            a_minus: "1.2".into(),
            prefix_depth_k: 18,
            k_max: 14,
            depth: 987,
            n_empirical: 100_000,
            target_bits: None,
            max_precision: 65536,
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    /// Parses `key = value` lines on top of the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn int<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Config(format!("{key}: not an integer: `{v}`")))
        }
        match key {
            "a_plus" => self.a_plus = value.to_string(),
            "a_minus" => self.a_minus = value.to_string(),
            "prefix_depth_k" => self.prefix_depth_k = int(key, value)?,
            "k_max" => self.k_max = int(key, value)?,
            "depth" => self.depth = int(key, value)?,
            "n_empirical" => self.n_empirical = int(key, value)?,
            "target_bits" if value == "auto" => self.target_bits = None,
            "target_bits" => self.target_bits = Some(int(key, value)?),
            "max_precision" => self.max_precision = int(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "seed" => self.seed = int(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        ConjugacyParams::new(&self.a_plus, &self.a_minus, 64)?;
        if self.k_max < 4 || self.k_max + 2 > self.prefix_depth_k {
            return Err(Error::Config(format!(
                "k_max = {} must lie in 4..={}",
                self.k_max,
                self.prefix_depth_k.saturating_sub(2)
            )));
        }
        if self.prefix_depth_k > 30 {
            return Err(Error::Config("prefix_depth_k above 30 is out of reach".into()));
        }
        if self.depth == 0 || self.n_empirical == 0 || self.max_precision < 64 || self.target_bits == Some(0) {
            return Err(Error::Config("integer settings must be positive (max_precision >= 64)".into()));
        }
        Ok(())
    }

    pub fn resolved_target_bits(&self) -> u32 {
        self.target_bits.unwrap_or_else(|| {
            let s = fibonacci_cut_times(self.prefix_depth_k);
            (s.get(self.prefix_depth_k as i64) as f64 * 1.7293f64.log2()).ceil() as u32 + 64
        })
    }

    /// Largest orbit index any suite reads: `S(k_max+3) + S(k_max+1)`.
    pub fn cache_len(&self) -> usize {
        let s = fibonacci_cut_times(self.k_max + 3);
        let forward = s.at(self.k_max as i64 + 3) + s.at(self.k_max as i64 + 1) + 1;
        forward.max(self.depth + 8)
    }

    /// Hex SHA-256 of the canonical `key=value` rendering.
    pub fn hash(&self) -> String {
        let mut text = String::new();
        let target = self.target_bits.map_or("auto".to_string(), |t| t.to_string());
        for (k, v) in [
            ("a_plus", self.a_plus.clone()),
            ("a_minus", self.a_minus.clone()),
            ("prefix_depth_k", self.prefix_depth_k.to_string()),
            ("k_max", self.k_max.to_string()),
            ("depth", self.depth.to_string()),
            ("n_empirical", self.n_empirical.to_string()),
            ("target_bits", target),
            ("max_precision", self.max_precision.to_string()),
            ("seed", self.seed.to_string()),
        ] {
            let _ = writeln!(text, "{k}={v}");
        }
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Everything the suites share: the solved slope, the certified orbit and
/// its symbolic counterpart.
pub struct Lab {
    pub config: ExperimentConfig,
    pub s: CutTimes,
    pub params: TentParams,
    /// Number of solver steps, or `None` when `λ` was supplied.
    pub solver_steps: Option<usize>,
    pub cache: OrbitCache,
    pub symbolic: SymbolicOrbit,
    pub conj: ConjugacyParams,
}

impl Lab {
    pub fn build(config: ExperimentConfig) -> Result<Lab> {
        config.validate()?;
        let sol = solve(&SolverConfig::new(config.prefix_depth_k, config.max_precision))?;
        let steps = sol.steps.len();
        let mut lab = Lab::with_params(config, sol.params)?;
        lab.solver_steps = Some(steps);
        Ok(lab)
    }

    pub fn with_params(config: ExperimentConfig, params: TentParams) -> Result<Lab> {
        config.validate()?;
        let s = fibonacci_cut_times(40);
        let cache = orbit_points(&params, config.cache_len(), config.resolved_target_bits())?;
        let mut k_sym = 1;
        while s.at(k_sym) < config.n_empirical + 1 {
            k_sym += 1;
        }
        let symbolic = SymbolicOrbit::fibonacci(k_sym as u32)?;
        let conj = ConjugacyParams::new(&config.a_plus, &config.a_minus, 512)?;
        Ok(Lab { config, s, params, solver_steps: None, cache, symbolic, conj })
    }

    pub fn log_lambda(&self) -> Ball {
        log_lambda(&self.cache)
    }

    fn s(&self, k: u32) -> u64 {
        self.s.get(k as i64)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// A table of decimal strings. Certified quantities are written as
/// `mid±rad`; anything that could not be certified reads `unresolved`.
#[derive(Clone, Debug, Serialize)]
pub struct SeriesReport {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub metadata: Vec<(String, String)>,
}

impl SeriesReport {
    fn new(lab: &Lab, name: &str, columns: &[&str]) -> SeriesReport {
        SeriesReport {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: vec![
                ("config_hash".into(), lab.config.hash()),
                ("lambda_f".into(), lab.params.lambda.mid_digits(60)),
                ("lambda_f_radius_log2".into(), format!("{:.0}", lab.params.lambda.rad_log2())),
            ],
        }
    }

    fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        for (k, v) in &self.metadata {
            writeln!(&mut out as &mut dyn std::io::Write, "# {k}={v}")?;
        }
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&self.columns)?;
            for r in &self.rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Output of one suite.
#[derive(Debug, Default)]
pub struct SuiteOutput {
    pub reports: Vec<SeriesReport>,
    pub checks: Vec<Check>,
    /// Extra JSON documents, by file name.
    pub json: Vec<(String, serde_json::Value)>,
}

impl SuiteOutput {
    fn check(&mut self, suite: &'static str, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check { suite, name: name.into(), pass, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Writes `<name>.csv` and `<name>.json` for every report plus the extra documents.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for r in &self.reports {
            r.write_csv(&dir.join(format!("{}.csv", r.name)))?;
            r.write_json(&dir.join(format!("{}.json", r.name)))?;
        }
        for (name, v) in &self.json {
            std::fs::write(dir.join(name), serde_json::to_string_pretty(v)? + "\n")?;
        }
        Ok(())
    }
}

fn cell(b: &Ball) -> String {
    b.to_decimal()
}

pub const SUITES: [&str; 9] =
    ["solve-lambda", "combinatorics", "diameters", "measure", "singularity", "prop1", "prop2", "recurrence", "backward"];

pub fn run_suite(lab: &Lab, name: &str) -> Result<SuiteOutput> {
    match name {
        "solve-lambda" => solve_lambda_suite(lab),
        "combinatorics" => combinatorics_suite(lab),
        "diameters" => diameters_suite(lab),
        "measure" => measure_suite(lab),
        "singularity" => singularity_suite(lab),
        "prop1" => integrability_suite(lab),
        "prop2" => pointwise_suite(lab),
        "recurrence" => recurrence_suite(lab),
        "backward" => backward_suite(lab),
        _ => Err(Error::Config(format!("unknown suite `{name}`"))),
    }
}

pub fn solve_lambda_suite(lab: &Lab) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let lam = &lab.params.lambda;
    let k = lab.config.prefix_depth_k;
    let n = lab.s(k) as usize;
    let target = kneading_from_map(&KneadingMap::fibonacci(), n)?;
    let it = itinerary(&lab.params, &Ball::zero(lam.prec()), n, lab.config.max_precision.max(lam.prec()))?;
    let close = (lam - &Ball::from_f64(1.73, 64)).abs();
    out.check("solve-lambda", "|λ_F - 1.73| < 0.01", close.upper() < 0.01, lam.mid_digits(20));
    out.check("solve-lambda", format!("itinerary of 0 matches the kneading prefix to S({k}) = {n}"), it == target, "");
    out.json.push(("lambda_f.json".into(), lambda_json(lab)));
    Ok(out)
}

/// `λ_F` as written to `lambda_f.json`: the decimal digits the radius
/// justifies plus `log2` of the radius.
pub fn lambda_json(lab: &Lab) -> serde_json::Value {
    let lam = &lab.params.lambda;
    let digits = ((lam.mid_log2() - lam.rad_log2()) * std::f64::consts::LOG10_2).floor().max(2.0) as usize;
    serde_json::json!({
        "digits": lam.mid_digits(digits),
        "radius_log2": lam.rad_log2().ceil(),
        "prefix_depth": lab.config.prefix_depth_k,
        "precision_bits": lam.prec(),
        "solver_steps": lab.solver_steps,
        "log_lambda": cell(&lab.log_lambda()),
        "config_hash": lab.config.hash(),
    })
}

/// Reads a `lambda_f.json` document back into a certified slope. The radius
/// is widened by one unit in the last printed digit.
pub fn read_lambda_json(text: &str) -> Result<TentParams> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    let field = |k: &str| v.get(k).ok_or_else(|| Error::Config(format!("lambda_f.json lacks `{k}`")));
    let digits = field("digits")?.as_str().ok_or_else(|| Error::Config("`digits` must be a string".into()))?;
    let rad_log2 = field("radius_log2")?.as_f64().ok_or_else(|| Error::Config("`radius_log2` must be a number".into()))?;
    let prec = field("precision_bits")?.as_u64().ok_or_else(|| Error::Config("`precision_bits` must be an integer".into()))? as u32;
    let mantissa = digits.split(['e', 'E']).next().unwrap_or(digits);
    let exp10: i32 = digits.split_once(['e', 'E']).map_or(Ok(0), |(_, e)| e.parse()).map_err(|_| Error::Config(format!("bad exponent in `{digits}`")))?;
    let sig = mantissa.chars().filter(|c| c.is_ascii_digit()).count() as i32;
    let int_digits = mantissa.split('.').next().unwrap_or("").chars().filter(|c| c.is_ascii_digit()).count() as i32;
    let last_place = exp10 + int_digits - sig;
    let ulp = Float::with_val(64, Float::parse(format!("1e{last_place}")).map_err(|e| Error::Config(e.to_string()))?);
    let rad = Float::with_val(64, Float::i_exp(1, rad_log2 as i32)) + ulp;
    Ok(TentParams::new(Ball::from_decimal(digits, prec)?.inflate(&rad)))
}

pub fn combinatorics_suite(lab: &Lab) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let k_max = 12.min(lab.config.k_max);
    let rep = verify_combinatorics(&lab.cache, &lab.s, k_max)?;
    let mut r = SeriesReport::new(lab, "combinatorics", &["claim", "k", "k2", "status", "detail"]);
    for row in &rep.rows {
        r.push(vec![
            row.claim.into(),
            row.k.to_string(),
            row.k2.map_or(String::new(), |v| v.to_string()),
            format!("{:?}", row.status),
            row.detail.clone(),
        ]);
    }
    out.reports.push(r);
    out.check(
        "combinatorics",
        format!("all claims certified for k <= {k_max}"),
        rep.all_true(),
        format!("{} rows, {} false, {} unresolved", rep.rows.len(), rep.count(ClaimStatus::False), rep.count(ClaimStatus::Unresolved)),
    );
    Ok(out)
}

pub fn diameters_suite(lab: &Lab) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let k_max = lab.config.k_max;
    let stats = diameter_stats(&lab.cache, &lab.s, k_max + 2)?;
    let mut r = SeriesReport::new(lab, "diameters", &["k", "S(k)", "D_k", "nu_k", "C_k", "L_k"])
        .meta("beta_estimate", cell(&stats.beta_estimate));
    for row in &stats.rows {
        r.push(vec![row.k.to_string(), row.s_k.to_string(), cell(&row.d), cell(&row.nu), cell(&row.c_ratio), cell(&row.l)]);
    }
    out.reports.push(r);

    let ls: Vec<f64> = (k_max - 4..=k_max).map(|k| stats.row(k).unwrap().l.to_f64()).collect();
    let (lo, hi) = ls.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    out.check("diameters", format!("L_k spread below 1e-2 for k = {}..{k_max}", k_max - 4), (hi - lo) / lo < 1e-2, format!("{:.3e}", (hi - lo) / lo));
    let c_ok = stats.rows.windows(2).all(|w| w[1].c_ratio.lt(&w[0].c_ratio) != Some(true));
    out.check("diameters", "C_k nondecreasing", c_ok, "");
    let mut ident = true;
    for k in 2..=k_max {
        let (a, b) = length_identity(&lab.cache, &lab.s, k)?;
        ident &= a.overlaps(&b);
    }
    out.check("diameters", format!("λ^S(k-1)|D_k| = |D_(k-1)| + |D_(k+1)| for k = 2..{k_max}"), ident, "");
    Ok(out)
}

pub fn measure_suite(lab: &Lab) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let table = measure_recursion(40);
    let exact = (1..=40).all(|m| table.get(m) == crate::measure::measure_closed_form_exact(m));
    let norm = (1..=40).all(|k| normalization(&table, &lab.s, k) == crate::measure::ZPhi::ONE);
    let steps = (2..=40).all(|m| {
        let ((i, j), (i_prev, j_prev)) = (table.get(m), table.get(m - 1));
        i + j == i_prev && j_prev == i
    });
    out.check("measure", "recursion equals closed form for m <= 40", exact, "");
    out.check("measure", "S(m-1)μ(I_m) + S(m-2)μ(J_m) = 1 for m <= 40", norm, "");
    out.check("measure", "μ(I_m) + μ(J_m) = μ(I_(m-1)) and μ(J_(m-1)) = μ(I_m) for m <= 40", steps, "");

    let n = lab.config.n_empirical;
    let mut r = SeriesReport::new(lab, "measure", &["m", "mu_I", "mu_J", "mu_I_ball", "freq_I", "rel_err", "unresolved"])
        .meta("n_empirical", n);
    let mut worst: f64 = 0.0;
    let mut unresolved: f64 = 0.0;
    for m in 1..=6u32 {
        let level = build_partition(&lab.cache, &lab.s, m)?;
        let freq = empirical_frequencies(&lab.symbolic, &level, n);
        let (mi, mj) = table.get(m);
        let (bi, _) = measure_closed_form(m, 128);
        let f = freq.frequency(Label::I { k: m, n: 0 });
        let rel = (f - bi.to_f64()).abs() / bi.to_f64();
        worst = worst.max(rel);
        unresolved = unresolved.max(freq.unresolved_fraction());
        r.push(vec![m.to_string(), mi.to_string(), mj.to_string(), cell(&bi), format!("{f:.6}"), format!("{rel:.3e}"), freq.unresolved.to_string()]);
    }
    out.reports.push(r);
    out.check("measure", "μ(I_1) = φ^-1", table.get(1).0 == crate::measure::ZPhi::phi_inv_pow(1), format!("μ(I_1) = {}", measure_closed_form(1, 64).0));
    out.check("measure", format!("empirical frequencies within 5% of φ^-m, m <= 6, N = {n}"), worst < 0.05, format!("worst {worst:.2e}"));
    out.check("measure", "unresolved fraction below 1e-3", unresolved < 1e-3, format!("{unresolved:.1e}"));
    Ok(out)
}

pub fn singularity_suite(lab: &Lab) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let mut r = SeriesReport::new(lab, "singularity_fit", &["side", "log_dist", "log_abs_fprime"]);
    for side in [Side::Right, Side::Left] {
        let fit = fit_singularity_order(&lab.conj, &lab.params, side, 4)?;
        for (x, y) in &fit.points {
            r.push(vec![fit.side.into(), format!("{x:.12}"), format!("{y:.12}")]);
        }
        r = r.meta(&format!("slope_{}", fit.side), format!("{:.6}", fit.slope));
        out.check(
            "singularity",
            format!("{} slope = {:.4} within 1e-2", fit.side, fit.expected),
            (fit.slope - fit.expected).abs() < 1e-2,
            format!("{:.5}", fit.slope),
        );
    }
    out.reports.push(r);
    Ok(out)
}

pub fn integrability_suite(lab: &Lab) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let (p, cache, s) = (&lab.conj, &lab.cache, &lab.s);
    let pos = positive_part_terms(p, cache, s, 8..=16, 64)?;
    let ld = logdist_terms(p, cache, s, 8..=16, 64)?;
    let mut r = SeriesReport::new(lab, "prop1_terms", &["n", "side", "term", "partial_sum", "kind"])
        .meta("alpha_star", format!("{}", lab.conj.alpha_star()));
    for (kind, terms) in [("pos", &pos), ("logdist", &ld)] {
        for t in terms.iter() {
            r.push(vec![t.n.to_string(), t.side.as_str().into(), cell(&t.term), cell(&t.partial_sum), kind.into()]);
        }
    }
    out.reports.push(r);

    let (pw, lw) = (&pos, &ld);
    let min_pos = pw.iter().map(|t| t.term.lower().to_f64()).fold(f64::MAX, f64::min);
    out.check("prop1", "positive-part terms >= 0.1 for n = 8..16", min_pos >= 0.1, format!("min {min_pos:.4}"));
    let incr = pw.windows(2).all(|w| w[0].partial_sum.lt(&w[1].partial_sum) == Some(true));
    let last = pw.last().unwrap().partial_sum.lower().to_f64();
    out.check("prop1", "positive-part partial sums increase past 1.0", incr && last > 1.0, format!("{last:.4}"));
    let lpos = lw.iter().all(|t| t.term.lower() > 0.0) && lw.windows(2).all(|w| w[0].partial_sum.lt(&w[1].partial_sum) == Some(true));
    out.check("prop1", "logdist terms positive with increasing partial sums", lpos, format!("{:.4}", lw.last().unwrap().partial_sum.to_f64()));
    let ll = lab.log_lambda().to_f64();
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let scale: Vec<f64> = lw
        .iter()
        .map(|t| t.term.to_f64() / (phi.powi(-(t.n as i32 + 1)) * lab.conj.a(t.side).to_f64() * lab.s(t.n) as f64 * ll))
        .collect();
    out.check(
        "prop1",
        "logdist terms within a factor 2 of μ(J_n) a S(n) log λ",
        scale.iter().all(|r| (0.5..=2.0).contains(r)),
        format!("{scale:.3?}"),
    );

    let n_max = lab.s(16) as usize;
    let cps: Vec<u64> = (8..=16).map(|k| lab.s(k)).collect();
    let neg = negative_part_growth(p, cache, n_max, &cps)?;
    let mut nr = SeriesReport::new(lab, "negative_part", &["orbit_index", "n", "record"]).meta("window", n_max);
    for rec in &neg.records {
        nr.push(vec![rec.orbit_index.to_string(), rec.n.to_string(), format!("{:.6}", rec.value)]);
    }
    for (n, avg) in &neg.averages {
        nr = nr.meta(&format!("birkhoff_negative_{n}"), cell(avg));
    }
    out.reports.push(nr);
    let at_cut = neg.records.iter().filter(|r| s.cut_level(r.orbit_index as u64 + 1).is_some()).count();
    let clustered = at_cut * 5 >= neg.records.len() * 4 && neg.records.iter().rev().take(5).all(|r| s.cut_level(r.orbit_index as u64 + 1).is_some());
    out.check(
        "prop1",
        "negative-part records cluster one step before cut times",
        clustered,
        format!("{at_cut}/{} records at orbit index S(k)-1", neg.records.len()),
    );
    let growing = neg.records.last().is_some_and(|r| r.orbit_index as u64 + 1 > lab.s(15));
    out.check("prop1", "negative-part records keep growing through S(16)", growing && neg.unresolved == 0, format!("last record {:.2}", neg.records.last().map_or(0.0, |r| r.value)));
    let avg = |n: u64| neg.averages.iter().find(|a| a.0 == n).map(|a| a.1.clone());
    if let (Some(a10), Some(a16)) = (avg(lab.s(10)), avg(lab.s(16))) {
        out.check("prop1", "negative-part Birkhoff average grows from S(10) to S(16)", a10.lt(&a16) == Some(true), format!("{:.4} -> {:.4}", a10.to_f64(), a16.to_f64()));
    }
    Ok(out)
}

pub fn pointwise_suite(lab: &Lab) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let series = pointwise_series(&lab.conj, &lab.cache, &lab.s, 1, 4, lab.config.depth)?;
    let ll = lab.log_lambda().to_f64();
    let a_star = lab.conj.alpha_star_f64();
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let bound = (1.0 - a_star / phi) * ll + 0.1;
    let mut r = SeriesReport::new(lab, "prop2_series", &["n", "a_n", "classification"])
        .meta("entry", series.entry)
        .meta("return_times", format!("{:?}", series.returns.times));
    for e in &series.entries {
        let class = match e.class {
            Classification::CloseReturn(i) => format!("close{i}"),
            Classification::Far => "far".into(),
        };
        r.push(vec![e.n.to_string(), cell(&e.a_n), class]);
    }
    out.reports.push(r);
    let far = series.max_far().map(|e| e.a_n.to_f64()).unwrap_or(f64::NAN);
    let close = series.min_close().map(|e| e.a_n.to_f64()).unwrap_or(f64::NAN);
    out.check("prop2", "max far a_n >= log λ - 0.05", far >= ll - 0.05, format!("{far:.5} vs {:.5}", ll - 0.05));
    out.check("prop2", "min close-return a_n <= (1 - α★/φ) log λ + 0.1", close <= bound, format!("{close:.5} vs {bound:.5}"));
    out.check("prop2", "gap >= 0.15", far - close >= 0.15, format!("{:.5}", far - close));
    out.check("prop2", "close returns inside their windows", series.returns.within_windows(&lab.s), format!("{:?}", series.returns.times));
    Ok(out)
}

pub fn recurrence_suite(lab: &Lab) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let (p, cache, s) = (&lab.conj, &lab.cache, &lab.s);
    let k_max = lab.config.k_max;
    let rows = closest_returns(p, cache, s, k_max)?;
    let (sandwich, theta) = recurrence_sandwich(p, cache, s, &rows[7..]);
    let ll = lab.log_lambda();
    let mut r = SeriesReport::new(lab, "recurrence", &["k", "S(k)", "side", "dist", "exponent", "sandwich_lo", "sandwich_hi"])
        .meta("theta", format!("{theta:.6}"));
    let theta_b = Ball::from_f64(theta, LOG_PREC);
    for row in &rows {
        let sk = Ball::from_i64(lab.s(row.k) as i64, LOG_PREC);
        let bounds = sandwich.iter().find(|w| w.k == row.k).map(|w| {
            let lo = (-&(&(&sk * &Ball::from_f64(w.alpha_hi, LOG_PREC)) * &ll)).exp().div(&theta_b).unwrap();
            let hi = &(-&(&(&sk * &Ball::from_f64(w.alpha_lo, LOG_PREC)) * &ll)).exp() * &theta_b;
            (cell(&lo), cell(&hi))
        });
        let (lo, hi) = bounds.unwrap_or_default();
        r.push(vec![row.k.to_string(), lab.s(row.k).to_string(), row.side.as_str().into(), cell(&row.dist), cell(&row.exponent), lo, hi]);
    }
    out.reports.push(r);

    let decreasing = [Side::Left, Side::Right].iter().all(|&side| {
        let d: Vec<&Ball> = rows.iter().filter(|r| r.side == side).map(|r| &r.log_dist).collect();
        d.windows(2).all(|w| w[1].lt(w[0]) == Some(true))
    });
    out.check("recurrence", "dist_k strictly decreasing per side", decreasing, "");
    let ratios: Vec<f64> = rows.iter().filter(|r| r.k >= 10).map(|r| exponent_ratio(p, cache, s, r).to_f64()).collect();
    out.check(
        "recurrence",
        format!("exponent ratio in [0.9, 1.1] for k = 10..{k_max}"),
        ratios.iter().all(|v| (0.9..=1.1).contains(v)),
        format!("{ratios:.4?}"),
    );
    out.check("recurrence", "λ-power sandwich for k >= 8", sandwich.iter().all(|w| w.within()), format!("Θ = {theta:.4}"));
    let ann = annulus_checks(p, cache, s, 8..=k_max.min(13))?;
    out.check("recurrence", "annulus slopes within [a, ρ_k² a - 1]", ann.rows.iter().all(|r| r.within()), format!("Q = {:.4}", ann.q_fit));
    let mut tele = true;
    for side in [Side::Right, Side::Left] {
        let (a, b) = telescoping(p, cache, s, side, 4, k_max - 5)?;
        tele &= a.overlaps(&b);
    }
    out.check("recurrence", "telescoping annulus identity", tele, "");
    let er = exponential_recurrence_estimate(p, cache, s, lab.s(k_max) as usize)?;
    out.check(
        "recurrence",
        "exponential recurrence estimate finite, positive, attained at a cut time",
        er.value.is_finite() && er.value > 0.0 && er.cut_time_level.is_some(),
        format!("{:.5} at n = {} (window {})", er.value, er.argmax, er.window),
    );
    out.json.push(("exponential_recurrence.json".into(), serde_json::to_value(&er)?));
    Ok(out)
}

pub fn backward_suite(lab: &Lab) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let (p, cache, s) = (&lab.conj, &lab.cache, &lab.s);
    let m = lab.s(16) as usize;
    let depth = lab.s(12) as usize;
    let chain = backward_series(p, cache, s, m, depth, 4)?;
    let ll = lab.log_lambda().to_f64();
    let a_star = lab.conj.alpha_star_f64();
    let mut r = SeriesReport::new(lab, "backward", &["n", "b_n", "tag"])
        .meta("anchor", m)
        .meta("offset", chain.offset.map_or("none".into(), |t| t.to_string()));
    for e in &chain.entries {
        r.push(vec![e.n.to_string(), cell(&e.b_n), e.tag.map_or(String::new(), |i| i.to_string())]);
    }
    out.reports.push(r);
    let wmin = chain.window_min().map(|e| e.b_n.to_f64()).unwrap_or(f64::NAN);
    let tmax = chain.max_tagged().map(|e| e.b_n.to_f64()).unwrap_or(f64::NAN);
    let want = (1.0 + a_star) * ll - 0.1;
    out.check("backward", "some b_n <= log λ + 0.05", wmin <= ll + 0.05, format!("{wmin:.4}"));
    out.check("backward", "some tagged b_n >= (1 + α★) log λ - 0.1", tmax >= want, format!("{tmax:.4} vs {want:.4}"));
    let mut consistent = true;
    for n in 1..=depth {
        consistent &= cocycle_defect(p, cache, &chain, n)?.contains_rational(&rug::Rational::new());
    }
    out.check("backward", "cocycle agrees with the forward closed form", consistent, "");
    out.check("backward", "tagged times inside predicted windows", chain.tags_within_windows(s), format!("{:?}", chain.tagged));
    Ok(out)
}

/// Writes `summary.json` for a set of checks.
pub fn write_summary(lab: &Lab, checks: &[Check], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let doc = serde_json::json!({
        "config": lab.config,
        "config_hash": lab.config.hash(),
        "lambda_f": lab.params.lambda.mid_digits(60),
        "all_pass": checks.iter().all(|c| c.pass),
        "checks": checks,
    });
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
    Ok(())
}
