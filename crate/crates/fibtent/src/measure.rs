//! The invariant measure on the post-critical Cantor set.
//!
//! Interval masses are powers of `1/φ`, so every identity is checked in
//! `ℤ[φ]`, with elements stored as integer pairs `a + bφ`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;

use crate::kneading::CutTimes;
use crate::numerics::Ball;
use crate::par;
use crate::postcritical::{locate_index, Label, Location, OrbitOrder, PartitionLevel};

/// `a + bφ` with `φ² = φ + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ZPhi {
    pub a: i128,
    pub b: i128,
}

impl ZPhi {
    pub const ZERO: ZPhi = ZPhi { a: 0, b: 0 };
    pub const ONE: ZPhi = ZPhi { a: 1, b: 0 };
    pub const PHI: ZPhi = ZPhi { a: 0, b: 1 };

    pub fn new(a: i128, b: i128) -> ZPhi {
        ZPhi { a, b }
    }

    pub fn int(a: i128) -> ZPhi {
        ZPhi { a, b: 0 }
    }

    /// `φ^{-n} = (-1)^n (F_{n+1} - F_n φ)`.
    pub fn phi_inv_pow(n: u32) -> ZPhi {
        let (mut f0, mut f1) = (0i128, 1i128);
        for _ in 0..n {
            (f0, f1) = (f1, f0 + f1);
        }
        let sign = if n % 2 == 0 { 1 } else { -1 };
        ZPhi { a: sign * f1, b: -sign * f0 }
    }

    pub fn to_ball(self, prec: u32) -> Ball {
        let phi = Ball::phi(prec);
        &Ball::from_i64(self.a as i64, prec) + &(&Ball::from_i64(self.b as i64, prec) * &phi)
    }
}

impl Add for ZPhi {
    type Output = ZPhi;
    fn add(self, o: ZPhi) -> ZPhi {
        ZPhi { a: self.a + o.a, b: self.b + o.b }
    }
}

impl Sub for ZPhi {
    type Output = ZPhi;
    fn sub(self, o: ZPhi) -> ZPhi {
        ZPhi { a: self.a - o.a, b: self.b - o.b }
    }
}

impl Neg for ZPhi {
    type Output = ZPhi;
    fn neg(self) -> ZPhi {
        ZPhi { a: -self.a, b: -self.b }
    }
}

impl Mul for ZPhi {
    type Output = ZPhi;
    fn mul(self, o: ZPhi) -> ZPhi {
        let bd = self.b * o.b;
        ZPhi { a: self.a * o.a + bd, b: self.a * o.b + self.b * o.a + bd }
    }
}

impl fmt::Display for ZPhi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

/// `(μ(I_m), μ(J_m)) = (φ^{-m}, φ^{-(m+1)})`.
pub fn measure_closed_form_exact(m: u32) -> (ZPhi, ZPhi) {
    (ZPhi::phi_inv_pow(m), ZPhi::phi_inv_pow(m + 1))
}

pub fn measure_closed_form(m: u32, prec: u32) -> (Ball, Ball) {
    let (i, j) = measure_closed_form_exact(m);
    (i.to_ball(prec), j.to_ball(prec))
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureTable {
    /// Index `m - 1` holds `(μ(I_m), μ(J_m))`.
    pub rows: Vec<(ZPhi, ZPhi)>,
}

impl MeasureTable {
    pub fn get(&self, m: u32) -> (ZPhi, ZPhi) {
        self.rows[m as usize - 1]
    }

    pub fn m_max(&self) -> u32 {
        self.rows.len() as u32
    }
}

/// Runs the inverse Fibonacci step `μ(I_k) = μ(J_{k-1})`,
/// `μ(J_k) = μ(I_{k-1}) - μ(J_{k-1})` from `m = 1`.
pub fn measure_recursion(m_max: u32) -> MeasureTable {
    let mut rows = vec![(ZPhi::new(-1, 1), ZPhi::new(2, -1))];
    for _ in 1..m_max {
        let (i, j) = *rows.last().unwrap();
        rows.push((j, i - j));
    }
    MeasureTable { rows }
}

/// `S(k-1) μ(I_k) + S(k-2) μ(J_k)`, which must equal one.
pub fn normalization(table: &MeasureTable, s: &CutTimes, k: u32) -> ZPhi {
    let (i, j) = table.get(k);
    ZPhi::int(s.get(k as i64 - 1) as i128) * i + ZPhi::int(s.get(k as i64 - 2) as i128) * j
}

/// `[[1,1],[1,0]]^p`.
pub fn fibonacci_matrix_power(p: u32) -> [[u64; 2]; 2] {
    let mut m = [[1u64, 0], [0, 1]];
    for _ in 0..p {
        m = [[m[0][0] + m[0][1], m[0][0]], [m[1][0] + m[1][1], m[1][0]]];
    }
    m
}

#[derive(Clone, Debug, Serialize)]
pub struct Frequencies {
    pub n: usize,
    pub counts: BTreeMap<Label, usize>,
    pub outside: usize,
    pub unresolved: usize,
}

impl Frequencies {
    pub fn frequency(&self, label: Label) -> f64 {
        self.counts.get(&label).copied().unwrap_or(0) as f64 / self.n as f64
    }

    pub fn unresolved_fraction(&self) -> f64 {
        self.unresolved as f64 / self.n as f64
    }

    /// Sum of all label frequencies plus the outside and unresolved shares.
    pub fn total(&self) -> f64 {
        (self.counts.values().sum::<usize>() + self.outside + self.unresolved) as f64 / self.n as f64
    }
}

/// Visit frequencies of `c_1, ..., c_N` in the intervals of `level`.
pub fn empirical_frequencies(order: &dyn OrbitOrder, level: &PartitionLevel, n: usize) -> Frequencies {
    let locs = par::map_range(1, n + 1, |j| {
        if j > order.max_index() {
            Location::Unresolved
        } else {
            locate_index(order, level, j)
        }
    });
    let mut counts: BTreeMap<Label, usize> = level.intervals.iter().map(|iv| (iv.label, 0)).collect();
    let (mut outside, mut unresolved) = (0, 0);
    for loc in locs {
        match loc {
            Location::Inside(l) => *counts.entry(l).or_default() += 1,
            Location::Outside => outside += 1,
            Location::Unresolved => unresolved += 1,
        }
    }
    Frequencies { n, counts, outside, unresolved }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kneading::fibonacci_cut_times;
    use proptest::prelude::*;

    #[test]
    fn anchors() {
        let (i1, j1) = measure_closed_form_exact(1);
        assert_eq!(i1 * ZPhi::PHI, ZPhi::ONE);
        assert_eq!(j1 * ZPhi::PHI * ZPhi::PHI, ZPhi::ONE);
        let (i2, j2) = measure_closed_form_exact(2);
        assert_eq!(i2, j1);
        assert_eq!(j2 * ZPhi::PHI, i2);
        let (a, b) = measure_closed_form(1, 128);
        assert!((a.to_f64() - 0.6180339887498949).abs() < 1e-15);
        assert!((b.to_f64() - 0.3819660112501051).abs() < 1e-15);
        let (i5, j5) = measure_closed_form_exact(5);
        assert_eq!(i5 + j5, measure_closed_form_exact(4).0);
    }

    #[test]
    fn recursion_matches_closed_form() {
        let t = measure_recursion(40);
        let s = fibonacci_cut_times(40);
        for m in 1..=40 {
            assert_eq!(t.get(m), measure_closed_form_exact(m));
            assert_eq!(normalization(&t, &s, m), ZPhi::ONE, "m = {m}");
            if m >= 2 {
                let (i, j) = t.get(m);
                assert_eq!(i + j, t.get(m - 1).0);
                assert_eq!(t.get(m - 1).1, i);
            }
        }
        let m9 = fibonacci_matrix_power(8);
        assert_eq!(m9, [[s.get(7), s.get(6)], [s.get(6), s.get(5)]]);
    }

    proptest! {
        #[test]
        fn ring_laws(a in -1000i128..1000, b in -1000i128..1000, c in -1000i128..1000, d in -1000i128..1000) {
            let (x, y) = (ZPhi::new(a, b), ZPhi::new(c, d));
            prop_assert_eq!(x * y, y * x);
            prop_assert_eq!((x + y) * x, x * x + y * x);
            let fx = x.to_ball(128).to_f64() * y.to_ball(128).to_f64();
            let p = (x * y).to_ball(128).to_f64();
            prop_assert!((fx - p).abs() <= 1e-9 * (1.0 + p.abs()));
        }
    }
}
