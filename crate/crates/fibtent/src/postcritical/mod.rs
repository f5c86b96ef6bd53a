//! The critical orbit `c_i = T^i(0)` and everything built from it: the
//! nested partitions `M_k`, their combinatorics, the diameters `|D_k|` and
//! return times into the intervals `I_k`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::kneading::{tent_step, TentParams};
use crate::numerics::{precision_budget, Ball, SignCertificate};

pub mod combinatorics;
pub mod diameters;
pub mod partition;
pub mod returns;
pub mod symbolic;

pub use combinatorics::{verify_combinatorics, ClaimStatus, CombinatoricsReport};
pub use diameters::{diameter_stats, length_identity, DiameterRow, DiameterStats};
pub use partition::{build_partition, interval_endpoints, locate, locate_index, Label, LabeledInterval, Location, PartitionLevel};
pub use returns::{entry_time, forward_return_times, forward_return_times_scan, return_window, ReturnTimes};
pub use symbolic::SymbolicOrbit;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "L",
            Side::Right => "R",
        }
    }
}

/// Side of `c` on which `c_{S(k)}` lies: `R, L, L, R` repeating with period 4.
pub fn side_rule(k: u32) -> Side {
    match k % 4 {
        0 | 3 => Side::Right,
        _ => Side::Left,
    }
}

/// Anything that can order two points of the critical orbit.
pub trait OrbitOrder: Sync {
    /// Certified order of `c_i` and `c_j`; `Equal` only for `i == j`.
    fn cmp_points(&self, i: usize, j: usize) -> Option<Ordering>;

    /// Largest usable orbit index.
    fn max_index(&self) -> usize;
}

/// Certified `c_1, ..., c_{i_max}` (with `c_0 = 0`).
#[derive(Clone, Debug)]
pub struct OrbitCache {
    params: TentParams,
    points: Vec<Ball>,
    precision_bits: u32,
    target_bits: u32,
}

impl OrbitCache {
    pub fn params(&self) -> &TentParams {
        &self.params
    }

    pub fn lambda(&self) -> &Ball {
        &self.params.lambda
    }

    pub fn point(&self, i: usize) -> &Ball {
        &self.points[i]
    }

    pub fn get(&self, i: usize) -> Result<&Ball> {
        self.points.get(i).ok_or(Error::CacheTooShort { have: self.i_max(), need: i })
    }

    pub fn points(&self) -> &[Ball] {
        &self.points
    }

    pub fn i_max(&self) -> usize {
        self.points.len() - 1
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    pub fn target_bits(&self) -> u32 {
        self.target_bits
    }

    pub fn side(&self, i: usize) -> Option<Side> {
        match self.points[i].sign() {
            SignCertificate::Positive => Some(Side::Right),
            SignCertificate::Negative => Some(Side::Left),
            SignCertificate::Unresolved => None,
        }
    }

    /// Certified `|c_i|`.
    pub fn abs(&self, i: usize) -> Ball {
        self.points[i].abs()
    }

    pub fn require(&self, need: usize) -> Result<()> {
        if need > self.i_max() {
            Err(Error::CacheTooShort { have: self.i_max(), need })
        } else {
            Ok(())
        }
    }
}

impl OrbitOrder for OrbitCache {
    fn cmp_points(&self, i: usize, j: usize) -> Option<Ordering> {
        if i == j {
            return Some(Ordering::Equal);
        }
        self.points.get(i)?.certified_cmp(self.points.get(j)?)
    }

    fn max_index(&self) -> usize {
        self.i_max()
    }
}

/// Builds the orbit of the turning point, each point to `target_bits`.
pub fn orbit_points(params: &TentParams, i_max: usize, target_bits: u32) -> Result<OrbitCache> {
    if i_max < 1 {
        return Err(Error::Config("i_max must be at least 1".into()));
    }
    let bits = precision_budget(i_max as u64, &params.lambda, target_bits);
    let lambda = params.lambda.with_prec(bits);
    let mut points = Vec::with_capacity(i_max + 1);
    points.push(Ball::zero(bits));
    for i in 1..=i_max {
        let next = tent_step(&lambda, &points[i - 1]);
        if next.rad_log2() > -(target_bits as f64) {
            return Err(Error::PrecisionCeiling { bits, index: Some(i) });
        }
        points.push(next);
    }
    Ok(OrbitCache { params: TentParams::new(lambda), points, precision_bits: bits, target_bits })
}
