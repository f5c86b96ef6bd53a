//! Successive returns of an orbit point into the shrinking intervals `I_k`.

use crate::error::{Error, Result};
use crate::kneading::CutTimes;

use super::partition::{in_interval, interval_endpoints, Label};
use super::OrbitOrder;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReturnTimes {
    pub start_index: usize,
    pub k: u32,
    /// `n_1, n_2, ...`: `c_{start + n_i} ∈ I_{k+i}`.
    pub times: Vec<u64>,
    /// Steps settled by the short candidate list rather than a scan.
    pub fast_steps: usize,
}

impl ReturnTimes {
    /// Whether every `n_i` lies in [`return_window`].
    pub fn within_windows(&self, s: &CutTimes) -> bool {
        self.times.iter().enumerate().all(|(i, &n)| {
            let (lo, hi) = return_window(s, self.k, i as u32 + 1);
            lo <= n && n <= hi
        })
    }
}

/// `S(k+i) - S(k) <= n_i <= S(k+i+2) - S(k+2)`.
pub fn return_window(s: &CutTimes, k: u32, i: u32) -> (u64, u64) {
    let g = |d: u32| s.get((k + d) as i64);
    (g(i) - g(0), g(i + 2) - g(2))
}

fn i_k(s: &CutTimes, k: u32) -> (usize, usize) {
    interval_endpoints(s, Label::I { k, n: 0 })
}

fn member(order: &dyn OrbitOrder, s: &CutTimes, k: u32, idx: usize) -> Result<bool> {
    if idx > order.max_index() {
        return Err(Error::CacheTooShort { have: order.max_index(), need: idx });
    }
    let (a, b) = i_k(s, k);
    in_interval(order, a, b, idx).ok_or_else(|| Error::Unresolved(format!("membership of c_{idx} in I_{k}")))
}

/// First `l >= 0` with `c_{j+l} ∈ I_k`, searching up to `max_l`.
pub fn entry_time(order: &dyn OrbitOrder, s: &CutTimes, j: usize, k: u32, max_l: usize) -> Result<Option<usize>> {
    for l in 0..=max_l {
        if member(order, s, k, j + l)? {
            return Ok(Some(l));
        }
    }
    Ok(None)
}

fn check_start(order: &dyn OrbitOrder, s: &CutTimes, start: usize, k: u32) -> Result<()> {
    if member(order, s, k, start)? {
        Ok(())
    } else {
        Err(Error::Unresolved(format!("c_{start} is not in I_{k}")))
    }
}

fn scan_step(order: &dyn OrbitOrder, s: &CutTimes, start: usize, level: u32, after: u64) -> Result<u64> {
    let mut m = after + 1;
    loop {
        if member(order, s, level, start + m as usize)? {
            return Ok(m);
        }
        m += 1;
    }
}

/// Reference implementation: scans every time step.
pub fn forward_return_times_scan(order: &dyn OrbitOrder, s: &CutTimes, start: usize, k: u32, depth: u32) -> Result<ReturnTimes> {
    check_start(order, s, start, k)?;
    let mut times = Vec::with_capacity(depth as usize);
    let mut prev = 0;
    for i in 1..=depth {
        prev = scan_step(order, s, start, k + i, prev)?;
        times.push(prev);
    }
    Ok(ReturnTimes { start_index: start, k, times, fast_steps: 0 })
}

/// Return times using the case analysis of the first return map: from a
/// point of `I_m` the next visit to `I_{m+1}` happens after `S(m-1)`,
/// `S(m)` or `S(m+1)` steps. Steps where no candidate is certified fall
/// back to a scan.
pub fn forward_return_times(order: &dyn OrbitOrder, s: &CutTimes, start: usize, k: u32, depth: u32) -> Result<ReturnTimes> {
    check_start(order, s, start, k)?;
    let mut times = Vec::with_capacity(depth as usize);
    let mut prev = 0u64;
    let mut fast_steps = 0;
    for i in 1..=depth {
        let m = (k + i - 1) as i64;
        let mut hit = None;
        for gap in [s.get(m - 1), s.get(m), s.get(m + 1)] {
            if member(order, s, k + i, start + (prev + gap) as usize)? {
                hit = Some(prev + gap);
                break;
            }
        }
        prev = match hit {
            Some(n) => {
                fast_steps += 1;
                n
            }
            None => scan_step(order, s, start, k + i, prev)?,
        };
        times.push(prev);
    }
    Ok(ReturnTimes { start_index: start, k, times, fast_steps })
}
