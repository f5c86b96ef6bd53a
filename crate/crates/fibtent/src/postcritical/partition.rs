//! The partition `M_k`: `S(k)` disjoint intervals spanned by orbit points.

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kneading::CutTimes;
use crate::numerics::Ball;

use super::{OrbitCache, OrbitOrder};

/// `I(k, n)` is `T^n(I_k)` and `J(k, n)` is `T^n(J_k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Label {
    I { k: u32, n: u64 },
    J { k: u32, n: u64 },
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::I { k, n } => write!(f, "I({k},{n})"),
            Label::J { k, n } => write!(f, "J({k},{n})"),
        }
    }
}

/// Orbit indices of the two endpoints, in the order the formulas list them.
pub fn interval_endpoints(s: &CutTimes, label: Label) -> (usize, usize) {
    let k = |k: u32, d: i64| s.at(k as i64 + d);
    match label {
        Label::I { k: kk, n: 0 } if kk % 2 == 0 => (k(kk, 0), k(kk, 1)),
        Label::I { k: kk, n: 0 } => (k(kk, 0), k(kk, 2)),
        Label::I { k: kk, n } => (n as usize, k(kk, 0) + n as usize),
        Label::J { k: kk, n } => (k(kk, -1) + n as usize, k(kk, 1) + k(kk, -1) + n as usize),
    }
}

/// The labels of `M_k`: `I(k, n)` for `n < S(k-1)`, then `J(k, n)` for `n < S(k-2)`.
pub fn level_labels(s: &CutTimes, k: u32) -> Vec<Label> {
    let ni = s.get(k as i64 - 1);
    let nj = s.get(k as i64 - 2);
    (0..ni).map(|n| Label::I { k, n }).chain((0..nj).map(|n| Label::J { k, n })).collect()
}

/// Largest orbit index used by `M_k`.
pub fn level_max_index(s: &CutTimes, k: u32) -> usize {
    level_labels(s, k)
        .into_iter()
        .map(|l| {
            let (a, b) = interval_endpoints(s, l);
            a.max(b)
        })
        .max()
        .unwrap_or(0)
}

#[derive(Clone, Debug)]
pub struct LabeledInterval {
    pub label: Label,
    pub endpoints: (usize, usize),
    /// Index of the left endpoint.
    pub lo: usize,
    /// Index of the right endpoint.
    pub hi: usize,
    pub hull: (Ball, Ball),
}

impl LabeledInterval {
    pub fn new(cache: &OrbitCache, s: &CutTimes, label: Label) -> Result<LabeledInterval> {
        let endpoints = interval_endpoints(s, label);
        let (a, b) = endpoints;
        cache.require(a.max(b))?;
        let (lo, hi) = match cache.cmp_points(a, b) {
            Some(Ordering::Greater) => (b, a),
            Some(_) => (a, b),
            None => return Err(Error::Unresolved(format!("endpoints of {label} cannot be ordered"))),
        };
        Ok(LabeledInterval { label, endpoints, lo, hi, hull: (cache.point(lo).clone(), cache.point(hi).clone()) })
    }

    /// `|hi - lo|` as a ball.
    pub fn length(&self) -> Ball {
        &self.hull.1 - &self.hull.0
    }
}

#[derive(Clone, Debug)]
pub struct PartitionLevel {
    pub k: u32,
    /// In label order.
    pub intervals: Vec<LabeledInterval>,
    /// Positions into `intervals`, left to right.
    pub spatial: Vec<usize>,
}

impl PartitionLevel {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn get(&self, label: Label) -> Option<&LabeledInterval> {
        self.intervals.iter().find(|iv| iv.label == label)
    }

    pub fn left_to_right(&self) -> impl Iterator<Item = &LabeledInterval> {
        self.spatial.iter().map(|&p| &self.intervals[p])
    }
}

/// Builds `M_k` and certifies that its intervals are pairwise disjoint.
pub fn build_partition(cache: &OrbitCache, s: &CutTimes, k: u32) -> Result<PartitionLevel> {
    cache.require(level_max_index(s, k))?;
    let intervals = level_labels(s, k)
        .into_iter()
        .map(|l| LabeledInterval::new(cache, s, l))
        .collect::<Result<Vec<_>>>()?;
    let mut spatial: Vec<usize> = (0..intervals.len()).collect();
    spatial.sort_by(|&a, &b| intervals[a].hull.0.mid().partial_cmp(intervals[b].hull.0.mid()).unwrap());
    for w in spatial.windows(2) {
        let (left, right) = (&intervals[w[0]], &intervals[w[1]]);
        if cache.cmp_points(left.hi, right.lo) != Some(Ordering::Less) {
            return Err(Error::DisjointnessUnresolved(left.label.to_string(), right.label.to_string()));
        }
    }
    Ok(PartitionLevel { k, intervals, spatial })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Inside(Label),
    Outside,
    Unresolved,
}

/// Locates an arbitrary ball. Membership is tested against the outer hull
/// of each interval, so a ball counts as inside when it is enclosed by
/// `[lo - r_lo, hi + r_hi]`.
pub fn locate(x: &Ball, level: &PartitionLevel) -> Location {
    let (xl, xu) = (x.lower(), x.upper());
    let mut undecided = false;
    for iv in level.left_to_right() {
        let (l, u) = (iv.hull.0.lower(), iv.hull.1.upper());
        if l <= xl && xu <= u {
            return Location::Inside(iv.label);
        }
        let outside = xu < l || xl > u;
        undecided |= !outside;
    }
    if undecided {
        Location::Unresolved
    } else {
        Location::Outside
    }
}

/// Whether `c_i` lies in the closed interval spanned by `c_a` and `c_b`.
pub fn in_interval(order: &dyn OrbitOrder, a: usize, b: usize, i: usize) -> Option<bool> {
    let (lo, hi) = match order.cmp_points(a, b)? {
        Ordering::Greater => (b, a),
        _ => (a, b),
    };
    let above = order.cmp_points(i, lo)? != Ordering::Less;
    if !above {
        return Some(false);
    }
    Some(order.cmp_points(i, hi)? != Ordering::Greater)
}

/// Locates the orbit point `c_i`; endpoint ties are settled by index.
pub fn locate_index(order: &dyn OrbitOrder, level: &PartitionLevel, i: usize) -> Location {
    let sorted = &level.spatial;
    let (mut lo, mut hi) = (0usize, sorted.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        match order.cmp_points(level.intervals[sorted[mid]].lo, i) {
            Some(Ordering::Greater) => hi = mid,
            Some(_) => lo = mid + 1,
            None => return Location::Unresolved,
        }
    }
    if lo == 0 {
        return Location::Outside;
    }
    let iv = &level.intervals[sorted[lo - 1]];
    match order.cmp_points(i, iv.hi) {
        Some(Ordering::Greater) => Location::Outside,
        Some(_) => Location::Inside(iv.label),
        None => Location::Unresolved,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kneading::fibonacci_cut_times;

    fn level(s: &CutTimes, k: u32) -> Vec<(usize, usize)> {
        level_labels(s, k).into_iter().map(|l| interval_endpoints(s, l)).collect()
    }

    #[test]
    fn small_levels_by_index() {
        let s = fibonacci_cut_times(20);
        assert_eq!(level(&s, 1), vec![(2, 5), (1, 4)]);
        assert_eq!(level(&s, 0), vec![(1, 2)]);
        assert_eq!(level(&s, 2), vec![(3, 5), (1, 4), (2, 7)]);
        let mut m3 = level(&s, 3);
        m3.sort();
        let mut expected = vec![(5, 13), (1, 6), (2, 7), (3, 11), (4, 12)];
        expected.sort();
        assert_eq!(m3, expected);
        for k in 1..=12 {
            assert_eq!(level_labels(&s, k).len() as u64, s.get(k as i64));
            // I_k^0 reaches c_{S(k+2)} for odd k; otherwise J_k^{S(k-2)-1} ends at S(k+2) - 1.
            let top = if k % 2 == 1 { s.at(k as i64 + 2) } else { s.at(k as i64 + 2) - 1 };
            assert_eq!(level_max_index(&s, k), top, "k = {k}");
        }
    }

    #[test]
    fn j4_follows_the_general_formula() {
        let s = fibonacci_cut_times(10);
        assert_eq!(interval_endpoints(&s, Label::J { k: 4, n: 0 }), (5, 18));
        assert_eq!(interval_endpoints(&s, Label::J { k: 4, n: 1 }), (6, 19));
    }
}
