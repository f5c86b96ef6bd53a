//! Certified checks of the combinatorial structure of the partitions.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::Result;
use crate::kneading::CutTimes;
use crate::par;

use super::partition::{in_interval, interval_endpoints, locate_index, Label, Location, PartitionLevel};
use super::{build_partition, side_rule, OrbitCache, OrbitOrder, Side};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ClaimStatus {
    True,
    False,
    Unresolved,
}

impl From<Option<bool>> for ClaimStatus {
    fn from(v: Option<bool>) -> ClaimStatus {
        match v {
            Some(true) => ClaimStatus::True,
            Some(false) => ClaimStatus::False,
            None => ClaimStatus::Unresolved,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClaimRow {
    pub claim: &'static str,
    pub k: u32,
    /// Second level for claims relating two levels.
    pub k2: Option<u32>,
    pub status: ClaimStatus,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CombinatoricsReport {
    pub rows: Vec<ClaimRow>,
}

impl CombinatoricsReport {
    pub fn all_true(&self) -> bool {
        self.rows.iter().all(|r| r.status == ClaimStatus::True)
    }

    pub fn count(&self, status: ClaimStatus) -> usize {
        self.rows.iter().filter(|r| r.status == status).count()
    }

    pub fn claim(&self, name: &str) -> impl Iterator<Item = &ClaimRow> + '_ {
        let name = name.to_string();
        self.rows.iter().filter(move |r| r.claim == name)
    }
}

fn row(claim: &'static str, k: u32, k2: Option<u32>, status: impl Into<ClaimStatus>, detail: String) -> ClaimRow {
    ClaimRow { claim, k, k2, status: status.into(), detail }
}

/// `[c_a, c_b] ⊂ [c_x, c_y]`, with endpoint ties settled by index.
fn nested(order: &dyn OrbitOrder, inner: (usize, usize), outer: (usize, usize)) -> Option<bool> {
    Some(in_interval(order, outer.0, outer.1, inner.0)? && in_interval(order, outer.0, outer.1, inner.1)?)
}

fn endpoints(s: &CutTimes, label: Label) -> (usize, usize) {
    interval_endpoints(s, label)
}

fn d_interval(s: &CutTimes, k: u32) -> (usize, usize) {
    (0, s.at(k as i64))
}

/// Runs every combinatorial claim for `k = 1..=k_max`; unresolved
/// comparisons are reported, never raised.
pub fn verify_combinatorics(cache: &OrbitCache, s: &CutTimes, k_max: u32) -> Result<CombinatoricsReport> {
    let levels: Vec<Option<PartitionLevel>> = par::map_range(0, k_max as usize + 2, |k| build_partition(cache, s, k as u32).ok());
    let mut rows = Vec::new();

    for k in 1..=k_max {
        let status = levels[k as usize].as_ref().map(|l| l.len() as u64 == s.get(k as i64));
        rows.push(row("partition_count_disjoint", k, None, status, format!("S(k) = {}", s.get(k as i64))));
    }

    let nesting = par::map_range(1, k_max as usize + 1, |k| {
        let (Some(outer), Some(inner)) = (&levels[k], &levels[k + 1]) else {
            return row("nesting", k as u32, Some(k as u32 + 1), None, "level not built".into());
        };
        let mut status = Some(true);
        for iv in &inner.intervals {
            let a = locate_index(cache, outer, iv.lo);
            let b = locate_index(cache, outer, iv.hi);
            let here = match (a, b) {
                (Location::Inside(x), Location::Inside(y)) => Some(x == y),
                (Location::Unresolved, _) | (_, Location::Unresolved) => None,
                _ => Some(false),
            };
            status = match (status, here) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (None, _) | (_, None) => None,
                _ => Some(true),
            };
        }
        row("nesting", k as u32, Some(k as u32 + 1), status, String::new())
    });
    rows.extend(nesting);

    let chains = par::map_range(1, k_max as usize + 1, |kp| {
        let kp = kp as u32;
        let j = endpoints(s, Label::J { k: kp, n: 0 });
        let d = d_interval(s, kp - 1);
        let mut out = Vec::new();
        for k in 0..kp {
            let i = endpoints(s, Label::I { k, n: 0 });
            let status = match (nested(cache, j, d), nested(cache, d, i)) {
                (Some(a), Some(b)) => Some(a && b),
                _ => None,
            };
            out.push(row("j_in_d_in_i", k, Some(kp), status, String::new()));
        }
        out
    });
    rows.extend(chains.into_iter().flatten());

    let orbit_order = par::map_range(1, k_max as usize + 1, |k| {
        let edge = s.at(k as i64 - 1);
        let target = cache.abs(edge);
        let mut status = Some(true);
        for i in (1..s.at(k as i64)).filter(|&i| i != edge) {
            let here = cache.abs(i).certified_cmp(&target).map(|o| o == Ordering::Greater);
            status = match (status, here) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (None, _) | (_, None) => None,
                _ => Some(true),
            };
        }
        row("orbit_order", k as u32, None, status, format!("|c_i| > |c_{edge}| for 0 < i < {}", s.get(k as i64)))
    });
    rows.extend(orbit_order);

    for k in 1..=k_max {
        let i = endpoints(s, Label::I { k, n: 0 });
        let inner_i = endpoints(s, Label::I { k: k + 1, n: 0 });
        let inner_j = endpoints(s, Label::J { k: k + 1, n: 0 });
        let status = match (nested(cache, inner_i, i), nested(cache, inner_j, i)) {
            (Some(a), Some(b)) => Some(a && b),
            _ => None,
        };
        rows.push(row("next_level_in_i", k, Some(k + 1), status, String::new()));
    }

    for k in 1..=k_max {
        let ok = s.get(k as i64) + s.get(k as i64 - 1) == s.get(k as i64 + 1);
        let detail = format!("T^S(k-1)(I_k) = [c_{}, c_{}]", s.get(k as i64 - 1), s.get(k as i64 + 1));
        rows.push(row("interval_image", k, None, Some(ok), detail));
    }

    for k in 0..=k_max {
        let side = cache.side(s.at(k as i64));
        let expected = side_rule(k);
        let status = side.map(|x| x == expected);
        let detail = format!("expected {}", if expected == Side::Right { "R" } else { "L" });
        rows.push(row("side_rule", k, None, status, detail));
    }

    Ok(CombinatoricsReport { rows })
}
