//! Ordering orbit points by their itineraries alone.
//!
//! For the Fibonacci slope the itinerary of `c_i` is the shifted kneading
//! sequence `e_i e_{i+1} ...`, and the spatial order of two points is the
//! parity-lexicographic order of their itineraries. This reaches orbit
//! indices far beyond any numerically cached prefix.

use std::cmp::Ordering;

use crate::error::Result;
use crate::kneading::{fibonacci_cut_times, kneading_from_map, KneadingMap};

use super::OrbitOrder;

#[derive(Clone, Debug)]
pub struct SymbolicOrbit {
    /// `e[i]` is the symbol of `c_i`; `e[0]` is a placeholder for `c_0 = c`.
    e: Vec<u8>,
}

impl SymbolicOrbit {
    /// Kneading symbols up to `S(k_len)`.
    pub fn fibonacci(k_len: u32) -> Result<SymbolicOrbit> {
        let len = fibonacci_cut_times(k_len).at(k_len as i64);
        let bits = kneading_from_map(&KneadingMap::fibonacci(), len)?.bits().expect("no C in a kneading sequence");
        let mut e = Vec::with_capacity(len + 1);
        e.push(u8::MAX);
        e.extend(bits);
        Ok(SymbolicOrbit { e })
    }

    pub fn symbol(&self, i: usize) -> Option<u8> {
        (i >= 1).then(|| self.e.get(i).copied()).flatten()
    }

    pub fn len(&self) -> usize {
        self.e.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl OrbitOrder for SymbolicOrbit {
    fn cmp_points(&self, i: usize, j: usize) -> Option<Ordering> {
        if i == j {
            return Some(Ordering::Equal);
        }
        if i == 0 || j == 0 {
            let other = self.symbol(i.max(j))?;
            let ord = if other == 1 { Ordering::Less } else { Ordering::Greater };
            return Some(if i == 0 { ord } else { ord.reverse() });
        }
        let mut odd = false;
        let n = self.e.len();
        let (mut a, mut b) = (i, j);
        while a < n && b < n {
            let (x, y) = (self.e[a], self.e[b]);
            if x != y {
                let less = (x < y) != odd;
                return Some(if less { Ordering::Less } else { Ordering::Greater });
            }
            odd ^= x == 1;
            a += 1;
            b += 1;
        }
        None
    }

    fn max_index(&self) -> usize {
        self.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signs_follow_kneading() {
        let o = SymbolicOrbit::fibonacci(10).unwrap();
        // c_1 > 0 > c_2
        assert_eq!(o.cmp_points(1, 0), Some(Ordering::Greater));
        assert_eq!(o.cmp_points(0, 2), Some(Ordering::Greater));
        assert_eq!(o.cmp_points(2, 1), Some(Ordering::Less));
        assert_eq!(o.cmp_points(5, 5), Some(Ordering::Equal));
        // c_1 is the maximum of the orbit.
        for j in 2..80 {
            assert_eq!(o.cmp_points(j, 1), Some(Ordering::Less));
        }
    }
}
