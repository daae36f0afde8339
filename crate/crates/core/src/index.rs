use std::fmt;

use serde::{Deserialize, Serialize};

/// Multi-index `alpha = (alpha_1, ..., alpha_N)` of derivative or moment orders.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// One-dimensional index of order `a`.
    pub fn d1(a: u32) -> Self {
        MultiIndex(vec![a])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|alpha|`
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `alpha!`
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&a| factorial(a)).product()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// `x^alpha` for a point `x` of matching dimension.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&a, &xi)| xi.powi(a as i32))
            .product()
    }

    /// All indices of dimension `dim` with `|alpha| <= max_order`, graded order.
    pub fn all_up_to(dim: usize, max_order: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for total in 0..=max_order {
            let mut cur = vec![0u32; dim];
            compositions(total, 0, &mut cur, &mut out);
        }
        out
    }

    /// `alpha + e_j`
    pub fn bumped(&self, j: usize) -> MultiIndex {
        let mut v = self.0.clone();
        v[j] += 1;
        MultiIndex(v)
    }
}

fn compositions(rest: u32, pos: usize, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if pos + 1 == cur.len() {
        cur[pos] = rest;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for a in (0..=rest).rev() {
        cur[pos] = a;
        compositions(rest - a, pos + 1, cur, out);
    }
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            write!(f, "{}", self.0[0])
        } else {
            let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
            write!(f, "({})", parts.join(","))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_graded_indices() {
        let v = MultiIndex::all_up_to(2, 2);
        assert_eq!(v.len(), 6);
        assert_eq!(v[0], MultiIndex(vec![0, 0]));
        assert_eq!(MultiIndex::all_up_to(1, 3).len(), 4);
    }

    #[test]
    fn factorials() {
        assert_eq!(MultiIndex(vec![2, 3]).factorial(), 12.0);
        assert_eq!(MultiIndex::d1(0).factorial(), 1.0);
    }
}
