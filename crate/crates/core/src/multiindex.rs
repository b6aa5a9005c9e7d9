//! Multi-indices in N^{d+1} with componentwise arithmetic.
//!
//! Factorials and binomials act componentwise. Subtraction that would go
//! negative is not an error: it returns `None` and the caller annihilates the
//! enclosing term.

use crate::rational::{binomial, factorial, Q};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zeros(len: usize) -> Self {
        MultiIndex(vec![0; len])
    }

    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = vec![0; len];
        v[i] = 1;
        MultiIndex(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.len(), other.len());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Componentwise subtraction; `None` marks an invalid (annihilating) index.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    pub fn leq(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Componentwise factorial product `k!`.
    pub fn factorial(&self) -> BigInt {
        self.0.iter().map(|&k| factorial(k)).product()
    }

    /// Componentwise binomial product `(self choose k)`; zero if `k` exceeds.
    pub fn binomial(&self, k: &MultiIndex) -> BigInt {
        if !k.leq(self) {
            return BigInt::zero();
        }
        self.0
            .iter()
            .zip(&k.0)
            .map(|(&n, &j)| binomial(n, j))
            .product()
    }

    /// Scaled size `|m|_s = s_0 m_0 + ... + s_d m_d`.
    pub fn scaled_len(&self, scaling: &[Q]) -> Q {
        debug_assert_eq!(self.len(), scaling.len());
        let mut acc = Q::zero();
        for (m, s) in self.0.iter().zip(scaling) {
            acc += s * Q::from_integer(BigInt::from(*m));
        }
        acc
    }

    /// All indices `l` with `l <= self` componentwise, in lexicographic order.
    pub fn sub_indices(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex(Vec::with_capacity(self.len()))];
        for &cap in &self.0 {
            let mut next = Vec::with_capacity(out.len() * (cap as usize + 1));
            for prefix in &out {
                for v in 0..=cap {
                    let mut p = prefix.0.clone();
                    p.push(v);
                    next.push(MultiIndex(p));
                }
            }
            out = next;
        }
        out
    }

    /// All ways to split `self` into `parts` multi-indices summing to it.
    pub fn decompositions(&self, parts: usize) -> Vec<Vec<MultiIndex>> {
        if parts == 0 {
            return if self.is_zero() { vec![vec![]] } else { vec![] };
        }
        if parts == 1 {
            return vec![vec![self.clone()]];
        }
        let mut out = Vec::new();
        for first in self.sub_indices() {
            let rest = self.checked_sub(&first).expect("sub_indices respects bound");
            for mut tail in rest.decompositions(parts - 1) {
                let mut v = Vec::with_capacity(parts);
                v.push(first.clone());
                v.append(&mut tail);
                out.push(v);
            }
        }
        out
    }

    /// Multinomial-style sequential binomial: the coefficient picked up when
    /// the listed indices are removed one after another from `self`.
    pub fn sequential_binomial(&self, picks: &[&MultiIndex]) -> BigInt {
        let mut remaining = self.clone();
        let mut acc = BigInt::one();
        for p in picks {
            let b = remaining.binomial(p);
            if b.is_zero() {
                return BigInt::zero();
            }
            acc *= b;
            remaining = match remaining.checked_sub(p) {
                Some(r) => r,
                None => return BigInt::zero(),
            };
        }
        acc
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    #[test]
    fn arithmetic() {
        let a = mi(&[2, 1]);
        let b = mi(&[1, 0]);
        assert_eq!(a.add(&b), mi(&[3, 1]));
        assert_eq!(a.checked_sub(&b), Some(mi(&[1, 1])));
        assert_eq!(b.checked_sub(&a), None);
        assert_eq!(a.factorial(), BigInt::from(2));
        assert_eq!(mi(&[3, 2]).binomial(&mi(&[1, 1])), BigInt::from(6));
        assert_eq!(mi(&[1, 1]).binomial(&mi(&[2, 0])), BigInt::zero());
    }

    #[test]
    fn scaled_length_uses_scaling() {
        let s = [q(2, 1), q(1, 1)];
        assert_eq!(mi(&[1, 3]).scaled_len(&s), q(5, 1));
    }

    #[test]
    fn decompositions_count() {
        // Splitting (2,1) over 2 slots: 3 * 2 = 6 componentwise choices.
        assert_eq!(mi(&[2, 1]).decompositions(2).len(), 6);
        // Zero multi-index over 0 slots is the single empty decomposition.
        assert_eq!(mi(&[0, 0]).decompositions(0).len(), 1);
        assert_eq!(mi(&[1, 0]).decompositions(0).len(), 0);
    }

    #[test]
    fn sequential_binomial_is_multinomial() {
        let n = mi(&[2]);
        let l1 = mi(&[1]);
        let l2 = mi(&[1]);
        // 2!/(1!1!0!) = 2
        assert_eq!(n.sequential_binomial(&[&l1, &l2]), BigInt::from(2));
    }
}
