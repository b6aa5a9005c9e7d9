//! Exact rational scalars used by all algebraic modules.
//!
//! Coefficients are kept exact end to end: every identity implemented in this
//! crate is an exact algebraic statement and floating point would mask
//! failures. `Q` is an arbitrary-precision rational.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(num: i64) -> Q {
    Q::from_integer(BigInt::from(num))
}

pub fn factorial(n: u32) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=u64::from(n) {
        acc *= k;
    }
    acc
}

/// Binomial coefficient `n choose k` as an exact integer; zero when `k > n`.
pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (u64::from(n) - u64::from(i)) / (u64::from(i) + 1);
    }
    acc
}

/// Parses "p", "p/q" or decimal-free signed integers into an exact rational.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().ok()?;
        let d: BigInt = den.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        Some(Q::new(n, d))
    } else {
        let n: BigInt = s.parse().ok()?;
        Some(Q::from_integer(n))
    }
}

/// Renders a rational as "p" or "p/q" without spaces.
pub fn format_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn q_to_f64(x: &Q) -> f64 {
    // Good enough for reporting; exact paths never round-trip through f64.
    let num = x.numer();
    let den = x.denom();
    let scale = 1_000_000_000_000i64;
    let scaled = (num * scale) / den;
    let approx: f64 = scaled.to_string().parse().unwrap_or(if x.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    });
    approx / scale as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_and_factorial_agree() {
        for n in 0..10u32 {
            for k in 0..=n {
                let lhs = binomial(n, k) * factorial(k) * factorial(n - k);
                assert_eq!(lhs, factorial(n));
            }
        }
        assert!(binomial(3, 5).is_zero());
    }

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["0", "5", "-7", "3/4", "-251/100"] {
            let v = parse_q(s).unwrap();
            assert_eq!(format_q(&v), s);
        }
        assert!(parse_q("1/0").is_none());
    }

    #[test]
    fn f64_approximation() {
        assert!((q_to_f64(&q(-251, 100)) + 2.51).abs() < 1e-9);
    }
}
