//! Exact rational scalars and small parsing/formatting helpers.
//!
//! All decision-path arithmetic in this crate is exact; `Rational` is the
//! only scalar type that appears in lattice data.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always stored reduced with positive denominator.
pub type Rational = num_rational::BigRational;

/// Shorthand for a small integer rational.
pub fn rat_i(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Shorthand for `n/d` from machine integers. Panics on `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn is_integer(x: &Rational) -> bool {
    x.denom().is_one()
}

/// Reduce `x` into `[0, 1)` modulo Z.
pub fn mod_one(x: &Rational) -> Rational {
    x - x.floor()
}

/// True iff `x ≡ y (mod Z)`.
pub fn congruent_mod_one(x: &Rational, y: &Rational) -> bool {
    is_integer(&(x - y))
}

/// True iff `x ≡ y (mod 2Z)`.
pub fn congruent_mod_two(x: &Rational, y: &Rational) -> bool {
    let d = x - y;
    is_integer(&d) && (d.numer() % 2i32).is_zero()
}

/// Nearest integer to `x`, rounding half up.
pub fn round_half_up(x: &Rational) -> BigInt {
    (x + rat(1, 2)).floor().to_integer()
}

/// Largest integer `r` with `r*r <= x`, for nonnegative rational `x`.
pub fn floor_sqrt(x: &Rational) -> BigInt {
    assert!(!x.is_negative(), "floor_sqrt of negative rational");
    x.to_integer().sqrt()
}

/// Parse `"a"` or `"a/b"` into a rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("invalid rational `{s}`"));
    match s.split_once('/') {
        None => {
            let n: BigInt = s.parse().map_err(|_| bad())?;
            Ok(Rational::from_integer(n))
        }
        Some((n, d)) => {
            let n: BigInt = n.parse().map_err(|_| bad())?;
            let d: BigInt = d.parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in `{s}`")));
            }
            Ok(Rational::new(n, d))
        }
    }
}

/// Format as `a` or `a/b`, matching what `parse_rational` accepts.
pub fn format_rational(x: &Rational) -> String {
    if is_integer(x) {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["0", "-3", "12/5", "-1/2", "100000000000000000000/7"] {
            let x = parse_rational(s).unwrap();
            assert_eq!(format_rational(&x), s);
        }
        assert_eq!(parse_rational("6/4").unwrap(), rat(3, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("a/b").is_err());
    }

    #[test]
    fn congruences() {
        assert!(congruent_mod_one(&rat(12, 5), &rat(-3, 5)));
        assert!(!congruent_mod_one(&rat(12, 5), &rat(1, 5)));
        assert!(congruent_mod_two(&rat(18, 5), &rat(-12, 5)));
        assert!(!congruent_mod_two(&rat(13, 5), &rat(-12, 5)));
        assert_eq!(mod_one(&rat(-12, 5)), rat(3, 5));
    }

    #[test]
    fn rounding() {
        assert_eq!(round_half_up(&rat(1, 2)), BigInt::from(1));
        assert_eq!(round_half_up(&rat(-1, 2)), BigInt::from(0));
        assert_eq!(round_half_up(&rat(7, 5)), BigInt::from(1));
        assert_eq!(floor_sqrt(&rat_i(17)), BigInt::from(4));
    }
}
