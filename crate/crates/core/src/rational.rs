//! Arbitrary-precision rationals and the `"p/q"` text form used by mesh
//! files and reports.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::Error;

/// Exact rational scalar. `num_rational` keeps the canonical form
/// (positive denominator, reduced) for us.
pub type Q = num_rational::BigRational;

/// Rational from an integer pair.
pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// Rational from an integer.
pub fn qi(num: i64) -> Q {
    Q::from_integer(BigInt::from(num))
}

/// Formats as `"p"` for integers and `"p/q"` otherwise.
pub fn format_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `"p"` or `"p/q"`.
pub fn parse_q(s: &str) -> Result<Q, Error> {
    let bad = || Error::BadRational(s.to_string());
    let s = s.trim();
    match s.split_once('/') {
        None => {
            let n: BigInt = s.parse().map_err(|_| bad())?;
            Ok(Q::from_integer(n))
        }
        Some((num, den)) => {
            let n: BigInt = num.trim().parse().map_err(|_| bad())?;
            let d: BigInt = den.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Q::new(n, d))
        }
    }
}

/// Exact square root when `x` is the square of a rational, `None` otherwise.
pub fn sqrt_exact(x: &Q) -> Option<Q> {
    if x.is_negative() {
        return None;
    }
    let num = x.numer().sqrt();
    let den = x.denom().sqrt();
    if &(&num * &num) == x.numer() && &(&den * &den) == x.denom() {
        Some(Q::new(num, den))
    } else {
        None
    }
}

/// Lossy conversion for the floating-point paths.
pub fn to_f64(x: &Q) -> f64 {
    let num = x.numer();
    let den = x.denom();
    // Split off the integer part first so huge numerators stay accurate.
    let (int, rem) = num_integer::Integer::div_rem(num, den);
    let int_f = int.to_string().parse::<f64>().unwrap_or(f64::NAN);
    let rem_f = rem.to_string().parse::<f64>().unwrap_or(f64::NAN);
    let den_f = den.to_string().parse::<f64>().unwrap_or(f64::NAN);
    int_f + rem_f / den_f
}
