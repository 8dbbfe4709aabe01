//! Exact rational arithmetic helpers.
//!
//! All densities, indices and rounding targets in this crate are exact
//! rationals; floating point only appears in empirical Monte Carlo bounds.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rat = BigRational;

/// Rational from an integer pair, `q != 0`.
pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_int(p: i64) -> Rat {
    Rat::from_integer(BigInt::from(p))
}

pub fn rat_usize(p: usize) -> Rat {
    Rat::from_integer(BigInt::from(p))
}

pub fn rat_zero() -> Rat {
    Rat::zero()
}

pub fn rat_one() -> Rat {
    Rat::one()
}

/// Exact floor as `BigInt`.
pub fn floor_int(x: &Rat) -> BigInt {
    x.floor().to_integer()
}

/// Exact ceiling as `BigInt`.
pub fn ceil_int(x: &Rat) -> BigInt {
    x.ceil().to_integer()
}

/// `ceil(x)` for a positive rational, clamped into `usize`.
pub fn ceil_usize(x: &Rat) -> usize {
    assert!(!x.is_negative(), "ceil_usize on negative rational");
    ceil_int(x).to_usize().unwrap_or(usize::MAX)
}

pub fn to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Renders `p/q` (or just `p` for integers), the wire format used in all
/// JSON reports.
pub fn format_rat(x: &Rat) -> String {
    if x.is_integer() {
        x.to_integer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `p`, `p/q` or a plain decimal such as `0.5`.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let num: BigInt = p
            .trim()
            .parse()
            .map_err(|_| Error::input(format!("bad rational numerator `{p}`")))?;
        let den: BigInt = q
            .trim()
            .parse()
            .map_err(|_| Error::input(format!("bad rational denominator `{q}`")))?;
        if den.is_zero() {
            return Err(Error::input("rational with zero denominator"));
        }
        return Ok(Rat::new(num, den));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let digits = frac.len() as u32;
        let scale = BigInt::from(10u32).pow(digits);
        let whole: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse()
                .map_err(|_| Error::input(format!("bad decimal `{s}`")))?
        };
        let frac_val: BigInt = if frac.is_empty() {
            BigInt::zero()
        } else {
            frac.parse()
                .map_err(|_| Error::input(format!("bad decimal `{s}`")))?
        };
        let neg = s.starts_with('-');
        let magnitude = whole.abs() * &scale + frac_val;
        let signed = if neg { -magnitude } else { magnitude };
        return Ok(Rat::new(signed, scale));
    }
    let int: BigInt = s
        .parse()
        .map_err(|_| Error::input(format!("bad rational `{s}`")))?;
    Ok(Rat::from_integer(int))
}
