//! Exact rational parsing and formatting.
//!
//! Everything in this crate computes over `num::BigRational`; floating point
//! never appears. Knife-edge comparisons (round-up rents of size `q/γ`,
//! bracket equalities in the discrete first-order conditions) decide real
//! outcomes, so ties must be exact, not approximate.
//!
//! Input files and reports use two encodings, both lossless:
//! fraction strings (`"89/91"`, `"-3/4"`, `"7"`) and decimal strings
//! (`"0.05"`, `"-3.73"`).

use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

/// The exact scalar used throughout the crate.
pub type Rat = BigRational;

/// Rational from a numerator/denominator pair. Panics on a zero denominator.
pub fn rat(numer: i64, denom: i64) -> Rat {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Rational from a signed integer.
pub fn rat_int(n: i64) -> Rat {
    BigRational::from_integer(BigInt::from(n))
}

/// Rational from an unsigned integer (quantities, transfers, grid sizes).
pub fn rat_u64(n: u64) -> Rat {
    BigRational::from_integer(BigInt::from(n))
}

/// Parse `"p/q"`, a plain integer, or a decimal string into an exact rational.
///
/// ```
/// use screenlab_core::rational::{parse_rat, rat};
/// assert_eq!(parse_rat("89/91").unwrap(), rat(89, 91));
/// assert_eq!(parse_rat("-0.25").unwrap(), rat(-1, 4));
/// assert_eq!(parse_rat("50").unwrap(), rat(50, 1));
/// ```
pub fn parse_rat(s: &str) -> Result<Rat> {
    let text = s.trim();
    let bad = || Error::InvalidRational(s.to_string());
    if text.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = text.split_once('/') {
        let numer: BigInt = n.trim().parse().map_err(|_| bad())?;
        let denom: BigInt = d.trim().parse().map_err(|_| bad())?;
        if denom.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(numer, denom));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        let negative = whole.trim_start().starts_with('-');
        let whole_part: BigInt = if whole.is_empty() || whole == "-" || whole == "+" {
            BigInt::zero()
        } else {
            whole.parse().map_err(|_| bad())?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let frac_digits: BigInt = frac.parse().map_err(|_| bad())?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let mut value = BigRational::new(whole_part.magnitude().clone().into(), BigInt::one())
            + BigRational::new(frac_digits, scale);
        if negative {
            value = -value;
        }
        return Ok(value);
    }
    let numer: BigInt = text.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(numer))
}

/// Canonical fraction rendering: `"p/q"`, or the bare integer when q = 1.
pub fn format_fraction(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Exact decimal rendering when one exists (denominator of the form 2^a·5^b),
/// otherwise `None`. Never rounds.
pub fn format_decimal_exact(r: &Rat) -> Option<String> {
    let mut den = r.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut twos = 0u32;
    let mut fives = 0u32;
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return None;
    }
    let places = twos.max(fives);
    let scaled = (r * BigRational::from_integer(BigInt::from(10u32).pow(places))).to_integer();
    let sign = if scaled.is_negative() { "-" } else { "" };
    let digits = scaled.magnitude().to_string();
    if places == 0 {
        return Some(format!("{sign}{digits}"));
    }
    let places = places as usize;
    let padded = if digits.len() <= places {
        format!("{}{}", "0".repeat(places - digits.len() + 1), digits)
    } else {
        digits
    };
    let (int_part, frac_part) = padded.split_at(padded.len() - places);
    let frac_part = frac_part.trim_end_matches('0');
    if frac_part.is_empty() {
        Some(format!("{sign}{int_part}"))
    } else {
        Some(format!("{sign}{int_part}.{frac_part}"))
    }
}

/// Report rendering: the fraction, with the exact decimal alongside when the
/// decimal terminates (e.g. `"1389/5 (= 277.8)"`, but `"7/3"` stays as is).
pub fn format_full(r: &Rat) -> String {
    match format_decimal_exact(r) {
        Some(dec) if !r.denom().is_one() => format!("{} (= {})", format_fraction(r), dec),
        _ => format_fraction(r),
    }
}
