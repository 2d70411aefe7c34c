//! Exact rational numbers.
//!
//! Every numeric quantity in the crate (values, budgets, prices, welfare, LP
//! data) is a [`Rat`]. There is no floating point on any decision path; the
//! only float-free "approximation" is [`to_decimal`], which is display-only.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

/// Arbitrary-precision rational in lowest terms with positive denominator.
pub type Rat = BigRational;

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// `num / den`, reduced. Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"p"` or `"p/q"` (optional leading `-` on `p`).
pub fn parse_rat(text: &str) -> Result<Rat, String> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let num: BigInt = parse_int(num).ok_or_else(|| format!("bad numerator in {text:?}"))?;
    let den: BigInt = parse_int(den).ok_or_else(|| format!("bad denominator in {text:?}"))?;
    if den.is_zero() {
        return Err(format!("zero denominator in {text:?}"));
    }
    Ok(Rat::new(num, den))
}

fn parse_int(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Canonical text form: `"p"` for integers, `"p/q"` otherwise.
pub fn format_rat(r: &Rat) -> String {
    r.to_string()
}

/// Decimal rendering rounded half away from zero to `places` digits.
pub fn to_decimal(r: &Rat, places: usize) -> String {
    let scale = BigInt::from(10u32).pow(places as u32);
    let scaled = r.abs() * Rat::from_integer(scale.clone());
    let half = Rat::new(BigInt::from(1), BigInt::from(2));
    let rounded = (scaled + half).floor().to_integer();
    let int_part = &rounded / &scale;
    let frac_part = &rounded % &scale;
    let sign = if r.is_negative() && !rounded.is_zero() {
        "-"
    } else {
        ""
    };
    if places == 0 {
        format!("{sign}{int_part}")
    } else {
        format!(
            "{sign}{int_part}.{:0>width$}",
            frac_part.to_string(),
            width = places
        )
    }
}

/// Exact test of `a <= b * sqrt(c)` for `a, b, c >= 0`.
pub fn le_times_sqrt(a: &Rat, b: &Rat, c: &Rat) -> bool {
    a * a <= b * b * c
}
