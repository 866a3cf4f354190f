//! Exact rationals and their `"p/q"` text form.

use std::str::FromStr;

use dashu_int::ops::BitTest;
use dashu_int::{IBig, UBig};
use dashu_ratio::RBig;

/// Arbitrary-precision rational, always kept in lowest terms with a positive
/// denominator.
pub type Rat = RBig;
/// Arbitrary-precision integer.
pub type Int = IBig;

pub fn int(n: i64) -> Rat {
    Rat::from(n)
}

pub fn ratio(p: i64, q: i64) -> Rat {
    frac(Int::from(p), Int::from(q))
}

pub fn from_int(n: Int) -> Rat {
    Rat::from(n)
}

/// `p / q`; panics when `q` is zero.
pub fn frac(p: Int, q: Int) -> Rat {
    assert!(!q.is_zero(), "zero denominator");
    Rat::from_parts_signed(p, q)
}

pub fn zero() -> Rat {
    Rat::ZERO
}

pub fn one() -> Rat {
    Rat::ONE
}

/// `2^k` for any integer `k`.
pub fn pow2(k: i64) -> Rat {
    let p = UBig::ONE << (k.unsigned_abs() as usize);
    if k >= 0 {
        Rat::from(p)
    } else {
        Rat::from_parts(Int::ONE, p)
    }
}

/// Bit length of the numerator minus that of the denominator.
pub fn log2_estimate(r: &Rat) -> i64 {
    r.numerator().bit_len() as i64 - r.denominator().bit_len() as i64
}

/// Bit length of the denominator.
pub fn denom_bits(r: &Rat) -> usize {
    r.denominator().bit_len()
}

/// `p/q`, with `/q` omitted when the denominator is one.
pub fn format(r: &Rat) -> String {
    if r.denominator().is_one() {
        r.numerator().to_string()
    } else {
        format!("{}/{}", r.numerator(), r.denominator())
    }
}

fn parse_int(s: &str) -> Option<Int> {
    let s = s.trim();
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Int::from_str(s).ok()
}

/// Parses `p`, `p/q` or a finite decimal such as `0.25`.
pub fn parse(s: &str) -> Option<Rat> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p = parse_int(p)?;
        let q = parse_int(q)?;
        if q.is_zero() {
            return None;
        }
        return Some(frac(p, q));
    }
    if let Some((whole, frac_digits)) = s.split_once('.') {
        if frac_digits.is_empty() || !frac_digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = whole.starts_with('-');
        let whole = if whole.is_empty() || whole == "-" {
            Int::ZERO
        } else {
            parse_int(whole)?
        };
        let scale = Int::from(10u32).pow(frac_digits.len());
        let f = frac(Int::from_str(frac_digits).ok()?, scale);
        let whole = from_int(whole);
        return Some(if negative { whole - f } else { whole + f });
    }
    parse_int(s).map(from_int)
}

pub fn floor_int(r: &Rat) -> Int {
    r.floor()
}

pub fn ceil_int(r: &Rat) -> Int {
    r.ceil()
}

/// Nearest `f64`, for display and float-only oracles.
pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().value()
}

/// Largest dyadic `k / 2^bits` not above `r`.
pub fn round_down_dyadic(r: &Rat, bits: u32) -> Rat {
    let scale = UBig::ONE << bits as usize;
    Rat::from_parts((r * Rat::from(scale.clone())).floor(), scale)
}

/// Smallest dyadic `k / 2^bits` not below `r`.
pub fn round_up_dyadic(r: &Rat, bits: u32) -> Rat {
    let scale = UBig::ONE << bits as usize;
    Rat::from_parts((r * Rat::from(scale.clone())).ceil(), scale)
}

/// Serde adapter storing a [`Rat`] as its `"p/q"` string.
pub mod serde_str {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    use super::Rat;

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        super::parse(&s).ok_or_else(|| D::Error::custom(format!("invalid rational {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_omits_unit_denominator() {
        assert_eq!(format(&int(3)), "3");
        assert_eq!(format(&ratio(2, 4)), "1/2");
        assert_eq!(format(&ratio(-3, 9)), "-1/3");
        assert_eq!(format(&zero()), "0");
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse("1/2"), Some(ratio(1, 2)));
        assert_eq!(parse(" 6/4 "), Some(ratio(3, 2)));
        assert_eq!(parse("7"), Some(int(7)));
        assert_eq!(parse("0.25"), Some(ratio(1, 4)));
        assert_eq!(parse("-0.5"), Some(ratio(-1, 2)));
        assert_eq!(parse("1/0"), None);
        assert_eq!(parse("x"), None);
        assert_eq!(parse("1."), None);
    }

    #[test]
    fn floor_and_ceil() {
        assert_eq!(floor_int(&ratio(7, 2)), Int::from(3));
        assert_eq!(ceil_int(&ratio(7, 2)), Int::from(4));
        assert_eq!(floor_int(&ratio(-7, 2)), Int::from(-4));
        assert_eq!(ceil_int(&ratio(-7, 2)), Int::from(-3));
        assert_eq!(ceil_int(&int(5)), Int::from(5));
    }

    #[test]
    fn dyadic_rounding_brackets() {
        let third = ratio(1, 3);
        let lo = round_down_dyadic(&third, 20);
        let hi = round_up_dyadic(&third, 20);
        assert!(lo < third && third < hi);
        assert_eq!(&hi - &lo, pow2(-20));
    }

    #[test]
    fn huge_operands_convert() {
        let big = frac(Int::ONE << 3000, (Int::ONE << 3001) + Int::ONE);
        assert!((to_f64(&big) - 0.5).abs() < 1e-12);
    }
}
