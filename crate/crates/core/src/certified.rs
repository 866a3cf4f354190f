//! Certified rational enclosures of the logarithms appearing in the
//! algorithms' parameters and in their fairness bounds.
//!
//! Every routine returns `lo <= true value <= hi` with both ends exact
//! rationals, so integer floors and bound comparisons are decided without
//! floating point.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rat::{self, Int, Rat};

/// Starting working precision, in bits.
pub const BASE_BITS: u32 = 128;
/// Precision at which undecided comparisons give up.
pub const MAX_BITS: u32 = 4096;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enclosure {
    pub lo: Rat,
    pub hi: Rat,
}

impl Enclosure {
    pub fn exact(v: Rat) -> Self {
        Self { lo: v.clone(), hi: v }
    }

    pub fn add_exact(&self, v: &Rat) -> Self {
        Self {
            lo: &self.lo + v,
            hi: &self.hi + v,
        }
    }

    /// Scales by a non-negative rational.
    pub fn scale(&self, k: &Rat) -> Self {
        debug_assert!(!k.is_negative());
        Self {
            lo: &self.lo * k,
            hi: &self.hi * k,
        }
    }

    pub fn width(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn contains(&self, v: &Rat) -> bool {
        &self.lo <= v && v <= &self.hi
    }
}

/// Outcome of comparing an exact rational against a transcendental bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Decides `lhs <= rhs`, widening precision until the enclosure of `rhs`
/// separates from `lhs`.
pub fn certify_le(lhs: &Rat, rhs: impl Fn(u32) -> Enclosure) -> Verdict {
    let mut bits = BASE_BITS;
    while bits <= MAX_BITS {
        let e = rhs(bits);
        if *lhs <= e.lo {
            return Verdict::Pass;
        }
        if *lhs > e.hi {
            return Verdict::Fail;
        }
        bits *= 2;
    }
    Verdict::Inconclusive
}

/// Floor of a transcendental quantity, certified.
pub fn certified_floor(what: &str, f: impl Fn(u32) -> Enclosure) -> Result<Int> {
    let mut bits = BASE_BITS;
    while bits <= MAX_BITS {
        let e = f(bits);
        let lo = rat::floor_int(&e.lo);
        if lo == rat::floor_int(&e.hi) {
            return Ok(lo);
        }
        bits *= 2;
    }
    Err(Error::Precision(format!("floor of {what}")))
}

/// `atanh(z)` for rational `0 <= z <= 1/2`, to within about `2^-bits`.
fn atanh_enclosure(z: &Rat, bits: u32) -> Enclosure {
    debug_assert!(!z.is_negative() && *z <= rat::ratio(1, 2));
    if z.is_zero() {
        return Enclosure::exact(Rat::zero());
    }
    let work = bits + 16;
    let z2 = z * z;
    let tail_factor = Rat::one() / (Rat::one() - &z2);
    let eps = rat::pow2(-(work as i64));
    let mut lo = Rat::zero();
    let mut hi = Rat::zero();
    let mut power = z.clone();
    let mut t: i64 = 0;
    loop {
        let denom = rat::int(2 * t + 1);
        let term = &power / &denom;
        lo += rat::round_down_dyadic(&term, work);
        hi += rat::round_up_dyadic(&term, work);
        power = &power * &z2;
        t += 1;
        // Remaining series is at most z^(2t+1) / ((2t+1)(1 - z^2)).
        let tail = &power / rat::int(2 * t + 1) * &tail_factor;
        if tail < eps {
            hi += rat::round_up_dyadic(&tail, work);
            break;
        }
    }
    Enclosure { lo, hi }
}

fn ln2_enclosure(bits: u32) -> Enclosure {
    atanh_enclosure(&rat::ratio(1, 3), bits).scale(&rat::int(2))
}

/// `ln x` for rational `x > 0`.
pub fn ln_enclosure(x: &Rat, bits: u32) -> Enclosure {
    assert!(x.is_positive(), "logarithm of a non-positive number");
    // x = y * 2^k with 1 <= y < 2
    let mut k = rat::log2_estimate(x);
    let pow2 = rat::pow2;
    let mut y = x / pow2(k);
    let two = rat::int(2);
    while y >= two {
        y /= &two;
        k += 1;
    }
    while y < Rat::one() {
        y *= &two;
        k -= 1;
    }
    let z = (&y - Rat::one()) / (&y + Rat::one());
    let lny = atanh_enclosure(&z, bits).scale(&two);
    if k == 0 {
        return lny;
    }
    let ln2 = ln2_enclosure(bits + 64 - (k.unsigned_abs().leading_zeros()));
    let kr = rat::int(k);
    let (lo2, hi2) = if k > 0 {
        (&ln2.lo * &kr, &ln2.hi * &kr)
    } else {
        (&ln2.hi * &kr, &ln2.lo * &kr)
    };
    Enclosure {
        lo: lny.lo + lo2,
        hi: lny.hi + hi2,
    }
}

/// `ln i` for a positive integer, memoized per precision.
pub fn ln_int_enclosure(i: u64, bits: u32) -> Enclosure {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u32), Enclosure>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(e) = cache.lock().expect("cache lock").get(&(i, bits)) {
        return e.clone();
    }
    let e = ln_enclosure(&rat::from_int(Int::from(i)), bits);
    cache.lock().expect("cache lock").insert((i, bits), e.clone());
    e
}

/// Number of pieces each holding is cut into when player `i` arrives under
/// the proportional allocator: `floor(2 i (3 + ln i))`.
pub fn sigma_of(i: u64) -> Result<u64> {
    if i == 0 {
        return Err(Error::Parameter("sigma_of needs i >= 1".into()));
    }
    let scale = rat::int(2 * i as i64);
    let v = certified_floor(&format!("2·{i}·(3 + ln {i})"), |bits| {
        ln_int_enclosure(i, bits).add_exact(&rat::int(3)).scale(&scale)
    })?;
    v.to_u64()
        .ok_or_else(|| Error::Parameter(format!("sigma({i}) overflows")))
}

/// `2 (3 + ln i)`: the per-step proportionality guarantee of the
/// proportional allocator after `i` arrivals.
pub fn proportional_bound(i: u64, bits: u32) -> Enclosure {
    ln_int_enclosure(i.max(1), bits)
        .add_exact(&rat::int(3))
        .scale(&rat::int(2))
}

/// `1 + 10^-29`, the slack absorbing the rational under-approximation of
/// `1 / ln 3`.
pub fn ln3_slack() -> Rat {
    Rat::one() + rat::frac(Int::ONE, Int::from(10u32).pow(29))
}

/// `k · ln 3 · (1 + 10^-29)` for non-negative rational `k`.
pub fn ln3_bound(k: &Rat, bits: u32) -> Enclosure {
    ln_int_enclosure(3, bits)
        .scale(k)
        .scale(&ln3_slack())
}

/// A fixed rational strictly below `1 / ln 3` with relative error below
/// `10^-30`.
pub fn ln3_inv_lo() -> &'static Rat {
    static CELL: OnceLock<Rat> = OnceLock::new();
    CELL.get_or_init(|| {
        let ln3 = ln_enclosure(&rat::int(3), 192);
        let inv = Rat::one() / ln3.hi;
        let down = rat::round_down_dyadic(&inv, 112);
        if down == inv {
            // never taken: 1/hi is not dyadic, but keep strictness explicit
            down - rat::pow2(-112)
        } else {
            down
        }
    })
}

/// `ceil(log2 n)` for `n >= 1`.
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn enclose_f64(e: &Enclosure, v: f64, tol: f64) {
        let lo = rat::to_f64(&e.lo);
        let hi = rat::to_f64(&e.hi);
        assert!(lo - tol <= v && v <= hi + tol, "{lo} {v} {hi}");
    }

    #[test]
    fn ln_matches_float() {
        for (p, q) in [(2, 1), (3, 1), (10, 1), (1, 3), (6, 5), (12345, 7), (1, 1000)] {
            let x = rat::ratio(p, q);
            let e = ln_enclosure(&x, 128);
            enclose_f64(&e, (p as f64 / q as f64).ln(), 1e-15);
            assert!(e.width() < rat::pow2(-120));
        }
        assert_eq!(ln_enclosure(&rat::one(), 64), Enclosure::exact(rat::zero()));
    }

    #[test]
    fn ln2_first_digits() {
        // ln 2 = 0.693147180559945309417232121458176568...
        let e = ln_enclosure(&rat::int(2), 128);
        let lo = rat::parse("0.693147180559945309417232121458176568").unwrap();
        let hi = rat::parse("0.693147180559945309417232121458176569").unwrap();
        assert!(e.lo >= lo && e.hi <= hi);
    }

    // Oracle values: floor(2 i (3 + ln i)) evaluated with mpmath at 100 digits.
    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_of(2).unwrap(), 14);
        assert_eq!(sigma_of(3).unwrap(), 24);
        assert_eq!(sigma_of(10).unwrap(), 106);
        assert_eq!(sigma_of(1).unwrap(), 6);
    }

    #[test]
    fn sigma_agrees_with_float_away_from_integers() {
        for i in 2..400u64 {
            let f = 2.0 * i as f64 * (3.0 + (i as f64).ln());
            if (f - f.round()).abs() > 1e-9 {
                assert_eq!(sigma_of(i).unwrap(), f.floor() as u64, "i = {i}");
            }
        }
    }

    #[test]
    fn ln3_inverse_under_approximation() {
        let lo = ln3_inv_lo();
        let ln3 = ln_enclosure(&rat::int(3), 256);
        // lo * ln3 < 1 and 1 - lo * ln3 < 1e-30
        assert!(lo * &ln3.hi < rat::one());
        let gap = rat::one() - lo * &ln3.lo;
        assert!(gap < rat::frac(Int::ONE, Int::from(10u32).pow(30)));
        assert!((rat::to_f64(lo) - 0.910239226626837).abs() < 1e-14);
    }

    #[test]
    fn certify_decides() {
        let bound = |bits| ln_enclosure(&rat::int(3), bits);
        assert_eq!(certify_le(&rat::ratio(109, 100), bound), Verdict::Pass);
        assert_eq!(certify_le(&rat::ratio(110, 100), bound), Verdict::Fail);
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(ceil_log2(9), 4);
        assert_eq!(ceil_log2(4096), 12);
    }
}
