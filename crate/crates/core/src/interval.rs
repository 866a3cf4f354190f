//! Finite unions of half-open subintervals of the unit resource `[0, 1)`.
//!
//! Every [`IntervalSet`] is stored in canonical form: pieces sorted, non-empty,
//! pairwise disjoint and non-touching. Two sets are equal as point sets exactly
//! when they are structurally equal.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rat::{self, Rat};

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct IntervalSet {
    pieces: Vec<(Rat, Rat)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The whole resource `[0, 1)`.
    pub fn full() -> Self {
        Self {
            pieces: vec![(Rat::zero(), Rat::one())],
        }
    }

    /// A single interval `[a, b)`; empty when `a >= b`.
    pub fn interval(a: Rat, b: Rat) -> Result<Self> {
        Self::from_pieces(vec![(a, b)])
    }

    /// Canonicalizes an arbitrary list of `[a, b)` pieces. Pieces with
    /// `a >= b` are dropped; endpoints must lie in `[0, 1]`.
    pub fn from_pieces(mut pieces: Vec<(Rat, Rat)>) -> Result<Self> {
        let zero = Rat::zero();
        let one = Rat::one();
        for (a, b) in &pieces {
            if *a < zero || *b > one || *a > one || *b < zero {
                return Err(Error::InvalidInterval(rat::format(a), rat::format(b)));
            }
        }
        pieces.retain(|(a, b)| a < b);
        pieces.sort_by(|x, y| x.0.cmp(&y.0));
        Ok(Self::from_sorted(pieces))
    }

    /// Merges sorted, non-empty pieces that overlap or touch.
    fn from_sorted(pieces: Vec<(Rat, Rat)>) -> Self {
        let mut out: Vec<(Rat, Rat)> = Vec::with_capacity(pieces.len());
        for (a, b) in pieces {
            match out.last_mut() {
                Some(last) if a <= last.1 => {
                    if b > last.1 {
                        last.1 = b;
                    }
                }
                _ => out.push((a, b)),
            }
        }
        Self { pieces: out }
    }

    /// Builds from pieces the caller guarantees to be in order and pairwise
    /// disjoint; touching neighbours are still merged.
    pub(crate) fn from_ordered_disjoint(pieces: Vec<(Rat, Rat)>) -> Self {
        debug_assert!(pieces.windows(2).all(|w| w[0].1 <= w[1].0));
        Self::from_sorted(pieces.into_iter().filter(|(a, b)| a < b).collect())
    }

    pub fn pieces(&self) -> &[(Rat, Rat)] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    /// Lebesgue measure, exact.
    pub fn measure(&self) -> Rat {
        self.pieces
            .iter()
            .fold(Rat::zero(), |acc, (a, b)| acc + (b - a))
    }

    pub fn union(&self, other: &Self) -> Self {
        if other.is_empty() {
            return self.clone();
        }
        if self.is_empty() {
            return other.clone();
        }
        let mut merged = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.pieces.len() || j < other.pieces.len() {
            let take_left = match (self.pieces.get(i), other.pieces.get(j)) {
                (Some(x), Some(y)) => x.0 <= y.0,
                (Some(_), None) => true,
                _ => false,
            };
            if take_left {
                merged.push(self.pieces[i].clone());
                i += 1;
            } else {
                merged.push(other.pieces[j].clone());
                j += 1;
            }
        }
        Self::from_sorted(merged)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.pieces.len() && j < other.pieces.len() {
            let (a0, a1) = &self.pieces[i];
            let (b0, b1) = &other.pieces[j];
            let lo = if a0 > b0 { a0 } else { b0 };
            let hi = if a1 < b1 { a1 } else { b1 };
            if lo < hi {
                out.push((lo.clone(), hi.clone()));
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { pieces: out }
    }

    /// `self \ other`.
    pub fn subtract(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let mut j = 0;
        for (a0, a1) in &self.pieces {
            let mut start = a0.clone();
            while j < other.pieces.len() && other.pieces[j].1 <= start {
                j += 1;
            }
            let mut k = j;
            while k < other.pieces.len() && other.pieces[k].0 < *a1 {
                let (b0, b1) = &other.pieces[k];
                if *b0 > start {
                    out.push((start.clone(), b0.clone()));
                }
                if *b1 > start {
                    start = b1.clone();
                }
                if start >= *a1 {
                    break;
                }
                k += 1;
            }
            if start < *a1 {
                out.push((start, a1.clone()));
            }
        }
        Self { pieces: out }
    }

    /// `self ⊆ other` as point sets.
    pub fn is_subset(&self, other: &Self) -> bool {
        let mut j = 0;
        for (a0, a1) in &self.pieces {
            while j < other.pieces.len() && other.pieces[j].1 <= *a0 {
                j += 1;
            }
            match other.pieces.get(j) {
                Some((b0, b1)) if b0 <= a0 && a1 <= b1 => {}
                _ => return false,
            }
        }
        true
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.intersect(other).is_empty()
    }

    /// Complement within `[0, 1)`.
    pub fn complement(&self) -> Self {
        Self::full().subtract(self)
    }
}

impl fmt::Debug for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pieces.is_empty() {
            return f.write_str("∅");
        }
        let mut first = true;
        f.write_str("{")?;
        for (a, b) in &self.pieces {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "[{}, {})", rat::format(a), rat::format(b))?;
        }
        f.write_str("}")
    }
}

/// Serialized as a list of `["a", "b"]` string pairs.
impl Serialize for IntervalSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[String; 2]> = self
            .pieces
            .iter()
            .map(|(a, b)| [rat::format(a), rat::format(b)])
            .collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntervalSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let pairs = Vec::<[String; 2]>::deserialize(d)?;
        let mut pieces = Vec::with_capacity(pairs.len());
        for [a, b] in pairs {
            let a = rat::parse(&a).ok_or_else(|| D::Error::custom(format!("bad endpoint {a:?}")))?;
            let b = rat::parse(&b).ok_or_else(|| D::Error::custom(format!("bad endpoint {b:?}")))?;
            pieces.push((a, b));
        }
        IntervalSet::from_pieces(pieces).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::ratio;
    use proptest::prelude::*;

    fn set(pieces: &[(i64, i64, i64)]) -> IntervalSet {
        // (numerator a, numerator b, common denominator)
        IntervalSet::from_pieces(
            pieces
                .iter()
                .map(|&(a, b, q)| (ratio(a, q), ratio(b, q)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn measure_examples() {
        assert_eq!(IntervalSet::empty().measure(), rat::zero());
        assert_eq!(set(&[(0, 2, 4), (1, 3, 4)]).measure(), ratio(3, 4));
        assert_eq!(IntervalSet::full().measure(), rat::one());
    }

    #[test]
    fn union_examples() {
        let a = set(&[(0, 1, 4), (2, 3, 4)]);
        assert_eq!(a.union(&set(&[(1, 2, 4)])), set(&[(0, 3, 4)]));
        assert_eq!(a.union(&IntervalSet::empty()), a);
        let d = set(&[(0, 1, 3)]).union(&set(&[(2, 3, 3)]));
        assert_eq!(d.pieces().len(), 2);
        assert_eq!(d, set(&[(0, 1, 3), (2, 3, 3)]));
    }

    #[test]
    fn intersect_examples() {
        assert_eq!(
            set(&[(0, 1, 3)]).intersect(&set(&[(1, 4, 4)])),
            IntervalSet::interval(ratio(1, 4), ratio(1, 3)).unwrap()
        );
        let a = set(&[(0, 1, 5), (2, 4, 5)]);
        assert_eq!(a.intersect(&a), a);
        assert!(set(&[(0, 1, 4)]).intersect(&set(&[(2, 4, 4)])).is_empty());
    }

    #[test]
    fn subtract_examples() {
        let full = IntervalSet::full();
        assert_eq!(
            full.subtract(&set(&[(1, 2, 4)])),
            set(&[(0, 1, 4), (2, 4, 4)])
        );
        let a = set(&[(1, 3, 7), (5, 6, 7)]);
        assert_eq!(a.subtract(&IntervalSet::empty()), a);
        assert!(a.subtract(&a).is_empty());
    }

    #[test]
    fn subset_examples() {
        assert!(IntervalSet::empty().is_subset(&set(&[(0, 1, 9)])));
        assert!(set(&[(0, 1, 2)]).is_subset(&IntervalSet::full()));
        assert!(!set(&[(0, 2, 4)]).is_subset(&set(&[(1, 4, 4)])));
        // a piece straddling a gap is not contained
        assert!(!set(&[(0, 3, 4)]).is_subset(&set(&[(0, 1, 4), (1, 3, 4)]).subtract(&set(&[(1, 2, 8)]))));
    }

    #[test]
    fn touching_pieces_merge_and_empty_dropped() {
        let s = set(&[(1, 2, 4), (0, 1, 4), (3, 3, 4)]);
        assert_eq!(s.pieces(), &[(rat::zero(), ratio(1, 2))]);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(IntervalSet::interval(ratio(-1, 2), rat::one()).is_err());
        assert!(IntervalSet::interval(rat::zero(), ratio(3, 2)).is_err());
    }

    #[test]
    fn serde_pairs() {
        let s = set(&[(0, 1, 4), (1, 1, 1)]);
        let s = s.union(&set(&[(2, 3, 3)]));
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"[["0","1/4"],["2/3","1"]]"#);
        let back: IntervalSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    fn arb_set() -> impl Strategy<Value = IntervalSet> {
        (1i64..=24, prop::collection::vec((0i64..=24, 0i64..=24), 0..6)).prop_map(|(q, raw)| {
            let pieces = raw
                .into_iter()
                .map(|(a, b)| (ratio(a.min(b) % (q + 1), q), ratio(a.max(b) % (q + 1), q)))
                .collect();
            IntervalSet::from_pieces(pieces).unwrap()
        })
    }

    /// Pointwise membership on a fine grid of midpoints, independent of the
    /// two-pointer algorithms.
    fn contains(s: &IntervalSet, x: &Rat) -> bool {
        s.pieces().iter().any(|(a, b)| a <= x && x < b)
    }

    proptest! {
        #[test]
        fn canonical_form_is_idempotent(a in arb_set()) {
            let again = IntervalSet::from_pieces(a.pieces().to_vec()).unwrap();
            prop_assert_eq!(&again, &a);
            prop_assert!(a.pieces().windows(2).all(|w| w[0].1 < w[1].0));
        }

        #[test]
        fn inclusion_exclusion(a in arb_set(), b in arb_set()) {
            prop_assert_eq!(
                a.measure() + b.measure(),
                a.union(&b).measure() + a.intersect(&b).measure()
            );
        }

        #[test]
        fn disjoint_additivity(a in arb_set(), b in arb_set()) {
            let b = b.subtract(&a);
            prop_assert_eq!(a.union(&b).measure(), a.measure() + b.measure());
        }

        #[test]
        fn subtract_union_inverse(a in arb_set(), b in arb_set()) {
            prop_assert_eq!(a.subtract(&b).union(&a.intersect(&b)), a.clone());
            prop_assert!(a.subtract(&b).is_disjoint(&b));
        }

        #[test]
        fn ops_agree_pointwise(a in arb_set(), b in arb_set()) {
            let u = a.union(&b);
            let i = a.intersect(&b);
            let d = a.subtract(&b);
            for k in 0..(2 * 24 * 23) {
                let x = ratio(2 * k + 1, 4 * 24 * 23);
                let (ia, ib) = (contains(&a, &x), contains(&b, &x));
                prop_assert_eq!(contains(&u, &x), ia || ib);
                prop_assert_eq!(contains(&i, &x), ia && ib);
                prop_assert_eq!(contains(&d, &x), ia && !ib);
            }
            prop_assert_eq!(a.is_subset(&b), d.is_empty());
        }
    }
}
