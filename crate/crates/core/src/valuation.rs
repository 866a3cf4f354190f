//! Valuation models over the resource.
//!
//! General additive valuations are represented by piecewise-constant
//! densities with rational breakpoints; piecewise-uniform valuations are the
//! special case of a constant density on a support set. Uniform-with-demand
//! valuations only look at the size of a holding.

use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::IntervalSet;
use crate::rat::{self, Rat};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub start: Rat,
    pub end: Rat,
    pub density: Rat,
}

/// Density `w_k` on `[a_k, b_k)`, the segments partitioning `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseConstant {
    segments: Vec<Segment>,
}

impl PiecewiseConstant {
    /// Validates segments without normalizing them. Adjacent segments with
    /// equal density are merged.
    pub fn new(segments: Vec<(Rat, Rat, Rat)>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidValuation("no segments".into()));
        }
        let mut cursor = Rat::zero();
        let mut out: Vec<Segment> = Vec::with_capacity(segments.len());
        for (start, end, density) in segments {
            if start != cursor {
                return Err(Error::InvalidValuation(format!(
                    "segments not contiguous at {}",
                    rat::format(&cursor)
                )));
            }
            if start >= end {
                return Err(Error::InvalidValuation(format!(
                    "empty segment [{}, {})",
                    rat::format(&start),
                    rat::format(&end)
                )));
            }
            if density.is_negative() {
                return Err(Error::InvalidValuation("negative density".into()));
            }
            cursor = end.clone();
            match out.last_mut() {
                Some(last) if last.density == density => last.end = end,
                _ => out.push(Segment {
                    start,
                    end,
                    density,
                }),
            }
        }
        if !cursor.is_one() {
            return Err(Error::InvalidValuation("segments do not cover [0, 1)".into()));
        }
        Ok(Self { segments: out })
    }

    pub fn uniform() -> Self {
        Self {
            segments: vec![Segment {
                start: Rat::zero(),
                end: Rat::one(),
                density: Rat::one(),
            }],
        }
    }

    /// `v(I) = |I ∩ support| / |support|`.
    pub fn piecewise_uniform(support: &IntervalSet) -> Result<Self> {
        let size = support.measure();
        if size.is_zero() {
            return Err(Error::ZeroValue);
        }
        let density = Rat::one() / size;
        let mut segs = Vec::with_capacity(2 * support.len() + 1);
        let mut cursor = Rat::zero();
        for (a, b) in support.pieces() {
            if *a > cursor {
                segs.push((cursor.clone(), a.clone(), Rat::zero()));
            }
            segs.push((a.clone(), b.clone(), density.clone()));
            cursor = b.clone();
        }
        if cursor < Rat::one() {
            segs.push((cursor, Rat::one(), Rat::zero()));
        }
        Self::new(segs)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_mass(&self) -> Rat {
        self.segments.iter().fold(Rat::zero(), |acc, s| {
            acc + &s.density * (&s.end - &s.start)
        })
    }

    /// Scales densities so the whole resource is worth exactly one.
    pub fn normalize(&self) -> Result<Self> {
        let mass = self.total_mass();
        if mass.is_zero() {
            return Err(Error::ZeroValue);
        }
        if mass.is_one() {
            return Ok(self.clone());
        }
        Ok(Self {
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    start: s.start.clone(),
                    end: s.end.clone(),
                    density: &s.density / &mass,
                })
                .collect(),
        })
    }

    /// Index of the segment containing `x` (`x < 1`).
    pub(crate) fn segment_at(&self, x: &Rat) -> usize {
        self.segments
            .partition_point(|s| s.end <= *x)
            .min(self.segments.len() - 1)
    }

    pub fn eval(&self, s: &IntervalSet) -> Rat {
        let mut total = Rat::zero();
        for (a, b) in s.pieces() {
            let mut k = self.segment_at(a);
            let mut x = a;
            while x < b {
                let seg = &self.segments[k];
                let end = if seg.end < *b { &seg.end } else { b };
                if !seg.density.is_zero() {
                    total += &seg.density * (end - x);
                }
                x = end;
                k += 1;
            }
        }
        total
    }

    /// Where the density vanishes.
    pub fn zero_region(&self) -> IntervalSet {
        IntervalSet::from_ordered_disjoint(
            self.segments
                .iter()
                .filter(|s| s.density.is_zero())
                .map(|s| (s.start.clone(), s.end.clone()))
                .collect(),
        )
    }
}

/// `v(I) = min(|I| / d, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Demand {
    d: Rat,
}

impl Demand {
    pub fn new(d: Rat) -> Result<Self> {
        if !d.is_positive() || d > Rat::one() {
            return Err(Error::InvalidValuation(format!(
                "demand {} not in (0, 1]",
                rat::format(&d)
            )));
        }
        Ok(Self { d })
    }

    pub fn d(&self) -> &Rat {
        &self.d
    }

    pub fn eval(&self, size: &Rat) -> Rat {
        let v = size / &self.d;
        if v > Rat::one() {
            Rat::one()
        } else {
            v
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Valuation {
    Density(Arc<PiecewiseConstant>),
    Demand(Demand),
}

impl Valuation {
    pub fn as_density(&self) -> Option<&Arc<PiecewiseConstant>> {
        match self {
            Valuation::Density(v) => Some(v),
            Valuation::Demand(_) => None,
        }
    }

    pub fn as_demand(&self) -> Option<&Demand> {
        match self {
            Valuation::Demand(d) => Some(d),
            Valuation::Density(_) => None,
        }
    }

    /// Canonical record form: densities as `pwc`, demands as `demand`.
    pub fn to_record(&self) -> ValuationRecord {
        match self {
            Valuation::Density(v) => ValuationRecord::Pwc {
                segments: v
                    .segments()
                    .iter()
                    .map(|s| [rat::format(&s.start), rat::format(&s.end), rat::format(&s.density)])
                    .collect(),
            },
            Valuation::Demand(d) => ValuationRecord::Demand {
                d: rat::format(d.d()),
            },
        }
    }
}

/// On-disk valuation record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ValuationRecord {
    Pwc { segments: Vec<[String; 3]> },
    Pwu { support: IntervalSet },
    Demand { d: String },
}

impl ValuationRecord {
    /// Parses and normalizes; `pwu` desugars to a piecewise-constant density.
    pub fn to_valuation(&self) -> Result<Valuation> {
        let parse = |s: &str| {
            rat::parse(s).ok_or_else(|| Error::InvalidValuation(format!("bad rational {s:?}")))
        };
        match self {
            ValuationRecord::Pwc { segments } => {
                let segs = segments
                    .iter()
                    .map(|[a, b, w]| Ok((parse(a)?, parse(b)?, parse(w)?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Valuation::Density(Arc::new(
                    PiecewiseConstant::new(segs)?.normalize()?,
                )))
            }
            ValuationRecord::Pwu { support } => Ok(Valuation::Density(Arc::new(
                PiecewiseConstant::piecewise_uniform(support)?,
            ))),
            ValuationRecord::Demand { d } => Ok(Valuation::Demand(Demand::new(parse(d)?)?)),
        }
    }
}
