//! Dynamic fair division of a divisible resource among players who arrive
//! over time, with at most one existing holding recalled per arrival.
//!
//! Everything is exact: allocations are finite unions of intervals with
//! rational endpoints, valuations are piecewise-constant densities or
//! uniform-with-demand, and every fairness ratio is a rational number.
//! Transcendental quantities (`ln i`, `ln 3`) only enter through certified
//! rational enclosures.
//!
//! The pieces:
//!
//! * [`interval`] and [`valuation`]: the resource and how players value it.
//! * [`partition`]: equal-value partitioning, used by both interval allocators.
//! * [`dfd`]: the logarithmically-proportional and linearly-envy-free
//!   allocators for general valuations.
//! * [`ud`]: allocators for uniform valuations with demands.
//! * [`adversary`]: lower-bound instance generators and random instances.
//! * [`trace`] and [`audit`]: recorded runs and the fairness checks over them.
//! * [`harness`]: running, sweeping and replaying experiments.

pub mod adversary;
pub mod audit;
pub mod certified;
pub mod dfd;
pub mod error;
pub mod harness;
pub mod instance;
pub mod interval;
pub mod partition;
pub mod rat;
pub mod trace;
pub mod ud;
pub mod valuation;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};
pub use interval::IntervalSet;
pub use rat::Rat;
pub use valuation::{Demand, PiecewiseConstant, Valuation};

/// 1-based player number, in arrival order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlayerId(pub usize);

impl PlayerId {
    pub fn index(self) -> usize {
        self.0 - 1
    }

    pub fn from_index(i: usize) -> Self {
        PlayerId(i + 1)
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Logarithmically proportional interval allocator.
    Dfd1,
    /// Linearly envy-free interval allocator.
    Dfd2,
    /// Demand allocator for a known demand range.
    UdS,
    /// Demand allocator for arbitrary demands.
    Ud,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dfd1 => "dfd1",
            Algorithm::Dfd2 => "dfd2",
            Algorithm::UdS => "ud_s",
            Algorithm::Ud => "ud",
        }
    }

    pub fn is_interval(self) -> bool {
        matches!(self, Algorithm::Dfd1 | Algorithm::Dfd2)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dfd1" => Ok(Algorithm::Dfd1),
            "dfd2" => Ok(Algorithm::Dfd2),
            "ud_s" => Ok(Algorithm::UdS),
            "ud" => Ok(Algorithm::Ud),
            other => Err(Error::Parameter(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// What an arrival took back from an existing player.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Recall<H> {
    pub step: usize,
    pub player: Option<PlayerId>,
    pub removed: H,
}
