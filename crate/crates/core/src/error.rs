use thiserror::Error;

use crate::PlayerId;

/// Errors raised by the allocation engine, the generators and the file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("interval [{0}, {1}) is not a subinterval of [0, 1)")]
    InvalidInterval(String, String),

    #[error("valuation has zero value on the requested set")]
    ZeroValue,

    #[error("invalid valuation: {0}")]
    InvalidValuation(String),

    #[error("could not decide {0} at maximum precision")]
    Precision(String),

    #[error("infeasible state at step {step}: {detail}")]
    Infeasible { step: usize, detail: String },

    #[error("demand {demand} outside the admissible range [{lo}, {hi}]")]
    DemandRange { demand: String, lo: String, hi: String },

    #[error("allocation exceeds capacity at step {step}: total size {total}")]
    Capacity { step: usize, total: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unknown or departed player {0}")]
    UnknownPlayer(PlayerId),

    #[error("schema error at line {line}: {detail}")]
    Schema { line: usize, detail: String },

    #[error("incompatible configuration: {0}")]
    Compatibility(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
