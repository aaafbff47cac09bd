//! Binary soft-margin SVMs trained in the dual, plus one-vs-rest speaker models.
//!
//! Two trainers solve the same convex dual and should agree to tolerance:
//!
//! * [`smo_train`]: sequential minimal optimization, two multipliers at a
//!   time in closed form with Platt's selection heuristics.
//! * [`decompose_train`]: chunking or fixed-size working sets, each
//!   sub-problem solved by the same two-multiplier routine restricted to
//!   the working set.
//!
//! No kernel matrix is materialized. Errors `E_i = f(x_i) - y_i` are cached
//! for non-bound examples only; linear kernels also keep an explicit weight
//! vector so outputs cost `O(dim)`.

mod decompose;
mod kernel;
mod model;
mod multiclass;
mod problem;
mod solver;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::features::FeatureError;

pub use decompose::{decompose_train, Decomposition, DEFAULT_CHUNK};
pub use kernel::{kernel_eval, KernelSpec};
pub use model::{SvmModel, TrainingMeta};
pub use multiclass::{
    identify, train_one_vs_rest, train_one_vs_rest_with, Identification, MulticlassModel, TrainSettings,
};
pub use problem::{TrainingProblem, DEFAULT_EPS, DEFAULT_MAX_ITER, DEFAULT_TOL};
pub use solver::{smo_train, Solver, SolverState};

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("training data contains a single class")]
    SingleClassData,
    #[error("iteration limit reached after {} steps", .0.meta.iterations)]
    IterationLimitExceeded(Box<SvmModel>),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("index {index} out of range for {len} examples")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("need at least 2 speakers, found {0}")]
    TooFewSpeakers(usize),
    #[error("speaker {speaker}: {source}")]
    Class {
        speaker: u32,
        #[source]
        source: Box<SvmError>,
    },
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// Which trainer to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Smo,
    Chunking { chunk: usize },
    FixedSize { size: usize, swap: usize },
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Smo => "smo",
            SolverKind::Chunking { .. } => "chunking",
            SolverKind::FixedSize { .. } => "fixed-size",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverKind::Smo => write!(f, "smo"),
            SolverKind::Chunking { chunk } => write!(f, "chunking(M={chunk})"),
            SolverKind::FixedSize { size, swap } => write!(f, "fixed-size(q={size}, s={swap})"),
        }
    }
}

impl FromStr for SolverKind {
    type Err = SvmError;

    /// `smo`, `chunking`, `chunking:M`, `fixed-size`, or `fixed-size:q:s`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or("");
        let nums: Vec<usize> = parts
            .map(|p| {
                p.parse()
                    .map_err(|_| SvmError::InvalidProblem(format!("bad solver parameter {p:?} in {s:?}")))
            })
            .collect::<Result<_, _>>()?;
        match (head, nums.as_slice()) {
            ("smo", []) => Ok(SolverKind::Smo),
            ("chunking", []) => Ok(SolverKind::Chunking { chunk: DEFAULT_CHUNK }),
            ("chunking", [m]) => Ok(SolverKind::Chunking { chunk: *m }),
            ("fixed-size", []) => Ok(SolverKind::FixedSize { size: 10, swap: 2 }),
            ("fixed-size", [q, sw]) => Ok(SolverKind::FixedSize { size: *q, swap: *sw }),
            _ => Err(SvmError::InvalidProblem(format!("unknown solver {s:?}"))),
        }
    }
}

/// Dispatches to the selected trainer.
pub fn train(problem: &TrainingProblem, solver: SolverKind) -> Result<SvmModel, SvmError> {
    match solver {
        SolverKind::Smo => smo_train(problem),
        SolverKind::Chunking { chunk } => decompose_train(problem, Decomposition::Chunking { chunk }),
        SolverKind::FixedSize { size, swap } => decompose_train(problem, Decomposition::FixedSize { size, swap }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solver_names_parse() {
        assert_eq!("smo".parse::<SolverKind>().unwrap(), SolverKind::Smo);
        assert_eq!(
            "chunking:10".parse::<SolverKind>().unwrap(),
            SolverKind::Chunking { chunk: 10 }
        );
        assert_eq!(
            "fixed-size:10:2".parse::<SolverKind>().unwrap(),
            SolverKind::FixedSize { size: 10, swap: 2 }
        );
        assert!("newton".parse::<SolverKind>().is_err());
        assert!("chunking:x".parse::<SolverKind>().is_err());
    }
}
