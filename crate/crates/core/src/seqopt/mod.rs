//! Per-gate S-matrix reconstruction, the 4×4 pencil update and its restricted
//! variants, and the sweep driver.

pub mod config;
pub mod gate_gep;
pub mod init;
pub mod optimizer;
pub mod smallmat;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use config::{default_configuration, ParameterConfiguration, FREE_ENTRIES};
pub use gate_gep::{
    build_s_pair, default_regularization, regularize_sb, restrict_update, solve_gate_gep,
    GateUpdate, OptimizerKind, SMatrixPair,
};
pub use init::{init_params, sample_gate, InitStrategy};
pub use optimizer::{
    sequential_optimize, Backend, Estimator, OptimizeOptions, OptimizeTrace, SweepOrder,
    TraceRecord,
};

/// Whether the smallest or the largest pencil eigenvalue is sought.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

impl Sense {
    /// True when `candidate` is strictly better than `incumbent`.
    pub fn improves(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Sense::Min => candidate < incumbent,
            Sense::Max => candidate > incumbent,
        }
    }

    /// Best of a set of values under this sense.
    pub fn extremum(self, values: impl IntoIterator<Item = f64>) -> Option<f64> {
        values.into_iter().reduce(|a, b| if self.improves(b, a) { b } else { a })
    }
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Min => "min",
            Sense::Max => "max",
        })
    }
}

impl FromStr for Sense {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "min" => Ok(Sense::Min),
            "max" => Ok(Sense::Max),
            other => Err(Error::Validation(format!("unknown sense `{other}` (expected min | max)"))),
        }
    }
}
