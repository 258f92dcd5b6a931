//! Block weights `g(B)`, cluster weights `q_n` and their finite-volume
//! counterparts.

mod asymptotics;
mod block;
mod cluster;
mod finite;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::graph::{GraphError, LabeledGraph};
use crate::potential::{PairPotential, PotentialError};

pub use asymptotics::{estimate_asymptotics, AsymptoticEstimate};
pub use block::{g_block_gaussian_exact, g_block_mc, g_block_mc_with_basis, g_cycle_exact, McConfig, VhatBeta};
pub use cluster::{q_n, Budget, QnOptions};
pub use finite::{constrained_lattice_sum, default_zmax, q_n_finite_L, LatticeSum};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightError {
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("importance sampling degenerate: effective sample size {ess:.1} is below 1% of {samples} samples")]
    Diagnostics { ess: f64, samples: u64 },
    #[error("budget exhausted after {completed} graphs")]
    Partial { completed: u64 },
    #[error("lattice tail bound {estimate:.3e} exceeds tolerance {tol:.3e}; increase zmax")]
    Accuracy { estimate: f64, tol: f64 },
    #[error("capacity: {0}")]
    Capacity(String),
    #[error("inconsistent: {0}")]
    Inconsistent(String),
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

/// Physical inputs shared by the weight computations.
#[derive(Debug, Clone)]
pub struct WeightParams {
    pub potential: Arc<dyn PairPotential>,
    pub d: usize,
    pub lambda_beta: f64,
}

impl WeightParams {
    pub fn new(potential: Arc<dyn PairPotential>, d: usize, lambda_beta: f64) -> Result<Self, WeightError> {
        if d == 0 {
            return Err(WeightError::Domain("dimension must be positive".into()));
        }
        if !(lambda_beta > 0.0 && lambda_beta.is_finite()) {
            return Err(WeightError::Domain(format!("thermal wavelength must be positive, got {lambda_beta}")));
        }
        Ok(Self { potential, d, lambda_beta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockMode {
    GaussianExact,
    CycleExact,
    MonteCarlo,
}

impl fmt::Display for BlockMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockMode::GaussianExact => "gaussian-exact",
            BlockMode::CycleExact => "cycle-exact",
            BlockMode::MonteCarlo => "monte-carlo",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockWeight {
    pub block: LabeledGraph,
    pub value: f64,
    pub mode: BlockMode,
    /// Zero for exact modes.
    pub std_error: f64,
    pub samples: u64,
    pub seed: Option<u64>,
}

impl BlockWeight {
    fn exact(block: LabeledGraph, value: f64, mode: BlockMode) -> Self {
        Self { block, value, mode, std_error: 0.0, samples: 0, seed: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClusterMode {
    Full,
    CyclesOnly,
    FiniteL,
}

impl fmt::Display for ClusterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClusterMode::Full => "full",
            ClusterMode::CyclesOnly => "cycles-only",
            ClusterMode::FiniteL => "finite-L",
        })
    }
}

impl std::str::FromStr for ClusterMode {
    type Err = WeightError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(ClusterMode::Full),
            "cycles-only" => Ok(ClusterMode::CyclesOnly),
            "finite-L" => Ok(ClusterMode::FiniteL),
            _ => Err(WeightError::Domain(format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterWeight {
    pub n: usize,
    pub value: f64,
    pub mode: ClusterMode,
    pub error: f64,
    /// Number of graphs that contributed.
    pub graphs: u64,
}

impl ClusterWeight {
    pub fn trivial(n: usize, mode: ClusterMode) -> Option<Self> {
        match n {
            1 => Some(Self { n, value: 1.0, mode, error: 0.0, graphs: 1 }),
            2 => Some(Self { n, value: 0.0, mode, error: 0.0, graphs: 0 }),
            _ => None,
        }
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub(crate) fn parity_sign(edges: usize) -> f64 {
    if edges.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}
