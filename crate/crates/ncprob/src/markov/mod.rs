//! Finite Markov chains (column-stochastic: `P[(j, k)] = P(k → j)`),
//! reward and decision processes, quantum channels, Metropolis sampling of
//! the Ising model, loop-erased random walks and ▷-homogeneous kernels.

mod chain;
mod ising;
mod kernel;
mod mdp;
mod quantum;
mod walk;

use thiserror::Error;

use crate::transforms::TransformError;

pub use chain::{
    convergence_report, expected_rewards, is_irreducible, iterate_distribution, mean_return_time, mrp_value, period,
    second_eigenvalue_modulus, stationary_distribution, ConvergenceReport, TransitionMatrix, CONVERGENCE_HORIZON,
};
pub use ising::{
    exact_boltzmann, magnetization, metropolis_ising, sample_histogram, IsingState, CRITICAL_TEMPERATURE,
    MAX_ENUMERATED_SPINS,
};
pub use kernel::{homogeneous_kernel, homogeneous_kernel_from_f};
pub use mdp::{mdp_value_iteration, MdpSpec, ValueIteration};
pub use quantum::{
    channel_apply, channel_fixed_point, trace_distance, DensityMatrix, KrausChannel, MAX_CHANNEL_ITERATIONS,
};
pub use walk::{is_simple, lerw, loop_erase, simple_random_walk, Site};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarkovError {
    #[error("invalid transition matrix: {0}")]
    InvalidMatrix(String),
    #[error("chain is not irreducible")]
    NotIrreducible,
    #[error("invalid probability vector: {0}")]
    InvalidVector(String),
    #[error("discount factor {0} outside [0, 1)")]
    BadDiscount(f64),
    #[error("invalid decision process: {0}")]
    InvalidMdp(String),
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("Kraus operators violate Σ E*E = I (deviation {0:e})")]
    NotTracePreserving(f64),
    #[error("fixed-point iteration did not converge in {0} steps")]
    NotConverged(usize),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("{0} free spins are too many to enumerate")]
    EnumerationTooLarge(usize),
    #[error("walk did not leave the box within {0} steps")]
    CapExceeded(usize),
    #[error(transparent)]
    Transform(#[from] TransformError),
}
