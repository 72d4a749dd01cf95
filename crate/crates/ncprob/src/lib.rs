//! Computation with probability measures on the real line through their
//! holomorphic transforms.
//!
//! The crate covers Cauchy/F/B/R transforms and Stieltjes inversion, the
//! classical, Boolean, free and monotone convolutions with their limit
//! theorems, Loewner evolution (slit equation, general Herglotz fields,
//! nonlinear resolvents), rooted-graph products whose spectral laws realize
//! those convolutions, and classical oracles: finite Markov chains, value
//! iteration, quantum channels, Metropolis sampling of the Ising model and
//! GUE random matrices.

pub mod convolutions;
pub mod graphs;
pub mod loewner;
pub mod markov;
pub mod measures;
pub mod numeric;
pub mod randmat;
pub mod transforms;
