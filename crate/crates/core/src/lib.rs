//! Optimal placement and sizing of viscous dampers that couple two adjacent
//! buildings under stochastic ground motion.
//!
//! The crate is organised bottom-up:
//!
//! * [`structure`] assembles the lumped-mass shear models and damper matrix.
//! * [`spectral`] evaluates the frequency response and the maximum
//!   inter-story drift objective.
//! * [`solvers`] holds the derivative-free inner minimizers (GA, MADS, RAGS).
//! * [`bilevel`] is the greedy "inserting dampers" outer loop.
//! * [`bench`] reproduces the 150-problem study and its analyses.
//! * [`cli`] backs the `retrofit` binary.

pub mod bench;
pub mod bilevel;
pub mod cli;
pub mod solvers;
pub mod spectral;
pub mod structure;
