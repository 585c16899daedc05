//! Markov chains of the single-resource back-off process and the
//! analytical bounds on convergence time and equilibrium payoffs.

pub mod bounds;
pub mod chain;

pub use bounds::*;
pub use chain::*;
