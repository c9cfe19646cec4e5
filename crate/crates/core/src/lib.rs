//! Training quantized neural networks as QUBO instances.
//!
//! The pipeline turns a network description and a quantized dataset into
//! equality constraints over binary-encoded variables, folds them into the
//! loss as squared penalties, quadratizes the result with Rosenberg
//! substitutions and hands the QUBO to an exact or annealing solver. The
//! ground state decodes back into network parameters.

pub mod compile;
pub mod data;
pub mod encoding;
pub mod poly;
pub mod topology;
pub mod workflow;
pub mod solver;
pub mod model;
