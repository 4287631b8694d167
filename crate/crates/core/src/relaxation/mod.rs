//! Moment relaxations of polynomial feasibility programs.

mod encode;
mod poly;
mod program;
mod pseudo;
mod sdp;

pub use encode::{encode_lowrank, encode_tensor_ring, LowRankEncoding, LowRankParams, TensorRingEncoding, TensorRingParams};
pub use poly::{Monomial, Polynomial};
pub use program::{Clique, Constraint, PolynomialProgram};
pub use pseudo::{pseudo_expect, Pseudoexpectation};
pub use sdp::{solve, SolveOutcome, SolverConfig};

#[cfg(test)]
mod tests;
