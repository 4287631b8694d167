//! Learning polynomial transformations of Gaussian (and rotation-invariant)
//! seeds from moments.

pub mod cli;
pub mod error;
pub mod io;
pub mod linalg;
pub mod lowerbound_lab;
pub mod lowrank;
pub mod model;
pub mod moments;
pub mod optim;
pub mod relaxation;
pub mod rng;
pub mod tensor_core;
pub mod tensor_ring;

pub use error::{Error, Result};
