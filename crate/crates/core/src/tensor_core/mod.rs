//! Symmetric tensors, reshapings, Kronecker transforms and the gauge distance.

pub mod gauge;
pub mod multiindex;
pub mod reshape;
pub mod symtensor;
pub mod transform;

pub use gauge::{gauge_distance, gauge_distance_to_tensors, rotate_network, AlignConfig, GaugeRotation};
pub use multiindex::{binomial, multiplicity, SortedIndices};
pub use reshape::{mat, ten, vec_matrix};
pub use symtensor::{DenseTensor, SymTensor};
pub use transform::{apply_transform, kron_power, rotate_dense};

/// Largest dense tensor the crate will materialize.
pub const DENSE_LIMIT: usize = 1_000_000;
