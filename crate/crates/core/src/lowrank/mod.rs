//! Low-rank factorization: recovering rank-ℓ symmetric tensors from their
//! pairwise Σ-inner products.

pub mod extend;
pub mod factorize;
pub mod fvector;
pub mod hermite_net;
pub mod verify;

pub use extend::extend_tail_lr;
pub use factorize::{canonicalize_components, factorize, pair_residual, LRConfig, LowRankReport};
pub use fvector::{f_gram, f_matrices, f_vector, f_vector_components};
pub use hermite_net::{hermite_network, hermite_network_pair_moments};
pub use verify::{symmetric_power_matrix, verify_assumption_lr, Band, LrAssumptionReport, VerifyLimits};
