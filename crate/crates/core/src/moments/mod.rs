//! Population and empirical moments, the Σ inner product, and cumulants of
//! diagonal networks.

pub mod cumulant;
pub mod hermite;
pub mod pair;
pub mod quadratic;
pub mod rotation_invariant;
pub mod sigma;
pub mod table;

pub use cumulant::cumulant_diagonal;
pub use hermite::hermite_pair_moment;
pub use pair::{estimate_pair_moments, exact_pair_moments, pair_sample_size, PairMomentTable};
pub use quadratic::{estimate_quadratic_moments, exact_quadratic_moments, quadratic_sample_size, QuadraticMomentTable};
pub use rotation_invariant::rotation_invariant_scale;
pub use sigma::{sigma_inner, sigma_matrix, SigmaMatrix, SigmaMode, SIGMA_LIMIT};
pub use table::MomentTable;

/// Fixed chunk size for reductions over samples.
pub(crate) const CHUNK: usize = 4096;

/// Deterministic chunked sum of `f(k)` over `k in 0..n`.
pub(crate) fn chunked_sum(n: usize, mut f: impl FnMut(usize) -> f64) -> f64 {
    let mut total = 0.0;
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        let mut part = 0.0;
        for k in start..end {
            part += f(k);
        }
        total += part;
        start = end;
    }
    total
}
