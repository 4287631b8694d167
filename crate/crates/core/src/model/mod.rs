//! Polynomial networks, seed distributions, smoothing, sampling and the W1 bound.

pub mod network;
pub mod sampling;
pub mod seed;
pub mod smoothing;
pub mod wasserstein;

pub use network::{NetworkKind, PolyNetwork};
pub use sampling::sample;
pub use seed::{RadialLaw, SeedDistribution, SphereRadial};
pub use smoothing::{
    identical_lowrank_base, identical_quadratic_base, smooth_componentwise, smooth_quadratic, smoothed_lowrank_instance,
    smoothed_quadratic_instance, SmoothingParams,
};
pub use wasserstein::{gaussian_norm_moment, w1_upper_bound};
