use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;

use super::wasserstein::gaussian_norm_moment;
use crate::linalg::gaussian_vector;
use crate::rng::StreamRng;

/// Radial part of a rotation-invariant seed distribution on `R^r`.
pub trait RadialLaw: Send + Sync {
    /// `E ‖x‖^e`.
    fn norm_moment(&self, r: usize, e: u32) -> f64;
    fn sample_radius(&self, r: usize, rng: &mut StreamRng) -> f64;
    fn name(&self) -> String;
}

/// All mass on the sphere of the given radius.
#[derive(Debug, Clone, Copy)]
pub struct SphereRadial {
    pub radius: f64,
}

impl RadialLaw for SphereRadial {
    fn norm_moment(&self, _r: usize, e: u32) -> f64 {
        self.radius.powi(e as i32)
    }

    fn sample_radius(&self, _r: usize, _rng: &mut StreamRng) -> f64 {
        self.radius
    }

    fn name(&self) -> String {
        format!("sphere(radius={})", self.radius)
    }
}

/// Uniform distribution on the ball of the given radius.
#[derive(Debug, Clone, Copy)]
pub struct BallRadial {
    pub radius: f64,
}

impl RadialLaw for BallRadial {
    fn norm_moment(&self, r: usize, e: u32) -> f64 {
        self.radius.powi(e as i32) * r as f64 / (r as f64 + e as f64)
    }

    fn sample_radius(&self, r: usize, rng: &mut StreamRng) -> f64 {
        let u: f64 = rng.random();
        self.radius * u.powf(1.0 / r as f64)
    }

    fn name(&self) -> String {
        format!("ball(radius={})", self.radius)
    }
}

#[derive(Clone, Default)]
pub enum SeedDistribution {
    #[default]
    Gaussian,
    RotationInvariant(Arc<dyn RadialLaw>),
}

impl fmt::Debug for SeedDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SeedDistribution({})", self.name())
    }
}

impl SeedDistribution {
    pub fn rotation_invariant<L: RadialLaw + 'static>(law: L) -> Self {
        SeedDistribution::RotationInvariant(Arc::new(law))
    }

    pub fn name(&self) -> String {
        match self {
            SeedDistribution::Gaussian => "gaussian".into(),
            SeedDistribution::RotationInvariant(l) => l.name(),
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, SeedDistribution::Gaussian)
    }

    /// `E ‖x‖^e` on `R^r`.
    pub fn norm_moment(&self, r: usize, e: u32) -> f64 {
        match self {
            SeedDistribution::Gaussian => gaussian_norm_moment(r, e),
            SeedDistribution::RotationInvariant(l) => l.norm_moment(r, e),
        }
    }

    pub fn sample_point(&self, r: usize, rng: &mut StreamRng) -> DVector<f64> {
        let g = gaussian_vector(r, rng);
        match self {
            SeedDistribution::Gaussian => g,
            SeedDistribution::RotationInvariant(l) => {
                let n = g.norm();
                let rad = l.sample_radius(r, rng);
                if n > 0.0 {
                    g * (rad / n)
                } else {
                    g
                }
            }
        }
    }
}
