//! Correlated Gaussian Wishart matrices: covariance kernels, exact samplers,
//! matrix ensembles, chaos contraction norms, rate bounds and distances
//! between sample clouds.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common instantiations.

pub mod bounds;
pub mod chaos;
pub mod distances;
pub mod dump;
pub mod ensembles;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod montecarlo;
pub mod rng;
pub mod sampler;
mod scalar;

pub use error::{Error, Result};
pub use kernels::{CorrelationKernel, KernelSpec, KernelSums, SummabilityClass};
pub use scalar::Scalar;

pub type Kernel = kernels::CorrelationKernel<f64>;
pub type KernelF32 = kernels::CorrelationKernel<f32>;
pub type MatrixSample = sampler::GaussianMatrixSample<f64>;
pub type MatrixSampleF32 = sampler::GaussianMatrixSample<f32>;
pub type Ensemble = ensembles::EnsembleMatrix<f64>;
pub type EnsembleF32 = ensembles::EnsembleMatrix<f32>;
pub type FgnPath = sampler::NestedFgnPath<f64>;
pub type Contraction = chaos::ContractionReport<f64>;
