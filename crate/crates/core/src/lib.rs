//! Structure learning for Gaussian graphical models under an empirical
//! G-Wishart prior.
//!
//! The numerical core is generic over [`scalar::Real`] (`f32` or `f64`);
//! the aliases below fix it to `f64`.

pub mod error;
pub mod estimation;
pub mod graph;
pub mod gwishart;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod posterior;
pub mod sampler;
pub mod scalar;
pub mod simulate;

pub use error::{Error, Result};
pub use graph::{CliqueTree, Graph, ParamIndex};
pub use gwishart::{McConfig, NormConstMethod};
pub use metrics::{ConfusionCounts, RecoveryScores};
pub use sampler::{ChainInit, McmcConfig, Proposal};
pub use simulate::ModelId;

pub type Matrix = linalg::Matrix<f64>;
pub type Cholesky = linalg::Cholesky<f64>;
pub type SampleCov = estimation::SampleCov<f64>;
pub type MleConfig = estimation::MleConfig<f64>;
pub type PrecisionEstimate = estimation::PrecisionEstimate<f64>;
pub type GWishartParams = gwishart::GWishartParams<f64>;
pub type NormConstEstimate = gwishart::NormConstEstimate<f64>;
pub type GraphPrior = posterior::GraphPrior<f64>;
pub type PosteriorConfig = posterior::PosteriorConfig<f64>;
pub type GraphScore = posterior::GraphScore<f64>;
pub type ChainResult = sampler::ChainResult<f64>;
pub type SimulationTruth = simulate::SimulationTruth<f64>;

/// Seed for sub-task `task` of a run with master seed `master` (SplitMix64).
pub fn task_seed(master: u64, task: u64) -> u64 {
    let mut z = master.wrapping_add(task.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
