//! Distances between finite supervised learning problems.
//!
//! A problem bundles an input space, a response space, a joint law `η`, a
//! loss and a predictor set. The crate computes the Risk distance between
//! two problems exactly on small instances, its weighted `L^p` variants,
//! stability bounds for common corruptions, geodesics, coarsenings,
//! empirical problems and risk landscapes.
//!
//! Every routine is generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar for the common cases.

pub mod corruption;
pub mod distance;
pub mod empirical;
pub mod error;
pub mod io;
pub mod landscape;
mod lp;
pub mod matrix;
pub mod problem;
pub mod scalar;
pub mod transport;

pub use error::{Error, Result};

pub type Problem = problem::FiniteProblem<f64>;
pub type WeightedProblem = problem::WeightedProblem<f64>;
pub type Coupling = distance::ProductCoupling<f64>;
pub type Distance = distance::DistanceResult<f64>;
pub type WeightedDistance = distance::WeightedDistanceResult<f64>;
pub type Graph = landscape::PredictorGraph<f64>;
pub type Reeb = landscape::ReebGraph<f64>;

pub type Problem32 = problem::FiniteProblem<f32>;
pub type WeightedProblem32 = problem::WeightedProblem<f32>;
pub type Distance32 = distance::DistanceResult<f32>;
