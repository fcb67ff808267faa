//! Toolkit for the two-level single-server queue: a GI/G/1 queue whose
//! inter-arrival distribution and service speed switch when the queue length
//! crosses a threshold.
//!
//! The crate provides:
//!
//! - [`dists`]: nonnegative distribution specs with exact moments, reproducible
//!   sampling, and (truncated) Laplace transforms;
//! - [`model`]: a single parameterized system and the heavy-traffic family that
//!   generates sequences of systems approaching criticality;
//! - [`limits`]: the closed-form heavy-traffic limit law (truncated
//!   exponential / uniform below the threshold, exponential above) with its
//!   weights, moment generating functions, and mean formulas;
//! - [`mm1exact`]: exact stationary analysis of the fully exponential model via
//!   its finite Markov chain, solved both by the explicit recursion and by a
//!   dense linear system used as an oracle;
//! - [`des`]: a discrete-event simulator producing time-average and
//!   event-average (Palm) estimators plus boundary diagnostics;
//! - [`bar`]: exponent solvers and test functions for the stationary-equation
//!   machinery, including residual checks of the limit identity;
//! - [`sde`]: a reflected Euler-Maruyama integrator for the regime-switching
//!   diffusion matching the limit law.

pub mod bar;
pub mod des;
pub mod dists;
pub mod limits;
pub mod mm1exact;
pub mod model;
pub mod rng;
pub mod sde;

pub use dists::DistributionSpec;
pub use limits::LimitDistribution;
pub use mm1exact::ChainSolution;
pub use model::{HeavyTrafficFamily, QueueParams};
pub use rng::RngStream;
