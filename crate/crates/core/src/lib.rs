//! Reflection-matrix optimization and performance bounds for a BD-IRS aided
//! uplink integrated sensing and communication (ISAC) system.
//!
//! A base station with `N` receive antennas senses the random azimuth angle of
//! an active target while serving `K` uplink users, all via a beyond-diagonal
//! intelligent reflecting surface (BD-IRS) whose reflection matrix is block
//! diagonal with symmetric unitary blocks. The library provides:
//!
//! - [`scenario`]: scene geometry, Gaussian-mixture angle priors, channel
//!   realizations and the precomputed second-moment matrices they induce;
//! - [`metrics`]: posterior Cramér-Rao bound (PCRB), expected-rate lower
//!   bounds, receive beamformers, Monte-Carlo oracles and beampatterns;
//! - [`pdd`]: a penalty dual decomposition algorithm that optimizes the
//!   reflection matrix under a PCRB constraint, with convex QCQP inner
//!   subproblems solved by [`qcqp`];
//! - [`tdma`]: a time-division alternative with a closed-form time split;
//! - [`linalg`]/[`reflection`]: the complex-matrix machinery underneath.

pub mod error;
pub mod linalg;
pub mod metrics;
pub mod pdd;
pub mod qcqp;
pub mod quadrature;
pub mod reflection;
pub mod scenario;
pub mod tdma;
#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, Complex64};
pub use metrics::IsacMetrics;
pub use pdd::{PddConfig, TraceRecord};
pub use reflection::ReflectionMatrix;
pub use scenario::{ChannelSet, GaussianMixturePrior, ScenarioConfig};
