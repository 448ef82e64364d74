//! Simulation and analysis of projected perturbed lattices
//! `{V(z) + g_z : z in G}`.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`] enumerates sites of the index set by the value of `V` and
//!   produces shell tables, gaps and site lists.
//! * [`noise`] samples Gaussian perturbations with several covariance
//!   structures and evaluates the max-noise-over-gap ratios.
//! * [`process`] assembles lattice, noise and deletions into an observed
//!   point configuration, keeping the ground truth on the side.
//! * [`detector`] estimates how many points were deleted with a bottleneck
//!   matching that is allowed a fixed number of skipped sites.
//! * [`linear_stats`] and [`shepp`] implement the two classical rigidity
//!   tools (variance of linear statistics and square-summable mean shifts).
//!
//! Trial loops run through [`exec::Execution`], which uses rayon when the
//! `parallel` feature is enabled and falls back to plain iteration otherwise.

pub mod detector;
pub mod error;
pub mod exec;
pub mod lattice;
pub mod linear_stats;
pub mod noise;
pub mod process;
pub mod rng;
pub mod shepp;
pub mod stats;

pub use error::{Error, Result};
