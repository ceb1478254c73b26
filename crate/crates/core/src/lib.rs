//! Convex multiclass segmentation of weighted graphs.
//!
//! Data points are organised in a symmetric k-nearest-neighbour graph and
//! partitioned by minimising region costs plus graph total variation over
//! the relaxed label simplex. The relaxed problem is solved through its
//! max-flow dual with an augmented-Lagrangian iteration that also handles
//! hard interval constraints and piecewise-linear penalties on class sizes.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`graph`]: kNN graph construction and edge weights
//! - [`calculus`]: gradient, divergence, total variation, Laplacian
//! - [`solver`]: the max-flow solver, energies, thresholding, brute-force oracle
//! - [`region`]: local PCA features and point-cloud region terms
//! - [`spectral`]: second Laplacian eigenvector and the unsupervised two-class model
//! - [`data`]: synthetic generators and supervision sampling
//! - [`eval`]: accuracy, energies and reports
//! - [`io`], [`config`], [`presets`]: file formats and run configuration
//! - [`pipeline`]: complete runs from points to labels
//!
//! Class indices are 0-based throughout the library. Files written by the
//! [`io`] module use 1-based labels.

// `!(x > 0.0)` is used on purpose: it rejects NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod config;
pub mod data;
mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod pipeline;
pub mod presets;
pub mod region;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use graph::{Graph, WeightSpec};
pub use solver::{RegionCosts, SizeSpec, SolverParams, SolverResult};
