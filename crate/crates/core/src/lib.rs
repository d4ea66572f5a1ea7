//! Identification of partial differential equations with space- and
//! time-varying coefficients from a single sampled trajectory.
//!
//! The pipeline has four stages:
//!
//! 1. Build a feature system `(A, y)`: derivatives of the data are estimated
//!    with successively denoised differentiation ([`sdd`]), multiplied into
//!    dictionary features ([`dictionary`]) and expanded against a tensor
//!    product B-spline basis ([`bspline`]) so that each candidate term owns a
//!    block (group) of columns.
//! 2. For every sparsity level `k = 1..K_max` select `k` groups with group
//!    projected subspace pursuit ([`gpsp`]).
//! 3. Choose the sparsity level with the reduction-in-residual score
//!    ([`selection`]).
//! 4. Refit the selected groups and rebuild the coefficient fields.
//!
//! [`simulate`] generates reference trajectories with a pseudo-spectral
//! method-of-lines solver and [`metrics`] scores identified models.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. Dense factorizations are much faster with `std`, which lets the
//! linear algebra backend detect SIMD support at runtime.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bspline;
pub mod dictionary;
mod error;
pub mod gpsp;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod sdd;
pub mod selection;
pub mod simulate;
pub mod trajdata;

pub use error::{Error, Result};

pub use bspline::{BSplineBasis1D, BasisSet, Boundary, KnotSequence};
pub use dictionary::{enumerate_dictionary, FeatureSpec, FeatureSystem};
pub use gpsp::{GroupSparseSolution, GroupSystem, SolverKind, SolverOptions, Termination};
pub use metrics::{jaccard, rel_l1_error, EvaluationReport};
pub use pipeline::{identify, IdentifyConfig, Identification};
pub use sdd::SavGolFilter;
pub use selection::{CandidatePath, IdentifiedModel, ReconstructionMode};
pub use simulate::{PdeKind, PdeProblem};
pub use trajdata::{CoefficientField, Grid, Trajectory};
