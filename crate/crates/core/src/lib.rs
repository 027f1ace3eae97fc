//! Source number detection for uniform linear arrays.
//!
//! The crate estimates how many narrowband far-field sources impinge on an
//! `M`-element uniform linear array from `N` snapshots. It provides:
//!
//! - [`linalg`]: a small dense complex matrix type and a cyclic Jacobi
//!   eigensolver for Hermitian matrices.
//! - [`signal`]: snapshot simulation, sample covariance, and forward-backward
//!   spatial smoothing (FBSS) for coherent sources.
//! - [`classical`]: the AIC and MDL information criteria.
//! - [`neural`]: a from-scratch fully-connected network with ADAM training.
//! - [`detectors`]: the eigenvalue regression (ERNet) and classification
//!   (ECNet) detectors plus a covariance-input ablation network (CovNet).
//! - [`experiments`]: dataset generation, accuracy sweeps, the operation
//!   count bench, and the file formats used by the CLI.

pub mod classical;
pub mod detectors;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod neural;
pub mod opcount;
pub mod rng;
pub mod signal;

pub use error::{Error, Result};
pub use num_complex::Complex64;
