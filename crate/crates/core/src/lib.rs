#![cfg_attr(not(feature = "std"), no_std)]

//! Kernel machines with learned Mahalanobis features on modular arithmetic.
//!
//! The crate covers the whole numerical side of the laboratory:
//!
//! - [`dataset`]: Cayley tables, one-hot encodings, seeded train/test splits,
//!   and the two-task encoding with a task bit.
//! - [`linalg`]: symmetric eigendecomposition, PSD fractional powers, a blocked
//!   Cholesky solver, the unitary DFT matrix and circulant constructors.
//! - [`kernel`]: quadratic and Gaussian Mahalanobis kernels, ridgeless fitting,
//!   analytic Jacobians and the average gradient outer product (AGOP).
//! - [`rfm`]: the Recursive Feature Machine loop, the enforced-circulant
//!   evaluation and the random block-circulant baseline.
//! - [`measures`]: circulant deviation, AGOP alignment, Pearson correlation,
//!   classification metrics and discrete-logarithm reordering.
//! - [`fma`]: the Fourier Multiplication Algorithm, the per-class kernel
//!   construction that reproduces it, and a rank-4 encoder solution.
//! - [`nnet`]: a one-hidden-layer network with quadratic activation, trained
//!   with AdamW or SGD, plus its neural feature matrix and AGOP.
//!
//! Everything here is pure computation over `alloc`; file formats, plotting
//! and the command line live in the `grokbench` crate.

extern crate alloc;

pub mod dataset;
mod error;
pub mod fma;
pub mod kernel;
pub mod linalg;
mod matrix;
pub mod measures;
pub mod nnet;
pub mod rfm;
pub mod rng;

pub use crate::dataset::{Dataset, ModTask, Operation};
pub use crate::error::{Error, Result};
pub use crate::kernel::{KernelKind, KernelMachine, KernelSpec};
pub use crate::linalg::SymMatrix;
pub use crate::matrix::Mat;
pub use crate::measures::MetricsRecord;
pub use crate::nnet::{QuadMlp, TrainConfig};
pub use crate::rfm::{RfmConfig, RfmRun};
pub use crate::rng::Rng64;

/// A symmetric PSD matrix inside a Mahalanobis kernel.
pub type FeatureMatrix = SymMatrix;

/// Crate version, recorded in run metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
