//! Regularized least squares with bias correction.
//!
//! The crate provides ridge regression and regularization kernel networks
//! together with their bias-corrected variants, a running-average learner for
//! block-wise streaming data, and the Monte-Carlo machinery used to measure
//! bias, variance and prediction error of all of them.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`linear`] | centering, ridge and order-k corrected ridge, spectral filter factors |
//! | [`kernel`] | Mercer kernels, median bandwidth, kernel network and its correction |
//! | [`streaming`] | incremental averaging, cross-validated λ, block stream driver |
//! | [`experiments`] | synthetic generators, Monte-Carlo bias/variance, chunking, metrics |
//!
//! ```
//! use bcreg_core::{linear, Dataset};
//! use nalgebra::{DMatrix, DVector};
//!
//! let data = Dataset::new(
//!     DMatrix::from_row_slice(2, 1, &[-1.0, 1.0]),
//!     DVector::from_vec(vec![-1.0, 1.0]),
//! )
//! .unwrap();
//! let ridge = linear::fit_regularized(&data, 1.0, 0).unwrap();
//! let corrected = linear::fit_regularized(&data, 1.0, 1).unwrap();
//! assert!((ridge.weights[0] - 0.5).abs() < 1e-12);
//! assert!((corrected.weights[0] - 0.75).abs() < 1e-12);
//! ```

pub mod dataset;
pub mod error;
pub mod experiments;
pub mod kernel;
pub mod linear;
pub mod seeding;
pub mod streaming;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use kernel::{KernelChoice, KernelModel, KernelSpec};
pub use linear::{CenteredStats, LinearModel, SpectrumProfile};
pub use streaming::{AveragedModel, FittedModel, StreamReport};
