//! Mean-variance portfolio estimation as penalized regression.
//!
//! Markowitz weights under quadratic utility are the least-squares regression of a
//! constant ideal return r̄ on asset returns. This crate builds on that equivalence:
//! regularized regressions (ridge, lasso, principal components, spike-and-slab)
//! estimate portfolio weights, cross-validation picks their penalties, and
//! Monte-Carlo and rolling-sample experiments measure the estimation risk that
//! results.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod experiments;
pub mod linalg;
pub mod model_selection;
pub mod moments;
pub mod population;
pub mod returns;
pub mod risk;
pub mod rng;
pub mod weights;

pub use error::{Error, Result};
pub use moments::{compute_moments, SampleMoments};
pub use population::PopulationSpec;
pub use returns::ReturnsMatrix;
pub use weights::{relative_weights, WeightVector};
