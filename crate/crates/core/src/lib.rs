//! Double descent in ordinary linear regression.
//!
//! Min-norm least squares fits, the SVD-based test error decomposition and
//! the factor ablations that remove one cause of the interpolation peak at a
//! time.

pub mod cli;
pub mod data;
pub mod decomposition;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod linalg;
pub mod numfmt;
pub mod report;

pub use error::{Error, Result};
