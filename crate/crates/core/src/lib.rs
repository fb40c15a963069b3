//! Regression through an equivalent binary classification problem.
//!
//! A centered regression sample `(x, z)` maps to the classification points
//! `x/z` (class `+1`) and `−x/z` (class `−1`); a separating hyperplane
//! through the origin with unit functional margin is the regressor itself.
//! On top of that equivalence the crate provides:
//!
//! - [`svc`]: an L1-error, bias-free SVC solved in the dual by coordinate
//!   descent, with KKT status per point;
//! - [`regressability`]: a model-free difficulty score, the neighborhood
//!   classifiability of the equivalent dataset;
//! - [`linmap`]: a tanh network trained on the J4 scatter ratio of the
//!   transformed images, followed by a least-squares linear head;
//! - [`pipeline`]: k-fold evaluation, plot data and the augmented-space
//!   baseline, as used by the `j4reg` CLI.

pub mod dataset;
pub mod equivalence;
pub mod error;
pub mod linmap;
pub mod model;
pub mod pipeline;
pub mod regressability;
pub mod svc;
mod vecops;

pub use error::{Error, Result};
