//! Flat classification in Euclidean space and in the Poincaré ball.
//!
//! The crate is `no_std` (it needs `alloc`) and covers:
//!
//! - [`geometry`]: Poincaré-ball kernel (conformal factor, Möbius addition,
//!   exponential maps, distances, concavity derivative).
//! - [`mlr`]: Euclidean hyperplane and hyperbolic gyroplane multinomial
//!   logistic regression, cross-entropy and analytic gradients.
//! - [`train`]: SGD / Riemannian SGD training of the flat heads and a
//!   one-vs-all per-node baseline.
//! - [`taxonomy`]: stationary label trees and bottom-up parent posteriors.
//! - [`metrics`]: confusion-matrix metrics (mIoU, mAcc, aAcc) and class-wise ECE.
//! - [`analysis`]: embedding norm statistics, distance coefficient-of-variation
//!   tables and concavity scans.
//!
//! All reals are `f64`.
#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
mod error;
pub mod geometry;
mod linalg;
pub mod metrics;
pub mod mlr;
pub mod taxonomy;
pub mod train;

pub use error::{Error, Result};
pub use geometry::{BallConfig, BallPoint, TangentVector};
pub use taxonomy::LabelTree;
