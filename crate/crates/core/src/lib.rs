//! Robust location and scatter estimation under Huber contamination.
//!
//! The crate bundles a contaminated-data generator, small neural discriminators
//! with hand-written gradients, the JS and TV adversarial objectives, location and
//! elliptical generators, the alternating trainer, and the classical baselines the
//! adversarial estimators are compared against.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod data;
pub mod error;
pub mod generators;
pub mod nets;
pub mod numkit;
pub mod objectives;
pub mod trainer;

pub use error::{Error, Result};
