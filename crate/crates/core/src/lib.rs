//! Machine learning on elliptic-curve invariants for predicting the order of
//! the Tate-Shafarevich group.

pub mod cli;
pub mod curvedata;
pub mod error;
pub mod featureng;
pub mod metrics;
pub mod models;
pub mod numcore;
pub mod rng;
pub mod svg;
pub mod experiments;

pub use error::{Error, Result};
