//! Automated feature generation: expand candidate features from an operator
//! catalog, score them with a residual boosting model, and keep the best.

pub mod dataframe;
pub mod error;
pub mod boost_eval;
pub mod gbdt;
pub mod ops;
pub mod pipeline;
pub mod pruning;
pub mod synthlab;

pub use error::{Error, Result};
