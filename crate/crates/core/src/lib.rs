pub mod analysis;
pub mod config;
pub mod corpus;
pub mod error;
pub mod filters;
pub mod learners;
pub mod scalar;
pub mod stats;
pub mod synthpop;
pub mod textfeat;

pub use error::{Error, Result};

/// `f64` instances of the generic numeric types.
pub type SparseVector = textfeat::SparseVector<f64>;
pub type AnovaResult = stats::AnovaResult<f64>;
pub type TukeyResult = stats::TukeyResult<f64>;
pub type TukeyPair = stats::TukeyPair<f64>;
pub type WilcoxonResult = stats::WilcoxonResult<f64>;
pub type PropDiffCI = stats::PropDiffCI<f64>;
