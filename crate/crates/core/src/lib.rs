//! Extended skew-normal distributions, multivariate normal probabilities,
//! tail dependence of the skew-normal family and the skew Hüsler–Reiss
//! max-stable limit.

pub mod corr;
pub mod error;
pub mod esn;
pub mod hr;
pub mod mvn;
pub mod normal;
pub mod quad;
mod root;
pub mod tail;
pub mod triarray;

pub use corr::CorrelationMatrix;
pub use error::{EsnError, Result};
pub use esn::{EsnParams, UniEsnParams};
pub use hr::{HrModel, HrSkewParams};
pub use mvn::CdfResult;
