//! Sampled-data redesign of analog LTI controllers for intermittent sampling.

// `!(x > 0.0)` is used on purpose so NaN lands in the rejecting branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod lti;
pub mod matfun;
pub mod pendulum;
pub mod perf;
pub mod random;
pub mod redesign;
pub mod sim;
pub mod youla;

pub use error::{Error, Infeasibility, Result};
pub use matfun::Mat;
