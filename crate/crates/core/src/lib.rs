//! Structured stochastic gradient descent on regularized finite sums
//! `psi(x) = F(x) + (L_h / 2) ||x||^2`, where `F` is an average of convex
//! smooth losses, along with computable convergence quantities and an
//! experiment harness that checks observed errors against them.

pub mod data;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod optimizer;
pub mod problem;
pub mod sampling;
pub mod theory;

pub use error::{Error, Result};
pub use optimizer::{gd_run, sgd_run, OptimizerConfig, Trace};
pub use problem::{Dataset, Family, ProblemSpec, SmoothnessProfile};
pub use sampling::{RngStream, Sampler, SamplingScheme};
pub use theory::TheoryReport;
