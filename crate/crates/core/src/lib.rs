//! Piecewise-linear paths, two-sided Skorokhod reflection, h-cuts and
//! h-trimmings of real trees, with the random-walk machinery used to test
//! the Poisson/exponential descriptions of trimmed Brownian trees.

// `!(x > 0.0)` is used deliberately: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grafts;
pub mod path;
pub mod realtree;
pub mod skorokhod;
pub mod stochastic;

pub use error::{Error, Result};
pub use grafts::{build_from_grafts, verify_main1, GraftSequence, Main1Report};
pub use path::{Excursion, PlPath};
pub use realtree::{LeafProfile, PlaneTree};
pub use skorokhod::{
    event_times_direct, h_cut, local_time_compensator, local_time_window_estimate, reflect_one_sided_high,
    reflect_one_sided_low, reflect_two_sided, Boundary, CutDecomposition, ReflectionResult,
};
