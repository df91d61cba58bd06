//! Geometric prototypes of point-set patterns.
//!
//! Given `n` patterns of `k` points each, the geometric prototype is the
//! `k`-point set minimizing the total matching cost to all patterns. This
//! crate provides the matching kernels ([`matching`]), the objective and an
//! alternating solver ([`prototype`]), sensitivity-sampling coresets
//! ([`coreset`]), random-projection dimension reduction ([`reduce`]) and an
//! experiment harness with a CLI ([`harness`]).

pub mod coreset;
pub mod error;
pub mod harness;
pub mod io;
pub mod matching;
pub mod parallel;
pub mod pattern;
pub mod prototype;
pub mod reduce;
pub mod seed;

pub use error::{Error, Result};
pub use matching::Metric;
pub use pattern::{Instance, Pattern, Prototype};
