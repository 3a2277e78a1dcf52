//! Rank-based interacting particle systems and their kinetic limits.

// `!(x > 0.0)` is how NaN gets rejected alongside bad values; grid loops index several arrays at once.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod geometry;
pub mod harness;
pub mod kernel;
pub mod kinetic;
pub mod limits;
pub mod quadrature;
pub mod sim;
pub mod special;

pub use error::{Error, Result};
