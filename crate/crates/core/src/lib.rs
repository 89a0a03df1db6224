//! Approximating sequences of homeomorphisms and volume-preserving
//! diffeomorphisms whose derivatives converge in L^p for 0 < p < 1.
//!
//! The crate is `no_std` with `alloc`. Enable `std` for `std::error::Error`
//! impls and `parallel` for rayon-backed quadrature.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(a < b)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod error;
pub mod homeo1d;
pub mod kernel;
pub mod map;
pub mod packing;
pub mod rng;
pub mod twist;
pub mod verify;

pub use error::{Error, Result};
pub use kernel::{BoxDomain, Exponent, Interval, LpResult};
pub use map::{Smoothness, VectorMap, VolumePreservingDiffeo};
