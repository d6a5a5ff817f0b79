//! Numerical kernels for linear parabolic equations with degenerate, unbounded
//! coefficients and for the diffusions they generate.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration,
//! parallel drivers and the command line live in the companion `parabolic-lab`
//! crate.

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cutoff;
pub mod degiorgi;
pub mod embeddings;
pub mod error;
pub mod grid;
pub mod norms;
pub mod pde;
mod prelude;
pub mod sde;
pub mod stats;
pub mod variational;

pub use error::{Error, ErrorKind, Result};

/// Version of this crate, embedded in experiment reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use grid::{Boundary, Cylinder, GridFunction, SpaceGrid, TimeGrid};
pub use norms::{MixedNormSpec, Order};
