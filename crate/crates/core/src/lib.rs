//! Numerical gluing of asymptotically hyperbolic CMC initial data.
//!
//! Everything here lives on uniform grids in upper half-space coordinates
//! `(y, x1, x2)` with `y > 0`. The crate is `no_std` (with `alloc`) unless the
//! `std` feature is enabled.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod boundary;
pub mod cutoff;
pub mod error;
pub mod fd;
pub mod geometry;
pub mod grid;
pub mod krylov;
pub mod linalg;
pub mod operators;
pub mod pipeline;
pub mod seed;
pub mod solve;
pub mod splice;

pub use error::{GlueError, Result};
pub use grid::{ChartGrid, Covariance, Field, MetricField, OneFormField, ScalarField, SymTensorField, VectorField};
pub use linalg::{Sym3, Vec3};

pub(crate) mod prelude {
    #[allow(unused_imports)]
    pub use alloc::{boxed::Box, format, string::String, sync::Arc, vec, vec::Vec};
    #[allow(unused_imports)]
    pub use num_traits::Float;
}
