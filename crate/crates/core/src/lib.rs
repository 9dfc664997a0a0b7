#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN
#![allow(clippy::needless_range_loop)]
//! Standing waves of the logarithmic NLS on a tadpole graph.

pub mod config;
pub mod error;
pub mod evolution;
pub mod graph;
pub mod oracles;
pub mod phase_plane;
pub mod profile;
pub mod quadrature;
pub mod report;
pub mod scalar;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex;
