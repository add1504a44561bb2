//! Fisher-information bounds on the position and orientation of a mobile
//! terminal served by a single mmWave MIMO anchor, with a line-of-sight path
//! and any number of single-bounce non-line-of-sight paths.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`] maps poses and points of incidence to per-path delays and
//!   angles, and provides the analytic Jacobian of that map.
//! - [`signal`] holds array responses, the DFT beamformer, pulse moments and
//!   path gains.
//! - [`channel_fim`] builds the Fisher information of the channel parameters,
//!   its large-array simplification and the per-path information terms.
//! - [`efim`] transforms to the position/orientation domain and decomposes the
//!   equivalent information into rank-one terms, one per NLOS path.
//! - [`bounds`] turns the equivalent information into PEB/OEB and runs
//!   scatterer sweeps.
//! - [`pipeline`] evaluates a scenario end to end.

// `!(x > 0.0)` rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod channel_fim;
pub mod efim;
mod error;
pub mod geometry;
pub mod pipeline;
pub mod signal;

pub use error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
