//! Numerical laboratory for Kleinian groups: Möbius geometry, Cayley graph
//! embeddings, limit sets, and Cannon-Thurston map diagnostics for sequences
//! of representations.

// Checks such as `!(r > 0.0)` are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod ctmap;
pub mod error;
pub mod families;
pub mod hypgeo;
pub mod limitset;
pub mod moebius;
pub mod suites;
pub mod words;

pub use error::{Error, Result};
pub use moebius::{chordal_dist, dist_h3, BoundaryPoint, H3Point, MapClass, Mobius, C64};
