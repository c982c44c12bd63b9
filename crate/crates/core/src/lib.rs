//! Clairvoyant-demon token scheduling on graphs.
//!
//! Two tokens walk along fixed walks `R` and `S`; a scheduler that knows
//! both walks in advance moves one token at a time and must never put both
//! tokens on the same vertex. This crate provides the exact scheduling
//! oracle, constructions of evasive walks (fixed walks that a random partner
//! walk can be scheduled against with positive probability), winding-number
//! analysis on cycles, and the one-way-edge and colored-edge variants.

mod bits;
pub mod classify;
pub mod covering;
pub mod cycle;
pub mod error;
pub mod evasive;
pub mod estimate;
pub mod excursion;
pub mod graph;
pub mod schedule;
pub mod variants;
pub mod walk;

pub use error::{Error, Result};
pub use graph::Graph;
pub use walk::{RandomSource, Walk};
