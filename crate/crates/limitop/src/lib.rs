//! Limit operators of band-dominated operators on uniformly locally finite
//! discrete metric spaces.
//!
//! The crate builds operators from declarative kernel terms, extracts their
//! limit operators along diverging sequences by patch stabilization, computes
//! lower norms of truncations as smallest singular values, and aggregates
//! per-galaxy invertibility into Fredholm verdicts, cross-validated against
//! an exact symbol oracle for eventually periodic operators on the line.

pub mod diagnostics;
pub mod error;
pub mod fredholm;
pub mod galaxy;
pub mod lowernorm;
pub mod operator;
pub mod space;
pub mod specfile;

pub use error::{Error, Result};
pub use operator::{assemble, C64, OperatorHandle, OperatorSpec, Propagation};
pub use space::{DivergingStrategy, FiniteRegion, Point, SpaceDescriptor};
