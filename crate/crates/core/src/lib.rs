//! Finite-scale computation of entropy, recurrence, dimension and
//! expansivity indicators for concrete dynamical systems and measures.

pub mod bowen;
pub mod dimension;
pub mod entropy;
pub mod error;
pub mod expansive;
pub mod measures;
pub mod recurrence;
pub mod stats;
pub mod systems;

pub use error::{Error, Result};
