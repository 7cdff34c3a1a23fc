//! Stochastic adding machines over Cantor numeration systems.
//!
//! The crate builds finite truncations of the transition operator, iterates the
//! associated fibered polynomial system whose filled Julia set carries the
//! spectrum, and enumerates and verifies eigenvalues.

pub mod error;
pub mod julia;
pub mod machine;
pub mod numeration;
pub mod presets;
pub mod spectrum;

pub use error::{Error, Result};
