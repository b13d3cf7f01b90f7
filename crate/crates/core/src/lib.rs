//! Qualitative verification of nondeterministic probabilistic lossy
//! channel systems.

pub mod error;
pub mod fixpoints;
pub mod fixtures;
pub mod format;
pub mod model;
pub mod omega;
pub mod oracle;
pub mod qualitative;
pub mod reach;
pub mod sched;
pub mod sim;
pub mod upsets;

pub use error::{Error, Result};
