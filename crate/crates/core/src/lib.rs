//! Exact cylinder tracking for random number systems, Lochs-type digit
//! comparison, fiber entropy estimation and central limit checks.

pub mod base_process;
pub mod branch;
pub mod cylinder;
pub mod entropy;
pub mod error;
pub mod interval;
pub mod lochs;
pub mod montecarlo;
pub mod numeric;
pub mod oracle;
pub mod report;
pub mod stats;
pub mod systems;

pub use error::{Error, Result};
