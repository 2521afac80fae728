//! Number representations: exact rationals, unreduced fractions,
//! outward-rounded enclosures and quadratic surds.

pub mod enclosure;
pub mod frac;
pub mod scalar;
pub mod surd;

pub use enclosure::{Dyadic, FloatEnclosure, TriOrdering};
pub use frac::{ln_int, ln_ratio, Frac};
pub use scalar::{parse_rational, Backend, Scalar, Tri};
pub use surd::QuadSurd;
