//! Geometric phases on ray space: Bargmann invariants, geodesics, null phase
//! curves and manifolds, and Gaussian null phase families.
//!
//! States are unit vectors ([`StateVector`]); rays are gauge-fixed states
//! ([`Ray`]). Sampled curves carry their link overlaps, and phases are
//! computed from those links so that every identity between discretized
//! Bargmann invariants holds to rounding error.

pub mod bargmann;
pub mod curves;
pub mod error;
pub mod gaussian;
pub mod geodesics;
pub mod nnls;
pub mod nullphase;
pub mod statespace;
pub mod suite;
pub mod tolerance;

pub use error::{Error, Result};
pub use statespace::{HilbertPoint, Ray, StateVector, TangentVector};
