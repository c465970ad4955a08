//! Numerical thresholds used across the crate.
//!
//! Every check that compares floating-point quantities reads its default
//! from here, so that quadrature, isotropy and positivity tests stay
//! coordinated.

use serde::{Deserialize, Serialize};

/// Allowed deviation of `‖ψ‖²` from one.
pub const TOL_NORM: f64 = 1e-12;
/// Two rays are equal iff their fidelity is one within this tolerance.
pub const TOL_FID: f64 = 1e-10;
/// Amplitudes below this modulus are skipped when fixing the gauge of a ray.
pub const GAUGE_EPS: f64 = 1e-9;
/// Overlap moduli below this are treated as orthogonal.
pub const ORTHO_EPS: f64 = 1e-10;
/// Vectors with norm below this cannot be normalized.
pub const EPS_ZERO: f64 = 1e-14;
/// Default relative imaginary-part tolerance for Bargmann positivity checks.
pub const TOL_NPC: f64 = 1e-10;
/// Default residual threshold for hull membership.
pub const TOL_HULL: f64 = 1e-8;
/// Largest admissible condition number of the tangent Gram matrix of a chart.
pub const MAX_TANGENT_CONDITION: f64 = 1e6;
/// Curves with more samples than this are checked on a random subset of triples.
pub const EXHAUSTIVE_TRIPLE_LIMIT: usize = 200;
/// Number of sampled triples when the exhaustive scan is skipped.
pub const DEFAULT_TRIPLES: usize = 10_000;

/// The full tolerance record, with the defaults above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub norm: f64,
    pub fidelity: f64,
    pub gauge: f64,
    pub ortho: f64,
    pub zero: f64,
    pub npc: f64,
    pub hull: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            norm: TOL_NORM,
            fidelity: TOL_FID,
            gauge: GAUGE_EPS,
            ortho: ORTHO_EPS,
            zero: EPS_ZERO,
            npc: TOL_NPC,
            hull: TOL_HULL,
        }
    }
}
