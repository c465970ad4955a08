//! Null phase curves and manifolds.
//!
//! * [`npc`]: the triple-positivity test for curves and the curve generators
//!   (paths on the positive sphere and the general σ/θ/χ parametrization).
//! * [`symplectic`]: the ray-space two-form on horizontal tangent vectors.
//! * [`chart`]: sampled charts of candidate manifolds with the null-phase,
//!   isotropy and totally-geodesic checks, plus 2-D surface charts for
//!   symplectic areas.
//! * [`hull`]: the non-negative real hull of an in-phase family, hull
//!   membership, and the composite characterization check.

pub mod chart;
pub mod hull;
pub mod npc;
pub mod symplectic;

pub use chart::{
    is_npm, is_npm_with, isotropy_check, isotropy_check_with, nonnegative_span_member,
    positive_sphere_chart, totally_geodesic_check, AreaEstimate, ChartedManifold, IsotropyReport,
    SurfaceChart, TgFailure, TgReport,
};
pub use hull::{
    chart_anchors, hull_extend, hull_membership, hull_sample_chart, verify_npm_characterization,
    CharacterizationOptions, CharacterizationReport, HullMembership, HullModel, MembershipSummary,
};
pub use npc::{
    adapted_basis, is_npc, is_npc_with, npc_between, npc_from_sphere_path, npc_general,
    subarc_max_phase, GeneralNpcSpec, SphereTrajectory,
};
pub use symplectic::symplectic_form;

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::statespace::seeded_rng;
use crate::tolerance::ORTHO_EPS;

/// Outcome of a Bargmann-positivity scan over sample triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleReport {
    pub ok: bool,
    pub samples: usize,
    pub triples_checked: usize,
    pub exhaustive: bool,
    /// Triple with the largest |arg Δ₃|.
    pub worst_triple: Option<[usize; 3]>,
    pub worst_arg: f64,
    /// Largest `|Im Δ₃| / |Δ₃|` seen.
    pub worst_imag_ratio: f64,
    /// A pair of (nearly) orthogonal samples, if one was found.
    pub orthogonal_pair: Option<(usize, usize)>,
}

/// Which pairs to test for orthogonality exhaustively: beyond this many
/// samples only pairs inside sampled triples are looked at.
const EXHAUSTIVE_PAIR_LIMIT: usize = 2000;

/// Checks `Re Δ₃ > 0` and `|Im Δ₃| ≤ tol·|Δ₃|` over triples of `n` samples
/// whose overlaps are given by `overlap(i, j) = (ψᵢ, ψⱼ)`.
///
/// Exhaustive when `n ≤ exhaustive_limit`; otherwise `budget` triples are
/// drawn with a generator seeded by `seed`.
pub(crate) fn scan_triples<F>(
    n: usize,
    overlap: F,
    tol: f64,
    exhaustive_limit: usize,
    budget: usize,
    seed: u64,
) -> TripleReport
where
    F: Fn(usize, usize) -> C64,
{
    let mut report = TripleReport {
        ok: true,
        samples: n,
        triples_checked: 0,
        exhaustive: n <= exhaustive_limit,
        worst_triple: None,
        worst_arg: 0.0,
        worst_imag_ratio: 0.0,
        orthogonal_pair: None,
    };
    if n <= EXHAUSTIVE_PAIR_LIMIT {
        'pairs: for i in 0..n {
            for j in i + 1..n {
                if overlap(i, j).norm() <= ORTHO_EPS {
                    report.orthogonal_pair = Some((i, j));
                    report.ok = false;
                    break 'pairs;
                }
            }
        }
    }
    if n < 3 {
        return report;
    }

    let visit = |report: &mut TripleReport, i: usize, j: usize, k: usize, g: &dyn Fn(usize, usize) -> C64| {
        let (a, b, c) = (g(i, j), g(j, k), g(k, i));
        for (p, q, z) in [(i, j, a), (j, k, b), (k, i, c)] {
            if z.norm() <= ORTHO_EPS && report.orthogonal_pair.is_none() {
                report.orthogonal_pair = Some((p.min(q), p.max(q)));
                report.ok = false;
            }
        }
        let d = a * b * c;
        report.triples_checked += 1;
        let m = d.norm();
        let ratio = if m > 0.0 { d.im.abs() / m } else { f64::INFINITY };
        report.worst_imag_ratio = report.worst_imag_ratio.max(ratio);
        let arg = d.arg().abs();
        if report.worst_triple.is_none() || arg > report.worst_arg {
            report.worst_arg = arg;
            report.worst_triple = Some([i, j, k]);
        }
        if !(d.re > 0.0) || ratio > tol {
            report.ok = false;
        }
    };

    if report.exhaustive {
        let gram: Vec<Vec<C64>> = (0..n).map(|i| (0..n).map(|j| overlap(i, j)).collect()).collect();
        let g = |i: usize, j: usize| gram[i][j];
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    visit(&mut report, i, j, k, &g);
                }
            }
        }
    } else {
        let mut rng = seeded_rng(seed);
        for _ in 0..budget {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let mut k = rng.random_range(0..n - 2);
            let (lo, hi) = (i.min(j), i.max(j));
            if k >= lo {
                k += 1;
            }
            if k >= hi {
                k += 1;
            }
            visit(&mut report, i, j, k, &overlap);
        }
    }
    report
}
