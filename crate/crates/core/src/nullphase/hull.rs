//! The non-negative real hull of a globally in-phase family.
//!
//! A hull is stored as finitely many anchors; its members are the
//! normalized combinations `Σ pⱼψⱼ` with `pⱼ ≥ 0`. Membership is decided by
//! non-negative least squares over the anchors with an optimized global
//! phase for the target.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use super::chart::{is_npm_with, isotropy_check, totally_geodesic_check, ChartedManifold, IsotropyReport, TgReport};
use super::TripleReport;
use crate::bargmann::lift_in_phase;
use crate::error::{Error, Result};
use crate::nnls::nnls_gram;
use crate::statespace::{seeded_rng, HilbertPoint, StateVector};
use crate::tolerance::{DEFAULT_TRIPLES, TOL_HULL, TOL_NPC};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullModel<P = StateVector> {
    anchors: Vec<P>,
    gram: Vec<Vec<f64>>,
    tol: f64,
}

#[derive(Deserialize)]
struct HullJson<P> {
    anchors: Vec<P>,
    #[serde(default = "default_tol")]
    tol: f64,
}

fn default_tol() -> f64 {
    TOL_HULL
}

impl<'de, P> Deserialize<'de> for HullModel<P>
where
    P: HilbertPoint + Deserialize<'de>,
{
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = HullJson::<P>::deserialize(de)?;
        let mut hull = hull_extend(raw.anchors).map_err(D::Error::custom)?;
        hull.tol = raw.tol;
        Ok(hull)
    }
}

impl<P: HilbertPoint> HullModel<P> {
    pub fn anchors(&self) -> &[P] {
        &self.anchors
    }

    /// Real part of the anchor Gram matrix.
    pub fn gram(&self) -> &[Vec<f64>] {
        &self.gram
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    /// Default membership residual threshold.
    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// `normalize(Σ pⱼψⱼ)`.
    pub fn member(&self, weights: &[f64]) -> Result<P> {
        if weights.len() != self.anchors.len() {
            return Err(Error::Dimension { expected: self.anchors.len(), found: weights.len() });
        }
        if weights.iter().any(|&p| p < 0.0) {
            return Err(Error::Spec("hull weights must be non-negative".into()));
        }
        let terms: Vec<(C64, &P)> = weights
            .iter()
            .zip(&self.anchors)
            .filter(|(p, _)| **p > 0.0)
            .map(|(&p, a)| (C64::new(p, 0.0), a))
            .collect();
        if terms.is_empty() {
            return Err(Error::ZeroVector(0.0));
        }
        P::superpose(&terms)
    }
}

/// Builds the hull of anchors whose pairwise overlaps are real and
/// non-negative (orthogonal anchors are allowed).
pub fn hull_extend<P: HilbertPoint>(anchors: Vec<P>) -> Result<HullModel<P>> {
    if anchors.is_empty() {
        return Err(Error::Spec("hull needs at least one anchor".into()));
    }
    let k = anchors.len();
    let dim = anchors[0].space_dim();
    let mut gram = vec![vec![0.0; k]; k];
    for i in 0..k {
        if anchors[i].space_dim() != dim {
            return Err(Error::Dimension { expected: dim, found: anchors[i].space_dim() });
        }
        gram[i][i] = anchors[i].inner_with(&anchors[i]).re;
        for j in i + 1..k {
            let c = anchors[i].inner_with(&anchors[j]);
            if c.re < -TOL_NPC || c.im.abs() > TOL_NPC {
                return Err(Error::Phase { i, j, re: c.re, im: c.im });
            }
            gram[i][j] = c.re;
            gram[j][i] = c.re;
        }
    }
    Ok(HullModel { anchors, gram, tol: TOL_HULL })
}

/// Anchors for a chart: every grid state, lifted in phase with the first.
pub fn chart_anchors<P: HilbertPoint>(chart: &ChartedManifold<P>) -> Result<Vec<P>> {
    lift_in_phase(chart.states(), &chart.states()[0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullMembership {
    pub member: bool,
    /// `p ≥ 0` with `Σ pⱼψⱼ ≈ e^{iφ}ψ`.
    pub coefficients: Vec<f64>,
    pub residual: f64,
    /// The global phase `φ` applied to the target.
    pub phase: f64,
}

const PHASE_SCAN: usize = 32;

/// Decides whether `psi` is (up to phase) a non-negative combination of the
/// anchors, to residual `tol`.
pub fn hull_membership<P: HilbertPoint>(hull: &HullModel<P>, psi: &P, tol: f64) -> HullMembership {
    let k = hull.len();
    let g = DMatrix::from_fn(k, k, |i, j| hull.gram[i][j]);
    let w: Vec<C64> = hull.anchors.iter().map(|a| a.inner_with(psi)).collect();
    let fit = |phi: f64| -> (DVector<f64>, f64) {
        let rot = C64::from_polar(1.0, phi);
        let b = DVector::from_fn(k, |j, _| (rot * w[j]).re);
        let p = nnls_gram(&g, &b);
        let approx = 1.0 + p.dot(&(&g * &p)) - 2.0 * p.dot(&b);
        (p, approx)
    };
    let residual = |p: &DVector<f64>, phi: f64| -> f64 {
        let target = -C64::from_polar(1.0, phi);
        let mut terms: Vec<(C64, &P)> = p
            .iter()
            .zip(&hull.anchors)
            .filter(|(v, _)| **v > 0.0)
            .map(|(&v, a)| (C64::new(v, 0.0), a))
            .collect();
        terms.push((target, psi));
        P::combination_norm(&terms)
    };
    let finish = |p: DVector<f64>, phi: f64| {
        let r = residual(&p, phi);
        HullMembership { member: r <= tol, coefficients: p.iter().copied().collect(), residual: r, phase: phi }
    };

    // For a member all wⱼ share one phase, so their sum fixes φ exactly.
    let sum: C64 = w.iter().sum();
    let phi0 = if sum.norm() > 0.0 { -sum.arg() } else { 0.0 };
    let (p0, approx0) = fit(phi0);
    let first = finish(p0, phi0);
    if first.member {
        return first;
    }

    let mut best = (phi0, approx0);
    let step = 2.0 * std::f64::consts::PI / PHASE_SCAN as f64;
    for n in 0..PHASE_SCAN {
        let phi = n as f64 * step;
        let (_, v) = fit(phi);
        if v < best.1 {
            best = (phi, v);
        }
    }
    // Golden-section refinement around the best scanned phase.
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (best.0 - step, best.0 + step);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (fit(x1).1, fit(x2).1);
    for _ in 0..40 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = fit(x1).1;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = fit(x2).1;
        }
    }
    let phi = 0.5 * (lo + hi);
    let refined = finish(fit(phi).0, phi);
    if refined.residual < first.residual {
        refined
    } else {
        first
    }
}

/// A 2-D chart of hull members `normalize(Σ pⱼ(a, b) ψⱼ)` on an `n × n`
/// grid of `(a, b) ∈ [0, 1]²`, with weights `pⱼ = exp(αⱼa + βⱼb)` for fixed
/// pseudo-random exponents.
pub fn hull_sample_chart<P: HilbertPoint>(hull: &HullModel<P>, n: usize) -> Result<ChartedManifold<P>> {
    let k = hull.len();
    if k < 2 {
        return Err(Error::Degenerate("a hull sample chart needs at least two anchors".into()));
    }
    if n < 3 {
        return Err(Error::Mesh(format!("hull sample chart needs n >= 3, got {n}")));
    }
    let mut rng = seeded_rng(SAMPLE_SEED);
    let exponents: Vec<(f64, f64)> = (0..k).map(|_| (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))).collect();
    let axis: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    ChartedManifold::from_fn(vec![axis.clone(), axis], |u| {
        let weights: Vec<f64> = exponents.iter().map(|(a, b)| (a * u[0] + b * u[1]).exp()).collect();
        hull.member(&weights)
    })
}

const SAMPLE_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipSummary {
    pub ok: bool,
    pub checked: usize,
    pub max_residual: f64,
    pub worst_index: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationOptions {
    pub tol: f64,
    pub hull_tol: f64,
    /// Geodesic pairs for the totally-geodesic check.
    pub pairs: usize,
    /// Side of the hull sample grid.
    pub sample_n: usize,
    pub triples: usize,
    pub seed: u64,
}

impl Default for CharacterizationOptions {
    fn default() -> Self {
        Self { tol: TOL_NPC, hull_tol: TOL_HULL, pairs: 16, sample_n: 7, triples: DEFAULT_TRIPLES, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationReport {
    pub ok: bool,
    /// The chart's own null-phase test.
    pub npm: TripleReport,
    pub anchors: usize,
    /// (i) chart points are hull members.
    pub members: Option<MembershipSummary>,
    /// (ii) geodesics between hull samples stay in the hull.
    pub totally_geodesic: Option<TgReport>,
    /// (iii) the hull sample chart is isotropic.
    pub isotropy: Option<IsotropyReport>,
    /// (iv) the hull sample chart is a null phase manifold.
    pub hull_npm: Option<TripleReport>,
    /// With a chart membership oracle: whether some hull sample lies outside
    /// the chart's manifold.
    pub strict_extension: Option<bool>,
}

fn stage(name: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::Spec(format!("{name}: {e}"))
}

/// Lifts the chart in phase, builds its hull, and runs the four sub-checks.
/// When the chart itself fails the null-phase test the report stops there.
pub fn verify_npm_characterization<P: HilbertPoint>(
    chart: &ChartedManifold<P>,
    opts: &CharacterizationOptions,
    chart_membership: Option<&dyn Fn(&P) -> bool>,
) -> Result<CharacterizationReport> {
    let npm = is_npm_with(chart, opts.tol, opts.triples, opts.seed);
    let mut report = CharacterizationReport {
        ok: false,
        npm,
        anchors: 0,
        members: None,
        totally_geodesic: None,
        isotropy: None,
        hull_npm: None,
        strict_extension: None,
    };
    if !report.npm.ok {
        return Ok(report);
    }
    let anchors = chart_anchors(chart).map_err(stage("pancharatnam lift"))?;
    let hull = hull_extend(anchors).map_err(stage("hull extension"))?;
    report.anchors = hull.len();

    let mut members = MembershipSummary { ok: true, checked: 0, max_residual: 0.0, worst_index: None };
    for (i, s) in chart.states().iter().enumerate() {
        let m = hull_membership(&hull, s, opts.hull_tol);
        members.checked += 1;
        if m.residual > members.max_residual || members.worst_index.is_none() {
            members.max_residual = m.residual;
            members.worst_index = Some(i);
        }
        members.ok &= m.member;
    }

    let samples = hull_sample_chart(&hull, opts.sample_n).map_err(stage("hull sample chart"))?;
    let tg = totally_geodesic_check(
        &samples,
        |p| hull_membership(&hull, p, opts.hull_tol).member,
        opts.pairs,
        opts.seed,
    );
    let iso = isotropy_check(&samples).map_err(stage("isotropy"))?;
    let hull_npm = is_npm_with(&samples, opts.tol, opts.triples, opts.seed);
    report.strict_extension = chart_membership.map(|inside| samples.states().iter().any(|s| !inside(s)));
    report.ok = members.ok && tg.ok && iso.passes() && hull_npm.ok;
    report.members = Some(members);
    report.totally_geodesic = Some(tg);
    report.isotropy = Some(iso);
    report.hull_npm = Some(hull_npm);
    Ok(report)
}
