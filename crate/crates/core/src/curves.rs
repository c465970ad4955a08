//! Sampled curves in the unit sphere and their phases.
//!
//! A [`SampledCurve`] stores a lift `ψ(s₁), …, ψ(sₙ)`; ray-space quantities
//! are derived from it and are gauge invariant. The default dynamical-phase
//! estimator sums the principal arguments of successive overlaps, which
//! makes the geometric phase of a sample equal to minus the argument of its
//! cyclic Bargmann invariant. A trapezoidal quadrature of `Im(ψ, ψ′)` is
//! available as an independent cross-check.

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bargmann::delta_n;
use crate::error::{Error, Result};
use crate::nullphase::SurfaceChart;
use crate::statespace::{
    angle_gap, normalize, random_gaussian_c64, raw_norm_sqr, seeded_rng, wrap_angle, Ray, StateVector,
};
use crate::tolerance::{ORTHO_EPS, TOL_FID};

/// A curve `s ↦ ψ(s)` sampled on a strictly increasing parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveJson", into = "CurveJson")]
pub struct SampledCurve {
    params: Vec<f64>,
    states: Vec<StateVector>,
    /// `(ψᵢ, ψᵢ₊₁)` for every adjacent pair.
    links: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct CurveJson {
    params: Vec<f64>,
    states: Vec<StateVector>,
}

impl TryFrom<CurveJson> for SampledCurve {
    type Error = Error;
    fn try_from(j: CurveJson) -> Result<Self> {
        SampledCurve::new(j.params, j.states)
    }
}

impl From<SampledCurve> for CurveJson {
    fn from(c: SampledCurve) -> Self {
        CurveJson { params: c.params, states: c.states }
    }
}

impl SampledCurve {
    pub fn new(params: Vec<f64>, states: Vec<StateVector>) -> Result<Self> {
        let n = states.len();
        if n < 2 {
            return Err(Error::Mesh(format!("a curve needs at least 2 samples, got {n}")));
        }
        if params.len() != n {
            return Err(Error::Mesh(format!("{} parameters for {n} states", params.len())));
        }
        if let Some(w) = params.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Mesh(format!("parameters not strictly increasing at index {w}")));
        }
        let dim = states[0].dim();
        if let Some(bad) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::Dimension { expected: dim, found: bad.dim() });
        }
        let links: Vec<C64> = states.windows(2).map(|w| w[0].dot(&w[1])).collect();
        if let Some((i, z)) = links.iter().enumerate().find(|(_, z)| z.norm() <= ORTHO_EPS) {
            return Err(Error::Orthogonality { i, j: i + 1, modulus: z.norm() });
        }
        Ok(Self { params, states, links })
    }

    /// Samples `f` at the given parameters.
    pub fn from_fn<F>(params: Vec<f64>, mut f: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<StateVector>,
    {
        let states = params.iter().map(|&s| f(s)).collect::<Result<Vec<_>>>()?;
        Self::new(params, states)
    }

    /// Samples `f` at `n` equally spaced parameters from `s1` to `s2`.
    pub fn uniform<F>(s1: f64, s2: f64, n: usize, f: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<StateVector>,
    {
        Self::from_fn(uniform_grid(s1, s2, n)?, f)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn links(&self) -> &[C64] {
        &self.links
    }

    pub fn first(&self) -> &StateVector {
        &self.states[0]
    }

    pub fn last(&self) -> &StateVector {
        &self.states[self.states.len() - 1]
    }

    /// The projected curve in ray space.
    pub fn rays(&self) -> Vec<Ray> {
        self.states.iter().map(Ray::new).collect()
    }

    /// True when the first and last samples project onto the same ray.
    pub fn is_closed(&self, tol: f64) -> bool {
        1.0 - self.first().dot(self.last()).norm_sqr() <= tol
    }

    /// The contiguous portion between sample indices `start` and `end` inclusive.
    pub fn subcurve(&self, start: usize, end: usize) -> Result<Self> {
        if end >= self.len() || end <= start {
            return Err(Error::Mesh(format!("invalid sub-curve range {start}..={end}")));
        }
        Ok(Self {
            params: self.params[start..=end].to_vec(),
            states: self.states[start..=end].to_vec(),
            links: self.links[start..end].to_vec(),
        })
    }

    /// Multiplies sample `i` by `e^{i·phases[i]}`; the ray curve is unchanged.
    pub fn rephased(&self, phases: &[f64]) -> Result<Self> {
        if phases.len() != self.len() {
            return Err(Error::Mesh(format!("{} phases for {} samples", phases.len(), self.len())));
        }
        let states = self.states.iter().zip(phases).map(|(s, &t)| s.rephase(t)).collect();
        Self::new(self.params.clone(), states)
    }

    /// Same states with relabelled parameters `g(s)`; `g` must be strictly increasing.
    pub fn reparametrized<F: Fn(f64) -> f64>(&self, g: F) -> Result<Self> {
        Self::new(self.params.iter().map(|&s| g(s)).collect(), self.states.clone())
    }
}

/// `n` equally spaced points from `s1` to `s2` inclusive.
pub fn uniform_grid(s1: f64, s2: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Mesh(format!("mesh must have at least 2 nodes, got {n}")));
    }
    if !(s2 > s1) {
        return Err(Error::Mesh(format!("empty parameter interval [{s1}, {s2}]")));
    }
    let h = (s2 - s1) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i == n - 1 { s2 } else { s1 + h * i as f64 })
        .collect())
}

/// Which dynamical-phase estimator produced a [`PhaseReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    DiscreteBargmann,
    Quadrature,
}

/// Total, dynamical and geometric phase of a curve.
///
/// `dynamical` and `geometric` are accumulated, not reduced to (−π, π].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub total: f64,
    pub dynamical: f64,
    pub geometric: f64,
    pub estimator: Estimator,
    pub mesh: usize,
}

/// `arg(ψ(s₁), ψ(s₂))`.
pub fn total_phase(curve: &SampledCurve) -> Result<f64> {
    let z = curve.first().dot(curve.last());
    if z.norm() <= ORTHO_EPS {
        return Err(Error::Orthogonality { i: 0, j: curve.len() - 1, modulus: z.norm() });
    }
    Ok(z.arg())
}

/// Sum of the principal arguments of successive overlaps.
pub fn dynamical_phase(curve: &SampledCurve) -> f64 {
    curve.links.iter().map(|z| z.arg()).sum()
}

/// Partial sums of the discrete dynamical phase against the curve parameter,
/// starting at `(s₁, 0)`.
pub fn dynamical_phase_series(curve: &SampledCurve) -> Vec<(f64, f64)> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(curve.len());
    out.push((curve.params[0], 0.0));
    for (k, z) in curve.links.iter().enumerate() {
        acc += z.arg();
        out.push((curve.params[k + 1], acc));
    }
    out
}

/// Three-point, second-order finite-difference weights for `f′(sᵢ)` on a
/// possibly non-uniform grid (one-sided at the ends).
fn fd_weights(s: &[f64], i: usize) -> [(usize, f64); 3] {
    let n = s.len();
    if i == 0 {
        let (h1, h2) = (s[1] - s[0], s[2] - s[1]);
        [
            (0, -(2.0 * h1 + h2) / (h1 * (h1 + h2))),
            (1, (h1 + h2) / (h1 * h2)),
            (2, -h1 / (h2 * (h1 + h2))),
        ]
    } else if i == n - 1 {
        let (h1, h2) = (s[n - 2] - s[n - 3], s[n - 1] - s[n - 2]);
        [
            (n - 3, h2 / (h1 * (h1 + h2))),
            (n - 2, -(h1 + h2) / (h1 * h2)),
            (n - 1, (2.0 * h2 + h1) / (h2 * (h1 + h2))),
        ]
    } else {
        let (h1, h2) = (s[i] - s[i - 1], s[i + 1] - s[i]);
        [
            (i - 1, -h2 / (h1 * (h1 + h2))),
            (i, (h2 - h1) / (h1 * h2)),
            (i + 1, h1 / (h2 * (h1 + h2))),
        ]
    }
}

fn trapezoid(s: &[f64], f: &[f64]) -> f64 {
    s.windows(2)
        .zip(f.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Finite-difference derivative at sample `i`. With `local_gauge`, the
/// neighbours are first rephased to be in phase with `ψᵢ`; the result is
/// then the horizontal velocity and is independent of the stored gauge.
fn derivative(curve: &SampledCurve, i: usize, local_gauge: bool) -> Vec<C64> {
    let center = &curve.states[i];
    let mut d = vec![C64::new(0.0, 0.0); curve.dim()];
    for (k, w) in fd_weights(&curve.params, i) {
        let v = if local_gauge && k != i {
            curve.states[k].in_phase_with(center)
        } else {
            curve.states[k].clone()
        };
        for (a, x) in d.iter_mut().zip(v.amplitudes()) {
            *a += x * w;
        }
    }
    d
}

/// `Im ∫ (ψ, ψ′) ds` by trapezoidal quadrature with finite-difference velocities.
pub fn dynamical_phase_quadrature(curve: &SampledCurve) -> Result<f64> {
    if curve.len() < 3 {
        return Err(Error::Mesh("quadrature needs at least 3 samples".into()));
    }
    let integrand: Vec<f64> = (0..curve.len())
        .map(|i| {
            let d = derivative(curve, i, false);
            curve.states[i].amplitudes().iter().zip(&d).map(|(p, x)| p.conj() * x).sum::<C64>().im
        })
        .collect();
    Ok(trapezoid(&curve.params, &integrand))
}

/// Geometric phase with the discrete-Bargmann estimator.
pub fn geometric_phase(curve: &SampledCurve) -> Result<PhaseReport> {
    geometric_phase_with(curve, Estimator::DiscreteBargmann)
}

/// `φ_g = φ_tot − φ_dyn` using the requested dynamical-phase estimator.
pub fn geometric_phase_with(curve: &SampledCurve, estimator: Estimator) -> Result<PhaseReport> {
    let total = total_phase(curve)?;
    let dynamical = match estimator {
        Estimator::DiscreteBargmann => dynamical_phase(curve),
        Estimator::Quadrature => dynamical_phase_quadrature(curve)?,
    };
    Ok(PhaseReport {
        total,
        dynamical,
        geometric: wrap_angle(total - dynamical),
        estimator,
        mesh: curve.len(),
    })
}

/// Fubini–Study length `∫ {‖ψ′‖² − |(ψ, ψ′)|²}^{1/2} ds`.
pub fn length(curve: &SampledCurve) -> Result<f64> {
    if curve.len() < 3 {
        return Err(Error::Mesh("length needs at least 3 samples".into()));
    }
    let speed: Vec<f64> = (0..curve.len())
        .map(|i| {
            let d = derivative(curve, i, true);
            let along: C64 = curve.states[i]
                .amplitudes()
                .iter()
                .zip(&d)
                .map(|(p, x)| p.conj() * x)
                .sum();
            (raw_norm_sqr(&d) - along.norm_sqr()).max(0.0).sqrt()
        })
        .collect();
    Ok(trapezoid(&curve.params, &speed))
}

/// The same ray curve traversed backwards; parameters are mirrored so they
/// stay increasing.
pub fn reverse(curve: &SampledCurve) -> SampledCurve {
    let s1 = curve.params[0];
    let s2 = curve.params[curve.len() - 1];
    SampledCurve {
        params: curve.params.iter().rev().map(|&s| s1 + s2 - s).collect(),
        states: curve.states.iter().rev().cloned().collect(),
        links: curve.links.iter().rev().map(|z| z.conj()).collect(),
    }
}

/// Joins `c2` after `c1`. The lift of `c2` is rephased so its first state
/// coincides with the last state of `c1`; that shared sample appears once.
pub fn concat(c1: &SampledCurve, c2: &SampledCurve) -> Result<SampledCurve> {
    if c1.dim() != c2.dim() {
        return Err(Error::Dimension { expected: c1.dim(), found: c2.dim() });
    }
    let z = c2.first().dot(c1.last());
    let fid = z.norm_sqr();
    if 1.0 - fid > TOL_FID {
        return Err(Error::Junction { fidelity: fid });
    }
    let phase = z / z.norm();
    let offset = c1.params[c1.len() - 1] - c2.params[0];
    let mut params = c1.params.clone();
    let mut states = c1.states.clone();
    let mut links = c1.links.clone();
    params.extend(c2.params[1..].iter().map(|s| s + offset));
    states.extend(c2.states[1..].iter().map(|s| s.scale_unit(phase)));
    // The junction link is recomputed against the retained state of c1.
    links.push(c1.last().dot(&states[c1.len()]));
    links.extend_from_slice(&c2.links[1..]);
    SampledCurve::validate_links(&links)?;
    Ok(SampledCurve { params, states, links })
}

impl SampledCurve {
    fn validate_links(links: &[C64]) -> Result<()> {
        match links.iter().enumerate().find(|(_, z)| z.norm() <= ORTHO_EPS) {
            Some((i, z)) => Err(Error::Orthogonality { i, j: i + 1, modulus: z.norm() }),
            None => Ok(()),
        }
    }
}

/// Concatenates a chain of curves; also returns the index of every vertex
/// (segment endpoint) in the joined curve.
pub fn concat_all(curves: &[SampledCurve]) -> Result<(SampledCurve, Vec<usize>)> {
    let Some(first) = curves.first() else {
        return Err(Error::Spec("empty curve chain".into()));
    };
    let mut joined = first.clone();
    let mut vertices = vec![0, first.len() - 1];
    for c in &curves[1..] {
        joined = concat(&joined, c)?;
        vertices.push(joined.len() - 1);
    }
    Ok((joined, vertices))
}

/// Residual of the non-additivity identity
/// `φ_g[∪C] = Σ φ_g[Cₖ] − arg Δₙ(vertices)`, reduced to [0, π].
///
/// The vertex lifts are read off the concatenated curve.
pub fn nonadditivity_residual(curves: &[SampledCurve]) -> Result<f64> {
    if curves.len() < 2 {
        return Err(Error::Spec("non-additivity needs at least two segments".into()));
    }
    let (joined, vertex_idx) = concat_all(curves)?;
    let union_phase = geometric_phase(&joined)?.geometric;
    let segment_sum = curves
        .iter()
        .map(|c| geometric_phase(c).map(|r| r.geometric))
        .sum::<Result<f64>>()?;
    let vertices: Vec<StateVector> = vertex_idx.iter().map(|&i| joined.states[i].clone()).collect();
    let bargmann = delta_n(&vertices)?;
    Ok(angle_gap(union_phase - segment_sum + bargmann.arg(), 0.0))
}

/// Both sides of `φ_g[C] = −∫_S ω` for a closed loop bounding a surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopAreaComparison {
    pub loop_phase: f64,
    pub minus_area: f64,
    /// Richardson estimate of the surface quadrature error.
    pub quadrature_error: f64,
    /// `|loop_phase − minus_area|` reduced mod 2π.
    pub gap: f64,
    pub agree: bool,
}

/// Compares the geometric phase of a closed loop with the symplectic area
/// of a surface it bounds.
pub fn loop_phase_vs_area(curve: &SampledCurve, surface: &SurfaceChart) -> Result<LoopAreaComparison> {
    if !curve.is_closed(TOL_FID) {
        return Err(Error::Boundary("loop is not closed".into()));
    }
    let rays: Vec<&StateVector> = curve.states.iter().collect();
    for (k, b) in surface.boundary_states().enumerate() {
        if b.dim() != curve.dim() {
            return Err(Error::Dimension { expected: curve.dim(), found: b.dim() });
        }
        let best = rays.iter().map(|s| s.dot(b).norm_sqr()).fold(0.0, f64::max);
        if 1.0 - best > TOL_FID {
            return Err(Error::Boundary(format!(
                "boundary sample {k} is not on the loop (best fidelity {best})"
            )));
        }
    }
    let loop_phase = geometric_phase(curve)?.geometric;
    let area = surface.symplectic_area()?;
    let minus_area = -area.value;
    let gap = angle_gap(loop_phase, minus_area);
    Ok(LoopAreaComparison {
        loop_phase,
        minus_area,
        quadrature_error: area.error_estimate,
        gap,
        agree: gap <= area.error_estimate.max(1e-6),
    })
}

/// A smooth curve from `r1` to `r2` that bends out of their span and
/// carries a non-trivial gauge, reproducible from `seed`.
pub fn random_smooth_segment(r1: &Ray, r2: &Ray, mesh: usize, seed: u64) -> Result<SampledCurve> {
    if r1.dim() != r2.dim() {
        return Err(Error::Dimension { expected: r1.dim(), found: r2.dim() });
    }
    let mut rng = seeded_rng(seed);
    let a = r1.representative().clone();
    let b = r2.representative().in_phase_with(&a);
    let dim = a.dim();
    let bend: Vec<C64> = (0..dim).map(|_| random_gaussian_c64(&mut rng)).collect();
    let scale = 0.6 / raw_norm_sqr(&bend).sqrt();
    let twist: f64 = rng.random_range(-3.0..3.0);
    let half_pi = std::f64::consts::FRAC_PI_2;
    SampledCurve::uniform(0.0, 1.0, mesh, |s| {
        let bump = 4.0 * s * (1.0 - s) * scale;
        let raw: Vec<C64> = (0..dim)
            .map(|k| {
                a.amplitudes()[k] * (half_pi * s).cos()
                    + b.amplitudes()[k] * (half_pi * s).sin()
                    + bend[k] * bump
            })
            .collect();
        Ok(normalize(&raw)?.rephase(twist * s * (1.0 - s)))
    })
}

/// Latitude circle at Bloch colatitude `theta`, traversed once from φ = 0
/// with `n` uniform samples (the last repeats the first).
pub fn bloch_latitude(theta: f64, n: usize) -> Result<SampledCurve> {
    SampledCurve::uniform(0.0, 2.0 * std::f64::consts::PI, n, |phi| {
        StateVector::new(vec![
            C64::new((theta / 2.0).cos(), 0.0),
            C64::from_polar((theta / 2.0).sin(), phi),
        ])
    })
}
