//! Sampled charts of candidate null phase manifolds.
//!
//! A chart is a d-box grid of parameter points with one sampled state per
//! grid point, stored in row-major order (last axis fastest). All checks
//! work from overlaps alone, so the same code runs on finite vectors and on
//! Gaussian families.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use super::{scan_triples, TripleReport};
use crate::error::{Error, Result};
use crate::geodesics::geodesic_point;
use crate::statespace::{raw_inner, seeded_rng, HilbertPoint, StateVector};
use crate::tolerance::{DEFAULT_TRIPLES, EXHAUSTIVE_TRIPLE_LIMIT, MAX_TANGENT_CONDITION, ORTHO_EPS};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartedManifold<P = StateVector> {
    d: usize,
    shape: Vec<usize>,
    params: Vec<Vec<f64>>,
    states: Vec<P>,
}

#[derive(Deserialize)]
struct ChartJson<P> {
    d: usize,
    shape: Vec<usize>,
    params: Vec<Vec<f64>>,
    states: Vec<P>,
}

impl<'de, P> Deserialize<'de> for ChartedManifold<P>
where
    P: HilbertPoint + Deserialize<'de>,
{
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = ChartJson::<P>::deserialize(de)?;
        if raw.d != raw.params.len() {
            return Err(D::Error::custom(format!("d = {} but {} parameter axes", raw.d, raw.params.len())));
        }
        let shape: Vec<usize> = raw.params.iter().map(Vec::len).collect();
        if shape != raw.shape {
            return Err(D::Error::custom(format!("shape {:?} does not match axes {:?}", raw.shape, shape)));
        }
        ChartedManifold::new(raw.params, raw.states).map_err(D::Error::custom)
    }
}

impl<P: HilbertPoint> ChartedManifold<P> {
    /// `params[a]` is the strictly increasing grid of axis `a`.
    pub fn new(params: Vec<Vec<f64>>, states: Vec<P>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::Mesh("chart needs at least one axis".into()));
        }
        for (a, axis) in params.iter().enumerate() {
            if axis.is_empty() {
                return Err(Error::Mesh(format!("axis {a} is empty")));
            }
            if axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Mesh(format!("axis {a} is not strictly increasing")));
            }
        }
        let shape: Vec<usize> = params.iter().map(Vec::len).collect();
        let count: usize = shape.iter().product();
        if states.len() != count {
            return Err(Error::Mesh(format!("{} states for a grid of {count} points", states.len())));
        }
        let dim = states[0].space_dim();
        if let Some(bad) = states.iter().find(|s| s.space_dim() != dim) {
            return Err(Error::Dimension { expected: dim, found: bad.space_dim() });
        }
        Ok(Self { d: params.len(), shape, params, states })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn<F>(params: Vec<Vec<f64>>, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Result<P>,
    {
        let count: usize = params.iter().map(Vec::len).product();
        let mut states = Vec::with_capacity(count);
        let mut u = vec![0.0; params.len()];
        for flat in 0..count {
            let mut rest = flat;
            for a in (0..params.len()).rev() {
                let n = params[a].len();
                u[a] = params[a][rest % n];
                rest /= n;
            }
            states.push(f(&u)?);
        }
        Self::new(params, states)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn params(&self) -> &[Vec<f64>] {
        &self.params
    }

    pub fn states(&self) -> &[P] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.d];
        let mut rest = flat;
        for a in (0..self.d).rev() {
            idx[a] = rest % self.shape[a];
            rest /= self.shape[a];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.params[a][i])
            .collect()
    }

    pub fn overlap(&self, i: usize, j: usize) -> C64 {
        self.states[i].inner_with(&self.states[j])
    }

    /// Largest grid step over all axes.
    pub fn max_step(&self) -> f64 {
        self.params
            .iter()
            .flat_map(|axis| axis.windows(2).map(|w| w[1] - w[0]))
            .fold(0.0, f64::max)
    }
}

/// Triple positivity over the chart's grid points.
pub fn is_npm<P: HilbertPoint>(chart: &ChartedManifold<P>, tol: f64) -> TripleReport {
    is_npm_with(chart, tol, DEFAULT_TRIPLES, 0)
}

pub fn is_npm_with<P: HilbertPoint>(chart: &ChartedManifold<P>, tol: f64, triples: usize, seed: u64) -> TripleReport {
    scan_triples(chart.len(), |i, j| chart.overlap(i, j), tol, EXHAUSTIVE_TRIPLE_LIMIT, triples, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotropyReport {
    /// `max |ω| ≤ tol`.
    pub ok: bool,
    /// Every tangent Gram matrix has condition number within the bound.
    pub regular: bool,
    pub d: usize,
    pub tol: f64,
    pub max_abs_omega: f64,
    pub worst_index: Option<usize>,
    pub worst_axes: Option<(usize, usize)>,
    pub max_condition: f64,
    pub points_checked: usize,
}

impl IsotropyReport {
    /// Isotropic and regular.
    pub fn passes(&self) -> bool {
        self.ok && self.regular
    }
}

/// Isotropy with the default tolerance `10·h²`.
pub fn isotropy_check<P: HilbertPoint>(chart: &ChartedManifold<P>) -> Result<IsotropyReport> {
    let h = chart.max_step();
    isotropy_check_with(chart, 10.0 * h * h)
}

/// Evaluates `ω` on every pair of coordinate tangents at every interior grid
/// point. Tangents are second-order central differences of neighbours taken
/// in phase with the centre point.
pub fn isotropy_check_with<P: HilbertPoint>(chart: &ChartedManifold<P>, tol: f64) -> Result<IsotropyReport> {
    let d = chart.d();
    let mut report = IsotropyReport {
        ok: true,
        regular: true,
        d,
        tol,
        max_abs_omega: 0.0,
        worst_index: None,
        worst_axes: None,
        max_condition: 1.0,
        points_checked: 0,
    };
    if d == 1 {
        return Ok(report);
    }
    if chart.shape().iter().any(|&n| n < 3) {
        return Err(Error::Mesh("isotropy check needs at least 3 samples per axis".into()));
    }
    for flat in 0..chart.len() {
        let idx = chart.multi_index(flat);
        if idx.iter().zip(chart.shape()).any(|(&i, &n)| i == 0 || i == n - 1) {
            continue;
        }
        report.points_checked += 1;
        let Some((omega, gram)) = local_forms(chart, flat, &idx) else {
            report.regular = false;
            report.max_condition = f64::INFINITY;
            continue;
        };
        for a in 0..d {
            for b in a + 1..d {
                let w = omega[(a, b)].abs();
                if w > report.max_abs_omega || report.worst_index.is_none() {
                    report.max_abs_omega = w;
                    report.worst_index = Some(flat);
                    report.worst_axes = Some((a, b));
                }
            }
        }
        let cond = condition_number(gram);
        report.max_condition = report.max_condition.max(cond);
    }
    report.ok = report.max_abs_omega <= tol;
    report.regular = report.regular && report.max_condition <= MAX_TANGENT_CONDITION;
    Ok(report)
}

fn condition_number(gram: DMatrix<f64>) -> f64 {
    let eig = gram.symmetric_eigen().eigenvalues;
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().cloned().fold(0.0, f64::max);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// `ω(∂a, ∂b)` and the real metric `Re(∂a_h, ∂b_h)` at an interior point,
/// from overlaps only. `None` when a neighbour is orthogonal to the centre.
fn local_forms<P: HilbertPoint>(
    chart: &ChartedManifold<P>,
    flat: usize,
    idx: &[usize],
) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
    let d = chart.d();
    let mut stencils: Vec<Vec<(usize, f64, C64)>> = Vec::with_capacity(d);
    for a in 0..d {
        let x = &chart.params()[a];
        let i = idx[a];
        let (h1, h2) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        let weights = [
            (-1isize, -h2 / (h1 * (h1 + h2))),
            (0, (h2 - h1) / (h1 * h2)),
            (1, h1 / (h2 * (h1 + h2))),
        ];
        let mut stencil = Vec::with_capacity(3);
        for (off, w) in weights {
            let mut nidx = idx.to_vec();
            nidx[a] = (i as isize + off) as usize;
            let k = chart.flat_index(&nidx);
            let z = if k == flat {
                C64::new(1.0, 0.0)
            } else {
                let c = chart.overlap(flat, k);
                if c.norm() <= ORTHO_EPS {
                    return None;
                }
                c.conj() / c.norm()
            };
            stencil.push((k, w, z));
        }
        stencils.push(stencil);
    }
    // (ψ_p, t_a) and (t_a, t_b) from the overlap kernel.
    let along: Vec<C64> = stencils
        .iter()
        .map(|st| st.iter().map(|&(k, w, z)| z * chart.overlap(flat, k) * w).sum())
        .collect();
    let mut omega = DMatrix::zeros(d, d);
    let mut gram = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let mut tt = C64::new(0.0, 0.0);
            for &(k, wk, zk) in &stencils[a] {
                for &(l, wl, zl) in &stencils[b] {
                    tt += zk.conj() * zl * chart.overlap(k, l) * (wk * wl);
                }
            }
            let h = tt - along[a].conj() * along[b];
            omega[(a, b)] = 2.0 * h.im;
            omega[(b, a)] = -2.0 * h.im;
            gram[(a, b)] = h.re;
            gram[(b, a)] = h.re;
        }
    }
    Some((omega, gram))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TgFailure {
    pub i: usize,
    pub j: usize,
    /// Interior sample number along the geodesic, 1..=32.
    pub k: usize,
    pub fraction: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TgReport {
    pub ok: bool,
    pub pairs_checked: usize,
    pub points_checked: usize,
    pub failure: Option<TgFailure>,
}

const TG_INTERIOR_POINTS: usize = 32;

/// Samples the geodesic between seeded random pairs of grid points at 32
/// interior points each, asking `membership` about every point. Stops at the
/// first failure.
pub fn totally_geodesic_check<P, F>(chart: &ChartedManifold<P>, membership: F, pairs: usize, seed: u64) -> TgReport
where
    P: HilbertPoint,
    F: Fn(&P) -> bool,
{
    let mut report = TgReport { ok: true, pairs_checked: 0, points_checked: 0, failure: None };
    let n = chart.len();
    if n < 2 {
        return report;
    }
    let mut rng = seeded_rng(seed);
    for _ in 0..pairs {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        report.pairs_checked += 1;
        for k in 1..=TG_INTERIOR_POINTS {
            let fraction = k as f64 / (TG_INTERIOR_POINTS + 1) as f64;
            let verdict = geodesic_point(&chart.states()[i], &chart.states()[j], fraction)
                .map_err(|e| e.to_string())
                .and_then(|p| if membership(&p) { Ok(()) } else { Err("not a member".to_string()) });
            report.points_checked += 1;
            if let Err(reason) = verdict {
                report.ok = false;
                report.failure = Some(TgFailure { i, j, k, fraction, reason });
                return report;
            }
        }
    }
    report
}

/// Membership in the real non-negative cone spanned by `basis`: after fixing
/// the global phase, the state must lie in the span with real coefficients
/// `≥ −tol`.
pub fn nonnegative_span_member(basis: &[StateVector], psi: &StateVector, tol: f64) -> bool {
    let coeffs: Vec<C64> = basis.iter().map(|e| e.dot(psi)).collect();
    let weight: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    if (1.0 - weight).abs() > tol {
        return false;
    }
    let sum: C64 = coeffs.iter().sum();
    if sum.norm() <= tol {
        return false;
    }
    let z = sum.conj() / sum.norm();
    coeffs.iter().all(|c| {
        let r = c * z;
        r.im.abs() <= tol && r.re >= -tol
    })
}

/// Chart of the positive orthant of the unit sphere in span `basis`, in
/// hyperspherical angles `a₁, …, a_{m−1} ∈ [lo, hi]` with `n` samples each.
pub fn positive_sphere_chart(basis: &[StateVector], lo: f64, hi: f64, n: usize) -> Result<ChartedManifold> {
    let m = basis.len();
    if m < 2 {
        return Err(Error::Spec("positive sphere chart needs m >= 2".into()));
    }
    if !(lo >= 0.0 && hi <= std::f64::consts::FRAC_PI_2 && lo < hi) || n < 2 {
        return Err(Error::Spec("angles must form a proper sub-range of [0, pi/2]".into()));
    }
    let axis: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let dim = basis[0].dim();
    ChartedManifold::from_fn(vec![axis; m - 1], |angles| {
        let mut x = vec![0.0; m];
        let mut tail = 1.0;
        for (r, a) in angles.iter().enumerate() {
            x[r] = tail * a.cos();
            tail *= a.sin();
        }
        x[m - 1] = tail;
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        for (e, c) in basis.iter().zip(&x) {
            amps.iter_mut().zip(e.amplitudes()).for_each(|(a, b)| *a += b * c);
        }
        crate::statespace::normalize(&amps)
    })
}

/// Integral of `ω` over a 2-D chart and an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaEstimate {
    pub value: f64,
    /// Richardson estimate from the chart at twice the spacing; zero when the
    /// grid cannot be coarsened.
    pub error_estimate: f64,
}

/// A 2-D chart on a uniform grid with an oriented list of boundary samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceChart {
    chart: ChartedManifold,
    boundary: Vec<usize>,
}

impl SurfaceChart {
    pub fn new(chart: ChartedManifold, boundary: Vec<usize>) -> Result<Self> {
        if chart.d() != 2 {
            return Err(Error::Spec(format!("surface chart needs d = 2, got {}", chart.d())));
        }
        for (a, axis) in chart.params().iter().enumerate() {
            if axis.len() < 5 {
                return Err(Error::Mesh(format!("surface axis {a} needs at least 5 samples")));
            }
            let h = (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
            if axis.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0)) {
                return Err(Error::Mesh(format!("surface axis {a} is not uniform")));
            }
        }
        if boundary.is_empty() {
            return Err(Error::Boundary("empty boundary".into()));
        }
        for &b in &boundary {
            if b >= chart.len() {
                return Err(Error::Boundary(format!("boundary index {b} out of range")));
            }
            let idx = chart.multi_index(b);
            let on_edge = idx.iter().zip(chart.shape()).any(|(&i, &n)| i == 0 || i == n - 1);
            if !on_edge {
                return Err(Error::Boundary(format!("boundary index {b} is not on the grid edge")));
            }
        }
        Ok(Self { chart, boundary })
    }

    /// `(θ, φ) ↦ (cos θ/2, e^{iφ} sin θ/2)` on `[0, θ_max] × [0, φ_max]`.
    /// The boundary runs along `φ = 0`, `θ = θ_max` and back along
    /// `φ = φ_max`; for a full turn in `φ` only the `θ = θ_max` edge remains.
    pub fn bloch_patch(theta_max: f64, phi_max: f64, n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 2 || n_phi < 2 {
            return Err(Error::Mesh("bloch patch needs at least 2 samples per axis".into()));
        }
        let grid = |hi: f64, n: usize| -> Vec<f64> { (0..n).map(|i| hi * i as f64 / (n - 1) as f64).collect() };
        let chart = ChartedManifold::from_fn(vec![grid(theta_max, n_theta), grid(phi_max, n_phi)], |u| {
            StateVector::new(vec![
                C64::new((u[0] / 2.0).cos(), 0.0),
                C64::from_polar((u[0] / 2.0).sin(), u[1]),
            ])
        })?;
        let at = |i: usize, j: usize| i * n_phi + j;
        let mut boundary = Vec::new();
        let full_turn = (phi_max - 2.0 * std::f64::consts::PI).abs() < 1e-12;
        if !full_turn {
            boundary.extend((0..n_theta).map(|i| at(i, 0)));
        }
        boundary.extend((0..n_phi).map(|j| at(n_theta - 1, j)));
        if !full_turn {
            boundary.extend((0..n_theta).rev().map(|i| at(i, n_phi - 1)));
        }
        Self::new(chart, boundary)
    }

    pub fn chart(&self) -> &ChartedManifold {
        &self.chart
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn boundary_states(&self) -> impl Iterator<Item = &StateVector> + '_ {
        self.boundary.iter().map(|&b| &self.chart.states()[b])
    }

    /// `∫ ω` with fourth-order tangents and Simpson (or trapezoid) weights.
    pub fn symplectic_area(&self) -> Result<AreaEstimate> {
        let shape = self.chart.shape();
        let (n0, n1) = (shape[0], shape[1]);
        let fine = area_on_grid(&self.chart, 1)?;
        let coarsenable = (n0 - 1) % 2 == 0 && (n1 - 1) % 2 == 0 && (n0 - 1) / 2 >= 4 && (n1 - 1) / 2 >= 4;
        if !coarsenable {
            return Ok(AreaEstimate { value: fine.0, error_estimate: 0.0 });
        }
        let coarse = area_on_grid(&self.chart, 2)?;
        let order_factor = if fine.1 && coarse.1 { 15.0 } else { 3.0 };
        Ok(AreaEstimate { value: fine.0, error_estimate: (fine.0 - coarse.0).abs() / order_factor })
    }
}

/// Five-point first-derivative stencil at node `i` of `n` with spacing `h`:
/// central in the interior, one-sided near the edges.
fn fd5(i: usize, n: usize, h: f64) -> [(usize, f64); 5] {
    const CENTRAL: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
    const EDGE0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
    const EDGE1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
    let scale = 1.0 / (12.0 * h);
    let (start, coeffs, sign): (usize, [f64; 5], f64) = if i == 0 {
        (0, EDGE0, 1.0)
    } else if i == 1 {
        (0, EDGE1, 1.0)
    } else if i == n - 1 {
        (n - 5, rev(EDGE0), -1.0)
    } else if i == n - 2 {
        (n - 5, rev(EDGE1), -1.0)
    } else {
        (i - 2, CENTRAL, 1.0)
    };
    let mut out = [(0, 0.0); 5];
    for (k, c) in coeffs.iter().enumerate() {
        out[k] = (start + k, sign * c * scale);
    }
    out
}

fn rev(a: [f64; 5]) -> [f64; 5] {
    [a[4], a[3], a[2], a[1], a[0]]
}

/// Composite Simpson weights when the interval count is even, else trapezoid.
fn quadrature_weights(n: usize, h: f64) -> (Vec<f64>, bool) {
    if (n - 1) % 2 == 0 {
        let w = (0..n)
            .map(|i| {
                let c = if i == 0 || i == n - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * h / 3.0
            })
            .collect();
        (w, true)
    } else {
        let w = (0..n).map(|i| if i == 0 || i == n - 1 { h / 2.0 } else { h }).collect();
        (w, false)
    }
}

/// Area over the sub-grid taking every `stride`-th node; the flag reports
/// whether Simpson weights were used on both axes.
fn area_on_grid(chart: &ChartedManifold, stride: usize) -> Result<(f64, bool)> {
    let full = chart.shape();
    let (n0, n1) = ((full[0] - 1) / stride + 1, (full[1] - 1) / stride + 1);
    let axes = chart.params();
    let h0 = (axes[0][full[0] - 1] - axes[0][0]) / (n0 - 1) as f64;
    let h1 = (axes[1][full[1] - 1] - axes[1][0]) / (n1 - 1) as f64;
    let state = |i: usize, j: usize| &chart.states()[(i * stride) * full[1] + j * stride];
    let (w0, s0) = quadrature_weights(n0, h0);
    let (w1, s1) = quadrature_weights(n1, h1);
    let mut total = 0.0;
    for i in 0..n0 {
        for j in 0..n1 {
            let centre = state(i, j);
            let tangent = |stencil: [(usize, f64); 5], along_first: bool| -> Result<Vec<C64>> {
                let mut t = vec![C64::new(0.0, 0.0); centre.dim()];
                for (k, w) in stencil {
                    let s = if along_first { state(k, j) } else { state(i, k) };
                    let c = centre.dot(s);
                    let z = if std::ptr::eq(s, centre) {
                        C64::new(1.0, 0.0)
                    } else if c.norm() <= ORTHO_EPS {
                        return Err(Error::Degenerate("surface neighbours are orthogonal".into()));
                    } else {
                        c.conj() / c.norm()
                    };
                    t.iter_mut().zip(s.amplitudes()).for_each(|(x, y)| *x += y * z * w);
                }
                let p = raw_inner(centre.amplitudes(), &t);
                t.iter_mut().zip(centre.amplitudes()).for_each(|(x, y)| *x -= y * p);
                Ok(t)
            };
            let t0 = tangent(fd5(i, n0, h0), true)?;
            let t1 = tangent(fd5(j, n1, h1), false)?;
            total += w0[i] * w1[j] * 2.0 * raw_inner(&t0, &t1).im;
        }
    }
    Ok((total, s0 && s1))
}
