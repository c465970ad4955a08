//! Gaussian wavefunctions on ℝᴺ and their non-negative mixtures.
//!
//! `ψ_{y,U}(x) = π^{−N/4} (det U)^{1/4} exp(−½ (x−y)ᵀU(x−y))` with `U` real
//! symmetric positive definite. Every overlap between such states is real
//! positive and known in closed form, so all checks run on the overlap
//! kernel; [`embed_gaussian`] discretizes a state only for cross-checks.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::nullphase::ChartedManifold;
use crate::statespace::{HilbertPoint, StateVector};

const SYMMETRY_TOL: f64 = 1e-12;
const EIGEN_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    y: DVector<f64>,
    u: DMatrix<f64>,
    det_u: f64,
}

#[derive(Serialize, Deserialize)]
struct GaussianJson {
    #[serde(rename = "N")]
    n: usize,
    y: Vec<f64>,
    #[serde(rename = "U")]
    u: Vec<Vec<f64>>,
}

impl Serialize for GaussianState {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GaussianJson { n: self.n(), y: self.y.iter().copied().collect(), u: self.u_rows() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GaussianState {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = GaussianJson::deserialize(de)?;
        if raw.y.len() != raw.n {
            return Err(D::Error::custom(format!("N = {} but y has {} entries", raw.n, raw.y.len())));
        }
        GaussianState::new(raw.y, raw.u).map_err(D::Error::custom)
    }
}

impl GaussianState {
    /// Checks that `u` is symmetric within 1e-12 with smallest eigenvalue
    /// above 1e-10.
    pub fn new(y: Vec<f64>, u: Vec<Vec<f64>>) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::Spec("Gaussian needs N >= 1".into()));
        }
        if u.len() != n || u.iter().any(|r| r.len() != n) {
            return Err(Error::Matrix(format!("U must be {n} x {n}")));
        }
        let m = DMatrix::from_fn(n, n, |i, j| u[i][j]);
        Self::from_matrix(DVector::from_vec(y), m)
    }

    /// The translate `ψ_y` of the isotropic ground state (`U = I`).
    pub fn translate(y: Vec<f64>) -> Self {
        let n = y.len();
        Self { y: DVector::from_vec(y), u: DMatrix::identity(n, n), det_u: 1.0 }
    }

    fn from_matrix(y: DVector<f64>, u: DMatrix<f64>) -> Result<Self> {
        let n = y.len();
        for i in 0..n {
            for j in i + 1..n {
                if (u[(i, j)] - u[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(Error::Matrix(format!("U is not symmetric at ({i}, {j})")));
                }
            }
        }
        if u.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Matrix("non-finite entries".into()));
        }
        let eig = u.clone().symmetric_eigen().eigenvalues;
        let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(lo > EIGEN_FLOOR) {
            return Err(Error::Matrix(format!("U is not positive definite: smallest eigenvalue {lo:e}")));
        }
        let det_u = eig.iter().product();
        Ok(Self { y, u, det_u })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn y(&self) -> &[f64] {
        self.y.as_slice()
    }

    pub fn u_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| (0..self.n()).map(|j| self.u[(i, j)]).collect()).collect()
    }

    /// Width `1/√λ_min(U)` of the widest amplitude direction.
    pub fn widest_sigma(&self) -> f64 {
        let lo = self.u.clone().symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        1.0 / lo.sqrt()
    }

    /// `ψ(x)`.
    pub fn amplitude(&self, x: &[f64]) -> f64 {
        let n = self.n();
        let d = DVector::from_fn(n, |i, _| x[i] - self.y[i]);
        let q = d.dot(&(&self.u * &d));
        std::f64::consts::PI.powf(-(n as f64) / 4.0) * self.det_u.powf(0.25) * (-0.5 * q).exp()
    }
}

/// Closed-form overlap, assuming matching dimensions.
fn kernel(a: &GaussianState, b: &GaussianState) -> f64 {
    if a == b {
        return 1.0;
    }
    let s = &a.u + &b.u;
    let det_half = (&s * 0.5).determinant();
    let d = &a.y - &b.y;
    let quad = match s.clone().cholesky() {
        Some(ch) => {
            let v = ch.solve(&(&b.u * &d));
            (&a.u * v).dot(&d)
        }
        None => return 0.0,
    };
    (a.det_u * b.det_u).powf(0.25) / det_half.sqrt() * (-0.5 * quad).exp()
}

/// `(ψ_{y,U}, ψ_{y′,U′})`.
pub fn gaussian_overlap(g1: &GaussianState, g2: &GaussianState) -> Result<f64> {
    if g1.n() != g2.n() {
        return Err(Error::Dimension { expected: g1.n(), found: g2.n() });
    }
    Ok(kernel(g1, g2))
}

/// `ψ = c Σ pⱼ ψⱼ` with `pⱼ ≥ 0` and `c` fixing `‖ψ‖ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    components: Vec<GaussianState>,
    weights: Vec<f64>,
    normalizer: f64,
}

#[derive(Serialize, Deserialize)]
struct MixtureJson {
    #[serde(rename = "N")]
    n: usize,
    components: Vec<GaussianState>,
    weights: Vec<f64>,
    #[serde(default, skip_deserializing)]
    normalizer: f64,
}

impl Serialize for GaussianMixture {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MixtureJson {
            n: self.n(),
            components: self.components.clone(),
            weights: self.weights.clone(),
            normalizer: self.normalizer,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GaussianMixture {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = MixtureJson::deserialize(de)?;
        if raw.components.iter().any(|c| c.n() != raw.n) {
            return Err(D::Error::custom(format!("components must all have N = {}", raw.n)));
        }
        GaussianMixture::new(raw.components, raw.weights).map_err(D::Error::custom)
    }
}

impl GaussianMixture {
    pub fn new(components: Vec<GaussianState>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Spec("mixture needs at least one component".into()));
        }
        if components.len() != weights.len() {
            return Err(Error::Spec(format!(
                "{} components but {} weights",
                components.len(),
                weights.len()
            )));
        }
        let n = components[0].n();
        if let Some(c) = components.iter().find(|c| c.n() != n) {
            return Err(Error::Dimension { expected: n, found: c.n() });
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::Spec(format!("mixture weight {w} is not a non-negative number")));
        }
        mixture_normalize(&Self { components, weights, normalizer: 1.0 })
    }

    pub fn single(g: GaussianState) -> Self {
        Self { components: vec![g], weights: vec![1.0], normalizer: 1.0 }
    }

    pub fn n(&self) -> usize {
        self.components[0].n()
    }

    pub fn components(&self) -> &[GaussianState] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// `ψ(x)`.
    pub fn amplitude(&self, x: &[f64]) -> f64 {
        self.normalizer * self.components.iter().zip(&self.weights).map(|(g, p)| p * g.amplitude(x)).sum::<f64>()
    }
}

/// Recomputes `c = (Σᵢⱼ pᵢpⱼ Gᵢⱼ)^{−1/2}`.
pub fn mixture_normalize(mix: &GaussianMixture) -> Result<GaussianMixture> {
    if mix.weights.iter().all(|&p| p == 0.0) {
        return Err(Error::ZeroVector(0.0));
    }
    let mut q = 0.0;
    for (a, p) in mix.components.iter().zip(&mix.weights) {
        for (b, r) in mix.components.iter().zip(&mix.weights) {
            q += p * r * kernel(a, b);
        }
    }
    if !(q > 0.0) {
        return Err(Error::ZeroVector(q.max(0.0).sqrt()));
    }
    Ok(GaussianMixture { components: mix.components.clone(), weights: mix.weights.clone(), normalizer: q.powf(-0.5) })
}

/// `c₁c₂ Σᵢⱼ pᵢ qⱼ Gᵢⱼ`.
pub fn mixture_overlap(m1: &GaussianMixture, m2: &GaussianMixture) -> Result<f64> {
    if m1.n() != m2.n() {
        return Err(Error::Dimension { expected: m1.n(), found: m2.n() });
    }
    Ok(raw_mixture_overlap(m1, m2))
}

fn raw_mixture_overlap(m1: &GaussianMixture, m2: &GaussianMixture) -> f64 {
    let mut s = 0.0;
    for (a, p) in m1.components.iter().zip(&m1.weights) {
        for (b, q) in m2.components.iter().zip(&m2.weights) {
            s += p * q * kernel(a, b);
        }
    }
    m1.normalizer * m2.normalizer * s
}

/// Flattens `Σ zₖ mₖ` into per-component amplitudes, merging equal components.
fn flatten(terms: &[(C64, &GaussianMixture)]) -> Vec<(GaussianState, C64)> {
    let mut out: Vec<(GaussianState, C64)> = Vec::new();
    for (z, m) in terms {
        for (g, p) in m.components.iter().zip(&m.weights) {
            let a = z * (m.normalizer * p);
            match out.iter_mut().find(|(h, _)| h == g) {
                Some(slot) => slot.1 += a,
                None => out.push((g.clone(), a)),
            }
        }
    }
    out
}

impl HilbertPoint for GaussianMixture {
    fn inner_with(&self, other: &Self) -> C64 {
        C64::new(raw_mixture_overlap(self, other), 0.0)
    }

    /// Only real non-negative coefficients keep the result a mixture.
    fn superpose(terms: &[(C64, &Self)]) -> Result<Self> {
        for (z, _) in terms {
            if z.im.abs() > 1e-12 * z.norm().max(1.0) || z.re < 0.0 {
                return Err(Error::Spec(format!(
                    "Gaussian mixtures admit only real non-negative coefficients, got {z}"
                )));
            }
        }
        let flat = flatten(terms);
        if flat.is_empty() {
            return Err(Error::Degenerate("empty linear combination".into()));
        }
        let (components, weights): (Vec<_>, Vec<_>) = flat.into_iter().map(|(g, a)| (g, a.re.max(0.0))).unzip();
        GaussianMixture::new(components, weights)
    }

    fn combination_norm(terms: &[(C64, &Self)]) -> f64 {
        let flat = flatten(terms);
        let mut q = C64::new(0.0, 0.0);
        for (a, x) in &flat {
            for (b, y) in &flat {
                q += x.conj() * y * kernel(a, b);
            }
        }
        q.re.max(0.0).sqrt()
    }

    fn space_dim(&self) -> usize {
        self.n()
    }
}

/// Distance from `mix` to the nearest single translate `ψ_{y,U}` sharing the
/// components' common `U`, found by mean-shift from every component centre.
pub fn single_translate_residual(mix: &GaussianMixture) -> Result<f64> {
    let u = &mix.components[0].u;
    if mix.components.iter().any(|g| &g.u != u) {
        return Err(Error::Spec("components do not share one U".into()));
    }
    let n = mix.n();
    let coeffs: Vec<f64> = mix.weights.iter().map(|p| p * mix.normalizer).collect();
    let overlap_at = |y: &DVector<f64>| -> f64 {
        mix.components
            .iter()
            .zip(&coeffs)
            .map(|(g, a)| {
                let d = &g.y - y;
                a * (-0.25 * d.dot(&(u * &d))).exp()
            })
            .sum()
    };
    let mut starts: Vec<DVector<f64>> = mix.components.iter().map(|g| g.y.clone()).collect();
    let total: f64 = coeffs.iter().sum();
    starts.push(mix.components.iter().zip(&coeffs).fold(DVector::zeros(n), |acc, (g, a)| acc + &g.y * (a / total)));
    let mut best: f64 = 0.0;
    for mut y in starts {
        for _ in 0..500 {
            let mut num = DVector::zeros(n);
            let mut den = 0.0;
            for (g, a) in mix.components.iter().zip(&coeffs) {
                let d = &g.y - &y;
                let k = a * (-0.25 * d.dot(&(u * &d))).exp();
                num += &g.y * k;
                den += k;
            }
            let next = num / den;
            let step = (&next - &y).norm();
            y = next;
            if step < 1e-15 {
                break;
            }
        }
        best = best.max(overlap_at(&y));
    }
    Ok((2.0 - 2.0 * best.min(1.0)).max(0.0).sqrt())
}

/// Sampled Gaussian family with its Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChart {
    pub chart: ChartedManifold<GaussianMixture>,
    pub gram: Vec<Vec<f64>>,
    /// `N`, plus `N(N+1)/2` when `U` varies.
    pub parameter_count: usize,
}

/// Chart over translations `y` (one axis per coordinate) and, optionally,
/// the lower-triangle entries of `U` in row-major order (`u₁₁, u₂₁, u₂₂, …`).
/// With no `U` axes the family is the translates of the ground state.
pub fn gaussian_chart(y_axes: &[Vec<f64>], u_axes: &[Vec<f64>]) -> Result<GaussianChart> {
    let n = y_axes.len();
    if n == 0 {
        return Err(Error::Spec("need at least one translation axis".into()));
    }
    let tri = n * (n + 1) / 2;
    if !u_axes.is_empty() && u_axes.len() != tri {
        return Err(Error::Spec(format!("expected {tri} U axes for N = {n}, got {}", u_axes.len())));
    }
    let mut axes = y_axes.to_vec();
    axes.extend_from_slice(u_axes);
    let chart = ChartedManifold::from_fn(axes, |p| {
        let y = p[..n].to_vec();
        let g = if u_axes.is_empty() {
            GaussianState::translate(y)
        } else {
            let mut u = vec![vec![0.0; n]; n];
            let mut k = n;
            for i in 0..n {
                for j in 0..=i {
                    u[i][j] = p[k];
                    u[j][i] = p[k];
                    k += 1;
                }
            }
            GaussianState::new(y, u)?
        };
        Ok(GaussianMixture::single(g))
    })?;
    let gram = (0..chart.len())
        .map(|i| (0..chart.len()).map(|j| chart.overlap(i, j).re).collect())
        .collect();
    let parameter_count = n + if u_axes.is_empty() { 0 } else { tri };
    Ok(GaussianChart { chart, gram, parameter_count })
}

/// A tensor grid of `points` nodes per axis over `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub points: usize,
}

impl QuadratureGrid {
    pub fn cube(n: usize, half_width: f64, points: usize) -> Self {
        Self { lo: vec![-half_width; n], hi: vec![half_width; n], points }
    }
}

const MAX_GRID_POINTS: usize = 1_000_000;

/// Samples `ψ` on the grid (scaled by the square root of the cell volume)
/// and renormalizes. Fails if the grid does not cover ±8σ or if the sampled
/// norm misses one by more than 1e-6.
pub fn embed_gaussian(g: &GaussianState, grid: &QuadratureGrid) -> Result<StateVector> {
    let n = g.n();
    if grid.lo.len() != n || grid.hi.len() != n {
        return Err(Error::Dimension { expected: n, found: grid.lo.len().min(grid.hi.len()) });
    }
    if grid.points < 2 {
        return Err(Error::Quadrature("grid needs at least 2 points per axis".into()));
    }
    let total = (grid.points as f64).powi(n as i32);
    if total > MAX_GRID_POINTS as f64 {
        return Err(Error::Quadrature(format!("grid of {total} points exceeds {MAX_GRID_POINTS}")));
    }
    let sigma = g.widest_sigma();
    for k in 0..n {
        if grid.lo[k] > g.y[k] - 8.0 * sigma || grid.hi[k] < g.y[k] + 8.0 * sigma {
            return Err(Error::Quadrature(format!("axis {k} does not cover 8 sigma = {}", 8.0 * sigma)));
        }
    }
    let steps: Vec<f64> = (0..n).map(|k| (grid.hi[k] - grid.lo[k]) / (grid.points - 1) as f64).collect();
    let cell = steps.iter().product::<f64>().sqrt();
    let count = total as usize;
    let mut amps = Vec::with_capacity(count);
    let mut x = vec![0.0; n];
    for flat in 0..count {
        let mut rest = flat;
        for k in (0..n).rev() {
            x[k] = grid.lo[k] + steps[k] * (rest % grid.points) as f64;
            rest /= grid.points;
        }
        amps.push(C64::new(g.amplitude(&x) * cell, 0.0));
    }
    let norm2: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    if (norm2 - 1.0).abs() > 1e-6 {
        return Err(Error::Quadrature(format!("sampled norm^2 = {norm2}, grid too coarse")));
    }
    crate::statespace::normalize(&amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nullphase::{is_npm, isotropy_check, totally_geodesic_check};
    use crate::statespace::seeded_rng;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn g1(y: f64, u: f64) -> GaussianState {
        GaussianState::new(vec![y], vec![vec![u]]).unwrap()
    }

    // Independent oracle: composite Simpson on a wide interval.
    fn simpson_overlap_1d(a: &GaussianState, b: &GaussianState) -> f64 {
        let (lo, hi, n) = (-30.0, 30.0, 60_000);
        let h = (hi - lo) / n as f64;
        (0..=n)
            .map(|i| {
                let x = lo + i as f64 * h;
                let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * a.amplitude(&[x]) * b.amplitude(&[x])
            })
            .sum::<f64>()
            * h
            / 3.0
    }

    fn simpson_overlap_2d(a: &GaussianState, b: &GaussianState) -> f64 {
        let (lo, hi, n) = (-14.0, 14.0, 700);
        let h = (hi - lo) / n as f64;
        let w = |i: usize| if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        let mut s = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let x = [lo + i as f64 * h, lo + j as f64 * h];
                s += w(i) * w(j) * a.amplitude(&x) * b.amplitude(&x);
            }
        }
        s * h * h / 9.0
    }

    #[test]
    fn overlap_examples() {
        let a = GaussianState::translate(vec![0.0]);
        let b = GaussianState::translate(vec![2.0]);
        assert_eq!(gaussian_overlap(&a, &a).unwrap(), 1.0);
        assert_abs_diff_eq!(gaussian_overlap(&a, &b).unwrap(), (-1.0f64).exp(), epsilon = 1e-10);
        let wide = g1(0.0, 1.0);
        let narrow = g1(0.0, 4.0);
        let v = gaussian_overlap(&wide, &narrow).unwrap();
        assert_abs_diff_eq!(v, 4f64.powf(0.25) * 2.5f64.powf(-0.5), epsilon = 1e-12);
        assert_abs_diff_eq!(v, 0.894427191, epsilon = 1e-9);
        assert_abs_diff_eq!(v, (2.0 * 2.0 / 5.0f64).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(v, gaussian_overlap(&narrow, &wide).unwrap(), epsilon = 1e-15);
    }

    #[test]
    fn closed_form_matches_simpson_oracle() {
        let mut rng = seeded_rng(8);
        for _ in 0..10 {
            let a = g1(rng.random_range(-2.0..2.0), rng.random_range(0.3..3.0));
            let b = g1(rng.random_range(-2.0..2.0), rng.random_range(0.3..3.0));
            assert_abs_diff_eq!(gaussian_overlap(&a, &b).unwrap(), simpson_overlap_1d(&a, &b), epsilon = 1e-10);
        }
        for _ in 0..3 {
            let u = random_spd(&mut rng, 2);
            let v = random_spd(&mut rng, 2);
            let a = GaussianState::new(vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], u).unwrap();
            let b = GaussianState::new(vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], v).unwrap();
            assert_abs_diff_eq!(gaussian_overlap(&a, &b).unwrap(), simpson_overlap_2d(&a, &b), epsilon = 1e-9);
        }
    }

    pub(crate) fn random_spd<R: Rng>(rng: &mut R, n: usize) -> Vec<Vec<f64>> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.6..0.6));
        let m = &a * a.transpose() + DMatrix::identity(n, n) * 0.5;
        (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect()
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(GaussianState::new(vec![0.0, 0.0], vec![vec![1.0, 0.5], vec![0.4, 1.0]]), Err(Error::Matrix(_))));
        assert!(matches!(GaussianState::new(vec![0.0, 0.0], vec![vec![1.0, 2.0], vec![2.0, 1.0]]), Err(Error::Matrix(_))));
        let a = g1(0.0, 1.0);
        let b = GaussianState::translate(vec![0.0, 0.0]);
        assert!(matches!(gaussian_overlap(&a, &b), Err(Error::Dimension { .. })));
        let text = r#"{"N":1,"y":[0.0],"U":[[-1.0]]}"#;
        assert!(serde_json::from_str::<GaussianState>(text).is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = GaussianState::new(vec![0.5, -1.0], vec![vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        assert!(text.contains("\"N\":2"));
        assert_eq!(serde_json::from_str::<GaussianState>(&text).unwrap(), g);
        let m = GaussianMixture::new(vec![g.clone(), GaussianState::translate(vec![0.0, 0.0])], vec![0.3, 0.7]).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains("\"weights\""));
        assert_eq!(serde_json::from_str::<GaussianMixture>(&text).unwrap(), m);
    }

    #[test]
    fn normalizer_examples() {
        let a = GaussianState::translate(vec![0.0]);
        let b = GaussianState::translate(vec![2.0]);
        let single = GaussianMixture::new(vec![a.clone()], vec![1.0]).unwrap();
        assert_eq!(single.normalizer(), 1.0);
        let twins = GaussianMixture::new(vec![a.clone(), a.clone()], vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(twins.normalizer(), 1.0, epsilon = 1e-15);
        let pair = GaussianMixture::new(vec![a.clone(), b], vec![0.5, 0.5]).unwrap();
        let expected = (0.5 * (1.0 + (-1.0f64).exp())).powf(-0.5);
        assert_abs_diff_eq!(pair.normalizer(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(pair.normalizer(), 1.20918, epsilon = 1e-5);
        // Cross-check by quadrature of |ψ|².
        let h = 1e-3;
        let norm2: f64 = (0..30_000).map(|i| pair.amplitude(&[-14.0 + i as f64 * h]).powi(2)).sum::<f64>() * h;
        assert_abs_diff_eq!(norm2, 1.0, epsilon = 1e-9);
        let again = mixture_normalize(&pair).unwrap();
        assert_abs_diff_eq!(again.normalizer(), pair.normalizer(), epsilon = 1e-15);
        assert!(matches!(GaussianMixture::new(vec![a], vec![0.0]), Err(Error::ZeroVector(_))));
    }

    #[test]
    fn mixture_overlaps() {
        let a = GaussianState::translate(vec![0.0]);
        let b = GaussianState::translate(vec![2.0]);
        let m = GaussianMixture::new(vec![a.clone(), b.clone()], vec![0.2, 0.8]).unwrap();
        assert_abs_diff_eq!(mixture_overlap(&m, &m).unwrap(), 1.0, epsilon = 1e-14);
        let far1 = GaussianMixture::new(vec![a.clone(), b.clone()], vec![1.0, 1.0]).unwrap();
        let far2 = GaussianMixture::new(
            vec![GaussianState::translate(vec![22.0]), GaussianState::translate(vec![24.0])],
            vec![1.0, 1.0],
        )
        .unwrap();
        let v = mixture_overlap(&far1, &far2).unwrap();
        assert!(v > 0.0 && v < 1e-40);
        let (ma, mb) = (GaussianMixture::single(a), GaussianMixture::single(b));
        let mid = crate::geodesics::geodesic_point(&ma, &mb, 0.5).unwrap();
        assert!(mixture_overlap(&mid, &ma).unwrap() > 0.0 && mixture_overlap(&mid, &mb).unwrap() > 0.0);
        assert_abs_diff_eq!(mixture_overlap(&mid, &ma).unwrap(), mixture_overlap(&mid, &mb).unwrap(), epsilon = 1e-14);
    }

    #[test]
    fn complex_superposition_is_rejected() {
        let m = GaussianMixture::single(GaussianState::translate(vec![0.0]));
        assert!(GaussianMixture::superpose(&[(C64::new(0.0, 1.0), &m)]).is_err());
        assert!(GaussianMixture::superpose(&[(C64::new(-1.0, 0.0), &m)]).is_err());
        let n = GaussianMixture::combination_norm(&[(C64::new(1.0, 0.0), &m), (C64::new(-1.0, 0.0), &m)]);
        assert_eq!(n, 0.0);
    }

    #[test]
    fn translate_midpoint_is_far_from_every_translate() {
        let ma = GaussianMixture::single(GaussianState::translate(vec![0.0]));
        let mb = GaussianMixture::single(GaussianState::translate(vec![2.0]));
        let mid = crate::geodesics::geodesic_point(&ma, &mb, 0.5).unwrap();
        assert!(single_translate_residual(&mid).unwrap() > 0.1);
        assert!(single_translate_residual(&ma).unwrap() < 1e-7);
        // Oracle: brute-force scan of y.
        let best = (0..=2000)
            .map(|i| mixture_overlap(&mid, &GaussianMixture::single(GaussianState::translate(vec![-1.0 + 4.0 * i as f64 / 2000.0]))).unwrap())
            .fold(0.0, f64::max);
        assert_abs_diff_eq!(single_translate_residual(&mid).unwrap(), (2.0 - 2.0 * best).sqrt(), epsilon = 1e-6);
    }

    #[test]
    fn chart_gram_and_parameter_count() {
        let ys = vec![vec![-1.0, 0.0, 0.5, 2.0]];
        let c = gaussian_chart(&ys, &[]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let d = ys[0][i] - ys[0][j];
                assert_abs_diff_eq!(c.gram[i][j], (-d * d / 4.0).exp(), epsilon = 1e-10);
            }
        }
        let single = gaussian_chart(&[vec![0.3]], &[]).unwrap();
        assert_eq!(single.gram, vec![vec![1.0]]);
        let full = gaussian_chart(
            &[vec![0.0, 1.0], vec![0.0, 1.0]],
            &[vec![1.0, 1.5], vec![-0.2, 0.1], vec![1.0, 2.0]],
        )
        .unwrap();
        assert_eq!(full.parameter_count, 5);
        assert_eq!(full.chart.d(), 5);
        assert!(full.gram.iter().flatten().all(|&g| g > 0.0 && g <= 1.0 + 1e-15));
    }

    #[test]
    fn translate_chart_is_npm_isotropic_and_not_totally_geodesic() {
        let axis: Vec<f64> = (0..6).map(|i| -1.0 + 0.4 * i as f64).collect();
        let c = gaussian_chart(&[axis.clone(), axis], &[]).unwrap();
        assert!(is_npm(&c.chart, 1e-10).ok);
        assert!(isotropy_check(&c.chart).unwrap().passes());
        let report = totally_geodesic_check(&c.chart, |m| single_translate_residual(m).map_or(false, |r| r < 1e-6), 10, 3);
        assert!(!report.ok);
    }

    #[test]
    fn embedding_reproduces_overlaps() {
        let grid = QuadratureGrid { lo: vec![-10.0], hi: vec![12.0], points: 2048 };
        let a = embed_gaussian(&GaussianState::translate(vec![0.0]), &grid).unwrap();
        let b = embed_gaussian(&GaussianState::translate(vec![2.0]), &grid).unwrap();
        assert_abs_diff_eq!(a.dot(&a).re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(a.dot(&b).re, (-1.0f64).exp(), epsilon = 1e-8);
        let grid = QuadratureGrid::cube(1, 10.0, 2048);
        let w = embed_gaussian(&g1(0.0, 1.0), &grid).unwrap();
        let n = embed_gaussian(&g1(0.0, 4.0), &grid).unwrap();
        assert_abs_diff_eq!(w.dot(&n).re, 0.894427191, epsilon = 1e-8);
    }

    #[test]
    fn embedding_errors() {
        let g = GaussianState::translate(vec![0.0]);
        assert!(matches!(embed_gaussian(&g, &QuadratureGrid::cube(1, 5.0, 100)), Err(Error::Quadrature(_))));
        assert!(matches!(embed_gaussian(&g, &QuadratureGrid::cube(1, 9.0, 6)), Err(Error::Quadrature(_))));
        let g3 = GaussianState::translate(vec![0.0; 3]);
        assert!(matches!(embed_gaussian(&g3, &QuadratureGrid::cube(3, 9.0, 101)), Err(Error::Quadrature(_))));
    }
}
