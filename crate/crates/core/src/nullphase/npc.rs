//! Null phase curves: the triple test and two generators.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{scan_triples, TripleReport};
use crate::curves::{uniform_grid, SampledCurve};
use crate::error::{Error, Result};
use crate::statespace::{angle_gap, random_gaussian_c64, raw_inner, seeded_rng, Ray, StateVector};
use crate::tolerance::{DEFAULT_TRIPLES, EXHAUSTIVE_TRIPLE_LIMIT, ORTHO_EPS, TOL_FID, TOL_NORM};

/// Triple positivity of a sampled curve with the default sampling budget.
pub fn is_npc(curve: &SampledCurve, tol: f64) -> TripleReport {
    is_npc_with(curve, tol, DEFAULT_TRIPLES, 0)
}

pub fn is_npc_with(curve: &SampledCurve, tol: f64, triples: usize, seed: u64) -> TripleReport {
    let states = curve.states();
    scan_triples(
        states.len(),
        |i, j| states[i].dot(&states[j]),
        tol,
        EXHAUSTIVE_TRIPLE_LIMIT,
        triples,
        seed,
    )
}

/// Largest |φ_g| over all contiguous sub-arcs `[i, j]` of the curve.
pub fn subarc_max_phase(curve: &SampledCurve) -> f64 {
    let states = curve.states();
    let mut prefix = Vec::with_capacity(states.len());
    prefix.push(0.0);
    for z in curve.links() {
        prefix.push(prefix.last().unwrap() + z.arg());
    }
    let mut worst: f64 = 0.0;
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            let total = states[i].dot(&states[j]).arg();
            worst = worst.max(angle_gap(total, prefix[j] - prefix[i]));
        }
    }
    worst
}

/// A sampled path on the unit sphere of ℝᵐ together with an orthonormal
/// frame `e₁, …, e_m` in which it is read as a state `Σ x_r e_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereTrajectory {
    pub m: usize,
    pub params: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
    pub basis: Vec<StateVector>,
}

impl SphereTrajectory {
    pub fn new(params: Vec<f64>, samples: Vec<Vec<f64>>, basis: Vec<StateVector>) -> Result<Self> {
        let m = basis.len();
        if m < 2 {
            return Err(Error::Spec(format!("sphere path needs m >= 2, got {m}")));
        }
        check_orthonormal(&basis)?;
        if params.len() != samples.len() {
            return Err(Error::Spec(format!(
                "{} parameters for {} samples",
                params.len(),
                samples.len()
            )));
        }
        for (i, x) in samples.iter().enumerate() {
            if x.len() != m {
                return Err(Error::Dimension { expected: m, found: x.len() });
            }
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > TOL_NORM {
                return Err(Error::Spec(format!("sample {i} has norm {norm}")));
            }
        }
        Ok(Self { m, params, samples, basis })
    }

    /// The arc `(cos s, sin s, 0, …)`, `s ∈ [0, θ₀]`.
    pub fn great_circle(theta0: f64, mesh: usize, basis: Vec<StateVector>) -> Result<Self> {
        Self::bulged(theta0, 0.0, mesh, basis)
    }

    /// `(cos s, sin s, b·sin(πs/θ₀)·w, …)` renormalized, with the bump spread
    /// evenly over `e₃, …, e_m`. Stays in the positive orthant for `b ≥ 0`.
    pub fn bulged(theta0: f64, bulge: f64, mesh: usize, basis: Vec<StateVector>) -> Result<Self> {
        let m = basis.len();
        if bulge != 0.0 && m < 3 {
            return Err(Error::Spec("a bulge needs m >= 3".into()));
        }
        let params = uniform_grid(0.0, theta0, mesh)?;
        let w = if m > 2 { 1.0 / ((m - 2) as f64).sqrt() } else { 0.0 };
        let samples = params
            .iter()
            .map(|&s| {
                let bump = bulge * (std::f64::consts::PI * s / theta0).sin() * w;
                let mut x = vec![bump; m];
                x[0] = s.cos();
                x[1] = s.sin();
                if s == params[params.len() - 1] {
                    x[2..].iter_mut().for_each(|v| *v = 0.0);
                }
                let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                x.iter_mut().for_each(|v| *v /= n);
                x
            })
            .collect();
        Self::new(params, samples, basis)
    }
}

fn check_orthonormal(basis: &[StateVector]) -> Result<()> {
    let dim = basis[0].dim();
    for (i, a) in basis.iter().enumerate() {
        if a.dim() != dim {
            return Err(Error::Dimension { expected: dim, found: a.dim() });
        }
        for (j, b) in basis.iter().enumerate().skip(i + 1) {
            let z = a.dot(b).norm();
            if z > 1e-10 {
                return Err(Error::Spec(format!("basis vectors {i} and {j} overlap by {z}")));
            }
        }
    }
    Ok(())
}

fn combine(basis: &[StateVector], x: &[f64]) -> StateVector {
    let dim = basis[0].dim();
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    for (e, &c) in basis.iter().zip(x) {
        for (a, b) in amps.iter_mut().zip(e.amplitudes()) {
            *a += b * c;
        }
    }
    let n = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|z| *z /= n);
    StateVector::from_normalized_unchecked(amps)
}

fn pairwise_positive(samples: &[Vec<f64>]) -> Result<()> {
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let dot: f64 = samples[i].iter().zip(&samples[j]).map(|(a, b)| a * b).sum();
            if !(dot > 0.0) {
                return Err(Error::Positivity { i, j, value: dot });
            }
        }
    }
    Ok(())
}

/// The curve `ψ₀(s) = Σ x_r(s) e_r`. Requires `x̂(s₁) = (1, 0, …)`,
/// `x̂(s₂) = (cos θ₀, sin θ₀, 0, …)` and positive pairwise dot products.
pub fn npc_from_sphere_path(traj: &SphereTrajectory) -> Result<SampledCurve> {
    let (first, last) = match (traj.samples.first(), traj.samples.last()) {
        (Some(a), Some(b)) if traj.samples.len() >= 2 => (a, b),
        _ => return Err(Error::Mesh("sphere path needs at least 2 samples".into())),
    };
    if (first[0] - 1.0).abs() > TOL_NORM || first[1..].iter().any(|v| v.abs() > TOL_NORM) {
        return Err(Error::Spec("path must start at (1, 0, ..., 0)".into()));
    }
    if last[2..].iter().any(|v| v.abs() > TOL_NORM) || !(last[1] > 0.0) {
        return Err(Error::Spec("path must end at (cos t, sin t, 0, ..., 0) with sin t > 0".into()));
    }
    pairwise_positive(&traj.samples)?;
    let states = traj.samples.iter().map(|x| combine(&traj.basis, x)).collect();
    SampledCurve::new(traj.params.clone(), states)
}

/// Coefficients of `ψ₀(s) = σ cos θ e₁ + σ sin θ e₂ + Σ_{r≥3} x_r e_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralNpcSpec {
    pub theta0: f64,
    pub params: Vec<f64>,
    pub sigma: Vec<f64>,
    pub theta: Vec<f64>,
    /// `χ` coefficient vectors `(x₃, x₄, …)`, one per sample.
    pub chi: Vec<Vec<f64>>,
}

impl GeneralNpcSpec {
    /// Coordinates `(x₁, x₂, x₃, …)` at every sample.
    pub fn coordinates(&self) -> Vec<Vec<f64>> {
        (0..self.params.len())
            .map(|i| {
                let (s, t) = (self.sigma[i], self.theta[i]);
                let mut x = vec![s * t.cos(), s * t.sin()];
                x.extend_from_slice(&self.chi[i]);
                x
            })
            .collect()
    }

    fn validate(&self, basis_len: usize) -> Result<()> {
        let n = self.params.len();
        if n < 2 {
            return Err(Error::Mesh(format!("general NPC needs at least 2 samples, got {n}")));
        }
        if self.sigma.len() != n || self.theta.len() != n || self.chi.len() != n {
            return Err(Error::Spec("sigma, theta and chi must have one entry per sample".into()));
        }
        let k = self.chi[0].len();
        if self.chi.iter().any(|c| c.len() != k) {
            return Err(Error::Spec("chi vectors must share one length".into()));
        }
        if basis_len != k + 2 {
            return Err(Error::Dimension { expected: k + 2, found: basis_len });
        }
        let t0 = self.theta0;
        if !(t0 > 0.0 && t0 < std::f64::consts::FRAC_PI_2) {
            return Err(Error::Spec(format!("theta0 = {t0} must lie in (0, pi/2)")));
        }
        let edge = 1e-12;
        if (self.sigma[0] - 1.0).abs() > edge || (self.sigma[n - 1] - 1.0).abs() > edge {
            return Err(Error::Spec("sigma must equal 1 at both endpoints".into()));
        }
        if self.theta[0].abs() > edge || (self.theta[n - 1] - t0).abs() > edge {
            return Err(Error::Spec("theta must run from 0 to theta0".into()));
        }
        if self.chi[0].iter().chain(&self.chi[n - 1]).any(|v| v.abs() > edge) {
            return Err(Error::Spec("chi must vanish at both endpoints".into()));
        }
        let half_pi = std::f64::consts::FRAC_PI_2;
        for i in 0..n {
            let (s, t) = (self.sigma[i], self.theta[i]);
            if !(s > 0.0 && s <= 1.0 + edge) {
                return Err(Error::Spec(format!("sigma[{i}] = {s} outside (0, 1]")));
            }
            if !(t > -half_pi + t0 - edge && t < half_pi) {
                return Err(Error::Spec(format!("theta[{i}] = {t} outside (theta0 - pi/2, pi/2)")));
            }
            let chi2: f64 = self.chi[i].iter().map(|v| v * v).sum();
            if (chi2 - (1.0 - s * s)).abs() > 1e-10 {
                return Err(Error::Spec(format!("|chi|^2 = {chi2} at sample {i}, expected {}", 1.0 - s * s)));
            }
        }
        Ok(())
    }
}

/// Builds a general NPC from `e₁` to `e₁ cos θ₀ + e₂ sin θ₀` over `basis`.
pub fn npc_general(spec: &GeneralNpcSpec, basis: &[StateVector]) -> Result<SampledCurve> {
    if basis.is_empty() {
        return Err(Error::Spec("empty basis".into()));
    }
    spec.validate(basis.len())?;
    check_orthonormal(basis)?;
    let xs = spec.coordinates();
    pairwise_positive(&xs)?;
    let states = xs.iter().map(|x| combine(basis, x)).collect();
    SampledCurve::new(spec.params.clone(), states)
}

/// An orthonormal frame adapted to two rays: `e₁` is the representative of
/// `r1`, `e₁ cos θ₀ + e₂ sin θ₀` lies on `r2`, and `e₃, …, e_m` are seeded
/// random completions. Returns the frame and `θ₀`.
pub fn adapted_basis(r1: &Ray, r2: &Ray, m: usize, seed: u64) -> Result<(Vec<StateVector>, f64)> {
    let dim = r1.dim();
    if r2.dim() != dim {
        return Err(Error::Dimension { expected: dim, found: r2.dim() });
    }
    if m < 2 || m > dim {
        return Err(Error::Spec(format!("frame size {m} invalid for dimension {dim}")));
    }
    let e1 = r1.representative().clone();
    let overlap = e1.dot(r2.representative());
    if overlap.norm() <= ORTHO_EPS {
        return Err(Error::Orthogonality { i: 0, j: 1, modulus: overlap.norm() });
    }
    if 1.0 - overlap.norm_sqr() <= TOL_FID {
        return Err(Error::Degenerate("rays coincide".into()));
    }
    let psi2 = r2.representative().in_phase_with(&e1);
    let c = e1.dot(&psi2).re.min(1.0);
    let mut frame: Vec<Vec<C64>> = vec![e1.amplitudes().to_vec()];
    let e2: Vec<C64> = psi2.amplitudes().iter().zip(e1.amplitudes()).map(|(b, a)| b - a * c).collect();
    frame.push(unit(e2));
    let mut rng = seeded_rng(seed);
    while frame.len() < m {
        let mut v: Vec<C64> = (0..dim).map(|_| random_gaussian_c64(&mut rng)).collect();
        for _ in 0..2 {
            for e in &frame {
                let p = raw_inner(e, &v);
                v.iter_mut().zip(e).for_each(|(x, y)| *x -= y * p);
            }
        }
        frame.push(unit(v));
    }
    let basis = frame.into_iter().map(StateVector::from_normalized_unchecked).collect();
    Ok((basis, c.acos()))
}

fn unit(mut v: Vec<C64>) -> Vec<C64> {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= n);
    v
}

/// A non-geodesic NPC from `r1` to `r2` bulging through a random third
/// direction (`m = 3`). Needs `dim ≥ 3`.
pub fn npc_between(r1: &Ray, r2: &Ray, bulge: f64, mesh: usize, seed: u64) -> Result<SampledCurve> {
    let (basis, theta0) = adapted_basis(r1, r2, 3, seed)?;
    npc_from_sphere_path(&SphereTrajectory::bulged(theta0, bulge, mesh, basis)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::geometric_phase;
    use crate::geodesics::geodesic;
    use crate::statespace::random_state;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, PI};

    fn std_basis(dim: usize, m: usize) -> Vec<StateVector> {
        (0..m).map(|k| StateVector::basis(dim, k).unwrap()).collect()
    }

    fn latitude(theta: f64, n: usize) -> SampledCurve {
        SampledCurve::uniform(0.0, 2.0 * PI, n, |phi| {
            Ok(StateVector::new(vec![
                C64::new((theta / 2.0).cos(), 0.0),
                C64::from_polar((theta / 2.0).sin(), phi),
            ])?)
        })
        .unwrap()
    }

    #[test]
    fn geodesic_is_npc() {
        let r1 = Ray::new(&random_state(4, 11).unwrap());
        let r2 = Ray::new(&random_state(4, 12).unwrap());
        let g = geodesic(&r1, &r2, 150).unwrap();
        let report = is_npc(&g, 1e-10);
        assert!(report.ok && report.exhaustive, "{report:?}");
        let big = geodesic(&r1, &r2, 1000).unwrap();
        let report = is_npc(&big, 1e-10);
        assert!(report.ok && !report.exhaustive && report.triples_checked >= 10_000);
        assert!(subarc_max_phase(&big) < 1e-8);
    }

    #[test]
    fn latitude_circle_fails_with_witness() {
        let report = is_npc(&latitude(FRAC_PI_3, 120), 1e-10);
        assert!(!report.ok);
        let [i, j, k] = report.worst_triple.unwrap();
        assert!(i < j && j < k);
        assert!(report.worst_arg > 0.1);
    }

    #[test]
    fn great_circle_matches_geodesic() {
        let basis = std_basis(3, 3);
        let t0 = 1.1;
        let traj = SphereTrajectory::great_circle(t0, 50, basis).unwrap();
        let curve = npc_from_sphere_path(&traj).unwrap();
        let end = StateVector::from_real(&[t0.cos(), t0.sin(), 0.0]).unwrap();
        let g = geodesic(&Ray::new(curve.first()), &Ray::new(&end), 50).unwrap();
        for (a, b) in curve.rays().iter().zip(g.rays().iter()) {
            assert!(a.same_as(b, 1e-12));
        }
        assert!(is_npc(&curve, 1e-12).ok);
    }

    #[test]
    fn bulged_path_is_npc_off_geodesic() {
        let traj = SphereTrajectory::bulged(1.0, 0.8, 200, std_basis(4, 3)).unwrap();
        let curve = npc_from_sphere_path(&traj).unwrap();
        assert!(is_npc(&curve, 1e-12).ok);
        let mid = &curve.states()[100];
        assert!(mid.amplitudes()[2].re > 0.3);
        assert!(subarc_max_phase(&curve) < 1e-12);
    }

    #[test]
    fn sphere_path_positivity_error() {
        let s = 2.0_f64;
        let samples = vec![
            vec![1.0, 0.0, 0.0],
            vec![-0.6, 0.8, 0.0],
            vec![s.cos().abs(), s.sin(), 0.0],
        ];
        let traj = SphereTrajectory::new(vec![0.0, 1.0, 2.0], samples, std_basis(3, 3)).unwrap();
        assert!(matches!(npc_from_sphere_path(&traj), Err(Error::Positivity { i: 0, j: 1, .. })));
    }

    fn spec_from(theta0: f64, n: usize, f: impl Fn(f64) -> (f64, f64, Vec<f64>)) -> GeneralNpcSpec {
        let params = uniform_grid(0.0, 1.0, n).unwrap();
        let mut spec = GeneralNpcSpec { theta0, params: params.clone(), sigma: vec![], theta: vec![], chi: vec![] };
        for &s in &params {
            let (sg, th, chi) = f(s);
            spec.sigma.push(sg);
            spec.theta.push(th);
            spec.chi.push(chi);
        }
        spec
    }

    #[test]
    fn general_collapses_to_geodesic() {
        let t0 = FRAC_PI_4;
        let spec = spec_from(t0, 64, |s| (1.0, t0 * s, vec![0.0]));
        let curve = npc_general(&spec, &std_basis(3, 3)).unwrap();
        let end = StateVector::from_real(&[t0.cos(), t0.sin(), 0.0]).unwrap();
        let g = geodesic(&Ray::new(curve.first()), &Ray::new(&end), 64).unwrap();
        for (a, b) in curve.rays().iter().zip(g.rays().iter()) {
            assert!(a.same_as(b, 1e-12));
        }
    }

    fn dipping_spec() -> GeneralNpcSpec {
        // θ swings below zero so x₂ < 0 for a while; χ lifts the middle.
        let t0 = 0.5;
        spec_from(t0, 120, |s| {
            let bump = (PI * s).sin();
            let sigma = (1.0 - 0.36 * bump * bump).sqrt();
            let theta = t0 * s - 0.6 * bump;
            (sigma, theta, vec![0.6 * bump])
        })
    }

    #[test]
    fn general_leaves_positive_orthant() {
        let spec = dipping_spec();
        assert!(spec.coordinates().iter().any(|x| x[1] < -0.1));
        let curve = npc_general(&spec, &std_basis(5, 3)).unwrap();
        assert!(is_npc(&curve, 1e-10).ok);
        assert!(subarc_max_phase(&curve) < 1e-10);
        assert!(geometric_phase(&curve).unwrap().geometric.abs() < 1e-10);
    }

    #[test]
    fn general_reduces_to_sphere_path() {
        let t0 = 0.9;
        let spec = spec_from(t0, 40, |s| {
            let b = 0.5 * (PI * s).sin();
            ((1.0 - b * b).sqrt(), t0 * s, vec![b])
        });
        let basis = std_basis(4, 3);
        let general = npc_general(&spec, &basis).unwrap();
        let traj = SphereTrajectory::new(spec.params.clone(), spec.coordinates(), basis).unwrap();
        let sphere = npc_from_sphere_path(&traj).unwrap();
        for (a, b) in general.states().iter().zip(sphere.states()) {
            assert!((a.dot(b) - C64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn general_boundary_and_positivity_errors() {
        let mut spec = dipping_spec();
        let n = spec.params.len();
        spec.sigma[n - 1] = 0.9;
        assert!(matches!(npc_general(&spec, &std_basis(3, 3)), Err(Error::Spec(_))));

        let mut spec = dipping_spec();
        spec.chi[5][0] += 0.01;
        assert!(matches!(npc_general(&spec, &std_basis(3, 3)), Err(Error::Spec(_))));

        // In-range θ values whose pairwise angle exceeds π/2.
        let t0 = 0.2;
        let spec = spec_from(t0, 30, |s| {
            let theta = match s {
                s if s <= 0.0 || s >= 1.0 => t0 * s,
                s if s < 0.5 => -1.1,
                _ => 1.3,
            };
            (1.0, theta, vec![0.0])
        });
        assert!(matches!(npc_general(&spec, &std_basis(3, 3)), Err(Error::Positivity { .. })));
    }

    #[test]
    fn adapted_basis_hits_both_rays() {
        let r1 = Ray::new(&random_state(5, 1).unwrap());
        let r2 = Ray::new(&random_state(5, 2).unwrap());
        let (basis, t0) = adapted_basis(&r1, &r2, 4, 9).unwrap();
        check_orthonormal(&basis).unwrap();
        let end = combine(&basis, &[t0.cos(), t0.sin(), 0.0, 0.0]);
        assert!(Ray::new(&end).same_as(&r2, 1e-12));
        let curve = npc_between(&r1, &r2, 0.7, 300, 4).unwrap();
        assert!(is_npc(&curve, 1e-10).ok);
        assert!(Ray::new(curve.last()).same_as(&r2, 1e-12));
    }
}
