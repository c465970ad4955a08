//! Unit vectors, rays and tangent vectors of a finite-dimensional Hilbert
//! space, together with inner products, fidelities and Haar sampling.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance::{EPS_ZERO, GAUGE_EPS, TOL_FID, TOL_NORM};

/// `Σ conj(aᵢ) bᵢ` without any dimension check.
#[inline]
pub(crate) fn raw_inner(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

#[inline]
pub(crate) fn raw_norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Unit-norm vector ψ in a Hilbert space of dimension N ≥ 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateVectorJson", into = "StateVectorJson")]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    /// Wraps amplitudes that are already normalized within [`TOL_NORM`].
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::DimensionTooSmall(amps.len()));
        }
        let dev = (raw_norm_sqr(&amps) - 1.0).abs();
        if dev > TOL_NORM {
            return Err(Error::NotNormalized(dev));
        }
        Ok(Self { amps })
    }

    /// The k-th standard basis vector of dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if k >= dim {
            return Err(Error::Dimension { expected: dim, found: k + 1 });
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[k] = C64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    /// Normalizes a real amplitude vector.
    pub fn from_real(values: &[f64]) -> Result<Self> {
        let amps: Vec<C64> = values.iter().map(|&x| C64::new(x, 0.0)).collect();
        normalize(&amps)
    }

    pub(crate) fn from_normalized_unchecked(amps: Vec<C64>) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    /// Multiplies every amplitude by the unit phase `e^{i·angle}`.
    pub fn rephase(&self, angle: f64) -> Self {
        self.scale_unit(C64::from_polar(1.0, angle))
    }

    /// Multiplies by a complex number of unit modulus (not checked).
    pub(crate) fn scale_unit(&self, z: C64) -> Self {
        Self {
            amps: self.amps.iter().map(|a| a * z).collect(),
        }
    }

    /// `(self, other)` assuming equal dimensions.
    pub(crate) fn dot(&self, other: &Self) -> C64 {
        raw_inner(&self.amps, &other.amps)
    }

    /// `(self, other)` after checking dimensions.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        inner(self, other)
    }

    /// The Pancharatnam-in-phase partner of `self`: `self` rephased so that
    /// `(reference, result)` is real non-negative.
    pub(crate) fn in_phase_with(&self, reference: &Self) -> Self {
        let ov = reference.dot(self);
        if ov.norm() == 0.0 {
            return self.clone();
        }
        self.scale_unit(ov.conj() / ov.norm())
    }
}

#[derive(Serialize, Deserialize)]
struct StateVectorJson {
    dim: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl TryFrom<StateVectorJson> for StateVector {
    type Error = Error;

    fn try_from(j: StateVectorJson) -> Result<Self> {
        if j.re.len() != j.dim {
            return Err(Error::Dimension { expected: j.dim, found: j.re.len() });
        }
        if j.im.len() != j.dim {
            return Err(Error::Dimension { expected: j.dim, found: j.im.len() });
        }
        let amps = j.re.iter().zip(&j.im).map(|(&r, &i)| C64::new(r, i)).collect();
        StateVector::new(amps)
    }
}

impl From<StateVector> for StateVectorJson {
    fn from(s: StateVector) -> Self {
        Self {
            dim: s.dim(),
            re: s.amps.iter().map(|z| z.re).collect(),
            im: s.amps.iter().map(|z| z.im).collect(),
        }
    }
}

/// A point of ray space, ρ = ψψ†, stored through a gauge-fixed representative.
///
/// The gauge convention rotates the first amplitude whose modulus exceeds
/// [`GAUGE_EPS`] onto the positive real axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "StateVector", into = "StateVector")]
pub struct Ray {
    rep: StateVector,
}

impl Ray {
    pub fn new(psi: &StateVector) -> Self {
        Self { rep: gauge_fix(psi) }
    }

    pub fn representative(&self) -> &StateVector {
        &self.rep
    }

    pub fn dim(&self) -> usize {
        self.rep.dim()
    }

    /// Equality of rays: fidelity one within `tol`.
    pub fn same_as(&self, other: &Ray, tol: f64) -> bool {
        self.dim() == other.dim() && 1.0 - self.rep.dot(&other.rep).norm_sqr() <= tol
    }
}

impl PartialEq for Ray {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other, TOL_FID)
    }
}

impl From<StateVector> for Ray {
    fn from(psi: StateVector) -> Self {
        Ray::new(&psi)
    }
}

impl From<Ray> for StateVector {
    fn from(r: Ray) -> Self {
        r.rep
    }
}

/// Canonical representative: first amplitude above [`GAUGE_EPS`] made real positive.
pub fn gauge_fix(psi: &StateVector) -> StateVector {
    match psi.amps.iter().position(|a| a.norm() > GAUGE_EPS) {
        Some(k) => {
            let a = psi.amps[k];
            let mut fixed = psi.scale_unit(a.conj() / a.norm());
            fixed.amps[k] = C64::new(a.norm(), 0.0);
            fixed
        }
        None => psi.clone(),
    }
}

/// A tangent vector `direction` based at the unit vector `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: StateVector,
    pub direction: Vec<C64>,
}

impl TangentVector {
    pub fn new(base: StateVector, direction: Vec<C64>) -> Result<Self> {
        if direction.len() != base.dim() {
            return Err(Error::Dimension { expected: base.dim(), found: direction.len() });
        }
        Ok(Self { base, direction })
    }
}

/// The inner product `(φ, ψ) = Σ conj(φᵢ) ψᵢ`, antilinear in the first slot.
pub fn inner(phi: &StateVector, psi: &StateVector) -> Result<C64> {
    if phi.dim() != psi.dim() {
        return Err(Error::Dimension { expected: phi.dim(), found: psi.dim() });
    }
    Ok(phi.dot(psi))
}

/// Scales a raw vector to unit norm.
pub fn normalize(v: &[C64]) -> Result<StateVector> {
    if v.len() < 2 {
        return Err(Error::DimensionTooSmall(v.len()));
    }
    let norm = raw_norm_sqr(v).sqrt();
    if !(norm > EPS_ZERO) {
        return Err(Error::ZeroVector(norm));
    }
    Ok(StateVector {
        amps: v.iter().map(|z| z / norm).collect(),
    })
}

/// `Tr(ρ₁ρ₂) = |(ψ₁, ψ₂)|²`.
pub fn fidelity(r1: &Ray, r2: &Ray) -> Result<f64> {
    Ok(inner(&r1.rep, &r2.rep)?.norm_sqr())
}

/// Removes the component of `u` along `psi`: `u − ψ(ψ, u)`.
pub fn horizontal_project(psi: &StateVector, u: &[C64]) -> Result<TangentVector> {
    if u.len() != psi.dim() {
        return Err(Error::Dimension { expected: psi.dim(), found: u.len() });
    }
    let c = raw_inner(&psi.amps, u);
    let direction = u.iter().zip(&psi.amps).map(|(x, p)| x - p * c).collect();
    Ok(TangentVector { base: psi.clone(), direction })
}

/// Deterministic RNG used wherever a seed is accepted.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Haar-random unit vector of dimension `dim`, reproducible from `seed`.
pub fn random_state(dim: usize, seed: u64) -> Result<StateVector> {
    random_state_with(dim, &mut seeded_rng(seed))
}

/// Haar-random unit vector drawn from an explicit generator.
///
/// A vector of independent standard complex Gaussians, normalized, is
/// distributed according to the unitarily invariant measure on the sphere.
pub fn random_state_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<StateVector> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    let amps: Vec<C64> = (0..dim).map(|_| random_gaussian_c64(rng)).collect();
    normalize(&amps)
}

pub(crate) fn random_gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Reduces an angle to the principal interval (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Distance between two angles on the circle, in [0, π].
pub fn angle_gap(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// A state type with a Hermitian inner product and normalized real/complex
/// superpositions. Implemented by finite vectors and by Gaussian mixtures,
/// so that manifold and hull checks can run on either.
pub trait HilbertPoint: Clone {
    /// `(self, other)`; callers guarantee compatible spaces.
    fn inner_with(&self, other: &Self) -> C64;

    /// Normalized `Σ cₖ xₖ`.
    fn superpose(terms: &[(C64, &Self)]) -> Result<Self>;

    /// `‖Σ cₖ xₖ‖`, computed without normalizing.
    fn combination_norm(terms: &[(C64, &Self)]) -> f64;

    /// Identifier of the ambient space, used for compatibility checks.
    fn space_dim(&self) -> usize;
}

impl HilbertPoint for StateVector {
    fn inner_with(&self, other: &Self) -> C64 {
        self.dot(other)
    }

    fn superpose(terms: &[(C64, &Self)]) -> Result<Self> {
        normalize(&linear_combination(terms)?)
    }

    fn combination_norm(terms: &[(C64, &Self)]) -> f64 {
        linear_combination(terms)
            .map(|v| raw_norm_sqr(&v).sqrt())
            .unwrap_or(f64::NAN)
    }

    fn space_dim(&self) -> usize {
        self.dim()
    }
}

fn linear_combination(terms: &[(C64, &StateVector)]) -> Result<Vec<C64>> {
    let Some((_, first)) = terms.first() else {
        return Err(Error::Degenerate("empty linear combination".into()));
    };
    let dim = first.dim();
    let mut acc = vec![C64::new(0.0, 0.0); dim];
    for (c, v) in terms {
        if v.dim() != dim {
            return Err(Error::Dimension { expected: dim, found: v.dim() });
        }
        for (a, x) in acc.iter_mut().zip(&v.amps) {
            *a += c * x;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sv(amps: &[C64]) -> StateVector {
        normalize(amps).unwrap()
    }

    #[test]
    fn inner_examples() {
        let e1 = StateVector::basis(2, 0).unwrap();
        let e2 = StateVector::basis(2, 1).unwrap();
        assert_eq!(inner(&e1, &e1).unwrap(), c(1.0, 0.0));
        assert_eq!(inner(&e1, &e2).unwrap(), c(0.0, 0.0));
        let a = sv(&[c(1.0, 0.0), c(1.0, 0.0)]);
        let b = sv(&[c(1.0, 0.0), c(0.0, 1.0)]);
        let z = inner(&a, &b).unwrap();
        assert_abs_diff_eq!(z.re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(z.im, 0.5, epsilon = 1e-15);
        let w = inner(&b, &a).unwrap();
        assert_abs_diff_eq!((w - z.conj()).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn inner_dimension_mismatch() {
        let a = StateVector::basis(2, 0).unwrap();
        let b = StateVector::basis(3, 0).unwrap();
        assert!(matches!(inner(&a, &b), Err(Error::Dimension { .. })));
    }

    #[test]
    fn normalize_examples() {
        let v = normalize(&[c(2.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(v.amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        let v = normalize(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(v.amplitudes()[0].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(v.amplitudes()[1].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert!(matches!(
            normalize(&[c(0.0, 0.0), c(0.0, 0.0)]),
            Err(Error::ZeroVector(_))
        ));
        assert!(matches!(normalize(&[c(1.0, 0.0)]), Err(Error::DimensionTooSmall(1))));
    }

    #[test]
    fn new_rejects_unnormalized() {
        assert!(matches!(
            StateVector::new(vec![c(1.0, 0.0), c(1.0, 0.0)]),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn fidelity_examples() {
        let e1 = Ray::new(&StateVector::basis(2, 0).unwrap());
        let e2 = Ray::new(&StateVector::basis(2, 1).unwrap());
        let plus = Ray::new(&sv(&[c(1.0, 0.0), c(1.0, 0.0)]));
        assert_abs_diff_eq!(fidelity(&e1, &e1).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fidelity(&e1, &e2).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fidelity(&e1, &plus).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn horizontal_project_examples() {
        let e1 = StateVector::basis(2, 0).unwrap();
        let t = horizontal_project(&e1, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(t.direction.iter().all(|z| z.norm() < 1e-15));
        let t = horizontal_project(&e1, &[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(t.direction, vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let t = horizontal_project(&e1, &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(t.direction, vec![c(0.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn random_state_is_deterministic_and_normalized() {
        let a = random_state(4, 7).unwrap();
        let b = random_state(4, 7).unwrap();
        assert_eq!(a, b);
        assert_abs_diff_eq!(raw_norm_sqr(a.amplitudes()), 1.0, epsilon = 1e-12);
        assert!(matches!(random_state(1, 7), Err(Error::DimensionTooSmall(1))));
    }

    #[test]
    fn haar_mean_fidelity_in_qubit() {
        // E|⟨e₁|ψ⟩|² = 1/N for Haar ψ.
        let mut rng = seeded_rng(2024);
        let e1 = Ray::new(&StateVector::basis(2, 0).unwrap());
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|_| fidelity(&e1, &Ray::new(&random_state_with(2, &mut rng).unwrap())).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean fidelity {mean}");
    }

    #[test]
    fn gauge_fix_is_idempotent() {
        let psi = random_state(5, 3).unwrap().rephase(1.234);
        let once = gauge_fix(&psi);
        let twice = gauge_fix(&once);
        assert_eq!(once, twice);
        assert!(once.amplitudes()[0].im.abs() < 1e-15 && once.amplitudes()[0].re > 0.0);
    }

    #[test]
    fn gauge_skips_tiny_leading_amplitudes() {
        let psi = sv(&[c(1e-12, 1e-12), c(0.0, 2.0), c(1.0, 0.0)]);
        let g = gauge_fix(&psi);
        assert!(g.amplitudes()[1].im.abs() < 1e-15 && g.amplitudes()[1].re > 0.0);
    }

    #[test]
    fn rays_equal_up_to_phase() {
        let psi = random_state(3, 11).unwrap();
        assert_eq!(Ray::new(&psi), Ray::new(&psi.rephase(2.5)));
        assert_ne!(Ray::new(&psi), Ray::new(&random_state(3, 12).unwrap()));
    }

    #[test]
    fn json_form() {
        let psi = sv(&[c(1.0, 0.0), c(0.0, 1.0)]);
        let js = serde_json::to_value(&psi).unwrap();
        assert_eq!(js["dim"], 2);
        assert_eq!(js["re"].as_array().unwrap().len(), 2);
        let back: StateVector = serde_json::from_value(js).unwrap();
        assert_eq!(back, psi);
        let bad = serde_json::json!({"dim": 3, "re": [1.0, 0.0], "im": [0.0, 0.0]});
        assert!(serde_json::from_value::<StateVector>(bad).is_err());
    }

    #[test]
    fn wrap_angle_range() {
        assert_abs_diff_eq!(wrap_angle(3.0 * PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(-PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(angle_gap(0.1, 0.1 + 2.0 * PI), 0.0, epsilon = 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn self_inner_is_one(dim in 2usize..9, seed in any::<u64>()) {
                let psi = random_state(dim, seed).unwrap();
                let z = inner(&psi, &psi).unwrap();
                prop_assert!((z.re - 1.0).abs() < 1e-12 && z.im.abs() < 1e-12);
            }

            #[test]
            fn fidelity_symmetric_and_gauge_invariant(
                dim in 2usize..9, s1 in any::<u64>(), s2 in any::<u64>(), phase in -10.0f64..10.0
            ) {
                let a = random_state(dim, s1).unwrap();
                let b = random_state(dim, s2).unwrap();
                let f = fidelity(&Ray::new(&a), &Ray::new(&b)).unwrap();
                let g = fidelity(&Ray::new(&b), &Ray::new(&a.rephase(phase))).unwrap();
                prop_assert!((f - g).abs() < 1e-12);
                prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
            }

            #[test]
            fn horizontal_project_idempotent(dim in 2usize..9, s1 in any::<u64>(), s2 in any::<u64>()) {
                let psi = random_state(dim, s1).unwrap();
                let u = random_state(dim, s2).unwrap();
                let h1 = horizontal_project(&psi, u.amplitudes()).unwrap();
                prop_assert!(raw_inner(psi.amplitudes(), &h1.direction).norm() < 1e-12);
                let h2 = horizontal_project(&psi, &h1.direction).unwrap();
                let diff: f64 = h1.direction.iter().zip(&h2.direction).map(|(a, b)| (a - b).norm()).sum();
                prop_assert!(diff < 1e-12);
            }
        }
    }
}
