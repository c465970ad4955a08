//! Bargmann invariants, Pancharatnam relative phases and the globally
//! in-phase lift of a family of rays.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statespace::{inner, HilbertPoint, Ray, StateVector};
use crate::tolerance::{ORTHO_EPS, TOL_FID};

/// Value of an n-th order Bargmann invariant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BargmannResult {
    pub value: C64,
    pub order: usize,
    /// Smallest modulus among the successive overlaps entering the product.
    pub min_link_modulus: f64,
}

impl BargmannResult {
    /// Principal argument of the invariant.
    pub fn arg(&self) -> f64 {
        self.value.arg()
    }
}

/// Phase of ψ relative to φ, `arg(φ, ψ)` in (−π, π].
pub fn relative_phase(phi: &StateVector, psi: &StateVector) -> Result<f64> {
    let z = inner(phi, psi)?;
    if z.norm() <= ORTHO_EPS {
        return Err(Error::Orthogonality { i: 0, j: 1, modulus: z.norm() });
    }
    Ok(z.arg())
}

/// Pancharatnam in-phase predicate: `(φ, ψ)` real positive, with the
/// imaginary part tolerated up to `tol·|(φ, ψ)|`. Orthogonal or mismatched
/// pairs are never in phase.
pub fn in_phase(phi: &StateVector, psi: &StateVector, tol: f64) -> bool {
    match inner(phi, psi) {
        Ok(z) => z.re > ORTHO_EPS && z.im.abs() <= tol * z.norm(),
        Err(_) => false,
    }
}

/// `Δ₃(ψ₁, ψ₂, ψ₃) = (ψ₁, ψ₂)(ψ₂, ψ₃)(ψ₃, ψ₁) = Tr(ρ₁ρ₂ρ₃)`.
pub fn delta3(psi1: &StateVector, psi2: &StateVector, psi3: &StateVector) -> Result<BargmannResult> {
    delta_n(&[psi1.clone(), psi2.clone(), psi3.clone()])
}

/// `Δₙ(ψ₁, …, ψₙ) = Πᵢ (ψᵢ, ψᵢ₊₁)` with the cyclic closure `ψₙ₊₁ = ψ₁`.
///
/// A vanishing link is reported through its index pair `(i, i+1 mod n)`.
pub fn delta_n(psis: &[StateVector]) -> Result<BargmannResult> {
    let n = psis.len();
    if n < 3 {
        return Err(Error::Spec(format!("Bargmann invariant needs at least 3 states, got {n}")));
    }
    let mut value = C64::new(1.0, 0.0);
    let mut min_link = f64::INFINITY;
    for i in 0..n {
        let j = (i + 1) % n;
        let link = inner(&psis[i], &psis[j])?;
        let m = link.norm();
        if m <= ORTHO_EPS {
            return Err(Error::Orthogonality { i, j, modulus: m });
        }
        min_link = min_link.min(m);
        value *= link;
    }
    Ok(BargmannResult { value, order: n, min_link_modulus: min_link })
}

/// Lifts `rays` so that every output vector is in phase with `psi0`:
/// `ψₖ = ρₖψ₀ / √Tr(ρₖρ₀)`.
///
/// `psi0` must project onto `rays[0]`. If the rays satisfy the null phase
/// condition the lifted family is in phase pairwise, not only with `psi0`.
pub fn pancharatnam_lift(rays: &[Ray], psi0: &StateVector) -> Result<Vec<StateVector>> {
    let Some(first) = rays.first() else {
        return Ok(Vec::new());
    };
    let f0 = inner(first.representative(), psi0)?.norm_sqr();
    if 1.0 - f0 > TOL_FID {
        return Err(Error::Spec(format!(
            "fiducial vector does not project onto the first ray (fidelity {f0})"
        )));
    }
    rays.iter()
        .enumerate()
        .map(|(k, r)| {
            let rep = r.representative();
            let z = inner(rep, psi0)?;
            if z.norm_sqr() <= ORTHO_EPS * ORTHO_EPS {
                return Err(Error::Orthogonality { i: 0, j: k, modulus: z.norm() });
            }
            Ok(rep.scale_unit(z / z.norm()))
        })
        .collect()
}

/// Generic form of [`pancharatnam_lift`]: rephases every state so that its
/// overlap with `fiducial` is real positive.
pub fn lift_in_phase<P: HilbertPoint>(states: &[P], fiducial: &P) -> Result<Vec<P>> {
    states
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let z = s.inner_with(fiducial);
            if z.norm() <= ORTHO_EPS {
                return Err(Error::Orthogonality { i: 0, j: k, modulus: z.norm() });
            }
            P::superpose(&[(z / z.norm(), s)])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::{fidelity, normalize, random_state, seeded_rng};
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn e(dim: usize, k: usize) -> StateVector {
        StateVector::basis(dim, k).unwrap()
    }

    fn plus() -> StateVector {
        normalize(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap()
    }

    fn plus_i() -> StateVector {
        normalize(&[c(1.0, 0.0), c(0.0, 1.0)]).unwrap()
    }

    #[test]
    fn relative_phase_examples() {
        let e1 = e(2, 0);
        assert_abs_diff_eq!(relative_phase(&e1, &e1).unwrap(), 0.0);
        let ie1 = e1.rephase(FRAC_PI_2);
        assert_abs_diff_eq!(relative_phase(&e1, &ie1).unwrap(), FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(relative_phase(&e1, &plus_i()).unwrap(), 0.0, epsilon = 1e-15);
        assert!(matches!(
            relative_phase(&e1, &e(2, 1)),
            Err(Error::Orthogonality { .. })
        ));
    }

    #[test]
    fn in_phase_examples() {
        let e1 = e(2, 0);
        assert!(in_phase(&e1, &e1, 1e-12));
        assert!(!in_phase(&e1, &e1.rephase(FRAC_PI_2), 1e-12));
        assert!(!in_phase(&e1, &e(2, 1), 1e-12));
    }

    #[test]
    fn delta3_examples() {
        let psi = random_state(3, 5).unwrap();
        let d = delta3(&psi, &psi, &psi).unwrap();
        assert_abs_diff_eq!((d.value - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-14);

        let p1 = random_state(3, 6).unwrap();
        let p2 = random_state(3, 7).unwrap();
        let d = delta3(&p1, &p2, &p1).unwrap();
        let f = inner(&p1, &p2).unwrap().norm_sqr();
        assert_abs_diff_eq!(d.value.re, f, epsilon = 1e-14);
        assert_abs_diff_eq!(d.value.im, 0.0, epsilon = 1e-14);

        // (1,0)·(1,1)/√2 = 1/√2; (1,1)/√2·(1,i)/√2 = (1+i)/2; (1,i)/√2·(1,0) = 1/√2.
        let d = delta3(&e(2, 0), &plus(), &plus_i()).unwrap();
        assert_abs_diff_eq!(d.value.re, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(d.value.im, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(d.arg(), FRAC_PI_4, epsilon = 1e-12);
        assert_eq!(d.order, 3);
    }

    #[test]
    fn delta3_names_the_orthogonal_link() {
        let err = delta3(&e(3, 0), &plus3(), &e(3, 2)).unwrap_err();
        assert!(matches!(err, Error::Orthogonality { i: 1, j: 2, .. }), "{err:?}");
    }

    fn plus3() -> StateVector {
        normalize(&[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap()
    }

    #[test]
    fn delta_n_examples() {
        let a = random_state(4, 1).unwrap();
        let b = random_state(4, 2).unwrap();
        let cc = random_state(4, 3).unwrap();
        let d3 = delta3(&a, &b, &cc).unwrap();
        let dn = delta_n(&[a.clone(), b.clone(), cc.clone()]).unwrap();
        assert_abs_diff_eq!((d3.value - dn.value).norm(), 0.0, epsilon = 1e-15);

        let d4 = delta_n(&[a.clone(), b.clone(), a.clone(), b.clone()]).unwrap();
        let f = inner(&a, &b).unwrap().norm_sqr();
        assert_abs_diff_eq!(d4.value.re, f * f, epsilon = 1e-14);
        assert_abs_diff_eq!(d4.value.im, 0.0, epsilon = 1e-14);

        let reals: Vec<StateVector> = [[1.0, 0.2, 0.3], [0.5, 1.0, 0.1], [0.3, 0.3, 1.0], [1.0, 1.0, 1.0]]
            .iter()
            .map(|v| StateVector::from_real(v).unwrap())
            .collect();
        assert_abs_diff_eq!(delta_n(&reals).unwrap().arg(), 0.0, epsilon = 1e-15);

        assert!(matches!(delta_n(&[a.clone(), b.clone()]), Err(Error::Spec(_))));
    }

    #[test]
    fn lift_examples() {
        let psi0 = random_state(3, 9).unwrap();
        let lifted = pancharatnam_lift(&[Ray::new(&psi0)], &psi0).unwrap();
        assert_abs_diff_eq!((inner(&lifted[0], &psi0).unwrap() - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-14);

        let rays: Vec<Ray> = (0..6).map(|k| Ray::new(&random_state(3, 100 + k).unwrap())).collect();
        let mut all = vec![Ray::new(&psi0)];
        all.extend(rays);
        let lifted = pancharatnam_lift(&all, &psi0).unwrap();
        for (r, l) in all.iter().zip(&lifted) {
            let z = inner(&psi0, l).unwrap();
            let f = fidelity(r, &Ray::new(&psi0)).unwrap();
            assert_abs_diff_eq!(z.re, f.sqrt(), epsilon = 1e-12);
            assert!(z.im.abs() < 1e-12);
            assert!(r.same_as(&Ray::new(l), 1e-12));
        }
    }

    #[test]
    fn lift_rejects_orthogonal_ray_and_wrong_fiducial() {
        let e1 = e(3, 0);
        let rays = [Ray::new(&e1), Ray::new(&e(3, 1))];
        assert!(matches!(pancharatnam_lift(&rays, &e1), Err(Error::Orthogonality { j: 1, .. })));
        assert!(matches!(pancharatnam_lift(&rays, &e(3, 2)), Err(Error::Spec(_))));
    }

    #[test]
    fn hermitian_reversal() {
        let mut rng = seeded_rng(44);
        for _ in 0..20 {
            let dim = rng.random_range(2..7);
            let a = random_state(dim, rng.random()).unwrap();
            let b = random_state(dim, rng.random()).unwrap();
            let cc = random_state(dim, rng.random()).unwrap();
            let fwd = delta3(&a, &b, &cc).unwrap().value;
            let bwd = delta3(&cc, &b, &a).unwrap().value;
            assert!((fwd - bwd.conj()).norm() < 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn gauge_invariance(dim in 2usize..7, n in 3usize..7, seed in any::<u64>(), phases in proptest::collection::vec(-7.0f64..7.0, 7)) {
                let psis: Vec<StateVector> = (0..n).map(|k| random_state(dim, seed.wrapping_add(k as u64)).unwrap()).collect();
                let rephased: Vec<StateVector> = psis.iter().zip(&phases).map(|(p, &t)| p.rephase(t)).collect();
                let a = delta_n(&psis).unwrap();
                let b = delta_n(&rephased).unwrap();
                prop_assert!((a.value - b.value).norm() < 1e-12);
                prop_assert!(a.value.norm() <= 1.0 + 1e-12);
            }

            #[test]
            fn cyclic_invariance(dim in 2usize..7, n in 3usize..7, seed in any::<u64>(), shift in 0usize..7) {
                let psis: Vec<StateVector> = (0..n).map(|k| random_state(dim, seed.wrapping_add(k as u64)).unwrap()).collect();
                let mut rotated = psis.clone();
                rotated.rotate_left(shift % n);
                let a = delta_n(&psis).unwrap();
                let b = delta_n(&rotated).unwrap();
                prop_assert!((a.value - b.value).norm() < 1e-12);
            }
        }
    }
}
