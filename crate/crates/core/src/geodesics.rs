//! Shortest Fubini–Study geodesics from their closed-form lift, and geodesic
//! polygons whose geometric phase is fixed by the Bargmann invariant of
//! their vertices.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bargmann::delta_n;
use crate::curves::{concat_all, geometric_phase, SampledCurve};
use crate::error::{Error, Result};
use crate::statespace::{angle_gap, HilbertPoint, Ray, StateVector};
use crate::tolerance::{ORTHO_EPS, TOL_FID};

/// In-phase endpoint lifts of a geodesic and its arc length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicSpec {
    pub psi1: StateVector,
    pub psi2: StateVector,
    /// `arccos (ψ₁, ψ₂)`, in (0, π/2).
    pub s_star: f64,
    pub mesh: usize,
}

impl GeodesicSpec {
    /// `ψ₁` is the gauge-fixed representative of `r1`; `ψ₂` is the
    /// representative of `r2` rephased so that `(ψ₁, ψ₂) > 0`.
    pub fn between(r1: &Ray, r2: &Ray, mesh: usize) -> Result<Self> {
        if r1.dim() != r2.dim() {
            return Err(Error::Dimension { expected: r1.dim(), found: r2.dim() });
        }
        if mesh < 2 {
            return Err(Error::Mesh(format!("geodesic mesh must be at least 2, got {mesh}")));
        }
        let psi1 = r1.representative().clone();
        let overlap = psi1.dot(r2.representative());
        if overlap.norm() <= ORTHO_EPS {
            return Err(Error::Orthogonality { i: 0, j: 1, modulus: overlap.norm() });
        }
        if 1.0 - overlap.norm_sqr() <= TOL_FID {
            return Err(Error::Degenerate("geodesic endpoints are the same ray".into()));
        }
        let psi2 = r2.representative().in_phase_with(&psi1);
        let c = psi1.dot(&psi2).re.min(1.0);
        Ok(Self { psi1, psi2, s_star: c.acos(), mesh })
    }

    /// The lift `ψ(s) = ψ₁ cos s + (ψ₂ − ψ₁ c)/√(1 − c²) sin s`, written with
    /// the non-negative weights `sin(s* − s)/sin s*` and `sin s / sin s*`.
    pub fn point(&self, s: f64) -> StateVector {
        let denom = self.s_star.sin();
        let a = (self.s_star - s).sin() / denom;
        let b = s.sin() / denom;
        let amps: Vec<C64> = self
            .psi1
            .amplitudes()
            .iter()
            .zip(self.psi2.amplitudes())
            .map(|(x, y)| x * a + y * b)
            .collect();
        StateVector::from_normalized_unchecked(renormalize(amps))
    }

    pub fn sample(&self) -> Result<SampledCurve> {
        SampledCurve::uniform(0.0, self.s_star, self.mesh, |s| Ok(self.point(s)))
    }
}

fn renormalize(mut v: Vec<C64>) -> Vec<C64> {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= n);
    v
}

/// Point at `fraction ∈ [0, 1]` of the arc length along the geodesic from
/// `a` to the ray of `b`, for any point type. The result is in phase with `a`.
pub fn geodesic_point<P: HilbertPoint>(a: &P, b: &P, fraction: f64) -> Result<P> {
    let c = a.inner_with(b);
    let m = c.norm();
    if m <= ORTHO_EPS {
        return Err(Error::Orthogonality { i: 0, j: 1, modulus: m });
    }
    if 1.0 - m * m <= f64::EPSILON {
        return Ok(a.clone());
    }
    let s_star = m.min(1.0).acos();
    let s = fraction * s_star;
    let denom = s_star.sin();
    let z = c.conj() / m;
    P::superpose(&[
        (C64::new((s_star - s).sin() / denom, 0.0), a),
        (z * (s.sin() / denom), b),
    ])
}

/// The shortest geodesic from `r1` to `r2`, sampled uniformly in arc length.
pub fn geodesic(r1: &Ray, r2: &Ray, mesh: usize) -> Result<SampledCurve> {
    GeodesicSpec::between(r1, r2, mesh)?.sample()
}

/// Closed polygon of geodesic sides through `vertices` (and back to the
/// first). Sides between coincident rays are skipped.
pub fn geodesic_polygon(vertices: &[Ray], mesh: usize) -> Result<SampledCurve> {
    let n = vertices.len();
    let mut sides = Vec::with_capacity(n);
    for k in 0..n {
        let (a, b) = (&vertices[k], &vertices[(k + 1) % n]);
        if a.same_as(b, TOL_FID) {
            continue;
        }
        sides.push(geodesic(a, b, mesh)?);
    }
    if sides.is_empty() {
        let v = vertices
            .first()
            .ok_or_else(|| Error::Spec("polygon without vertices".into()))?
            .representative()
            .clone();
        return SampledCurve::new(vec![0.0, 1.0], vec![v.clone(), v]);
    }
    Ok(concat_all(&sides)?.0)
}

/// Geometric phase of the geodesic triangle with the given vertices.
pub fn geodesic_triangle_phase(r1: &Ray, r2: &Ray, r3: &Ray, mesh: usize) -> Result<f64> {
    let triangle = geodesic_polygon(&[r1.clone(), r2.clone(), r3.clone()], mesh)?;
    Ok(geometric_phase(&triangle)?.geometric)
}

/// `|φ_g[geodesic n-gon] + arg Δₙ(ψ₁, …, ψₙ)|` reduced mod 2π.
pub fn bi_connection_residual(psis: &[StateVector], mesh: usize) -> Result<f64> {
    let bargmann = delta_n(psis)?;
    let rays: Vec<Ray> = psis.iter().map(Ray::new).collect();
    let polygon = geodesic_polygon(&rays, mesh)?;
    let phase = geometric_phase(&polygon)?.geometric;
    Ok(angle_gap(phase, -bargmann.arg()))
}
