//! Non-negative least squares by the Lawson–Hanson active-set method.
//!
//! Works on the normal-equation form `min pᵀGp − 2bᵀp, p ≥ 0`, which is what
//! hull membership produces directly from overlaps.

use nalgebra::{DMatrix, DVector};

/// Minimizes `‖Ap − y‖` over `p ≥ 0`.
pub fn nnls(a: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let g = a.transpose() * a;
    let b = a.transpose() * y;
    nnls_gram(&g, &b)
}

/// Minimizes `pᵀGp − 2bᵀp` over `p ≥ 0` for symmetric positive
/// semi-definite `G`.
pub fn nnls_gram(g: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let k = b.len();
    let scale = b.amax().max(g.amax()).max(1.0);
    let tol = 1e-12 * scale;
    let mut p = DVector::zeros(k);
    let mut passive = vec![false; k];
    let mut w = b - g * &p;
    for _ in 0..3 * k + 10 {
        let candidate = (0..k)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;
        for _ in 0..3 * k + 10 {
            let z = solve_passive(g, b, &passive);
            let blocking = (0..k).filter(|&i| passive[i] && z[i] <= 0.0);
            let mut alpha = f64::INFINITY;
            for i in blocking {
                alpha = alpha.min(p[i] / (p[i] - z[i]));
            }
            if !alpha.is_finite() {
                p = z;
                break;
            }
            p += (z - &p) * alpha;
            for i in 0..k {
                if passive[i] && p[i] <= tol * 1e-3 {
                    passive[i] = false;
                    p[i] = 0.0;
                }
            }
        }
        w = b - g * &p;
    }
    p
}

/// Unconstrained minimizer restricted to the passive set.
fn solve_passive(g: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let idx: Vec<usize> = (0..passive.len()).filter(|&i| passive[i]).collect();
    let m = idx.len();
    let sub = DMatrix::from_fn(m, m, |r, c| g[(idx[r], idx[c])]);
    let rhs = DVector::from_fn(m, |r, _| b[idx[r]]);
    let sol = match sub.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => sub.svd(true, true).solve(&rhs, 1e-13).unwrap_or_else(|_| DVector::zeros(m)),
    };
    let mut z = DVector::zeros(passive.len());
    for (r, &i) in idx.iter().enumerate() {
        z[i] = sol[r];
    }
    z
}
