//! The ray-space two-form evaluated on tangent vectors at a state.

use crate::error::{Error, Result};
use crate::statespace::{horizontal_project, raw_inner, StateVector, TangentVector};

fn same_base(psi: &StateVector, t: &TangentVector) -> bool {
    t.base.dim() == psi.dim()
        && t
            .base
            .amplitudes()
            .iter()
            .zip(psi.amplitudes())
            .all(|(a, b)| (a - b).norm() <= 1e-12)
}

/// `ω(u, v) = 2 Im(u_h, v_h)`, with `u_h`, `v_h` the horizontal parts.
pub fn symplectic_form(psi: &StateVector, u: &TangentVector, v: &TangentVector) -> Result<f64> {
    if !same_base(psi, u) || !same_base(psi, v) {
        return Err(Error::Base);
    }
    let uh = horizontal_project(psi, &u.direction)?;
    let vh = horizontal_project(psi, &v.direction)?;
    Ok(2.0 * raw_inner(&uh.direction, &vh.direction).im)
}
