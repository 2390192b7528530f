//! Proximal operator of `τ·‖·‖_{p,1}`.

use nalgebra::DMatrix;

use crate::blocklinalg::BlockVector;
use crate::error::Result;
use crate::kernels::GroupExponent;

/// `p = 2`: each block `c ↦ (1 − τ/‖c‖₂)₊·c`. `p = 1`: entrywise soft threshold.
pub fn block_soft_threshold(z: &BlockVector, tau: f64, p: GroupExponent) -> Result<BlockVector> {
    p.require_solver_supported()?;
    let mut out = z.to_matrix();
    shrink_rows(&mut out, tau, p);
    Ok(BlockVector::from_matrix(&out, p))
}

#[inline]
fn soft(v: f64, tau: f64) -> f64 {
    v.signum() * (v.abs() - tau).max(0.0)
}

/// In-place prox on the rows of an `m×n` coefficient matrix. `p` must be 1 or 2.
pub(crate) fn shrink_rows(c: &mut DMatrix<f64>, tau: f64, p: GroupExponent) {
    if tau == 0.0 {
        return;
    }
    if p == GroupExponent::ONE {
        c.apply(|v| *v = soft(*v, tau));
        return;
    }
    for mut row in c.row_iter_mut() {
        let norm = row.norm();
        let factor = if norm > tau { 1.0 - tau / norm } else { 0.0 };
        row *= factor;
    }
}
