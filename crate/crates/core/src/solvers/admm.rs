//! ADMM for the two non-smooth problems:
//!
//! * group basis pursuit, `min ‖C‖_{p,1}` subject to `(S ⊗ A)·C = Y`, where
//!   `S` holds the kernel rows of the constraint points against an enlarged
//!   center set, split as an affine projection plus a block shrink;
//! * loss + `λ‖C‖_{p,1}` on the training sites, split through the residual
//!   `r = E·C − Y` so the loss enters only through its prox.
//!
//! Both use scaled duals and residual balancing on `ρ`.

use nalgebra::DMatrix;

use super::prox::shrink_rows;
use super::{check_targets, objective, FitMeta, FitModel, KronOperator, Loss, NormalSolver};
use crate::blocklinalg::{scalar_gram, BlockVector, ScalarFactor};
use crate::error::{Error, Residuals, Result};
use crate::kernels::{check_centers, OperatorKernel, ScalarKernel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmSettings {
    /// Initial augmented-Lagrangian parameter.
    pub rho: f64,
    /// Primal and dual residuals (max-abs) must both fall to this level.
    pub tol: f64,
    pub max_iters: usize,
    /// Rebalance `ρ` when one residual exceeds the other by this factor.
    pub balance_ratio: f64,
}

impl Default for AdmmSettings {
    fn default() -> Self {
        AdmmSettings { rho: 1.0, tol: 1e-9, max_iters: 200_000, balance_ratio: 10.0 }
    }
}

impl AdmmSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.tol > 0.0 && self.balance_ratio > 1.0) || self.max_iters == 0 {
            return Err(Error::Config(format!("invalid ADMM settings {self:?}")));
        }
        Ok(())
    }
}

/// Returns the new `ρ` and the factor to multiply scaled duals by.
/// Residual balancing is checked every this many iterations, and `ρ` is frozen
/// after `MAX_REBALANCES` changes so the fixed-`ρ` convergence theory applies.
const REBALANCE_EVERY: usize = 25;
const MAX_REBALANCES: usize = 40;

fn rebalance(iter: usize, changes: &mut usize, rho: f64, primal: f64, dual: f64, ratio: f64) -> (f64, f64) {
    if !iter.is_multiple_of(REBALANCE_EVERY) || *changes >= MAX_REBALANCES {
        return (rho, 1.0);
    }
    let out = rebalance_step(rho, primal, dual, ratio);
    if out.1 != 1.0 {
        *changes += 1;
    }
    out
}

fn rebalance_step(rho: f64, primal: f64, dual: f64, ratio: f64) -> (f64, f64) {
    if primal > ratio * dual {
        (rho * 2.0, 0.5)
    } else if dual > ratio * primal {
        (rho * 0.5, 2.0)
    } else {
        (rho, 1.0)
    }
}

/// Numerical rank from singular values, relative threshold `1e-12`.
fn rank(matrix: &DMatrix<f64>) -> usize {
    let sv = matrix.clone().singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > 1e-12 * top).count()
}

/// Minimizes `‖C‖_{p,1}` over expansions on `centers` that interpolate `Y` at
/// `constraints_x` (each of which must be one of the centers). The returned
/// coefficients are projected onto the constraint set, so the model is
/// feasible to linear-solve accuracy and its norm is an upper bound on the
/// optimum that is tight to within the residual tolerance.
pub fn group_basis_pursuit<G: ScalarKernel + Clone>(
    kernel: &OperatorKernel<G>,
    centers: &[f64],
    constraints_x: &[f64],
    y: &BlockVector,
    settings: &AdmmSettings,
) -> Result<FitModel<G>> {
    settings.validate()?;
    kernel.p.require_solver_supported()?;
    check_centers(&kernel.scalar, centers)?;
    check_centers(&kernel.scalar, constraints_x)?;
    check_targets(constraints_x.len(), kernel.n(), y)?;
    if let Some(x) = constraints_x.iter().find(|x| !centers.contains(x)) {
        return Err(Error::Config(format!("constraint point {x} is not among the centers")));
    }
    let p = kernel.p;
    let rows = DMatrix::from_fn(constraints_x.len(), centers.len(), |i, j| {
        kernel.scalar.value(constraints_x[i], centers[j])
    });
    let row_gram = &rows * rows.transpose();
    let row_factor = match ScalarFactor::new(&row_gram) {
        Ok(f) if rank(&rows) == rows.nrows() => f,
        _ => return Err(Error::Rank { rank: rank(&rows), rows: rows.nrows() }),
    };
    let a = kernel.coupling.matrix();
    let a_inv = kernel.coupling.inverse();
    let target = y.to_matrix();
    // X ↦ X − Sᵀ(SSᵀ)⁻¹(S·X·A − Y)·A⁻¹, the Frobenius projection onto S·X·A = Y
    let project = |v: &DMatrix<f64>| -> DMatrix<f64> {
        let defect = &rows * v * a - &target;
        v - rows.transpose() * row_factor.solve(&defect) * a_inv
    };

    let (m, n) = (centers.len(), kernel.n());
    let mut z = DMatrix::zeros(m, n);
    let mut u = DMatrix::zeros(m, n);
    let mut rho = settings.rho;
    let mut rebalances = 0;
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    for iter in 1..=settings.max_iters {
        let x = project(&(&z - &u));
        let z_old = std::mem::replace(&mut z, &x + &u);
        shrink_rows(&mut z, 1.0 / rho, p);
        u += &x - &z;
        primal = (&x - &z).amax();
        dual = rho * (&z - &z_old).amax();
        if primal <= settings.tol && dual <= settings.tol {
            let coeffs = project(&z);
            let meta = FitMeta {
                solver: "admm_basis_pursuit".into(),
                iterations: iter,
                primal_residual: Some(primal),
                dual_residual: Some(dual),
                objective: Some(super::penalty(&coeffs, p)),
                ..FitMeta::default()
            };
            return FitModel::new(kernel.clone(), centers.to_vec(), BlockVector::from_matrix(&coeffs, p), meta);
        }
        let (next, scale) = rebalance(iter, &mut rebalances, rho, primal, dual, settings.balance_ratio);
        if scale != 1.0 {
            rho = next;
            u *= scale;
        }
    }
    Err(Error::Nonconvergence {
        solver: "admm_basis_pursuit",
        residuals: Residuals { iterations: settings.max_iters, primal, dual },
    })
}

/// Minimizes `loss(E·C − Y) + λ‖C‖_{p,1}` with `E = G[x] ⊗ A` by ADMM on
/// the constraints `E·C − r = Y`, `C − z = 0`.
pub fn admm_regularized<G: ScalarKernel + Clone>(
    kernel: &OperatorKernel<G>,
    x: &[f64],
    y: &BlockVector,
    lambda: f64,
    loss: Loss,
    settings: &AdmmSettings,
) -> Result<FitModel<G>> {
    settings.validate()?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Config(format!("lambda must be positive, got {lambda}")));
    }
    kernel.p.require_solver_supported()?;
    check_centers(&kernel.scalar, x)?;
    check_targets(x.len(), kernel.n(), y)?;
    let p = kernel.p;
    let op = KronOperator::new(scalar_gram(&kernel.scalar, x), kernel.coupling.matrix().clone());
    let normal = NormalSolver::new(&op);
    let target = y.to_matrix();

    let (m, n) = (x.len(), kernel.n());
    let mut c;
    let mut r = DMatrix::zeros(m, n);
    let mut z = DMatrix::zeros(m, n);
    let mut u = DMatrix::zeros(m, n);
    let mut w = DMatrix::zeros(m, n);
    let mut rho = settings.rho;
    let mut rebalances = 0;
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    for iter in 1..=settings.max_iters {
        // (EᵀE + I)·C = Eᵀ(r + Y − u) + (z − w); independent of ρ
        let rhs = op.adjoint(&(&r + &target - &u)) + (&z - &w);
        c = normal.solve(&rhs, 1.0);
        let ec = op.apply(&c);

        let r_old = r.clone();
        let v = &ec - &target + &u;
        r = match loss {
            Loss::Squared => v * (rho / (1.0 + rho)),
            Loss::Absolute => v.map(|e| e.signum() * (e.abs() - 1.0 / rho).max(0.0)),
        };
        let z_old = std::mem::replace(&mut z, &c + &w);
        shrink_rows(&mut z, lambda / rho, p);

        let fit_gap = &ec - &r - &target;
        let split_gap = &c - &z;
        u += &fit_gap;
        w += &split_gap;

        primal = fit_gap.amax().max(split_gap.amax());
        dual = rho * (op.adjoint(&(&r - &r_old)) + (&z - &z_old)).amax();
        if primal <= settings.tol && dual <= settings.tol {
            let value = objective(&op, &target, &z, lambda, loss, p);
            let meta = FitMeta {
                solver: "admm".into(),
                iterations: iter,
                primal_residual: Some(primal),
                dual_residual: Some(dual),
                objective: Some(value),
                lambda: Some(lambda),
                loss: Some(loss),
                ..FitMeta::default()
            };
            return FitModel::new(kernel.clone(), x.to_vec(), BlockVector::from_matrix(&z, p), meta);
        }
        let (next, scale) = rebalance(iter, &mut rebalances, rho, primal, dual, settings.balance_ratio);
        if scale != 1.0 {
            rho = next;
            u *= scale;
            w *= scale;
        }
    }
    Err(Error::Nonconvergence {
        solver: "admm",
        residuals: Residuals { iterations: settings.max_iters, primal, dual },
    })
}
