//! FISTA for the squared-loss group lasso over kernel expansions.

use nalgebra::DMatrix;

use super::prox::shrink_rows;
use super::{check_targets, objective, FitMeta, FitModel, KronOperator, LearnConfig, Loss};
use crate::blocklinalg::{scalar_gram, BlockVector};
use crate::error::{Error, Residuals, Result};
use crate::kernels::{check_centers, OperatorKernel, ScalarKernel};

const POWER_ITERATIONS: usize = 100;
// the Rayleigh quotient approaches λ_max from below
const LIPSCHITZ_MARGIN: f64 = 1.01;
// iterations over which the relative objective decrease is measured
const STALL_WINDOW: usize = 100;

/// Minimizes `½‖(G[x] ⊗ A)·C − Y‖² + λ‖C‖_{p,1}` from `C = 0`.
///
/// Stops once the objective has moved by at most `cfg.tol` (relative) over
/// the last 100 accepted iterations. With `cfg.restart`, an iteration that
/// raises the objective is discarded and the momentum reset, so the recorded
/// objective never increases; an increase right after a restart can only be
/// rounding and ends the run.
pub fn fista_squared<G: ScalarKernel + Clone>(
    kernel: &OperatorKernel<G>,
    x: &[f64],
    y: &BlockVector,
    cfg: &LearnConfig,
) -> Result<FitModel<G>> {
    cfg.validate()?;
    kernel.p.require_solver_supported()?;
    check_centers(&kernel.scalar, x)?;
    check_targets(x.len(), kernel.n(), y)?;
    let p = kernel.p;
    let op = KronOperator::new(scalar_gram(&kernel.scalar, x), kernel.coupling.matrix().clone());
    let target = y.to_matrix();
    let lipschitz = op.lipschitz(POWER_ITERATIONS) * LIPSCHITZ_MARGIN;
    if !(lipschitz > 0.0) {
        return Err(Error::Singular("kernel operator vanishes on the training sites".into()));
    }
    let step = 1.0 / lipschitz;
    let tau = cfg.lambda * step;
    let f = |c: &DMatrix<f64>| objective(&op, &target, c, cfg.lambda, Loss::Squared, p);

    let mut current = DMatrix::zeros(x.len(), kernel.n());
    let mut extrapolated = current.clone();
    let mut theta = 1.0f64;
    let mut value = f(&current);
    let mut trace = vec![value];
    let mut restarts = 0usize;
    let mut just_restarted = false;
    let mut last_change = f64::INFINITY;
    let mut mapping_norm = f64::INFINITY;
    let mut stopped_at = None;

    for iter in 1..=cfg.max_iters {
        let grad = op.adjoint(&(op.apply(&extrapolated) - &target));
        let mut next = &extrapolated - grad * step;
        shrink_rows(&mut next, tau, p);
        let next_value = f(&next);

        if cfg.restart && next_value > value {
            // a plain proximal step cannot raise the objective except by rounding
            if just_restarted {
                stopped_at = Some(iter);
                break;
            }
            extrapolated.copy_from(&current);
            theta = 1.0;
            restarts += 1;
            just_restarted = true;
            continue;
        }
        just_restarted = false;

        mapping_norm = (&next - &extrapolated).amax() * lipschitz;
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        extrapolated = &next + (&next - &current) * ((theta - 1.0) / theta_next);
        theta = theta_next;
        last_change = value - next_value;
        let reference = trace[trace.len().saturating_sub(STALL_WINDOW)];
        let converged = (reference - next_value).abs() <= cfg.tol * next_value.abs() || next == current;
        current = next;
        value = next_value;
        trace.push(value);
        if converged {
            stopped_at = Some(iter);
            break;
        }
    }

    let Some(iterations) = stopped_at else {
        return Err(Error::Nonconvergence {
            solver: "fista",
            residuals: Residuals { iterations: cfg.max_iters, primal: last_change, dual: mapping_norm },
        });
    };
    let meta = FitMeta {
        solver: "fista".into(),
        iterations,
        primal_residual: Some(last_change),
        dual_residual: Some(mapping_norm),
        objective: Some(value),
        lambda: Some(cfg.lambda),
        loss: Some(Loss::Squared),
        restarts: Some(restarts),
        objective_trace: trace,
        ..FitMeta::default()
    };
    FitModel::new(kernel.clone(), x.to_vec(), BlockVector::from_matrix(&current, p), meta)
}
