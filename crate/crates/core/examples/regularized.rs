//! Group-lasso regularized fits along a λ path with FISTA, and an ADMM
//! cross-check at one λ.

use rkbs::solvers::{admm_regularized, AdmmSettings};
use rkbs::{fit_regularized, BlockVector, GroupExponent, LearnConfig, Loss, OperatorKernel, ScalarKernelSpec, TaskCoupling};

fn main() -> rkbs::Result<()> {
    let p = GroupExponent::ONE;
    let k = OperatorKernel::new(ScalarKernelSpec::combination(0.5, 1.0, 1.0)?, TaskCoupling::identity(3)?, p);
    let x: Vec<f64> = (1..=12).map(|i| i as f64 / 13.0).collect();
    let y: Vec<Vec<f64>> = x.iter().map(|&t| vec![t.sin(), (3.0 * t).cos(), t - 0.5]).collect();
    let y = BlockVector::new(y, 3, p)?;
    println!("{:>8} {:>10} {:>12} {:>7}", "lambda", "norm", "objective", "nonzero");
    for lambda in [1e-4, 1e-3, 1e-2, 1e-1, 1.0] {
        let m = fit_regularized(&k, &x, &y, &LearnConfig::new(lambda))?;
        let nonzero = m.coeffs.blocks().filter(|b| b.iter().any(|v| *v != 0.0)).count();
        println!("{lambda:>8.0e} {:>10.5} {:>12.8} {nonzero:>7}", m.norm_lp1, m.meta.objective.unwrap_or(f64::NAN));
    }
    let lambda = 1e-2;
    let f = fit_regularized(&k, &x, &y, &LearnConfig::new(lambda))?;
    let a = admm_regularized(&k, &x, &y, lambda, Loss::Squared, &AdmmSettings::default())?;
    println!("λ = {lambda}: FISTA {:.10} vs ADMM {:.10}", f.meta.objective.unwrap(), a.meta.objective.unwrap());
    Ok(())
}
