//! Group basis pursuit over an enlarged center set. For an admissible kernel
//! the extra centers do not help; for the Gaussian they can.

use rkbs::admissibility::lebesgue_at;
use rkbs::solvers::AdmmSettings;
use rkbs::{
    group_basis_pursuit, min_norm_interpolant, BlockVector, GaussianKernel, GroupExponent, Interval, OperatorKernel,
    ScalarKernel, ScalarKernelSpec, TaskCoupling,
};

fn main() -> rkbs::Result<()> {
    let p = GroupExponent::TWO;
    let sites = [0.2, 0.5, 0.8];
    let extra = [0.1, 0.35, 0.65, 0.9];
    let mut all: Vec<f64> = sites.iter().chain(&extra).copied().collect();
    all.sort_by(f64::total_cmp);
    let y = BlockVector::new(vec![vec![1.0], vec![-0.5], vec![0.7]], 1, p)?;

    let k = OperatorKernel::new(ScalarKernelSpec::t_family(1.0)?, TaskCoupling::identity(1)?, p);
    let exact = min_norm_interpolant(&k, &sites, &y)?;
    let bp = group_basis_pursuit(&k, &all, &sites, &y, &AdmmSettings::default())?;
    println!("t = 1: interpolant {:.6}, pursuit on {} centers {:.6}", exact.norm_lp1, all.len(), bp.norm_lp1);

    // data from G(q, ·) with q outside the sites: one term at q costs 1
    let g = GaussianKernel::new(0.5, Interval::UNIT)?;
    let k = OperatorKernel::new(g, TaskCoupling::identity(1)?, p);
    let centers = [0.05, 0.1, 0.15];
    let q = 0.95;
    let y = BlockVector::new(centers.iter().map(|&c| vec![g.value(q, c)]).collect(), 1, p)?;
    let exact = min_norm_interpolant(&k, &centers, &y)?;
    let mut all = centers.to_vec();
    all.push(q);
    let bp = group_basis_pursuit(&k, &all, &centers, &y, &AdmmSettings::default())?;
    println!(
        "gaussian: Lebesgue {:.3}, interpolant {:.3}, pursuit with q added {:.6}",
        lebesgue_at(&k, &centers, q)?,
        exact.norm_lp1,
        bp.norm_lp1
    );
    Ok(())
}
