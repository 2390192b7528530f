//! Seeded Lebesgue-constant scans across the t family, and a profile of
//! Λ(q) for a fixed center set.

use rkbs::admissibility::lebesgue_profile;
use rkbs::{lebesgue_scan, CertificationConfig, GroupExponent, OperatorKernel, ScalarKernelSpec, TaskCoupling};

fn main() -> rkbs::Result<()> {
    let cfg = CertificationConfig { trials: 50, seed: 42, ..Default::default() };
    for t in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let k = OperatorKernel::new(ScalarKernelSpec::t_family(t)?, TaskCoupling::identity(1)?, GroupExponent::TWO);
        let scan = lebesgue_scan(&k, &cfg)?;
        println!("t = {t:>4}: sup Λ = {:.6} over {} center sets", scan.worst.worst, scan.center_sets);
    }
    let k = OperatorKernel::new(ScalarKernelSpec::t_family(-1.0)?, TaskCoupling::identity(1)?, GroupExponent::TWO);
    for (q, v) in lebesgue_profile(&k, &[0.2, 0.5], 9)? {
        println!("Λ({q:.1}) = {v:.4}");
    }
    Ok(())
}
