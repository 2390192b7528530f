//! Numeric admissibility certificates for an admissible kernel, a negative-t
//! kernel and the Gaussian.

use rkbs::{
    certify, CertificationConfig, GaussianKernel, GroupExponent, Interval, OperatorKernel, ScalarKernel,
    ScalarKernelSpec, TaskCoupling,
};

fn report<G: ScalarKernel>(name: &str, scalar: G, cfg: &CertificationConfig) -> rkbs::Result<()> {
    let k = OperatorKernel::new(scalar, TaskCoupling::identity(2)?, GroupExponent::TWO);
    let r = certify(&k, cfg)?;
    println!(
        "{name:<14} kappa {:.4}  worst Lebesgue {:.6} at q = {:.4}  admissible: {}",
        r.a2.kappa, r.a4.worst, r.a4.query, r.verdict.admissible
    );
    Ok(())
}

fn main() -> rkbs::Result<()> {
    let cfg = CertificationConfig { trials: 50, ..Default::default() };
    report("t = 1", ScalarKernelSpec::t_family(1.0)?, &cfg)?;
    report("wendland", ScalarKernelSpec::wendland(), &cfg)?;
    report("t = -0.5", ScalarKernelSpec::t_family(-0.5)?, &cfg)?;
    report("gaussian 0.5", GaussianKernel::new(0.5, Interval::UNIT)?, &cfg)?;
    Ok(())
}
