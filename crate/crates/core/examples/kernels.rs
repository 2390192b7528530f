//! Evaluates every kernel family and an operator-valued product kernel.

use rkbs::{GaussianKernel, GroupExponent, Interval, OperatorKernel, ScalarKernel, ScalarKernelSpec, TaskCoupling};

fn main() -> rkbs::Result<()> {
    let families = [
        ScalarKernelSpec::t_family(0.5)?,
        ScalarKernelSpec::brownian_bridge(),
        ScalarKernelSpec::wendland(),
        ScalarKernelSpec::exponential(Interval::new(-2.0, 2.0)?),
        ScalarKernelSpec::combination(1.0, 1.0, 0.5)?,
    ];
    let (x, y) = (0.3, 0.7);
    for k in &families {
        println!("{:<16} G({x}, {y}) = {:.6}", k.family_name(), k.eval(x, y)?);
    }
    let g = GaussianKernel::new(0.5, Interval::UNIT)?;
    println!("{:<16} G({x}, {y}) = {:.6}", "gaussian", g.eval(x, y)?);

    let coupling = TaskCoupling::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]])?;
    let k = OperatorKernel::new(ScalarKernelSpec::wendland(), coupling, GroupExponent::TWO);
    println!("K({x}, {y}) = G·A ={:.4}", k.eval(x, y)?);
    Ok(())
}
