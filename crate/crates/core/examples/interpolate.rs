//! Minimal-norm interpolation of two tasks with a coupled kernel.

use rkbs::{min_norm_interpolant, BlockVector, GroupExponent, OperatorKernel, ScalarKernelSpec, TaskCoupling};

fn main() -> rkbs::Result<()> {
    let p = GroupExponent::TWO;
    let coupling = TaskCoupling::from_rows(&[vec![1.0, 0.3], vec![0.3, 1.0]])?;
    let k = OperatorKernel::new(ScalarKernelSpec::t_family(1.0)?, coupling, p);
    let x = [0.1, 0.3, 0.5, 0.7, 0.9];
    let y: Vec<Vec<f64>> = x.iter().map(|&t: &f64| vec![(6.0 * t).sin(), t * t]).collect();
    let model = min_norm_interpolant(&k, &x, &BlockVector::new(y, 2, p)?)?;
    println!("‖C‖_(2,1) = {:.6}", model.norm_lp1);
    for q in [0.2, 0.4, 0.6, 0.8] {
        let f = model.predict(q)?;
        println!("f({q}) = [{:.5}, {:.5}]", f[0], f[1]);
    }
    Ok(())
}
