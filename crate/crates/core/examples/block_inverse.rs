//! 2×2 block inversion through the Schur complement.

use nalgebra::DMatrix;
use rkbs::block_inverse_2x2;

fn main() -> rkbs::Result<()> {
    let m = DMatrix::from_row_slice(5, 5, &[
        4.0, 1.0, 0.5, 0.0, 0.2,
        1.0, 3.0, 0.0, 0.3, 0.0,
        0.2, 0.0, 5.0, 1.0, 0.1,
        0.0, 0.4, 1.0, 4.0, 0.6,
        0.3, 0.0, 0.2, 0.5, 2.0,
    ]);
    let k = 2;
    let inv = block_inverse_2x2(
        &m.view((0, 0), (k, k)).into_owned(),
        &m.view((0, k), (k, 3)).into_owned(),
        &m.view((k, 0), (3, k)).into_owned(),
        &m.view((k, k), (3, 3)).into_owned(),
    )?;
    let full = inv.assemble();
    println!("inverse:{full:.6}");
    println!("max |M⁻¹M − I| = {:e}", (&full * &m - DMatrix::identity(5, 5)).amax());
    Ok(())
}
