//! Block vectors in `B_p^m`, their `‖·‖_{p,1}` norms, and Gram systems kept
//! in Kronecker-factored form `G ⊗ A`.
//!
//! A block vector with `m` blocks of dimension `n` is stored as an `m×n`
//! row-major array, so the operator matrix `[G_ij·A]` acts on it as
//! `C ↦ G·C·A` (A is symmetric). The dense `(mn)×(mn)` matrix is never formed.

use nalgebra::{Cholesky, DMatrix, Dyn, LU};

use crate::error::{Error, Result};
use crate::kernels::{check_centers, GroupExponent, OperatorKernel, ScalarKernel, TaskCoupling};

/// Relative pivot threshold below which a Gram matrix is declared singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// `m` coefficient blocks of dimension `n` with group exponent `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    m: usize,
    n: usize,
    values: Vec<f64>,
    pub p: GroupExponent,
}

impl BlockVector {
    pub fn new(blocks: Vec<Vec<f64>>, n: usize, p: GroupExponent) -> Result<Self> {
        if let Some((i, b)) = blocks.iter().enumerate().find(|(_, b)| b.len() != n) {
            return Err(Error::Shape(format!("block {i} has dimension {}, expected {n}", b.len())));
        }
        let m = blocks.len();
        Ok(BlockVector { m, n, values: blocks.concat(), p })
    }

    pub fn zeros(m: usize, n: usize, p: GroupExponent) -> Self {
        BlockVector { m, n, values: vec![0.0; m * n], p }
    }

    /// Row `i` of `matrix` becomes block `i`.
    pub fn from_matrix(matrix: &DMatrix<f64>, p: GroupExponent) -> Self {
        let (m, n) = matrix.shape();
        let mut values = Vec::with_capacity(m * n);
        for i in 0..m {
            values.extend(matrix.row(i).iter());
        }
        BlockVector { m, n, values, p }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.m, self.n, &self.values)
    }

    /// Number of blocks.
    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// Block dimension.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> + '_ {
        // chunks_exact(0) panics, and n = 0 blocks carry no data anyway
        (0..self.m).map(move |i| self.block(i))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.blocks().map(<[f64]>::to_vec).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn lp1_norm(&self) -> f64 {
        self.blocks().map(|b| self.p.norm(b)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn with_exponent(mut self, p: GroupExponent) -> Self {
        self.p = p;
        self
    }
}

/// `Σ_i ‖c_i‖_p`.
pub fn lp1_norm(c: &BlockVector) -> f64 {
    c.lp1_norm()
}

#[derive(Debug, Clone)]
enum Factor {
    Cholesky(Cholesky<f64, Dyn>),
    Lu(LU<f64, Dyn, Dyn>),
}

/// Factorization of a square scalar matrix with the pivot-based singularity
/// rule: Cholesky first, then partially pivoted LU, rejecting pivots below
/// `PIVOT_TOLERANCE · max|M|`.
#[derive(Debug, Clone)]
pub struct ScalarFactor {
    factor: Factor,
}

impl ScalarFactor {
    pub fn new(matrix: &DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Shape(format!("matrix is {}x{}, not square", matrix.nrows(), matrix.ncols())));
        }
        if matrix.nrows() == 0 {
            return Err(Error::Shape("empty matrix".into()));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("matrix has non-finite entries".into()));
        }
        let floor = PIVOT_TOLERANCE * matrix.amax();
        if floor == 0.0 {
            return Err(Error::Singular("zero matrix".into()));
        }
        let symmetric = (matrix - matrix.transpose()).amax() <= 1e-14 * matrix.amax();
        if let Some(chol) = symmetric.then(|| matrix.clone().cholesky()).flatten() {
            if chol.l_dirty().diagonal().iter().all(|l| l * l >= floor) {
                return Ok(ScalarFactor { factor: Factor::Cholesky(chol) });
            }
        }
        let lu = matrix.clone().lu();
        let smallest = lu.u().diagonal().iter().fold(f64::INFINITY, |m, u| m.min(u.abs()));
        if smallest < floor {
            return Err(Error::Singular(format!(
                "pivot {smallest:.3e} below {floor:.3e}"
            )));
        }
        Ok(ScalarFactor { factor: Factor::Lu(lu) })
    }

    pub fn is_cholesky(&self) -> bool {
        matches!(self.factor, Factor::Cholesky(_))
    }

    pub fn solve(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.factor {
            Factor::Cholesky(c) => c.solve(rhs),
            // pivots were checked at construction, so the solve cannot fail
            Factor::Lu(lu) => lu.solve(rhs).expect("LU solve after pivot check"),
        }
    }

    pub fn determinant(&self) -> f64 {
        match &self.factor {
            Factor::Cholesky(c) => c.determinant(),
            Factor::Lu(lu) => lu.determinant(),
        }
    }
}

/// `K[x] = G[x] ⊗ A` with `G[x]` factored once at assembly.
#[derive(Debug, Clone)]
pub struct GramSystem {
    centers: Vec<f64>,
    gram: DMatrix<f64>,
    coupling: TaskCoupling,
    factor: ScalarFactor,
}

impl GramSystem {
    /// Builds the scalar Gram `G[i][j] = G(x_i, x_j)` and factors it.
    pub fn assemble<G: ScalarKernel>(kernel: &OperatorKernel<G>, centers: &[f64]) -> Result<Self> {
        check_centers(&kernel.scalar, centers)?;
        let gram = scalar_gram(&kernel.scalar, centers);
        Self::from_parts(centers.to_vec(), gram, kernel.coupling.clone())
    }

    pub fn from_parts(centers: Vec<f64>, gram: DMatrix<f64>, coupling: TaskCoupling) -> Result<Self> {
        if gram.nrows() != centers.len() {
            return Err(Error::Shape("gram size does not match center count".into()));
        }
        let factor = ScalarFactor::new(&gram)?;
        Ok(GramSystem { centers, gram, coupling, factor })
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn coupling(&self) -> &TaskCoupling {
        &self.coupling
    }

    pub fn factor(&self) -> &ScalarFactor {
        &self.factor
    }

    /// Number of centers.
    pub fn m(&self) -> usize {
        self.gram.nrows()
    }

    pub fn n(&self) -> usize {
        self.coupling.n()
    }

    pub fn is_cholesky(&self) -> bool {
        self.factor.is_cholesky()
    }

    /// Solves `G·b = rhs` for scalar right-hand sides.
    pub fn solve_scalar(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        self.factor.solve(rhs)
    }

    fn check_shape(&self, y: &BlockVector) -> Result<()> {
        if y.len() != self.m() || y.dim() != self.n() {
            return Err(Error::Shape(format!(
                "expected {} blocks of dimension {}, got {} of dimension {}",
                self.m(),
                self.n(),
                y.len(),
                y.dim()
            )));
        }
        Ok(())
    }

    /// `C` with `(G ⊗ A)·C = Y`, i.e. `C = G⁻¹·Y·A⁻¹`.
    pub fn solve(&self, y: &BlockVector) -> Result<BlockVector> {
        self.check_shape(y)?;
        let c = self.factor.solve(&y.to_matrix()) * self.coupling.inverse();
        Ok(BlockVector::from_matrix(&c, y.p))
    }

    /// `(G ⊗ A)·C`.
    pub fn apply(&self, c: &BlockVector) -> Result<BlockVector> {
        self.check_shape(c)?;
        let y = &self.gram * c.to_matrix() * self.coupling.matrix();
        Ok(BlockVector::from_matrix(&y, c.p))
    }

    /// Determinant of the scalar factor `G[x]`.
    pub fn scalar_determinant(&self) -> f64 {
        self.factor.determinant()
    }

    /// 2-norm condition number of `G ⊗ A`, which is `cond(G)·cond(A)`.
    pub fn condition_number(&self) -> f64 {
        let ev = self.gram.clone().symmetric_eigenvalues();
        let (lo, hi) = ev.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
            (lo.min(v.abs()), hi.max(v.abs()))
        });
        hi / lo * self.coupling.condition_number()
    }
}

/// Scalar Gram matrix, no validation.
pub fn scalar_gram<G: ScalarKernel + ?Sized>(kernel: &G, centers: &[f64]) -> DMatrix<f64> {
    let m = centers.len();
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let v = kernel.value(centers[i], centers[j]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

pub fn gram_assemble<G: ScalarKernel>(kernel: &OperatorKernel<G>, centers: &[f64]) -> Result<GramSystem> {
    GramSystem::assemble(kernel, centers)
}

pub fn gram_solve(system: &GramSystem, y: &BlockVector) -> Result<BlockVector> {
    system.solve(y)
}

/// The four blocks of the inverse of `[[A, B], [C, D]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockInverse {
    pub top_left: DMatrix<f64>,
    pub top_right: DMatrix<f64>,
    pub bottom_left: DMatrix<f64>,
    pub bottom_right: DMatrix<f64>,
}

impl BlockInverse {
    pub fn assemble(&self) -> DMatrix<f64> {
        let k = self.top_left.nrows();
        let l = self.bottom_right.nrows();
        let mut out = DMatrix::zeros(k + l, k + l);
        out.view_mut((0, 0), (k, k)).copy_from(&self.top_left);
        out.view_mut((0, k), (k, l)).copy_from(&self.top_right);
        out.view_mut((k, 0), (l, k)).copy_from(&self.bottom_left);
        out.view_mut((k, k), (l, l)).copy_from(&self.bottom_right);
        out
    }
}

/// Inverts `[[A, B], [C, D]]` through the Schur complement
/// `M = (D − C·A⁻¹·B)⁻¹`:
///
/// ```text
/// [ A⁻¹ + A⁻¹·B·M·C·A⁻¹   −A⁻¹·B·M ]
/// [ −M·C·A⁻¹                  M     ]
/// ```
pub fn block_inverse_2x2(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
) -> Result<BlockInverse> {
    let k = a.nrows();
    let l = d.nrows();
    if !a.is_square() || !d.is_square() || b.shape() != (k, l) || c.shape() != (l, k) {
        return Err(Error::Shape(format!(
            "incompatible blocks A {:?}, B {:?}, C {:?}, D {:?}",
            a.shape(),
            b.shape(),
            c.shape(),
            d.shape()
        )));
    }
    let a_fac = ScalarFactor::new(a).map_err(|e| match e {
        Error::Singular(msg) => Error::Singular(format!("top-left block: {msg}")),
        other => other,
    })?;
    let a_inv_b = a_fac.solve(b);
    let a_inv = a_fac.solve(&DMatrix::identity(k, k));
    let c_a_inv = c * &a_inv;
    let schur = d - c * &a_inv_b;
    let s_fac = ScalarFactor::new(&schur).map_err(|e| match e {
        Error::Singular(msg) => Error::Singular(format!("Schur complement: {msg}")),
        other => other,
    })?;
    let m = s_fac.solve(&DMatrix::identity(l, l));
    let a_inv_b_m = &a_inv_b * &m;
    let raw = BlockInverse {
        top_left: a_inv + &a_inv_b_m * &c_a_inv,
        top_right: -a_inv_b_m,
        bottom_left: -(&m * &c_a_inv),
        bottom_right: m,
    };
    // one refinement step X + (I − X·M)·X; the residual needs extra precision
    // or it is lost in the rounding of X·M itself
    let original = BlockInverse { top_left: a.clone(), top_right: b.clone(), bottom_left: c.clone(), bottom_right: d.clone() }
        .assemble();
    let x = raw.assemble();
    let refined = &x + exact_residual(&x, &original) * &x;
    Ok(BlockInverse {
        top_left: refined.view((0, 0), (k, k)).into_owned(),
        top_right: refined.view((0, k), (k, l)).into_owned(),
        bottom_left: refined.view((k, 0), (l, k)).into_owned(),
        bottom_right: refined.view((k, k), (l, l)).into_owned(),
    })
}

/// `I − X·M` with compensated dot products.
fn exact_residual(x: &DMatrix<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        let mut sum = if i == j { 1.0 } else { 0.0 };
        let mut carry = 0.0;
        for k in 0..n {
            let p = -x[(i, k)] * m[(k, j)];
            let p_err = (-x[(i, k)]).mul_add(m[(k, j)], -p);
            let s = sum + p;
            let back = s - sum;
            carry += p_err + (sum - (s - back)) + (p - back);
            sum = s;
        }
        sum + carry
    })
}

/// `‖(b_i·I)_i‖_{p,1}` for the column operator of a product kernel, which is
/// `Σ_i |b_i|` for every `p`.
pub fn operator_lp1_norm_product(b: &[f64]) -> f64 {
    b.iter().map(|v| v.abs()).sum()
}
