//! Minimal-norm interpolation, group basis pursuit over enlarged center sets,
//! and regularized learning with the `‖·‖_{p,1}` penalty.
//!
//! Every fitted function is a finite expansion `f(x) = Σ_j G(x_j, x)·A·c_j`.
//! Its norm in the Banach space built from the kernel is `‖C‖_{p,1}`.

mod admm;
mod fista;
mod prox;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::blocklinalg::{scalar_gram, BlockVector, GramSystem};
use crate::error::{Error, Result};
use crate::kernels::{check_centers, GroupExponent, OperatorKernel, ScalarKernel, ScalarKernelSpec};
use crate::search::probe_and_refine;

pub use admm::{admm_regularized, group_basis_pursuit, AdmmSettings};
pub use fista::fista_squared;
pub use prox::block_soft_threshold;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Squared,
    Absolute,
}

impl std::str::FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared" => Ok(Loss::Squared),
            "absolute" => Ok(Loss::Absolute),
            other => Err(Error::Config(format!("unknown loss '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnConfig {
    pub lambda: f64,
    pub loss: Loss,
    pub max_iters: usize,
    /// Relative objective decrease over a window of iterations (FISTA) or
    /// absolute residual level (ADMM) at which to stop.
    pub tol: f64,
    /// Adaptive momentum restart for FISTA.
    pub restart: bool,
}

impl LearnConfig {
    pub fn new(lambda: f64) -> Self {
        LearnConfig { lambda, loss: Loss::Squared, max_iters: 100_000, tol: 1e-14, restart: true }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// Provenance of a fitted model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    pub solver: String,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primal_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<Loss>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
    /// Objective after every accepted iteration; not persisted.
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
}

/// A finite kernel expansion and how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct FitModel<G = ScalarKernelSpec> {
    pub kernel: OperatorKernel<G>,
    pub centers: Vec<f64>,
    pub coeffs: BlockVector,
    pub norm_lp1: f64,
    pub meta: FitMeta,
}

impl<G: ScalarKernel> FitModel<G> {
    pub fn new(kernel: OperatorKernel<G>, centers: Vec<f64>, coeffs: BlockVector, meta: FitMeta) -> Result<Self> {
        if coeffs.len() != centers.len() || coeffs.dim() != kernel.n() {
            return Err(Error::Shape(format!(
                "{} coefficient blocks of dimension {} for {} centers and {} tasks",
                coeffs.len(),
                coeffs.dim(),
                centers.len(),
                kernel.n()
            )));
        }
        check_centers(&kernel.scalar, &centers)?;
        let coeffs = coeffs.with_exponent(kernel.p);
        let norm_lp1 = coeffs.lp1_norm();
        Ok(FitModel { kernel, centers, coeffs, norm_lp1, meta })
    }

    /// `Σ_j G(x_j, query)·A·c_j`.
    pub fn predict(&self, query: f64) -> Result<Vec<f64>> {
        self.kernel.domain().check(query)?;
        Ok(self.value_unchecked(query))
    }

    pub fn predict_many(&self, queries: &[f64]) -> Result<Vec<Vec<f64>>> {
        queries.iter().map(|&q| self.predict(q)).collect()
    }

    fn value_unchecked(&self, query: f64) -> Vec<f64> {
        let n = self.kernel.n();
        let mut s = vec![0.0; n];
        for (&x, c) in self.centers.iter().zip(self.coeffs.blocks()) {
            let g = self.kernel.scalar.value(x, query);
            for (acc, v) in s.iter_mut().zip(c) {
                *acc += g * v;
            }
        }
        let a = self.kernel.coupling.matrix();
        (0..n).map(|i| (0..n).map(|k| a[(i, k)] * s[k]).sum()).collect()
    }

    /// Sup over the domain of `‖f(y)‖_q`: the norm of the expansion viewed in
    /// the adjoint space. Uniform grid plus the centers, refined around every
    /// discrete peak.
    pub fn expansion_sup_norm(&self, grid_size: usize) -> Result<f64> {
        if grid_size < 2 {
            return Err(Error::Config("grid_size must be >= 2".into()));
        }
        let domain = self.kernel.domain();
        if !domain.is_bounded() {
            return Err(Error::Config("sup norm needs a bounded domain".into()));
        }
        if self.coeffs.is_zero() {
            return Ok(0.0);
        }
        let q = self.kernel.p.conjugate();
        let mut probes = domain.interior_grid(grid_size);
        probes.extend_from_slice(&self.centers);
        probes.sort_by(f64::total_cmp);
        probes.dedup();
        let (_, sup) = probe_and_refine(&probes, domain.lo, domain.hi, 60, true, |y| {
            q.norm(&self.value_unchecked(y))
        });
        Ok(sup)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    kernel: OperatorKernel<ScalarKernelSpec>,
    centers: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
    p: GroupExponent,
    norm_lp1: f64,
    meta: FitMeta,
}

impl Serialize for FitModel<ScalarKernelSpec> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModelDoc {
            kernel: self.kernel.clone(),
            centers: self.centers.clone(),
            coeffs: self.coeffs.to_rows(),
            p: self.kernel.p,
            norm_lp1: self.norm_lp1,
            meta: self.meta.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FitModel<ScalarKernelSpec> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = ModelDoc::deserialize(d)?;
        if doc.p != doc.kernel.p {
            return Err(D::Error::custom("model p disagrees with kernel p"));
        }
        let n = doc.kernel.n();
        let coeffs = BlockVector::new(doc.coeffs, n, doc.p).map_err(D::Error::custom)?;
        let model = FitModel::new(doc.kernel, doc.centers, coeffs, doc.meta).map_err(D::Error::custom)?;
        if model.norm_lp1 != doc.norm_lp1 {
            return Err(D::Error::custom(format!(
                "stored norm_lp1 {} does not match coefficients ({})",
                doc.norm_lp1, model.norm_lp1
            )));
        }
        Ok(model)
    }
}

pub fn predict<G: ScalarKernel>(model: &FitModel<G>, query: f64) -> Result<Vec<f64>> {
    model.predict(query)
}

pub fn expansion_sup_norm<G: ScalarKernel>(model: &FitModel<G>, grid_size: usize) -> Result<f64> {
    model.expansion_sup_norm(grid_size)
}

/// Bilinear pairing `Σ_ij ⟨a_i, G(z_i, w_j)·A·b_j⟩` of two expansions with the
/// same kernel.
pub fn pairing<G: ScalarKernel>(f: &FitModel<G>, g: &FitModel<G>) -> f64 {
    f.centers
        .iter()
        .zip(f.coeffs.blocks())
        .map(|(&z, a)| {
            let gz = g.value_unchecked(z);
            a.iter().zip(&gz).map(|(x, y)| x * y).sum::<f64>()
        })
        .sum()
}

fn check_targets(m: usize, n: usize, y: &BlockVector) -> Result<()> {
    if y.len() != m || y.dim() != n {
        return Err(Error::Shape(format!(
            "targets have {} blocks of dimension {}, expected {m} of dimension {n}",
            y.len(),
            y.dim()
        )));
    }
    Ok(())
}

/// Exact interpolant `C = (G[x] ⊗ A)⁻¹·Y`. For kernels with Lebesgue
/// constants at most one this is the minimal-norm interpolant.
pub fn min_norm_interpolant<G: ScalarKernel + Clone>(
    kernel: &OperatorKernel<G>,
    x: &[f64],
    y: &BlockVector,
) -> Result<FitModel<G>> {
    check_targets(x.len(), kernel.n(), y)?;
    let system = GramSystem::assemble(kernel, x)?;
    let coeffs = system.solve(y)?;
    let residual = (system.apply(&coeffs)?.to_matrix() - y.to_matrix()).amax();
    let meta = FitMeta {
        solver: "exact".into(),
        iterations: 1,
        primal_residual: Some(residual),
        ..FitMeta::default()
    };
    FitModel::new(kernel.clone(), x.to_vec(), coeffs, meta)
}

/// `½‖E·C − Y‖²` or `‖E·C − Y‖₁`, plus `λ‖C‖_{p,1}`, with `E = G[x] ⊗ A`.
pub fn regularized_objective<G: ScalarKernel>(
    kernel: &OperatorKernel<G>,
    x: &[f64],
    y: &BlockVector,
    coeffs: &BlockVector,
    lambda: f64,
    loss: Loss,
) -> Result<f64> {
    check_targets(x.len(), kernel.n(), y)?;
    check_targets(x.len(), kernel.n(), coeffs)?;
    let op = KronOperator::new(scalar_gram(&kernel.scalar, x), kernel.coupling.matrix().clone());
    let c = coeffs.to_matrix();
    Ok(objective(&op, &y.to_matrix(), &c, lambda, loss, kernel.p))
}

fn objective(op: &KronOperator, y: &DMatrix<f64>, c: &DMatrix<f64>, lambda: f64, loss: Loss, p: GroupExponent) -> f64 {
    let r = op.apply(c) - y;
    let data = match loss {
        Loss::Squared => 0.5 * r.norm_squared(),
        Loss::Absolute => r.iter().map(|v| v.abs()).sum(),
    };
    data + lambda * penalty(c, p)
}

fn penalty(c: &DMatrix<f64>, p: GroupExponent) -> f64 {
    c.row_iter().map(|r| p.norm(&r.iter().copied().collect::<Vec<_>>())).sum()
}

/// Minimizes loss + `λ‖C‖_{p,1}` over expansions on the training sites.
/// Squared loss runs FISTA; absolute loss runs ADMM with the loss prox.
pub fn fit_regularized<G: ScalarKernel + Clone>(
    kernel: &OperatorKernel<G>,
    x: &[f64],
    y: &BlockVector,
    cfg: &LearnConfig,
) -> Result<FitModel<G>> {
    match cfg.loss {
        Loss::Squared => fista_squared(kernel, x, y, cfg),
        Loss::Absolute => {
            let settings = AdmmSettings { tol: cfg.tol, max_iters: cfg.max_iters, ..AdmmSettings::default() };
            admm_regularized(kernel, x, y, cfg.lambda, Loss::Absolute, &settings)
        }
    }
}

/// `C ↦ S·C·A` for a (possibly rectangular) scalar matrix `S` and symmetric `A`:
/// the operator `[S_ij·A]` acting on block vectors.
#[derive(Debug, Clone)]
pub(crate) struct KronOperator {
    pub scalar: DMatrix<f64>,
    pub coupling: DMatrix<f64>,
}

impl KronOperator {
    pub fn new(scalar: DMatrix<f64>, coupling: DMatrix<f64>) -> Self {
        KronOperator { scalar, coupling }
    }

    pub fn apply(&self, c: &DMatrix<f64>) -> DMatrix<f64> {
        &self.scalar * c * &self.coupling
    }

    pub fn adjoint(&self, r: &DMatrix<f64>) -> DMatrix<f64> {
        self.scalar.transpose() * r * &self.coupling
    }

    /// Largest eigenvalue of `EᵀE` by power iteration.
    pub fn lipschitz(&self, iterations: usize) -> f64 {
        let mut v = DMatrix::from_element(self.scalar.ncols(), self.coupling.nrows(), 1.0);
        let mut est = 0.0;
        for _ in 0..iterations {
            let norm = v.norm();
            if norm == 0.0 {
                return 0.0;
            }
            v /= norm;
            let w = self.adjoint(&self.apply(&v));
            est = v.dot(&w);
            v = w;
        }
        est
    }
}

/// Solves `(EᵀE + σI)·C = R` through the eigendecompositions of `SᵀS` and `A²`.
#[derive(Debug, Clone)]
pub(crate) struct NormalSolver {
    left: DMatrix<f64>,
    left_values: Vec<f64>,
    right: DMatrix<f64>,
    right_values: Vec<f64>,
}

impl NormalSolver {
    pub fn new(op: &KronOperator) -> Self {
        let sts = op.scalar.transpose() * &op.scalar;
        let a2 = &op.coupling * &op.coupling;
        let l = SymmetricEigen::new(sts);
        let r = SymmetricEigen::new(a2);
        NormalSolver {
            left: l.eigenvectors,
            left_values: l.eigenvalues.iter().copied().collect(),
            right: r.eigenvectors,
            right_values: r.eigenvalues.iter().copied().collect(),
        }
    }

    pub fn solve(&self, rhs: &DMatrix<f64>, shift: f64) -> DMatrix<f64> {
        let mut t = self.left.transpose() * rhs * &self.right;
        for i in 0..t.nrows() {
            for k in 0..t.ncols() {
                t[(i, k)] /= self.left_values[i].max(0.0) * self.right_values[k].max(0.0) + shift;
            }
        }
        &self.left * t * self.right.transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{Interval, TaskCoupling};

    fn kmin(n: usize) -> OperatorKernel {
        OperatorKernel::new(
            ScalarKernelSpec::t_family(1.0).unwrap(),
            TaskCoupling::identity(n).unwrap(),
            GroupExponent::TWO,
        )
    }

    fn targets(rows: &[&[f64]]) -> BlockVector {
        BlockVector::new(rows.iter().map(|r| r.to_vec()).collect(), rows[0].len(), GroupExponent::TWO).unwrap()
    }

    #[test]
    fn interpolant_single_center() {
        let m = min_norm_interpolant(&kmin(1), &[0.5], &targets(&[&[1.0]])).unwrap();
        assert_eq!(m.coeffs.to_rows(), vec![vec![4.0]]);
        assert_eq!(m.norm_lp1, 4.0);
        assert!((m.predict(0.5).unwrap()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interpolant_of_zero_is_zero() {
        let y = BlockVector::zeros(3, 2, GroupExponent::TWO);
        let m = min_norm_interpolant(&kmin(2), &[0.1, 0.4, 0.8], &y).unwrap();
        assert!(m.coeffs.is_zero());
        assert_eq!(m.norm_lp1, 0.0);
        assert_eq!(m.predict(0.3).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn interpolant_shape_errors() {
        assert!(matches!(
            min_norm_interpolant(&kmin(2), &[0.5], &targets(&[&[1.0]])),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            min_norm_interpolant(&kmin(1), &[0.5, 0.5], &targets(&[&[1.0], &[2.0]])),
            Err(Error::DuplicateCenter { .. })
        ));
    }

    #[test]
    fn one_term_prediction() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let k = OperatorKernel::new(
            ScalarKernelSpec::Wendland,
            TaskCoupling::new(a.clone()).unwrap(),
            GroupExponent::TWO,
        );
        let model = FitModel::new(k, vec![0.3], targets(&[&[1.0, -2.0]]), FitMeta::default()).unwrap();
        let g = 1.0 - 0.4;
        let expect = [g * (2.0 * 1.0 + 0.5 * -2.0), g * (0.5 * 1.0 + 1.0 * -2.0)];
        let got = model.predict(0.7).unwrap();
        assert!((got[0] - expect[0]).abs() < 1e-15 && (got[1] - expect[1]).abs() < 1e-15);
        assert!(model.predict(1.0).is_err());
    }

    #[test]
    fn sup_norm_examples() {
        let zero = FitModel::new(kmin(1), vec![0.5], BlockVector::zeros(1, 1, GroupExponent::TWO), FitMeta::default())
            .unwrap();
        assert_eq!(zero.expansion_sup_norm(64).unwrap(), 0.0);
        let one = FitModel::new(kmin(1), vec![0.5], targets(&[&[1.0]]), FitMeta::default()).unwrap();
        assert!((one.expansion_sup_norm(64).unwrap() - 0.25).abs() < 1e-15);
        assert!(one.expansion_sup_norm(1).is_err());

        let e = OperatorKernel::new(
            ScalarKernelSpec::exponential(Interval::REAL_LINE),
            TaskCoupling::identity(1).unwrap(),
            GroupExponent::TWO,
        );
        let unbounded = FitModel::new(e, vec![0.0], targets(&[&[1.0]]), FitMeta::default()).unwrap();
        assert!(unbounded.expansion_sup_norm(16).is_err());
    }

    #[test]
    fn normal_solver_matches_dense() {
        let s = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.1, 0.2, 0.8, 0.3, 0.1, 0.3, 0.9]);
        let a = DMatrix::from_row_slice(2, 2, &[1.5, 0.4, 0.4, 0.7]);
        let op = KronOperator::new(s, a);
        let solver = NormalSolver::new(&op);
        let rhs = DMatrix::from_row_slice(3, 2, &[1.0, -1.0, 0.5, 2.0, 0.0, 0.3]);
        let c = solver.solve(&rhs, 0.7);
        let back = op.adjoint(&op.apply(&c)) + &c * 0.7;
        assert!((back - rhs).amax() < 1e-12);
        let l = op.lipschitz(100);
        let ev = NormalSolver::new(&op);
        let top = ev.left_values.iter().cloned().fold(0.0, f64::max) * ev.right_values.iter().cloned().fold(0.0, f64::max);
        assert!((l - top).abs() < 1e-9 * top);
    }

    #[test]
    fn model_json_round_trip() {
        let m = min_norm_interpolant(&kmin(2), &[0.2, 0.7], &targets(&[&[1.0, 0.5], &[-0.3, 2.0]])).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: FitModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back.coeffs, m.coeffs);
        assert_eq!(back.predict(0.45).unwrap(), m.predict(0.45).unwrap());
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["kernel", "centers", "coeffs", "p", "norm_lp1", "meta"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let tampered = text.replace("\"norm_lp1\":", "\"norm_lp1\":1e3+");
        assert!(serde_json::from_str::<FitModel>(&tampered).is_err());
    }

    #[test]
    fn learn_config_validation() {
        assert!(LearnConfig::new(0.0).validate().is_err());
        assert!(LearnConfig { tol: 0.0, ..LearnConfig::new(1.0) }.validate().is_err());
        assert!(LearnConfig::new(1e-3).validate().is_ok());
        assert_eq!("absolute".parse::<Loss>().unwrap(), Loss::Absolute);
    }
}
