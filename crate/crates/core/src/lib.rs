//! Multi-task learning in reproducing kernel Banach spaces with `L_{p,1}`
//! (group-lasso) norms.
//!
//! * [`kernels`]: scalar kernel families on intervals and their lifts `G·A`.
//! * [`blocklinalg`]: block vectors, `‖·‖_{p,1}`, Kronecker-factored Gram systems.
//! * [`admissibility`]: numeric certification of the admissibility assumptions,
//!   including Lebesgue-constant scans.
//! * [`solvers`]: minimal-norm interpolation, group basis pursuit, and
//!   regularized learning.
//! * [`cli`]: the `rkbs` command line.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admissibility;
pub mod blocklinalg;
pub mod cli;
pub mod error;
pub mod io;
pub mod kernels;
mod search;
pub mod solvers;

pub use admissibility::{certify, det_tfamily_closed_form, lebesgue_at, lebesgue_scan, CertificationConfig, CertificationReport};
pub use blocklinalg::{block_inverse_2x2, gram_assemble, gram_solve, lp1_norm, operator_lp1_norm_product, BlockVector, GramSystem};
pub use error::{Error, Result};
pub use kernels::{GaussianKernel, GroupExponent, Interval, OperatorKernel, ScalarKernel, ScalarKernelSpec, TaskCoupling};
pub use solvers::{
    block_soft_threshold, expansion_sup_norm, fit_regularized, group_basis_pursuit, min_norm_interpolant, predict,
    FitModel, LearnConfig, Loss,
};
