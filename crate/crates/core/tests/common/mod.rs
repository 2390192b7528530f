#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rkbs::{BlockVector, GroupExponent, Interval, OperatorKernel, ScalarKernelSpec, TaskCoupling};

pub fn admissible_kernels() -> Vec<(String, ScalarKernelSpec)> {
    let mut out: Vec<(String, ScalarKernelSpec)> = [0.0, 0.5, 1.0]
        .iter()
        .map(|&t| (format!("tfamily t={t}"), ScalarKernelSpec::t_family(t).unwrap()))
        .collect();
    out.push(("wendland".into(), ScalarKernelSpec::Wendland));
    out.push((
        "exponential [-2,2]".into(),
        ScalarKernelSpec::exponential(Interval::new(-2.0, 2.0).unwrap()),
    ));
    out.push(("combination 1,1".into(), ScalarKernelSpec::combination(1.0, 1.0, 1.0).unwrap()));
    out
}

/// `B·Bᵀ + shift·I` with entries of `B` uniform in [-1, 1].
pub fn random_spd(n: usize, shift: f64, rng: &mut impl Rng) -> TaskCoupling {
    let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let a = &b * b.transpose() + DMatrix::identity(n, n) * shift;
    TaskCoupling::new(a).unwrap()
}

pub fn random_blocks(m: usize, n: usize, p: GroupExponent, rng: &mut impl Rng) -> BlockVector {
    let rows = (0..m).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    BlockVector::new(rows, n, p).unwrap()
}

/// `G[x] ⊗ A` as an explicit `mn × mn` matrix, block `(i, j)` = `G(x_i, x_j)·A`.
pub fn dense_operator(kernel: &OperatorKernel, rows: &[f64], cols: &[f64]) -> DMatrix<f64> {
    let n = kernel.n();
    let a = kernel.coupling.matrix();
    DMatrix::from_fn(rows.len() * n, cols.len() * n, |r, c| {
        kernel.eval_scalar(rows[r / n], cols[c / n]).unwrap() * a[(r % n, c % n)]
    })
}

/// Induced `ℓ_p → ℓ_p` norm for `p ∈ {1, 2, ∞}`.
pub fn induced_norm(m: &DMatrix<f64>, p: GroupExponent) -> f64 {
    if p == GroupExponent::ONE {
        m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    } else if p == GroupExponent::INF {
        m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    } else {
        assert!(p == GroupExponent::TWO, "induced norm oracle covers p = 1, 2, inf");
        m.clone().svd(false, false).singular_values.max()
    }
}

/// Lebesgue function at `q` from the dense block system: solve
/// `(G[x] ⊗ A)·B = G_x(q) ⊗ A` and sum the induced norms of the `n × n` blocks.
pub fn dense_lebesgue(kernel: &OperatorKernel, centers: &[f64], q: f64) -> f64 {
    let n = kernel.n();
    let big = dense_operator(kernel, centers, centers);
    let rhs = dense_operator(kernel, centers, &[q]);
    let b = big.lu().solve(&rhs).unwrap();
    (0..centers.len())
        .map(|i| induced_norm(&b.rows(i * n, n).into_owned(), kernel.p))
        .sum()
}

/// Derivative-free minimizer of `½‖x − z‖² + τ‖x‖_p`: pattern search over
/// all directions in `{-1, 0, 1}^d`, the direction of `z`, and a few random
/// ones, started from both `z` and the origin.
pub fn brute_force_prox(z: &[f64], tau: f64, p: GroupExponent, rng: &mut impl Rng) -> Vec<f64> {
    let d = z.len();
    let f = |x: &[f64]| {
        let fit: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() * 0.5;
        fit + tau * p.norm(x)
    };
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for code in 0..3usize.pow(d as u32) {
        let mut c = code;
        let v: Vec<f64> = (0..d)
            .map(|_| {
                let s = (c % 3) as f64 - 1.0;
                c /= 3;
                s
            })
            .collect();
        if v.iter().any(|&s| s != 0.0) {
            dirs.push(v);
        }
    }
    let zn = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if zn > 0.0 {
        dirs.push(z.iter().map(|v| v / zn).collect());
    }
    for _ in 0..16 {
        dirs.push((0..d).map(|_| rng.random_range(-1.0..1.0)).collect());
    }
    let scale = z.iter().fold(tau, |m, v| m.max(v.abs())).max(1.0);
    let search = |start: Vec<f64>| {
        let mut x = start;
        let mut fx = f(&x);
        let mut step = scale;
        while step > 1e-12 {
            let mut improved = false;
            for dir in &dirs {
                let cand: Vec<f64> = x.iter().zip(dir).map(|(a, b)| a + step * b).collect();
                let fc = f(&cand);
                if fc < fx {
                    x = cand;
                    fx = fc;
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        (x, fx)
    };
    let a = search(z.to_vec());
    let b = search(vec![0.0; d]);
    if a.1 <= b.1 {
        a.0
    } else {
        b.0
    }
}
