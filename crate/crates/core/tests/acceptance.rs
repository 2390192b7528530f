//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Every tolerance and budget is pinned here.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{admissible_kernels, brute_force_prox, dense_lebesgue, dense_operator, random_blocks, random_spd};
use rkbs::admissibility::{draw_centers, scalar_sup, Status};
use rkbs::solvers::{
    admm_regularized, expansion_sup_norm, fit_regularized, group_basis_pursuit, min_norm_interpolant, AdmmSettings,
    FitMeta, FitModel, LearnConfig, Loss,
};
use rkbs::{
    block_inverse_2x2, block_soft_threshold, certify, det_tfamily_closed_form, lebesgue_at, lebesgue_scan,
    BlockVector, CertificationConfig, GaussianKernel, GroupExponent, Interval, OperatorKernel, ScalarKernelSpec,
    TaskCoupling,
};

const P12: [GroupExponent; 2] = [GroupExponent::ONE, GroupExponent::TWO];

struct Gate {
    failed: Vec<u32>,
}

impl Gate {
    fn record(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        println!("{} [{id:>2}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id);
        }
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

// 1. closed-form K_t determinant against the LU determinant of the assembled Gram
fn determinant_oracle(gate: &mut Gate) {
    const TOL: f64 = 1e-10;
    const SETS: usize = 1000;
    const BUDGET: Duration = Duration::from_secs(5);
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..SETS {
        let m = rng.random_range(1..=8);
        let centers = draw_centers(Interval::UNIT, m, &mut rng);
        for t in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let k = ScalarKernelSpec::t_family(t).unwrap();
            let gram = rkbs::blocklinalg::scalar_gram(&k, &centers);
            let lu = gram.lu().determinant();
            let closed = det_tfamily_closed_form(&centers, t).unwrap();
            worst = worst.max((lu - closed).abs() / closed.abs());
        }
    }
    let elapsed = start.elapsed();
    gate.record(
        1,
        "determinant oracle",
        worst <= TOL && elapsed < BUDGET,
        format!("max rel err {worst:.3e} (tol {TOL:e}) over {SETS} sets x 5 t, {}", secs(elapsed)),
    );
}

// 2. worst Lebesgue constant over the scan budget for every listed kernel
fn admissibility_scans(gate: &mut Gate) {
    const BOUND: f64 = 1.0 + 1e-8;
    const BUDGET: Duration = Duration::from_secs(60);
    let cfg = CertificationConfig { max_centers: 6, grid_size: 512, trials: 200, seed: 42, tolerance: 1e-8 };
    let mut kernels: Vec<(String, ScalarKernelSpec)> = [-1.0, -0.5]
        .iter()
        .map(|&t| (format!("tfamily t={t}"), ScalarKernelSpec::t_family(t).unwrap()))
        .collect();
    kernels.extend(admissible_kernels());
    let start = Instant::now();
    let mut bad = Vec::new();
    for (name, spec) in kernels {
        let k = OperatorKernel::new(spec, TaskCoupling::identity(1).unwrap(), GroupExponent::TWO);
        match lebesgue_scan(&k, &cfg) {
            Ok(out) => {
                let w = out.worst;
                println!("       {name:<20} worst {:.12} at q={:.6} centers {:?}", w.worst, w.query, w.centers);
                if w.worst > BOUND {
                    bad.push(format!("{name} ({:.6})", w.worst));
                }
            }
            Err(e) => {
                println!("       {name:<20} error {e}");
                bad.push(format!("{name} (error)"));
            }
        }
    }
    let elapsed = start.elapsed();
    let detail = if bad.is_empty() {
        format!("all worst <= 1 + 1e-8, {}", secs(elapsed))
    } else {
        format!("exceeds 1 + 1e-8: {}; {}", bad.join(", "), secs(elapsed))
    };
    gate.record(2, "admissibility scans", bad.is_empty() && elapsed < BUDGET, detail);
}

// 3. Λ does not depend on the coupling or on p; also checked against the dense block system
fn coupling_invariance(gate: &mut Gate) {
    const AGREE: f64 = 1e-12;
    const DENSE_REL: f64 = 1e-8;
    const PROBES: usize = 100;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let spd = random_spd(3, 0.5, &mut rng);
    let couplings = [TaskCoupling::identity(2).unwrap(), spd];
    let scalars = admissible_kernels();
    let mut spread = 0.0f64;
    let mut dense_err = 0.0f64;
    for probe in 0..PROBES {
        let spec = scalars[probe % scalars.len()].1;
        let d = rkbs::ScalarKernel::domain(&spec);
        let m = rng.random_range(1..=6);
        let centers = draw_centers(d, m, &mut rng);
        let q = rng.random_range(d.lo..d.hi);
        let mut values = Vec::new();
        for c in &couplings {
            for p in P12 {
                let k = OperatorKernel::new(spec, c.clone(), p);
                let v = lebesgue_at(&k, &centers, q).unwrap();
                let dense = dense_lebesgue(&k, &centers, q);
                dense_err = dense_err.max((v - dense).abs() / v);
                values.push(v);
            }
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        spread = spread.max(hi - lo);
    }
    gate.record(
        3,
        "coupling/p invariance of the Lebesgue function",
        spread <= AGREE && dense_err <= DENSE_REL,
        format!(
            "max spread {spread:.3e} (tol {AGREE:e}), dense block oracle rel err {dense_err:.3e} (tol {DENSE_REL:e}), {PROBES} probes"
        ),
    );
}

// 4. no enlarged center set beats the interpolant on the data sites
fn representer_dominance(gate: &mut Gate) {
    const SLACK: f64 = 1e-6;
    const RESIDUAL: f64 = 1e-9;
    const INSTANCES: usize = 200;
    const BUDGET: Duration = Duration::from_secs(120);
    let settings = AdmmSettings { tol: RESIDUAL, ..AdmmSettings::default() };
    let start = Instant::now();
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_residual = 0.0f64;
    let mut failures = Vec::new();
    for (ki, (name, spec)) in admissible_kernels().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + ki as u64);
        let d = rkbs::ScalarKernel::domain(&spec);
        for inst in 0..INSTANCES {
            let m = rng.random_range(1..=5);
            let extra = rng.random_range(0..=3);
            let n = rng.random_range(1..=3);
            let p = P12[rng.random_range(0..2)];
            let coupling = random_spd(n, 0.5, &mut rng);
            let k = OperatorKernel::new(spec, coupling, p);
            let mut all = draw_centers(d, m + extra, &mut rng);
            all.shuffle(&mut rng);
            let mut sites = all[..m].to_vec();
            sites.sort_by(f64::total_cmp);
            all.sort_by(f64::total_cmp);
            let y = random_blocks(m, n, p, &mut rng);
            let interp = min_norm_interpolant(&k, &sites, &y).unwrap();
            match group_basis_pursuit(&k, &all, &sites, &y, &settings) {
                Ok(bp) => {
                    let gap = interp.norm_lp1 - bp.norm_lp1;
                    worst_gap = worst_gap.max(gap);
                    let res = bp.meta.primal_residual.unwrap().max(bp.meta.dual_residual.unwrap());
                    worst_residual = worst_residual.max(res);
                    if gap > SLACK || res > RESIDUAL {
                        failures.push(format!("{name}#{inst}"));
                    }
                }
                Err(e) => failures.push(format!("{name}#{inst}: {e}")),
            }
        }
    }
    let elapsed = start.elapsed();
    gate.record(
        4,
        "representer dominance",
        failures.is_empty() && elapsed < BUDGET,
        format!(
            "max (interpolant - pursuit) {worst_gap:.3e} (slack {SLACK:e}), max ADMM residual {worst_residual:.3e}, {} failures over {} instances, {}",
            failures.len(),
            INSTANCES * admissible_kernels().len(),
            secs(elapsed)
        ),
    );
    for f in failures.iter().take(5) {
        println!("       {f}");
    }
}

// 5. the Gaussian kernel is not admissible and the default budget finds a witness
fn gaussian_counterexample(gate: &mut Gate) {
    let g = GaussianKernel::new(0.5, Interval::UNIT).unwrap();
    let k = OperatorKernel::new(g, TaskCoupling::identity(1).unwrap(), GroupExponent::TWO);
    let cfg = CertificationConfig::default();
    let rep = certify(&k, &cfg).unwrap();
    let found = rep.a4.worst > 1.0 && rep.verdict.a4 == Status::Fail;
    // the witness must reproduce independently of the scan
    let recheck = lebesgue_at(&k, &rep.a4.centers, rep.a4.query).unwrap_or(f64::NAN);
    gate.record(
        5,
        "gaussian counterexample witness",
        found && recheck > 1.0,
        format!(
            "width 0.5, seed {}: Λ = {:.6} at q={:.6} with centers {:?} (recheck {:.6})",
            cfg.seed, rep.a4.worst, rep.a4.query, rep.a4.centers, recheck
        ),
    );
}

// 6. block soft thresholding against a derivative-free minimizer
fn prox_oracle(gate: &mut Gate) {
    const TOL: f64 = 1e-6;
    const PAIRS: usize = 500;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for i in 0..PAIRS {
        let p = P12[i % 2];
        let d = rng.random_range(1..=3);
        let z = random_blocks(1, d, p, &mut rng).as_slice().iter().map(|v| v * 3.0).collect::<Vec<_>>();
        let tau = rng.random_range(0.0..3.0);
        let zb = BlockVector::new(vec![z.clone()], d, p).unwrap();
        let got = block_soft_threshold(&zb, tau, p).unwrap();
        let brute = brute_force_prox(&z, tau, p, &mut rng);
        let err = got.as_slice().iter().zip(&brute).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(err);
    }
    gate.record(
        6,
        "prox oracle",
        worst <= TOL,
        format!("max abs err {worst:.3e} (tol {TOL:e}) over {PAIRS} pairs"),
    );
}

// 7. FISTA and ADMM agree; the small-λ end of the path is the interpolant
fn solver_cross_check(gate: &mut Gate) {
    const REL: f64 = 1e-6;
    const INSTANCES: usize = 50;
    const PATH_TOL: f64 = 1e-4;
    const PATH: [f64; 5] = [1e-1, 1e-2, 1e-4, 1e-6, 1e-8];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let kernels = admissible_kernels();
    let mut worst_rel = 0.0f64;
    let mut errors = Vec::new();
    for i in 0..INSTANCES {
        let spec = kernels[i % kernels.len()].1;
        let d = rkbs::ScalarKernel::domain(&spec);
        let n = rng.random_range(1..=3);
        let m = rng.random_range(1..=30 / n);
        let p = P12[rng.random_range(0..2)];
        let k = OperatorKernel::new(spec, random_spd(n, 0.5, &mut rng), p);
        let x = draw_centers(d, m, &mut rng);
        let y = random_blocks(m, n, p, &mut rng);
        let lambda = 10f64.powf(rng.random_range(-3.0..-0.5));
        let fista = fit_regularized(&k, &x, &y, &LearnConfig { max_iters: 200_000, ..LearnConfig::new(lambda) });
        let admm = admm_regularized(&k, &x, &y, lambda, Loss::Squared, &AdmmSettings { tol: 1e-11, ..Default::default() });
        match (fista, admm) {
            (Ok(f), Ok(a)) => {
                let (fo, ao) = (f.meta.objective.unwrap(), a.meta.objective.unwrap());
                worst_rel = worst_rel.max((fo - ao).abs() / fo.abs().max(ao.abs()));
            }
            (f, a) => errors.push(format!("#{i}: fista {:?} admm {:?}", f.err(), a.err())),
        }
    }

    // well-conditioned: Wendland on a jittered uniform grid
    let mut worst_path = 0.0f64;
    for _ in 0..10 {
        let m = rng.random_range(2..=6);
        let n = rng.random_range(1..=3);
        let p = P12[rng.random_range(0..2)];
        let h = 1.0 / (m as f64 + 1.0);
        let x: Vec<f64> = (1..=m).map(|j| j as f64 * h + rng.random_range(-0.2..0.2) * h).collect();
        let k = OperatorKernel::new(ScalarKernelSpec::Wendland, random_spd(n, 1.0, &mut rng), p);
        let y = random_blocks(m, n, p, &mut rng);
        let exact = min_norm_interpolant(&k, &x, &y).unwrap();
        let mut end = None;
        for &lambda in &PATH {
            match fit_regularized(&k, &x, &y, &LearnConfig { max_iters: 200_000, ..LearnConfig::new(lambda) }) {
                Ok(model) => end = Some(model),
                Err(e) => errors.push(format!("path λ={lambda}: {e}")),
            }
        }
        if let Some(model) = end {
            let diff = model
                .coeffs
                .as_slice()
                .iter()
                .zip(exact.coeffs.as_slice())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst_path = worst_path.max(diff);
        }
    }
    gate.record(
        7,
        "solver cross-check",
        errors.is_empty() && worst_rel <= REL && worst_path <= PATH_TOL,
        format!(
            "FISTA/ADMM max rel objective gap {worst_rel:.3e} (tol {REL:e}); λ=1e-8 vs interpolant max abs {worst_path:.3e} (tol {PATH_TOL:e}); {} errors",
            errors.len()
        ),
    );
    for e in errors.iter().take(5) {
        println!("       {e}");
    }
}

// 8. Schur-complement block inverse times the original matrix
fn block_inversion(gate: &mut Gate) {
    const TOL: f64 = 1e-10;
    const QUADS: usize = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..QUADS {
        let k1 = rng.random_range(1..=4);
        let k2 = rng.random_range(1..=4);
        let size = k1 + k2;
        // strictly diagonally dominant, so every leading block and Schur complement is invertible
        let mut full = DMatrix::from_fn(size, size, |_, _| rng.random_range(-1.0..1.0));
        for i in 0..size {
            full[(i, i)] += size as f64 * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        }
        let a = full.view((0, 0), (k1, k1)).into_owned();
        let b = full.view((0, k1), (k1, k2)).into_owned();
        let c = full.view((k1, 0), (k2, k1)).into_owned();
        let d = full.view((k1, k1), (k2, k2)).into_owned();
        let inv = block_inverse_2x2(&a, &b, &c, &d).unwrap().assemble();
        let err = (inv * &full - DMatrix::identity(size, size)).amax();
        worst = worst.max(err);
    }
    gate.record(
        8,
        "block inversion identity",
        worst <= TOL,
        format!("max |M⁻¹M - I| {worst:.3e} (tol {TOL:e}) over {QUADS} quadruples"),
    );
}

fn random_expansion(
    spec: &ScalarKernelSpec,
    coupling: &TaskCoupling,
    p: GroupExponent,
    rng: &mut ChaCha8Rng,
) -> FitModel {
    let k = OperatorKernel::new(*spec, coupling.clone(), p);
    let d = rkbs::ScalarKernel::domain(spec);
    let m = rng.random_range(1..=6);
    let centers = draw_centers(d, m, rng);
    let coeffs = random_blocks(m, coupling.n(), p, rng);
    FitModel::new(k, centers, coeffs, FitMeta::default()).unwrap()
}

// 9. point evaluation and the pairing bound on random finite expansions
fn analysis_bounds(gate: &mut Gate) {
    const SLACK: f64 = 1e-7;
    const EXPANSIONS: usize = 1000;
    const SUP_GRID: usize = 512;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let kernels = admissible_kernels();
    let sups: Vec<f64> = kernels.iter().map(|(_, s)| scalar_sup(s, SUP_GRID).unwrap()).collect();
    let mut eval_excess = f64::NEG_INFINITY;
    let mut pair_excess = f64::NEG_INFINITY;
    for i in 0..EXPANSIONS {
        let ki = i % kernels.len();
        let spec = &kernels[ki].1;
        let n = rng.random_range(1..=3);
        let p = P12[rng.random_range(0..2)];
        let coupling = random_spd(n, 0.5, &mut rng);
        let kappa = sups[ki] * coupling.operator_norm(p);

        let f = random_expansion(spec, &coupling, p, &mut rng);
        let d = f.kernel.domain();
        let q = rng.random_range(d.lo..d.hi);
        let value = f.predict(q).unwrap();
        eval_excess = eval_excess.max(p.conjugate().norm(&value) - kappa * f.norm_lp1);

        let g = random_expansion(spec, &coupling, p, &mut rng);
        // Σᵢⱼ ⟨aᵢ, G(zᵢ, wⱼ)·A·bⱼ⟩ from the dense block operator
        let op = dense_operator(&f.kernel, &f.centers, &g.centers);
        let a = DMatrix::from_row_slice(1, f.coeffs.as_slice().len(), f.coeffs.as_slice());
        let b = DMatrix::from_column_slice(g.coeffs.as_slice().len(), 1, g.coeffs.as_slice());
        let form = (a * op * b)[(0, 0)];
        let bound = f.norm_lp1 * expansion_sup_norm(&g, SUP_GRID).unwrap();
        pair_excess = pair_excess.max(form.abs() - bound);
    }
    gate.record(
        9,
        "analysis bounds",
        eval_excess <= SLACK && pair_excess <= SLACK,
        format!(
            "max (‖f(q)‖_q - κ‖C‖) {eval_excess:.3e}, max (|(f,g)| - ‖f‖‖g‖#) {pair_excess:.3e} (slack {SLACK:e}), {EXPANSIONS} expansions each"
        ),
    );
}

// 10. two identical deterministic invocations write identical bytes
fn cli_determinism(gate: &mut Gate) {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_rkbs");
    let run = |name: &str| -> Option<Vec<u8>> {
        let out = dir.path().join(name);
        let status = Command::new(bin)
            .args([
                "certify", "--kernel", "combination", "--weights", "1,1", "--p", "1", "--coupling", "identity:2",
                "--max-centers", "6", "--grid", "512", "--trials", "200", "--seed", "42", "--deterministic", "--out",
            ])
            .arg(&out)
            .output()
            .ok()?;
        if !status.status.success() {
            return None;
        }
        std::fs::read(out).ok()
    };
    let first = run("a.json");
    let second = run("b.json");
    let pass = matches!((&first, &second), (Some(a), Some(b)) if a == b);
    gate.record(
        10,
        "CLI determinism",
        pass,
        format!(
            "certify --deterministic twice: {} and {} bytes, identical: {pass}",
            first.as_ref().map_or(0, Vec::len),
            second.as_ref().map_or(0, Vec::len)
        ),
    );
}

fn main() {
    let mut gate = Gate { failed: Vec::new() };
    determinant_oracle(&mut gate);
    admissibility_scans(&mut gate);
    coupling_invariance(&mut gate);
    representer_dominance(&mut gate);
    gaussian_counterexample(&mut gate);
    prox_oracle(&mut gate);
    solver_cross_check(&mut gate);
    block_inversion(&mut gate);
    analysis_bounds(&mut gate);
    cli_determinism(&mut gate);
    if gate.failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
    } else {
        println!("acceptance: {} of 10 criteria fail: {:?}", gate.failed.len(), gate.failed);
        std::process::exit(1);
    }
}
