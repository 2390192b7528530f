//! Numeric evidence for the admissibility assumptions of a product kernel
//! `G·A`:
//!
//! * A1: Gram matrices on distinct points are invertible (condition numbers,
//!   Cholesky success for families claimed strictly positive definite).
//! * A2: uniform boundedness, `κ = sup|G| · ‖A‖_{p→q}`.
//! * A3: linear independence of infinite expansions. Not falsifiable by
//!   sampling; reported as implied for product kernels whose scalar factor is
//!   strictly positive definite.
//! * A4: Lebesgue constants `‖K[x]⁻¹K_x(q)‖_{p,1} ≤ 1`. For product kernels
//!   this is `Σ|b_i|` with `G[x]·b = G_x(q)`, independent of `A` and `p`.
//!
//! Certification is evidence over a seeded probe budget, not a proof.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blocklinalg::{operator_lp1_norm_product, GramSystem};
use crate::error::{Error, Result};
use crate::kernels::{Interval, OperatorKernel, ScalarKernel};
use crate::search::{golden_max, probe_and_refine};

/// Golden-section iterations for query refinement.
pub const REFINE_ITERATIONS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificationConfig {
    /// Largest number of centers per random set.
    pub max_centers: usize,
    /// Query grid resolution per scan.
    pub grid_size: usize,
    /// Random center sets per `m`.
    pub trials: usize,
    pub seed: u64,
    /// Slack allowed above the A4 bound of one.
    pub tolerance: f64,
}

impl Default for CertificationConfig {
    fn default() -> Self {
        CertificationConfig { max_centers: 6, grid_size: 512, trials: 200, seed: 0, tolerance: 1e-8 }
    }
}

impl CertificationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_centers == 0 || self.grid_size == 0 || self.trials == 0 {
            return Err(Error::Config("max_centers, grid_size and trials must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        Ok(())
    }
}

/// Determinant of the `K_t` Gram matrix on sorted centers:
/// `x₁·(1 − t·x_m)·Π (x_{k+1} − x_k)`.
pub fn det_tfamily_closed_form(centers: &[f64], t: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::Config(format!("t must lie in [-1, 1], got {t}")));
    }
    if centers.is_empty() {
        return Err(Error::Shape("at least one center required".into()));
    }
    for &c in centers {
        Interval::UNIT.check(c)?;
    }
    if let Some(index) = centers.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::Order { index: index + 1 });
    }
    let first = centers[0];
    let last = centers[centers.len() - 1];
    Ok(centers.windows(2).fold(first * (1.0 - t * last), |acc, w| acc * (w[1] - w[0])))
}

/// Lebesgue function of one center set, backed by a factored Gram.
pub struct LebesgueFunction<'a, G> {
    kernel: &'a G,
    system: GramSystem,
}

impl<'a, G: ScalarKernel> LebesgueFunction<'a, G> {
    pub fn new(kernel: &'a OperatorKernel<G>, centers: &[f64]) -> Result<Self> {
        let system = GramSystem::assemble(kernel, centers)?;
        Ok(LebesgueFunction { kernel: &kernel.scalar, system })
    }

    pub fn system(&self) -> &GramSystem {
        &self.system
    }

    /// Cardinal coefficients `b = G[x]⁻¹·G_x(query)`.
    pub fn coefficients(&self, query: f64) -> Vec<f64> {
        let centers = self.system.centers();
        if let Some(j) = centers.iter().position(|&c| c == query) {
            let mut b = vec![0.0; centers.len()];
            b[j] = 1.0;
            return b;
        }
        let rhs = DMatrix::from_iterator(centers.len(), 1, centers.iter().map(|&c| self.kernel.value(query, c)));
        self.system.solve_scalar(&rhs).iter().copied().collect()
    }

    /// `Σ|b_i|`; exactly one at a center.
    pub fn value(&self, query: f64) -> f64 {
        operator_lp1_norm_product(&self.coefficients(query))
    }

    /// Values at many queries with one multi-column solve.
    pub fn values(&self, queries: &[f64]) -> Vec<f64> {
        let centers = self.system.centers();
        let rhs = DMatrix::from_fn(centers.len(), queries.len(), |i, k| self.kernel.value(queries[k], centers[i]));
        let b = self.system.solve_scalar(&rhs);
        queries
            .iter()
            .enumerate()
            .map(|(k, q)| {
                if centers.contains(q) {
                    1.0
                } else {
                    operator_lp1_norm_product(b.column(k).as_slice())
                }
            })
            .collect()
    }

    /// Grid maximum, refined by golden-section search on every piece between
    /// consecutive centers (and the domain ends). The pieces do not depend on
    /// the grid, so a finer nested grid can only raise the result.
    pub fn sup_on_grid(&self, grid: &[f64], domain: Interval) -> (f64, f64) {
        let values = self.values(grid);
        let mut best = grid
            .iter()
            .copied()
            .zip(values)
            .fold((f64::NAN, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
        let centers = self.system.centers();
        let mut breaks = Vec::with_capacity(centers.len() + 2);
        breaks.push(domain.lo);
        breaks.extend_from_slice(centers);
        breaks.push(domain.hi);
        breaks.sort_by(f64::total_cmp);
        for w in breaks.windows(2) {
            let (q, v) = golden_max(w[0], w[1], REFINE_ITERATIONS, |q| self.value(q));
            if v > best.1 {
                best = (q, v);
            }
        }
        best
    }
}

/// `‖K[x]⁻¹K_x(query)‖_{p,1}` for a product kernel.
pub fn lebesgue_at<G: ScalarKernel>(kernel: &OperatorKernel<G>, centers: &[f64], query: f64) -> Result<f64> {
    kernel.domain().check(query)?;
    Ok(LebesgueFunction::new(kernel, centers)?.value(query))
}

/// `(query, Λ(query))` over an interior grid, for plotting.
pub fn lebesgue_profile<G: ScalarKernel>(
    kernel: &OperatorKernel<G>,
    centers: &[f64],
    grid_size: usize,
) -> Result<Vec<(f64, f64)>> {
    let domain = bounded_domain(kernel)?;
    let f = LebesgueFunction::new(kernel, centers)?;
    let grid = domain.interior_grid(grid_size);
    let values = f.values(&grid);
    Ok(grid.into_iter().zip(values).collect())
}

fn bounded_domain<G: ScalarKernel>(kernel: &OperatorKernel<G>) -> Result<Interval> {
    let d = kernel.domain();
    if d.is_bounded() {
        Ok(d)
    } else {
        Err(Error::Config("scans need a bounded domain; give the kernel a finite interval".into()))
    }
}

/// Independent stream per `(m, trial)` so center sets do not depend on
/// execution order or on how many other trials run.
fn trial_rng(seed: u64, m: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((m as u64) << 32) | trial as u64);
    rng
}

/// `m` sorted points uniform in the domain with pairwise gaps of at least
/// `width / (10·m)`.
pub fn draw_centers(domain: Interval, m: usize, rng: &mut impl Rng) -> Vec<f64> {
    let sep = domain.width() / (10.0 * m as f64);
    loop {
        let mut pts: Vec<f64> = (0..m)
            .map(|_| domain.lo + rng.random::<f64>() * domain.width())
            .filter(|&x| domain.contains(x))
            .collect();
        if pts.len() < m {
            continue;
        }
        pts.sort_by(f64::total_cmp);
        if pts.windows(2).all(|w| w[1] - w[0] >= sep) {
            return pts;
        }
    }
}

/// Worst Lebesgue value found for one center set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LebesgueWitness {
    pub worst: f64,
    pub centers: Vec<f64>,
    pub query: f64,
}

/// One row of the per-trial CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub m: usize,
    pub trial: usize,
    pub worst: f64,
}

#[derive(Debug, Clone)]
struct TrialProbe {
    witness: LebesgueWitness,
    cond: f64,
    cholesky: bool,
}

#[derive(Debug, Clone)]
struct TrialOutcome {
    m: usize,
    trial: usize,
    centers: Vec<f64>,
    probe: std::result::Result<TrialProbe, String>,
}

fn run_trials<G: ScalarKernel>(kernel: &OperatorKernel<G>, cfg: &CertificationConfig) -> Result<Vec<TrialOutcome>> {
    cfg.validate()?;
    let domain = bounded_domain(kernel)?;
    let grid = domain.interior_grid(cfg.grid_size);
    let jobs: Vec<(usize, usize)> =
        (1..=cfg.max_centers).flat_map(|m| (0..cfg.trials).map(move |t| (m, t))).collect();
    Ok(jobs
        .into_par_iter()
        .map(|(m, trial)| {
            let centers = draw_centers(domain, m, &mut trial_rng(cfg.seed, m, trial));
            let probe = match LebesgueFunction::new(kernel, &centers) {
                Ok(f) => {
                    let (query, worst) = f.sup_on_grid(&grid, domain);
                    Ok(TrialProbe {
                        witness: LebesgueWitness { worst, centers: centers.clone(), query },
                        cond: f.system().condition_number(),
                        cholesky: f.system().is_cholesky(),
                    })
                }
                Err(Error::Singular(msg)) => Err(msg),
                // centers come from the sampler, so only singularity can fail here
                Err(other) => Err(other.to_string()),
            };
            TrialOutcome { m, trial, centers, probe }
        })
        .collect())
}

/// Result of a Lebesgue-constant scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOutcome {
    pub worst: LebesgueWitness,
    /// Center sets probed.
    pub center_sets: usize,
    #[serde(skip)]
    pub rows: Vec<ScanRow>,
}

fn reduce_worst<'a>(probes: impl Iterator<Item = &'a TrialProbe>) -> Option<LebesgueWitness> {
    // first maximum in (m, trial) order wins ties, independent of scheduling
    probes
        .fold(None::<&TrialProbe>, |best, p| match best {
            Some(b) if b.witness.worst >= p.witness.worst => Some(b),
            _ => Some(p),
        })
        .map(|p| p.witness.clone())
}

/// Seeded sup of the Lebesgue function over random center sets (`m = 1..=max_centers`)
/// and grid-plus-refinement queries. A singular center set is an error
/// carrying that set.
pub fn lebesgue_scan<G: ScalarKernel>(kernel: &OperatorKernel<G>, cfg: &CertificationConfig) -> Result<ScanOutcome> {
    let outcomes = run_trials(kernel, cfg)?;
    if let Some(bad) = outcomes.iter().find(|o| o.probe.is_err()) {
        return Err(Error::Singular(format!(
            "{} at centers {:?}",
            bad.probe.as_ref().unwrap_err(),
            bad.centers
        )));
    }
    let probes: Vec<&TrialProbe> = outcomes.iter().filter_map(|o| o.probe.as_ref().ok()).collect();
    let rows = outcomes
        .iter()
        .map(|o| ScanRow { m: o.m, trial: o.trial, worst: o.probe.as_ref().unwrap().witness.worst })
        .collect();
    Ok(ScanOutcome {
        worst: reduce_worst(probes.into_iter()).expect("at least one trial"),
        center_sets: outcomes.len(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Follows from the product structure (A3 via strict positive definiteness).
    Implied,
    NotDirectlyTestable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A1Evidence {
    pub worst_cond: f64,
    pub worst_cond_centers: Vec<f64>,
    pub center_sets: usize,
    /// Center sets whose Gram was numerically singular.
    pub singular: Vec<Vec<f64>>,
    /// Sets that needed the LU fallback although the family claims strict
    /// positive definiteness.
    pub cholesky_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A2Evidence {
    pub kappa: f64,
    pub scalar_sup: f64,
    pub coupling_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A4Evidence {
    pub worst: f64,
    pub centers: Vec<f64>,
    pub query: f64,
    pub center_sets: usize,
    pub grid_size: usize,
    pub refine_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub a1: Status,
    pub a2: Status,
    pub a3: Status,
    pub a4: Status,
    pub admissible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub kernel: serde_json::Value,
    pub config: CertificationConfig,
    pub a1: A1Evidence,
    pub a2: A2Evidence,
    pub a4: A4Evidence,
    pub verdict: Verdict,
    #[serde(skip)]
    pub rows: Vec<ScanRow>,
}

/// Estimates `sup |G(x, y)|` over the domain: a coarse pair grid, then the
/// diagonal with refinement (for positive definite kernels the sup sits on
/// the diagonal since `|G(x,y)|² ≤ G(x,x)·G(y,y)`).
pub fn scalar_sup<G: ScalarKernel + ?Sized>(kernel: &G, grid_size: usize) -> Result<f64> {
    let domain = kernel.domain();
    if !domain.is_bounded() {
        return Err(Error::Config("scans need a bounded domain; give the kernel a finite interval".into()));
    }
    let coarse = domain.interior_grid(grid_size.min(128));
    let mut sup = 0.0f64;
    for &x in &coarse {
        for &y in &coarse {
            sup = sup.max(kernel.value(x, y).abs());
        }
    }
    let diag = domain.interior_grid(grid_size);
    let (_, d) = probe_and_refine(&diag, domain.lo, domain.hi, 60, true, |x| kernel.value(x, x).abs());
    Ok(sup.max(d))
}

/// Runs the A1/A2/A4 probes and assembles the verdict. Singular Grams are
/// report entries (A1 failures), not errors.
pub fn certify<G: ScalarKernel>(kernel: &OperatorKernel<G>, cfg: &CertificationConfig) -> Result<CertificationReport> {
    let outcomes = run_trials(kernel, cfg)?;

    let mut a1 = A1Evidence {
        worst_cond: 0.0,
        worst_cond_centers: Vec::new(),
        center_sets: outcomes.len(),
        singular: Vec::new(),
        cholesky_failures: 0,
    };
    for o in &outcomes {
        match &o.probe {
            Ok(p) => {
                if p.cond > a1.worst_cond {
                    a1.worst_cond = p.cond;
                    a1.worst_cond_centers = o.centers.clone();
                }
                if !p.cholesky && kernel.scalar.strictly_positive_definite() {
                    a1.cholesky_failures += 1;
                }
            }
            Err(_) => a1.singular.push(o.centers.clone()),
        }
    }
    if !a1.singular.is_empty() {
        a1.worst_cond = f64::INFINITY;
    }

    let sup = scalar_sup(&kernel.scalar, cfg.grid_size)?;
    let coupling_norm = kernel.coupling.operator_norm(kernel.p);
    let a2 = A2Evidence { kappa: sup * coupling_norm, scalar_sup: sup, coupling_norm };

    let probes = outcomes.iter().filter_map(|o| o.probe.as_ref().ok());
    let a4 = match reduce_worst(probes) {
        Some(w) => A4Evidence {
            worst: w.worst,
            centers: w.centers,
            query: w.query,
            center_sets: outcomes.len() - a1.singular.len(),
            grid_size: cfg.grid_size,
            refine_iterations: REFINE_ITERATIONS,
        },
        None => A4Evidence {
            worst: f64::INFINITY,
            centers: Vec::new(),
            query: f64::NAN,
            center_sets: 0,
            grid_size: cfg.grid_size,
            refine_iterations: REFINE_ITERATIONS,
        },
    };

    let pass = |ok: bool| if ok { Status::Pass } else { Status::Fail };
    let verdict_a1 = pass(a1.singular.is_empty() && a1.cholesky_failures == 0);
    let verdict_a2 = pass(a2.kappa.is_finite());
    let verdict_a3 = if kernel.scalar.strictly_positive_definite() {
        Status::Implied
    } else {
        Status::NotDirectlyTestable
    };
    let verdict_a4 = pass(a4.worst <= 1.0 + cfg.tolerance);
    let admissible = verdict_a1 == Status::Pass
        && verdict_a2 == Status::Pass
        && verdict_a3 == Status::Implied
        && verdict_a4 == Status::Pass;

    let rows = outcomes
        .iter()
        .map(|o| ScanRow {
            m: o.m,
            trial: o.trial,
            worst: o.probe.as_ref().map_or(f64::INFINITY, |p| p.witness.worst),
        })
        .collect();

    Ok(CertificationReport {
        kernel: kernel.describe(),
        config: *cfg,
        a1,
        a2,
        a4,
        verdict: Verdict { a1: verdict_a1, a2: verdict_a2, a3: verdict_a3, a4: verdict_a4, admissible },
        rows,
    })
}
