//! Command-line front end. `run` parses argv, reads every input, then
//! computes and writes outputs atomically.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 mathematical failure
//! (singular Gram, rank loss, nonconvergence, or an A4 failure under
//! `certify --strict`).

use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::Serialize;

use crate::admissibility::{certify, lebesgue_profile, lebesgue_scan, CertificationConfig, Status};
use crate::blocklinalg::BlockVector;
use crate::error::{Error, Result};
use crate::io::{format_csv, read_points_csv, read_training_csv, write_atomic, TrainingData};
use crate::kernels::{GroupExponent, Interval, OperatorKernel, ScalarKernelSpec, TaskCoupling};
use crate::solvers::{
    fit_regularized, group_basis_pursuit, min_norm_interpolant, AdmmSettings, FitModel, LearnConfig, Loss,
};

#[derive(Parser, Debug)]
#[command(name = "rkbs", version, about = "Vector-valued kernel Banach spaces with group-lasso norms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Regularized learning: loss + λ‖C‖_{p,1} over the training sites.
    Fit(FitArgs),
    /// Exact minimal-norm interpolation of the training data.
    Interpolate(InterpolateArgs),
    /// Evaluate a saved model at the x column of a CSV file.
    Predict(PredictArgs),
    /// Numeric admissibility certificate for a kernel.
    Certify(CertifyArgs),
    /// Worst Lebesgue constant over random center sets, or the profile of one set.
    LebesgueScan(ScanArgs),
    /// Group basis pursuit over the training sites plus extra centers.
    Pursuit(PursuitArgs),
}

#[derive(Args, Debug, Clone)]
struct KernelArgs {
    /// tfamily | brownian_bridge | wendland | exponential | combination
    #[arg(long, conflicts_with = "kernel_json")]
    kernel: Option<String>,
    /// Kernel description as written in a model file or report.
    #[arg(long, value_name = "PATH")]
    kernel_json: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    /// C1,C2 for the combination family.
    #[arg(long, value_name = "C1,C2")]
    weights: Option<String>,
    /// lo,hi; "inf" and "-inf" allowed.
    #[arg(long, value_name = "LO,HI", allow_hyphen_values = true)]
    domain: Option<String>,
    /// Group exponent: 1, 2, any p ≥ 1, or inf.
    #[arg(long, default_value = "2")]
    p: GroupExponent,
    /// identity:n or a CSV file holding an SPD matrix.
    #[arg(long, default_value = "identity:1")]
    coupling: String,
}

#[derive(Args, Debug, Clone)]
struct CertArgs {
    #[arg(long, default_value_t = CertificationConfig::default().max_centers)]
    max_centers: usize,
    #[arg(long, default_value_t = CertificationConfig::default().grid_size)]
    grid: usize,
    #[arg(long, default_value_t = CertificationConfig::default().trials)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = CertificationConfig::default().tolerance)]
    tolerance: f64,
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Leave out meta.generated_at so identical invocations give identical bytes.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long, value_name = "PATH")]
    data: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    lambda: f64,
    /// Extra λ values; one (λ, norm, objective) row each goes to --path-csv.
    #[arg(long, value_name = "L1,L2,...", requires = "path_csv")]
    lambda_grid: Option<String>,
    #[arg(long, value_name = "PATH")]
    path_csv: Option<PathBuf>,
    /// squared | absolute
    #[arg(long, default_value = "squared")]
    loss: String,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    no_restart: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct InterpolateArgs {
    #[arg(long, value_name = "PATH")]
    data: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    #[arg(long, value_name = "PATH")]
    points: PathBuf,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    cert: CertArgs,
    /// (m, trial, worst) rows.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Exit 2 when A4 fails.
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    cert: CertArgs,
    /// Fixed center set; switches to a (query, Λ) profile on --grid points.
    #[arg(long, value_name = "X1,X2,...")]
    centers: Option<String>,
    /// (m, trial, worst) rows, or (query, lambda) rows with --centers.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct PursuitArgs {
    #[arg(long, value_name = "PATH")]
    data: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long, value_name = "X1,X2,...", default_value = "")]
    extra_centers: String,
    #[arg(long, default_value_t = AdmmSettings::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = AdmmSettings::default().max_iters)]
    max_iters: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Serialize)]
struct Meta {
    version: &'static str,
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at: Option<String>,
}

impl Meta {
    fn new(command: &'static str, seed: Option<u64>, output: &OutputArgs) -> Self {
        Meta { version: env!("CARGO_PKG_VERSION"), command, seed, generated_at: timestamp(output) }
    }
}

fn timestamp(output: &OutputArgs) -> Option<String> {
    (!output.deterministic).then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true))
}

/// Runs one invocation. `argv[0]` is the program name.
pub fn run<I: IntoIterator<Item = String>>(argv: I) -> i32 {
    let argv: Vec<String> = argv.into_iter().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            if code != 0 {
                eprintln!("\n{}", grammar(argv.get(1).map(String::as_str)));
            }
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_mathematical() {
                2
            } else {
                if matches!(e, Error::Config(_)) {
                    eprintln!("\n{}", grammar(argv.get(1).map(String::as_str)));
                }
                1
            }
        }
    }
}

/// Flag grammar of the named subcommand, or of the whole tool.
fn grammar(subcommand: Option<&str>) -> String {
    let mut cmd = Cli::command();
    match subcommand.and_then(|name| cmd.find_subcommand_mut(name)) {
        Some(sub) => sub.clone().bin_name(format!("rkbs {}", sub.get_name())).render_help().to_string(),
        None => cmd.render_help().to_string(),
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Fit(a) => fit(a),
        Command::Interpolate(a) => interpolate(a),
        Command::Predict(a) => predict(a),
        Command::Certify(a) => run_certify(a),
        Command::LebesgueScan(a) => scan(a),
        Command::Pursuit(a) => pursuit(a),
    }
}

fn parse_list(s: &str, flag: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_real(t).map_err(|_| Error::Config(format!("{flag}: '{t}' is not a number"))))
        .collect()
}

fn parse_real(s: &str) -> std::result::Result<f64, ()> {
    match s {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse::<f64>().map_err(|_| ()),
    }
}

fn build_kernel(k: &KernelArgs) -> Result<OperatorKernel> {
    if let Some(path) = &k.kernel_json {
        let text = std::fs::read_to_string(path)?;
        return Ok(serde_json::from_str(&text)?);
    }
    let family = k
        .kernel
        .as_deref()
        .ok_or_else(|| Error::Config("one of --kernel or --kernel-json is required".into()))?;
    let weights = match &k.weights {
        Some(w) => match parse_list(w, "--weights")?.as_slice() {
            &[c1, c2] => Some([c1, c2]),
            _ => return Err(Error::Config("--weights takes exactly two values".into())),
        },
        None => None,
    };
    let domain = match &k.domain {
        Some(d) => match parse_list(d, "--domain")?.as_slice() {
            &[lo, hi] => Some(Interval::new(lo, hi)?),
            _ => return Err(Error::Config("--domain takes lo,hi".into())),
        },
        None => None,
    };
    let scalar = ScalarKernelSpec::from_parts(family, k.t, weights, domain)?;
    Ok(OperatorKernel::new(scalar, parse_coupling(&k.coupling)?, k.p))
}

fn parse_coupling(s: &str) -> Result<TaskCoupling> {
    if let Some(n) = s.strip_prefix("identity:") {
        let n: usize = n
            .parse()
            .map_err(|_| Error::Config(format!("--coupling identity:n needs a positive integer, got '{n}'")))?;
        return TaskCoupling::identity(n);
    }
    TaskCoupling::from_csv(Path::new(s))
}

fn cert_config(c: &CertArgs) -> Result<CertificationConfig> {
    let cfg = CertificationConfig {
        max_centers: c.max_centers,
        grid_size: c.grid,
        trials: c.trials,
        seed: c.seed,
        tolerance: c.tolerance,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn targets(data: &TrainingData, kernel: &OperatorKernel) -> Result<BlockVector> {
    if data.tasks() != kernel.n() {
        return Err(Error::Config(format!(
            "data has {} target columns but the coupling is {}x{}",
            data.tasks(),
            kernel.n(),
            kernel.n()
        )));
    }
    BlockVector::new(data.y.clone(), kernel.n(), kernel.p)
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let bytes = json_bytes(value)?;
    match out {
        Some(path) => write_atomic(path, &bytes),
        None => {
            print!("{}", String::from_utf8_lossy(&bytes));
            Ok(())
        }
    }
}

fn save_model(mut model: FitModel, output: &OutputArgs) -> Result<FitModel> {
    model.meta.generated_at = timestamp(output);
    emit_json(output.out.as_deref(), &model)?;
    Ok(model)
}

fn fit(a: FitArgs) -> Result<i32> {
    let kernel = build_kernel(&a.kernel)?;
    let data = read_training_csv(&a.data)?;
    let y = targets(&data, &kernel)?;
    let loss: Loss = a.loss.parse()?;
    let grid = match &a.lambda_grid {
        Some(g) => parse_list(g, "--lambda-grid")?,
        None => Vec::new(),
    };
    let config = |lambda: f64| -> LearnConfig {
        let mut cfg = LearnConfig::new(lambda);
        cfg.loss = loss;
        cfg.restart = !a.no_restart;
        if let Some(n) = a.max_iters {
            cfg.max_iters = n;
        }
        cfg.tol = match (a.tol, loss) {
            (Some(t), _) => t,
            (None, Loss::Squared) => cfg.tol,
            (None, Loss::Absolute) => AdmmSettings::default().tol,
        };
        if loss == Loss::Absolute && a.max_iters.is_none() {
            cfg.max_iters = AdmmSettings::default().max_iters;
        }
        cfg
    };
    let cfg = config(a.lambda);
    cfg.validate()?;
    for &l in &grid {
        config(l).validate()?;
    }

    let model = save_model(fit_regularized(&kernel, &data.x, &y, &cfg)?, &a.output)?;
    if a.output.out.is_some() {
        println!(
            "fit: solver {} iterations {} norm {:?} objective {:?}",
            model.meta.solver,
            model.meta.iterations,
            model.norm_lp1,
            model.meta.objective.unwrap_or(f64::NAN)
        );
    }
    if let Some(path) = &a.path_csv {
        let mut rows = Vec::with_capacity(grid.len());
        for &l in &grid {
            let m = fit_regularized(&kernel, &data.x, &y, &config(l))?;
            rows.push(vec![l, m.norm_lp1, m.meta.objective.unwrap_or(f64::NAN)]);
        }
        let header = ["lambda", "norm", "objective"].map(String::from);
        write_atomic(path, format_csv(&header, rows).as_bytes())?;
    }
    Ok(0)
}

fn interpolate(a: InterpolateArgs) -> Result<i32> {
    let kernel = build_kernel(&a.kernel)?;
    let data = read_training_csv(&a.data)?;
    let y = targets(&data, &kernel)?;
    let model = save_model(min_norm_interpolant(&kernel, &data.x, &y)?, &a.output)?;
    if a.output.out.is_some() {
        println!("interpolate: {} centers norm {:?}", model.centers.len(), model.norm_lp1);
    }
    Ok(0)
}

fn predict(a: PredictArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&a.model)?;
    let model: FitModel = serde_json::from_str(&text)?;
    let points = read_points_csv(&a.points)?;
    let preds = model.predict_many(&points)?;
    let mut header = vec!["x".to_string()];
    header.extend((1..=model.kernel.n()).map(|k| format!("y{k}")));
    let rows = points.iter().zip(preds).map(|(&x, mut p)| {
        p.insert(0, x);
        p
    });
    let csv = format_csv(&header, rows);
    match &a.out {
        Some(path) => write_atomic(path, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    Ok(0)
}

fn scan_rows_csv(rows: &[crate::admissibility::ScanRow]) -> String {
    let mut out = String::from("m,trial,worst\n");
    for r in rows {
        out.push_str(&format!("{},{},{:?}\n", r.m, r.trial, r.worst));
    }
    out
}

fn run_certify(a: CertifyArgs) -> Result<i32> {
    let kernel = build_kernel(&a.kernel)?;
    let cfg = cert_config(&a.cert)?;
    let report = certify(&kernel, &cfg)?;

    #[derive(Serialize)]
    struct Doc<'a> {
        #[serde(flatten)]
        report: &'a crate::admissibility::CertificationReport,
        meta: Meta,
    }
    let doc = Doc { report: &report, meta: Meta::new("certify", Some(cfg.seed), &a.output) };
    emit_json(a.output.out.as_deref(), &doc)?;
    if let Some(path) = &a.csv {
        write_atomic(path, scan_rows_csv(&report.rows).as_bytes())?;
    }
    let v = &report.verdict;
    if a.output.out.is_some() {
        println!(
            "certify: A1 {:?} A2 {:?} A3 {:?} A4 {:?} worst {:?} admissible {}",
            v.a1, v.a2, v.a3, v.a4, report.a4.worst, v.admissible
        );
    }
    if a.strict && v.a4 == Status::Fail {
        eprintln!(
            "A4 failed: Lebesgue constant {:?} at query {:?} for centers {:?}",
            report.a4.worst, report.a4.query, report.a4.centers
        );
        return Ok(2);
    }
    Ok(0)
}

fn scan(a: ScanArgs) -> Result<i32> {
    let kernel = build_kernel(&a.kernel)?;
    let cfg = cert_config(&a.cert)?;

    if let Some(list) = &a.centers {
        let mut centers = parse_list(list, "--centers")?;
        centers.sort_by(f64::total_cmp);
        let profile = lebesgue_profile(&kernel, &centers, cfg.grid_size)?;
        let (query, value) = profile
            .iter()
            .copied()
            .fold((f64::NAN, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });

        #[derive(Serialize)]
        struct Peak {
            query: f64,
            value: f64,
        }
        #[derive(Serialize)]
        struct Doc {
            kernel: serde_json::Value,
            centers: Vec<f64>,
            grid_size: usize,
            max: Peak,
            meta: Meta,
        }
        let doc = Doc {
            kernel: kernel.describe(),
            centers,
            grid_size: cfg.grid_size,
            max: Peak { query, value },
            meta: Meta::new("lebesgue-scan", None, &a.output),
        };
        emit_json(a.output.out.as_deref(), &doc)?;
        if let Some(path) = &a.csv {
            let header = ["query", "lambda"].map(String::from);
            write_atomic(path, format_csv(&header, profile.into_iter().map(|(q, l)| vec![q, l])).as_bytes())?;
        }
        return Ok(0);
    }

    let outcome = lebesgue_scan(&kernel, &cfg)?;

    #[derive(Serialize)]
    struct Doc<'a> {
        kernel: serde_json::Value,
        config: &'a CertificationConfig,
        worst: &'a crate::admissibility::LebesgueWitness,
        center_sets: usize,
        meta: Meta,
    }
    let doc = Doc {
        kernel: kernel.describe(),
        config: &cfg,
        worst: &outcome.worst,
        center_sets: outcome.center_sets,
        meta: Meta::new("lebesgue-scan", Some(cfg.seed), &a.output),
    };
    emit_json(a.output.out.as_deref(), &doc)?;
    if let Some(path) = &a.csv {
        write_atomic(path, scan_rows_csv(&outcome.rows).as_bytes())?;
    }
    if a.output.out.is_some() {
        println!(
            "lebesgue-scan: worst {:?} over {} center sets",
            outcome.worst.worst, outcome.center_sets
        );
    }
    Ok(0)
}

fn pursuit(a: PursuitArgs) -> Result<i32> {
    let kernel = build_kernel(&a.kernel)?;
    let data = read_training_csv(&a.data)?;
    let y = targets(&data, &kernel)?;
    let mut centers = data.x.clone();
    centers.extend(parse_list(&a.extra_centers, "--extra-centers")?);
    centers.sort_by(f64::total_cmp);
    let settings = AdmmSettings { tol: a.tol, max_iters: a.max_iters, ..AdmmSettings::default() };
    settings.validate()?;
    let model = group_basis_pursuit(&kernel, &centers, &data.x, &y, &settings)?;
    let model = save_model(model, &a.output)?;
    if a.output.out.is_some() {
        println!(
            "pursuit: {} centers norm {:?} iterations {}",
            model.centers.len(),
            model.norm_lp1,
            model.meta.iterations
        );
    }
    Ok(0)
}
