//! Command-line front end: argument parsing, instance manifests and the
//! exit-code contract (0 success, 1 configuration or I/O, 2 numerical).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::analysis::{self, ConvergenceConstants};
use crate::error::{Error, Result};
use crate::harness::{self, ExperimentSpec, Msnr, SolverKind};
use crate::io;
use crate::penalty::Penalty;
use crate::pinv::{self, ProjMode, SensingModel};
use crate::solver::{self, SolverConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;

pub fn exit_code(err: &Error) -> u8 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

#[derive(Debug, Parser)]
#[command(name = "pgg", version, about = "Sparse recovery with projected generalized gradients")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recover one instance described by a JSON manifest.
    Solve(SolveArgs),
    /// Success probability versus sparsity.
    Phase(SweepArgs),
    /// Recovery SNR over a step size by noise level grid.
    Rsnr(SweepArgs),
    /// Convergence constants and error bounds of an instance.
    Analyze(AnalyzeArgs),
    /// Precision of each Ben-Israel step for a matrix.
    PinvReport(PinvArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance manifest (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    /// Result JSON; the estimate goes next to it as `<stem>.x_hat.bin`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub solver: Option<SolverKind>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Penalty as JSON, e.g. `{"kind":"mcp","sigma":2}`.
    #[arg(long)]
    pub penalty: Option<String>,
    #[arg(long)]
    pub max_iters: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Experiment spec (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides `base_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long)]
    pub solver: Option<SolverKind>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// dB value or `inf`.
    #[arg(long)]
    pub msnr: Option<Msnr>,
    #[arg(long)]
    pub penalty: Option<String>,
    #[arg(long)]
    pub max_iters: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Instance manifest (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Assumed null space constant.
    #[arg(long, default_value_t = harness::DEFAULT_GAMMA)]
    pub gamma: f64,
    /// Initial distance bound; measured from `x_star` when omitted.
    #[arg(long = "m0")]
    pub m0: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub penalty: Option<String>,
    /// Distance of the signal to the nearest sparse one.
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
}

#[derive(Debug, Args)]
pub struct PinvArgs {
    /// Matrix file (binary or `.csv`).
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, default_value_t = 6)]
    pub steps: usize,
    #[arg(long, default_value_t = pinv::BEN_ISRAEL_SCALE)]
    pub scale: f64,
    /// CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn default_projection() -> ProjMode {
    ProjMode::Exact
}

/// Problem instance on disk. Relative paths resolve against the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(rename = "A")]
    pub a: PathBuf,
    pub y: PathBuf,
    #[serde(default)]
    pub x_star: Option<PathBuf>,
    pub penalty: Penalty,
    pub config: SolverConfig,
    #[serde(default = "default_projection")]
    pub projection: ProjMode,
    /// Overrides the projection when set: `omp`, `irls`, `l1`, ...
    #[serde(default)]
    pub solver: Option<SolverKind>,
}

pub struct Instance {
    pub manifest: Manifest,
    pub a: DMatrix<f64>,
    pub y: DVector<f64>,
    pub x_star: Option<DVector<f64>>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let a = io::read_matrix(resolve(base, &manifest.a))?;
    let y = io::read_vector(resolve(base, &manifest.y))?;
    let x_star = manifest
        .x_star
        .as_ref()
        .map(|p| io::read_vector(resolve(base, p)))
        .transpose()?;
    if y.len() != a.nrows() {
        return Err(Error::Dimension(format!("y has length {}, A has {} rows", y.len(), a.nrows())));
    }
    if let Some(x) = &x_star {
        if x.len() != a.ncols() {
            return Err(Error::Dimension(format!("x_star has length {}, A has {} columns", x.len(), a.ncols())));
        }
    }
    Ok(Instance { manifest, a, y, x_star })
}

fn parse_penalty(text: &str) -> Result<Penalty> {
    let p: Penalty = serde_json::from_str(text)?;
    p.validate()?;
    Ok(p)
}

fn build_model(a: DMatrix<f64>, mode: ProjMode) -> Result<SensingModel> {
    match mode {
        ProjMode::Exact => SensingModel::exact(a),
        ProjMode::Approx { steps } => SensingModel::ben_israel(a, steps),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub x_hat_path: PathBuf,
    pub iters_run: usize,
    pub final_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rsnr: Option<f64>,
}

pub fn x_hat_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "result".into());
    out.with_file_name(format!("{stem}.x_hat.bin"))
}

pub fn run_solve(args: &SolveArgs) -> Result<SolveReport> {
    let mut inst = load_instance(&args.spec)?;
    let m = &mut inst.manifest;
    if let Some(p) = &args.penalty {
        m.penalty = parse_penalty(p)?;
    }
    if let Some(k) = args.kappa {
        m.config.kappa = k;
    }
    if let Some(n) = args.max_iters {
        m.config.max_iters = n;
    }
    if let Some(s) = args.solver {
        m.solver = Some(s);
    }
    m.config.validate()?;
    m.penalty.validate()?;
    let m = inst.manifest.clone();
    let result = match m.solver {
        Some(SolverKind::Omp) => {
            let k = inst
                .x_star
                .as_ref()
                .map(|x| x.iter().filter(|v| **v != 0.0).count())
                .ok_or_else(|| Error::Invalid("omp needs x_star to fix the sparsity".into()))?;
            solver::omp_solve(&inst.a, &inst.y, k)?
        }
        Some(SolverKind::Irls { p }) => solver::irls_solve(
            &inst.a,
            &inst.y,
            p,
            &solver::default_eps_schedule(),
            solver::DEFAULT_IRLS_INNER,
        )?,
        Some(SolverKind::L1) => solver::l1_solve(&SensingModel::exact(inst.a)?, &inst.y, &m.config)?,
        Some(SolverKind::Pgg) => solver::pgg_solve(&SensingModel::exact(inst.a)?, &m.penalty, &inst.y, &m.config)?,
        Some(SolverKind::Apgg { steps }) => {
            solver::apgg_solve(&SensingModel::ben_israel(inst.a, steps)?, &m.penalty, &inst.y, &m.config)?
        }
        None => {
            let model = build_model(inst.a, m.projection)?;
            solver::projected_solve(&model, &m.penalty, &inst.y, &m.config, None)?
        }
    };
    let path = x_hat_path(&args.out);
    io::write_vector_bin(&path, &result.x_hat)?;
    let report = SolveReport {
        x_hat_path: path,
        iters_run: result.iters_run,
        final_residual: result.final_residual,
        rsnr: inst.x_star.as_ref().map(|x| harness::rsnr_db(&result.x_hat, x)),
    };
    std::fs::write(&args.out, serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

pub fn sweep_spec(args: &SweepArgs) -> Result<ExperimentSpec> {
    let mut spec: ExperimentSpec = serde_json::from_str(&std::fs::read_to_string(&args.spec)?)?;
    if let Some(s) = args.seed {
        spec.base_seed = s;
    }
    if let Some(s) = args.solver {
        spec.solver = s;
    }
    if let Some(k) = args.kappa {
        spec.kappa = vec![k];
    }
    if let Some(m) = args.msnr {
        spec.msnr = vec![m];
    }
    if let Some(p) = &args.penalty {
        spec.penalties = vec![parse_penalty(p)?];
    }
    if let Some(n) = args.max_iters {
        spec.max_iters = Some(n);
        spec.kappa_iters = None;
    }
    spec.validate()?;
    Ok(spec)
}

pub fn run_sweep(args: &SweepArgs, phase: bool) -> Result<harness::ExperimentOutput> {
    let spec = sweep_spec(args)?;
    let out = harness::with_jobs(args.jobs, || {
        if phase {
            harness::run_phase(&spec)
        } else {
            harness::run_rsnr_sweep(&spec)
        }
    })??;
    std::fs::create_dir_all(&args.out)?;
    out.write_trials_csv(args.out.join("trials.csv"))?;
    out.write_aggregate_csv(args.out.join("aggregate.csv"))?;
    if phase {
        std::fs::write(args.out.join("kmax.json"), serde_json::to_string_pretty(&out.kmax)?)?;
    }
    std::fs::write(args.out.join("spec.json"), serde_json::to_string_pretty(&spec)?)?;
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bounds {
    pub pgg: f64,
    pub apgg: f64,
    pub compressible: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyzeReport {
    #[serde(flatten)]
    pub constants: ConvergenceConstants,
    pub penalty: Penalty,
    pub nonconvexity: f64,
    pub kappa: f64,
    pub noise_norm: f64,
    pub tau: f64,
    pub theorem3_ok: bool,
    pub theorem3_margin: f64,
    pub bounds: Bounds,
}

pub fn run_analyze(args: &AnalyzeArgs) -> Result<AnalyzeReport> {
    if !(0.0..1.0).contains(&args.gamma) {
        return Err(Error::NullSpaceViolated(args.gamma));
    }
    let inst = load_instance(&args.spec)?;
    let pen = match &args.penalty {
        Some(p) => parse_penalty(p)?,
        None => inst.manifest.penalty,
    };
    let kappa = args.kappa.unwrap_or(inst.manifest.config.kappa);
    let n = inst.a.ncols();
    let model = build_model(inst.a.clone(), inst.manifest.projection)?;
    let m0 = match (args.m0, &inst.x_star) {
        (Some(m0), _) => m0,
        (None, Some(x)) => (solver::initial_point(&model, &inst.y) - x).norm(),
        (None, None) => return Err(Error::Invalid("M0 is required when x_star is absent".into())),
    };
    let noise_norm = inst.x_star.as_ref().map_or(0.0, |x| (&inst.y - &inst.a * x).norm());
    let consts = analysis::constants(&pen, &model, args.gamma, m0, n)?;
    let check = analysis::check_theorem3(&pen, &consts);
    Ok(AnalyzeReport {
        bounds: Bounds {
            pgg: analysis::error_bound_pgg(&consts, consts.alpha, n, kappa, noise_norm),
            apgg: analysis::error_bound_apgg(&consts, kappa, noise_norm),
            compressible: analysis::error_bound_compressible(&consts, kappa, noise_norm, args.tau, consts.norm_a),
        },
        constants: consts,
        penalty: pen,
        nonconvexity: pen.nonconvexity(),
        kappa,
        noise_norm,
        tau: args.tau,
        theorem3_ok: check.ok,
        theorem3_margin: check.margin,
    })
}

pub fn run_pinv_report(args: &PinvArgs) -> Result<String> {
    let a = io::read_matrix(&args.matrix)?;
    let steps = pinv::ben_israel_report(&a, args.steps, args.scale)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in &steps {
        w.serialize(s)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

/// Executes a parsed command.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Solve(a) => run_solve(a).map(drop),
        Command::Phase(a) => run_sweep(a, true).map(drop),
        Command::Rsnr(a) => run_sweep(a, false).map(drop),
        Command::Analyze(a) => {
            let report = run_analyze(a)?;
            emit(a.out.as_deref(), &serde_json::to_string_pretty(&report)?)
        }
        Command::PinvReport(a) => {
            let text = run_pinv_report(a)?;
            emit(a.out.as_deref(), text.trim_end())
        }
    }
}
