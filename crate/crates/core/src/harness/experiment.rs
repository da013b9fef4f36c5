//! Monte Carlo sweeps over sparsity, penalty, step size and noise level.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use super::generate::{ci95, derive_seed, gen_matrix, gen_noise, gen_signal, rsnr_db, Msnr, NonzeroDist};
use crate::analysis;
use crate::error::{Error, Result};
use crate::penalty::Penalty;
use crate::pinv::SensingModel;
use crate::solver::{self, SolverConfig};

/// Ceiling on the default iteration budget.
pub const MAX_DEFAULT_ITERS: u64 = 2_000_000;
pub const DEFAULT_GAMMA: f64 = 0.5;

const TAG_MATRIX: u64 = 0;
const TAG_SIGNAL: u64 = 1;
const TAG_NOISE: u64 = 2;
const TAG_SHARED: u64 = 0x5348_4152_4544;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverKind {
    Pgg,
    Apgg { steps: usize },
    Omp,
    Irls {
        #[serde(default = "default_irls_p")]
        p: f64,
    },
    L1,
}

fn default_irls_p() -> f64 {
    0.5
}

impl SolverKind {
    /// Whether the penalty list and non-convexity grid apply.
    pub fn uses_penalty(self) -> bool {
        matches!(self, SolverKind::Pgg | SolverKind::Apgg { .. })
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverKind::Pgg => f.write_str("pgg"),
            SolverKind::Apgg { steps } => write!(f, "apgg({steps})"),
            SolverKind::Omp => f.write_str("omp"),
            SolverKind::Irls { p } => write!(f, "irls({p})"),
            SolverKind::L1 => f.write_str("l1"),
        }
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    /// Accepts `pgg`, `apgg`, `apgg:4`, `apgg(4)`, `omp`, `irls`,
    /// `irls:0.5`, `irls(0.5)` and `l1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, arg) = match s.find([':', '(']) {
            Some(i) => (&s[..i], Some(s[i + 1..].trim_end_matches(')'))),
            None => (s.as_str(), None),
        };
        let bad = || Error::Invalid(format!("unknown solver `{s}`"));
        match (name, arg) {
            ("pgg", None) => Ok(SolverKind::Pgg),
            ("apgg", None) => Ok(SolverKind::Apgg { steps: 4 }),
            ("apgg", Some(k)) => Ok(SolverKind::Apgg { steps: k.parse().map_err(|_| bad())? }),
            ("omp", None) => Ok(SolverKind::Omp),
            ("irls", None) => Ok(SolverKind::Irls { p: default_irls_p() }),
            ("irls", Some(p)) => Ok(SolverKind::Irls { p: p.parse().map_err(|_| bad())? }),
            ("l1", None) => Ok(SolverKind::L1),
            _ => Err(bad()),
        }
    }
}

/// Sparsity levels: a single value, an inclusive range or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KSpec {
    Single(usize),
    Range { from: usize, to: usize },
    List(Vec<usize>),
}

impl KSpec {
    pub fn values(&self) -> Vec<usize> {
        match self {
            KSpec::Single(k) => vec![*k],
            KSpec::Range { from, to } => (*from..=*to).collect(),
            KSpec::List(v) => v.clone(),
        }
    }
}

fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Either<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match Either::<T>::deserialize(d)? {
        Either::One(v) => vec![v],
        Either::Many(v) => v,
    })
}

fn default_penalties() -> Vec<Penalty> {
    vec![Penalty::abs()]
}

fn default_msnr() -> Vec<Msnr> {
    vec![Msnr::Noiseless]
}

fn default_threshold() -> f64 {
    40.0
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

fn default_solver() -> SolverKind {
    SolverKind::Pgg
}

fn default_id() -> String {
    "experiment".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(default = "default_id")]
    pub experiment_id: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: KSpec,
    pub nonzero_dist: NonzeroDist,
    #[serde(default = "default_penalties", deserialize_with = "one_or_many")]
    pub penalties: Vec<Penalty>,
    /// Applied through argument scaling after unit-`alpha` normalization;
    /// convex penalties ignore it.
    #[serde(default)]
    pub nonconvexity: Option<Vec<f64>>,
    #[serde(deserialize_with = "one_or_many")]
    pub kappa: Vec<f64>,
    #[serde(default = "default_msnr", deserialize_with = "one_or_many")]
    pub msnr: Vec<Msnr>,
    pub trials: usize,
    #[serde(default = "default_threshold")]
    pub success_threshold_db: f64,
    pub base_seed: u64,
    #[serde(default = "default_solver")]
    pub solver: SolverKind,
    /// One matrix for every trial instead of a fresh draw per trial.
    #[serde(default)]
    pub shared_matrix: bool,
    /// Iteration budget; `None` picks the convergence-theory count, capped.
    #[serde(default)]
    pub max_iters: Option<usize>,
    /// Budget of `ceil(kappa_iters / kappa)` iterations, so that every step
    /// size gets the same amount of travel; overrides `max_iters`.
    #[serde(default)]
    pub kappa_iters: Option<f64>,
    #[serde(default)]
    pub early_stop_tol: f64,
    /// Assumed null space constant for the default iteration budget.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Skip larger `K` for a series once it has a failing trial.
    #[serde(default)]
    pub stop_at_first_failure: bool,
    /// Fill the `wall_ms` column; off keeps the CSV reproducible byte for byte.
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let ks = self.k.values();
        if ks.is_empty() {
            return Err(Error::Invalid("empty K range".into()));
        }
        if self.m >= self.n {
            return Err(Error::Invalid(format!("need M < N, got M = {}, N = {}", self.m, self.n)));
        }
        if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > self.m) {
            return Err(Error::Invalid(format!("K = {k} outside 1..={}", self.m)));
        }
        if self.trials == 0 {
            return Err(Error::Invalid("trials must be at least 1".into()));
        }
        if self.kappa.is_empty() || self.kappa.iter().any(|&k| !(k.is_finite() && k > 0.0)) {
            return Err(Error::Invalid("kappa values must be positive".into()));
        }
        if self.msnr.is_empty() {
            return Err(Error::Invalid("msnr grid is empty".into()));
        }
        if self.solver.uses_penalty() && self.penalties.is_empty() {
            return Err(Error::Invalid("no penalties given".into()));
        }
        for p in &self.penalties {
            p.validate()?;
        }
        if let Some(grid) = &self.nonconvexity {
            if grid.is_empty() || grid.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
                return Err(Error::Invalid("nonconvexity grid values must be positive".into()));
            }
        }
        if let Some(c) = self.kappa_iters {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::Invalid("kappa_iters must be positive".into()));
            }
        }
        if self.max_iters == Some(0) {
            return Err(Error::Invalid("max_iters must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::NullSpaceViolated(self.gamma));
        }
        if let SolverKind::Irls { p } = self.solver {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Invalid(format!("IRLS p must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }

    /// Penalties actually run, after the non-convexity grid is applied.
    pub fn effective_penalties(&self) -> Result<Vec<Penalty>> {
        match self.solver {
            SolverKind::L1 => return Ok(vec![Penalty::abs()]),
            SolverKind::Omp | SolverKind::Irls { .. } => return Ok(vec![Penalty::abs()]),
            _ => {}
        }
        let mut out = Vec::new();
        for p in &self.penalties {
            match &self.nonconvexity {
                Some(grid) if p.nonconvexity() > 0.0 => {
                    for &nc in grid {
                        out.push(p.with_nonconvexity(nc)?);
                    }
                }
                _ => out.push(p.with_unit_alpha()),
            }
        }
        Ok(out)
    }
}

/// A series is every sparsity level at one `(penalty, kappa, msnr)` point.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Series {
    penalty: Penalty,
    kappa: f64,
    msnr: Msnr,
}

/// One row of the per-trial CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub experiment_id: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub dist: String,
    pub penalty_kind: String,
    pub nonconvexity: Option<f64>,
    pub kappa: Option<f64>,
    pub msnr_db: String,
    pub zeta: f64,
    pub solver: String,
    pub trial: usize,
    pub seed: u64,
    pub rsnr_db: f64,
    pub success: bool,
    pub iters: usize,
    pub wall_ms: Option<f64>,
}

/// Aggregate over the trials of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment_id: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub dist: NonzeroDist,
    pub solver: SolverKind,
    pub penalty: Option<Penalty>,
    pub kappa: Option<f64>,
    pub msnr: Msnr,
    pub shared_matrix: bool,
    pub rsnr_db: Vec<f64>,
    pub success_rate: f64,
    pub mean_rsnr_db: f64,
    pub ci95_low: Option<f64>,
    pub ci95_high: Option<f64>,
    pub mean_iters: f64,
    pub mean_zeta: f64,
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct AggregateRow<'a> {
    experiment_id: &'a str,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "K")]
    k: usize,
    dist: String,
    penalty_kind: String,
    nonconvexity: Option<f64>,
    kappa: Option<f64>,
    msnr_db: String,
    zeta: f64,
    solver: String,
    trials: usize,
    success_rate: f64,
    mean_rsnr_db: f64,
    ci95_low: Option<f64>,
    ci95_high: Option<f64>,
    mean_iters: f64,
    shared_matrix: bool,
}

/// Largest sparsity with every trial successful, for one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmaxEntry {
    pub penalty: Option<Penalty>,
    pub nonconvexity: Option<f64>,
    pub kappa: Option<f64>,
    pub msnr: Msnr,
    pub kmax: usize,
    /// No failure inside the tested range, so `kmax` is only a lower bound.
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub trials: Vec<TrialRow>,
    pub records: Vec<ExperimentRecord>,
    pub kmax: Vec<KmaxEntry>,
}

impl ExperimentOutput {
    pub fn write_trials_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for row in &self.trials {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_aggregate_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.records {
            w.serialize(AggregateRow {
                experiment_id: &r.experiment_id,
                m: r.m,
                n: r.n,
                k: r.k,
                dist: r.dist.to_string(),
                penalty_kind: r.penalty.map(|p| p.kind.to_string()).unwrap_or_default(),
                nonconvexity: r.penalty.map(|p| p.nonconvexity()),
                kappa: r.kappa,
                msnr_db: r.msnr.to_string(),
                zeta: r.mean_zeta,
                solver: r.solver.to_string(),
                trials: r.rsnr_db.len(),
                success_rate: r.success_rate,
                mean_rsnr_db: r.mean_rsnr_db,
                ci95_low: r.ci95_low,
                ci95_high: r.ci95_high,
                mean_iters: r.mean_iters,
                shared_matrix: r.shared_matrix,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `trials.csv`, `aggregate.csv` and `kmax.json` into `dir`.
    pub fn write_all(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.write_trials_csv(dir.join("trials.csv"))?;
        self.write_aggregate_csv(dir.join("aggregate.csv"))?;
        std::fs::write(dir.join("kmax.json"), serde_json::to_string_pretty(&self.kmax)?)?;
        Ok(())
    }

    pub fn kmax_for(&self, penalty: &Penalty) -> Option<&KmaxEntry> {
        self.kmax.iter().find(|e| e.penalty.as_ref() == Some(penalty))
    }
}

/// Result of one trial before it is written out.
struct TrialOutcome {
    seed: u64,
    rsnr: f64,
    iters: usize,
    zeta: f64,
    wall_ms: f64,
}

/// Random instance for `(K, trial)`; independent of penalty, step size and
/// noise level so that every series sees the same signals.
pub struct Instance {
    pub seed: u64,
    pub a: DMatrix<f64>,
    pub x_star: DVector<f64>,
    pub ax: DVector<f64>,
}

pub fn make_instance(spec: &ExperimentSpec, k: usize, trial: usize) -> Instance {
    let seed = derive_seed(spec.base_seed, &[k as u64, trial as u64]);
    let matrix_seed = if spec.shared_matrix {
        derive_seed(spec.base_seed, &[TAG_SHARED])
    } else {
        derive_seed(seed, &[TAG_MATRIX])
    };
    let a = gen_matrix(spec.m, spec.n, matrix_seed);
    let x_star = gen_signal(spec.n, k, spec.nonzero_dist, derive_seed(seed, &[TAG_SIGNAL]));
    let ax = &a * &x_star;
    Instance { seed, a, x_star, ax }
}

fn default_budget(
    spec: &ExperimentSpec,
    pen: &Penalty,
    model: &SensingModel,
    y: &DVector<f64>,
    x_star: &DVector<f64>,
    kappa: f64,
) -> usize {
    let x0 = solver::initial_point(model, y);
    let m0 = (&x0 - x_star).norm().max(f64::MIN_POSITIVE);
    let iters = analysis::constants(pen, model, spec.gamma, m0, spec.n)
        .map(|c| solver::default_max_iters(c.c3, m0, c.d, c.alpha, c.n, kappa))
        .unwrap_or(MAX_DEFAULT_ITERS);
    iters.clamp(1, MAX_DEFAULT_ITERS) as usize
}

fn run_trial(spec: &ExperimentSpec, series: &Series, k: usize, trial: usize) -> Result<TrialOutcome> {
    let inst = make_instance(spec, k, trial);
    let noise = gen_noise(&inst.ax, series.msnr, derive_seed(inst.seed, &[TAG_NOISE]))?;
    let y = &inst.ax + noise;
    let start = Instant::now();

    let model = match spec.solver {
        SolverKind::Pgg | SolverKind::L1 => Some(SensingModel::exact(inst.a.clone())),
        SolverKind::Apgg { steps } => Some(SensingModel::ben_israel(inst.a.clone(), steps)),
        SolverKind::Omp | SolverKind::Irls { .. } => None,
    }
    .transpose();

    let solved = model.and_then(|model| {
        let zeta = model.as_ref().map_or(0.0, |m| m.zeta);
        let result = match (spec.solver, &model) {
            (SolverKind::Omp, _) => solver::omp_solve(&inst.a, &y, k),
            (SolverKind::Irls { p }, _) => {
                solver::irls_solve(&inst.a, &y, p, &solver::default_eps_schedule(), solver::DEFAULT_IRLS_INNER)
            }
            (_, Some(model)) => {
                let iters = match (spec.kappa_iters, spec.max_iters) {
                    (Some(c), _) => (c / series.kappa).ceil().max(1.0) as usize,
                    (None, Some(n)) => n,
                    (None, None) => default_budget(spec, &series.penalty, model, &y, &inst.x_star, series.kappa),
                };
                let cfg = SolverConfig::new(series.kappa, iters).with_early_stop(spec.early_stop_tol);
                solver::projected_solve(model, &series.penalty, &y, &cfg, None)
            }
            (_, None) => unreachable!("projected solvers always build a model"),
        }?;
        Ok((result, zeta))
    });
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;

    // a numerical breakdown inside one trial counts as recovering nothing
    let (rsnr, iters, zeta) = match solved {
        Ok((r, zeta)) => (rsnr_db(&r.x_hat, &inst.x_star), r.iters_run, zeta),
        Err(e) if e.is_numerical() => (0.0, 0, 0.0),
        Err(e) => return Err(e),
    };
    Ok(TrialOutcome {
        seed: inst.seed,
        rsnr,
        iters,
        zeta,
        wall_ms,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Runs the whole factorial design `K x penalty x kappa x msnr x trial`.
/// Output order depends only on the experiment description, never on scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let uses_pen = spec.solver.uses_penalty() || spec.solver == SolverKind::L1;
    let uses_kappa = uses_pen;
    let penalties = spec.effective_penalties()?;
    let kappas: &[f64] = if uses_kappa { &spec.kappa } else { &spec.kappa[..1] };
    let mut series = Vec::new();
    for pen in &penalties {
        for &kappa in kappas {
            for &msnr in &spec.msnr {
                series.push(Series { penalty: *pen, kappa, msnr });
            }
        }
    }
    let ks = spec.k.values();
    let mut active = vec![true; series.len()];
    let mut first_failure: Vec<Option<usize>> = vec![None; series.len()];
    let mut out = ExperimentOutput {
        trials: Vec::new(),
        records: Vec::new(),
        kmax: Vec::new(),
    };

    for &k in &ks {
        let tasks: Vec<(usize, usize)> = (0..series.len())
            .filter(|&s| active[s])
            .flat_map(|s| (0..spec.trials).map(move |t| (s, t)))
            .collect();
        let results: Vec<Result<TrialOutcome>> = tasks
            .par_iter()
            .map(|&(s, t)| run_trial(spec, &series[s], k, t))
            .collect();
        let mut results = results.into_iter();
        let running: Vec<usize> = (0..series.len()).filter(|&s| active[s]).collect();
        for s in running {
            let ser = &series[s];
            let outcomes: Vec<TrialOutcome> = results.by_ref().take(spec.trials).collect::<Result<_>>()?;
            let rsnrs: Vec<f64> = outcomes.iter().map(|o| o.rsnr).collect();
            let successes = rsnrs.iter().filter(|&&r| r > spec.success_threshold_db).count();
            for (trial, o) in outcomes.iter().enumerate() {
                out.trials.push(TrialRow {
                    experiment_id: spec.experiment_id.clone(),
                    m: spec.m,
                    n: spec.n,
                    k,
                    dist: spec.nonzero_dist.to_string(),
                    penalty_kind: if uses_pen { ser.penalty.kind.to_string() } else { String::new() },
                    nonconvexity: uses_pen.then(|| ser.penalty.nonconvexity()),
                    kappa: uses_kappa.then_some(ser.kappa),
                    msnr_db: ser.msnr.to_string(),
                    zeta: o.zeta,
                    solver: spec.solver.to_string(),
                    trial,
                    seed: o.seed,
                    rsnr_db: o.rsnr,
                    success: o.rsnr > spec.success_threshold_db,
                    iters: o.iters,
                    wall_ms: spec.record_timing.then_some(o.wall_ms),
                });
            }
            let (lo, hi) = match ci95(&rsnrs) {
                Ok((lo, hi)) => (Some(lo), Some(hi)),
                Err(_) => (None, None),
            };
            out.records.push(ExperimentRecord {
                experiment_id: spec.experiment_id.clone(),
                m: spec.m,
                n: spec.n,
                k,
                dist: spec.nonzero_dist,
                solver: spec.solver,
                penalty: uses_pen.then_some(ser.penalty),
                kappa: uses_kappa.then_some(ser.kappa),
                msnr: ser.msnr,
                shared_matrix: spec.shared_matrix,
                success_rate: successes as f64 / spec.trials as f64,
                mean_rsnr_db: mean(&rsnrs),
                ci95_low: lo,
                ci95_high: hi,
                mean_iters: mean(&outcomes.iter().map(|o| o.iters as f64).collect::<Vec<_>>()),
                mean_zeta: mean(&outcomes.iter().map(|o| o.zeta).collect::<Vec<_>>()),
                wall_time_ms: spec
                    .record_timing
                    .then(|| outcomes.iter().map(|o| o.wall_ms).sum()),
                rsnr_db: rsnrs,
            });
            if successes < spec.trials && first_failure[s].is_none() {
                first_failure[s] = Some(k);
                if spec.stop_at_first_failure {
                    active[s] = false;
                }
            }
        }
    }

    let k_first = ks[0];
    let k_last = *ks.iter().max().expect("nonempty K range");
    for (s, ser) in series.iter().enumerate() {
        let (kmax, saturated) = match first_failure[s] {
            Some(k) => (kmax_below(&ks, k, k_first), false),
            None => (k_last, true),
        };
        out.kmax.push(KmaxEntry {
            penalty: uses_pen.then_some(ser.penalty),
            nonconvexity: uses_pen.then(|| ser.penalty.nonconvexity()),
            kappa: uses_kappa.then_some(ser.kappa),
            msnr: ser.msnr,
            kmax,
            saturated,
        });
    }
    Ok(out)
}

/// First-failure rule: the largest tested level below the first failing
/// one, or one less than the smallest tested level.
fn kmax_below(ks: &[usize], failed: usize, k_first: usize) -> usize {
    ks.iter()
        .copied()
        .filter(|&k| k < failed)
        .max()
        .unwrap_or(k_first.saturating_sub(1))
}

/// Phase-transition run over a sparsity range.
pub fn run_phase(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    run_experiment(spec)
}

/// Step size by noise level table at a single sparsity.
pub fn run_rsnr_sweep(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    if spec.k.values().len() != 1 {
        return Err(Error::Invalid("an RSNR sweep takes a single K".into()));
    }
    run_experiment(spec)
}

/// Runs `f` on a rayon pool with `jobs` threads (`0` = rayon default).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
