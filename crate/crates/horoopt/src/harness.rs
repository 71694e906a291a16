//! Experiment harness: synthetic data generation, grid runs over step
//! sizes, regret accounting against a shared comparator, and CSV/SVG
//! emission.
//!
//! One experiment = one loss family, one seed, one schedule shape and a
//! grid of step-size scales η. All η runs consume the *same* generated
//! data and are scored against the *same* comparator, so their regret
//! curves are directly comparable. Runs are independent jobs executed on
//! a thread pool (capped by the `HOROOPT_THREADS` environment variable);
//! every artifact is a pure function of the configuration, so reruns are
//! byte-identical.
//!
//! Scatter-estimation regret needs a scale decision because the cumulative
//! objective is scale-invariant up to an additive drift; see
//! [`TylerMode`] for the two supported conventions.

use std::fmt;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::losses::LossTerm;
use crate::manifold::{FeasibleSet, HadamardManifold};
use crate::oracle::{compute_regret, offline_minimize, tyler_fixed_point};
use crate::rogd::{run_rogd, StepSchedule, Trajectory};
use crate::spd::{matrix_fn, write_matrix_text, MatrixFn, SpdManifold, SpdPoint, TangentVec};

/// Which loss family an experiment plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// Online scatter estimation: `f_t(Σ) = log(a_tᵀ Σ⁻¹ a_t)`.
    Tyler,
    /// Online Fréchet mean: `f_t(Σ) = d²(Σ, Y_t)/2`.
    Frechet,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::Tyler => "tyler",
            ExperimentKind::Frechet => "frechet",
        })
    }
}

/// Scale convention for scatter-estimation regret.
///
/// The cumulative scatter objective satisfies `F(cΣ) = F(Σ) − T log c`, so
/// "best fixed point" is meaningless without fixing a scale:
///
/// * `Ball` — run and comparator are both constrained to a geodesic ball;
///   regret is then the assumption-faithful quantity the bounds speak
///   about.
/// * `Paper` — unconstrained run; every iterate is determinant-normalized
///   before loss evaluation, and the comparator is the
///   determinant-normalized scatter fixed point. Outputs are labeled
///   "paper-style".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TylerMode {
    Ball,
    Paper,
}

impl fmt::Display for TylerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TylerMode::Ball => "ball",
            TylerMode::Paper => "paper",
        })
    }
}

impl FromStr for TylerMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ball" => Ok(TylerMode::Ball),
            "paper" => Ok(TylerMode::Paper),
            other => Err(format!("unknown tyler mode `{other}` (expected ball|paper)")),
        }
    }
}

/// Shape of the step-size schedule; the grid value η scales it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    /// `η_t = η`.
    Const,
    /// `η_t = η/√t`.
    InvSqrt,
    /// `η_t = η/(μt)` with the configured μ.
    InvT,
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleKind::Const => "const",
            ScheduleKind::InvSqrt => "inv-sqrt",
            ScheduleKind::InvT => "inv-t",
        })
    }
}

impl FromStr for ScheduleKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "const" => Ok(ScheduleKind::Const),
            "inv-sqrt" => Ok(ScheduleKind::InvSqrt),
            "inv-t" => Ok(ScheduleKind::InvT),
            other => Err(format!(
                "unknown schedule `{other}` (expected const|inv-sqrt|inv-t)"
            )),
        }
    }
}

/// Full description of one experiment grid.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Matrix dimension n of SPD(n).
    pub n: usize,
    /// Number of online rounds T.
    pub horizon: usize,
    /// Step-size grid; one run per value.
    pub etas: Vec<f64>,
    pub schedule: ScheduleKind,
    /// Seed for all data generation (shared across the η grid).
    pub seed: u64,
    /// Ball center; `None` means the identity when a ball is active.
    pub ball_center: Option<SpdPoint>,
    /// Ball radius; `None` means the default radius when a ball is active.
    pub ball_radius: Option<f64>,
    pub tyler_mode: TylerMode,
    /// Tangent spread of the generated manifold samples.
    pub sigma: f64,
    /// Strong-convexity modulus used by the `inv-t` schedule.
    pub mu: f64,
    pub out_dir: PathBuf,
    /// Emit the combined regret plot.
    pub plot: bool,
    /// Log-scale the t axis of the plot.
    pub log_t: bool,
}

/// Default ball radius when a geodesic ball is requested without one; large
/// enough to contain the comparators produced by the default data model.
pub const DEFAULT_BALL_RADIUS: f64 = 3.0;

impl ExperimentConfig {
    /// Paper-shape defaults for the given loss family: n = 16, the five-way
    /// step grid {0.25, 0.5, 1, 2, 4}, seed 42, and T = 10⁴ with an
    /// `inv-sqrt` schedule for scatter estimation, T = 10³ with an `inv-t`
    /// schedule for the Fréchet mean.
    pub fn defaults(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            n: 16,
            horizon: match kind {
                ExperimentKind::Tyler => 10_000,
                ExperimentKind::Frechet => 1_000,
            },
            etas: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            schedule: match kind {
                ExperimentKind::Tyler => ScheduleKind::InvSqrt,
                ExperimentKind::Frechet => ScheduleKind::InvT,
            },
            seed: 42,
            ball_center: None,
            ball_radius: None,
            tyler_mode: TylerMode::Paper,
            sigma: 0.5,
            mu: 1.0,
            out_dir: PathBuf::from("out"),
            plot: true,
            log_t: false,
        }
    }

    /// Check the structural invariants of the configuration.
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::ParamOutOfRange {
                name: "n",
                value: self.n as f64,
                range: "[2, inf)",
            });
        }
        if self.horizon < 1 {
            return Err(Error::ParamOutOfRange {
                name: "T",
                value: self.horizon as f64,
                range: "[1, inf)",
            });
        }
        if self.etas.is_empty() {
            return Err(Error::InvalidArgument("eta grid must be nonempty"));
        }
        for &eta in &self.etas {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::ParamOutOfRange {
                    name: "eta",
                    value: eta,
                    range: "(0, inf)",
                });
            }
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::ParamOutOfRange {
                name: "sigma",
                value: self.sigma,
                range: "(0, inf)",
            });
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::ParamOutOfRange {
                name: "mu",
                value: self.mu,
                range: "(0, inf)",
            });
        }
        if let Some(r) = self.ball_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::ParamOutOfRange {
                    name: "ball_radius",
                    value: r,
                    range: "(0, inf)",
                });
            }
        }
        if let Some(c) = &self.ball_center {
            if c.dim() != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    got: c.dim(),
                });
            }
        }
        Ok(())
    }

    /// The feasible set the runs operate in.
    ///
    /// Scatter estimation in `Ball` mode always gets a ball (defaults:
    /// identity center, [`DEFAULT_BALL_RADIUS`]); `Paper` mode is
    /// unconstrained by definition. Fréchet runs get a ball exactly when
    /// one was configured.
    pub fn feasible_set(&self) -> Result<FeasibleSet<SpdManifold>> {
        let build_ball = || -> Result<FeasibleSet<SpdManifold>> {
            let center = self
                .ball_center
                .clone()
                .unwrap_or_else(|| SpdPoint::identity(self.n));
            FeasibleSet::geodesic_ball(center, self.ball_radius.unwrap_or(DEFAULT_BALL_RADIUS))
        };
        match (self.kind, self.tyler_mode) {
            (ExperimentKind::Tyler, TylerMode::Ball) => build_ball(),
            (ExperimentKind::Tyler, TylerMode::Paper) => Ok(FeasibleSet::whole()),
            (ExperimentKind::Frechet, _) => {
                if self.ball_center.is_some() || self.ball_radius.is_some() {
                    build_ball()
                } else {
                    Ok(FeasibleSet::whole())
                }
            }
        }
    }
}

/// Optional overrides collected from the command line or a config file;
/// `None` fields fall through to the next layer (file, then defaults).
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub n: Option<usize>,
    pub horizon: Option<usize>,
    pub etas: Option<Vec<f64>>,
    pub schedule: Option<ScheduleKind>,
    pub seed: Option<u64>,
    pub ball_center_path: Option<PathBuf>,
    pub ball_radius: Option<f64>,
    pub tyler_mode: Option<TylerMode>,
    pub sigma: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub plot: Option<bool>,
    pub log_t: Option<bool>,
}

impl ConfigOverrides {
    /// Parse a flat `key = value` config file; keys match the long CLI
    /// flags. Blank lines and lines starting with `#` are ignored.
    pub fn from_file(path: &Path) -> std::result::Result<Self, String> {
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
        let mut out = ConfigOverrides::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", lineno + 1))?;
            let key = key.trim();
            let value = value.trim();
            let fail = |what: &str| format!("line {}: bad {what} value `{value}`", lineno + 1);
            match key {
                "n" => out.n = Some(value.parse().map_err(|_| fail("n"))?),
                "T" => out.horizon = Some(value.parse().map_err(|_| fail("T"))?),
                "eta" => {
                    let grid: std::result::Result<Vec<f64>, _> =
                        value.split(',').map(|s| s.trim().parse::<f64>()).collect();
                    out.etas = Some(grid.map_err(|_| fail("eta"))?);
                }
                "schedule" => out.schedule = Some(value.parse().map_err(|e: String| e)?),
                "seed" => out.seed = Some(value.parse().map_err(|_| fail("seed"))?),
                "ball-center" => out.ball_center_path = Some(PathBuf::from(value)),
                "ball-radius" => out.ball_radius = Some(value.parse().map_err(|_| fail("ball-radius"))?),
                "tyler-mode" => out.tyler_mode = Some(value.parse().map_err(|e: String| e)?),
                "sigma" => out.sigma = Some(value.parse().map_err(|_| fail("sigma"))?),
                "out" => out.out_dir = Some(PathBuf::from(value)),
                "plot" => out.plot = Some(value.parse().map_err(|_| fail("plot"))?),
                "log-t" => out.log_t = Some(value.parse().map_err(|_| fail("log-t"))?),
                other => return Err(format!("line {}: unknown key `{other}`", lineno + 1)),
            }
        }
        Ok(out)
    }

    /// Merge two override layers, preferring `self` (e.g. flags over file).
    pub fn or(self, weaker: ConfigOverrides) -> ConfigOverrides {
        ConfigOverrides {
            n: self.n.or(weaker.n),
            horizon: self.horizon.or(weaker.horizon),
            etas: self.etas.or(weaker.etas),
            schedule: self.schedule.or(weaker.schedule),
            seed: self.seed.or(weaker.seed),
            ball_center_path: self.ball_center_path.or(weaker.ball_center_path),
            ball_radius: self.ball_radius.or(weaker.ball_radius),
            tyler_mode: self.tyler_mode.or(weaker.tyler_mode),
            sigma: self.sigma.or(weaker.sigma),
            out_dir: self.out_dir.or(weaker.out_dir),
            plot: self.plot.or(weaker.plot),
            log_t: self.log_t.or(weaker.log_t),
        }
    }

    /// Apply these overrides on top of the defaults for `kind`, loading the
    /// ball-center matrix file if one was named.
    pub fn into_config(self, kind: ExperimentKind) -> std::result::Result<ExperimentConfig, String> {
        let mut cfg = ExperimentConfig::defaults(kind);
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(t) = self.horizon {
            cfg.horizon = t;
        }
        if let Some(etas) = self.etas {
            cfg.etas = etas;
        }
        if let Some(s) = self.schedule {
            cfg.schedule = s;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(path) = self.ball_center_path {
            let file = fs::File::open(&path)
                .map_err(|e| format!("cannot open ball-center file {}: {e}", path.display()))?;
            let point = SpdPoint::read_text(&mut BufReader::new(file))
                .map_err(|e| format!("bad ball-center file {}: {e}", path.display()))?;
            cfg.ball_center = Some(point);
        }
        if let Some(r) = self.ball_radius {
            cfg.ball_radius = Some(r);
        }
        if let Some(m) = self.tyler_mode {
            cfg.tyler_mode = m;
        }
        if let Some(s) = self.sigma {
            cfg.sigma = s;
        }
        if let Some(dir) = self.out_dir {
            cfg.out_dir = dir;
        }
        if let Some(p) = self.plot {
            cfg.plot = p;
        }
        if let Some(l) = self.log_t {
            cfg.log_t = l;
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

/// One CSV row of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvRow {
    pub t: usize,
    pub eta_t: f64,
    pub loss: f64,
    pub comparator_loss: f64,
    pub cum_regret: f64,
    pub grad_norm: f64,
}

/// Aggregates of one run, printed by the CLI.
#[derive(Debug, Clone)]
pub struct RunSummary {
    /// Final cumulative regret `R_T`.
    pub regret_total: f64,
    /// Largest observed gradient norm (the empirical Lipschitz constant).
    pub max_grad_norm: f64,
    /// Mean cumulative-loss gradient norm at the comparator.
    pub comparator_grad_norm: f64,
    /// Wall-clock seconds for the online run plus regret evaluation.
    pub wall_time_s: f64,
    /// Random generator the data was drawn with.
    pub rng: &'static str,
}

/// Everything produced by one (η, schedule) run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    /// Step-size scale for this run.
    pub eta: f64,
    /// Concrete schedule played.
    pub schedule: StepSchedule,
    /// Configuration echo (identical across the grid).
    pub config: ExperimentConfig,
    /// Per-round rows, exactly as serialized to CSV.
    pub rows: Vec<CsvRow>,
    pub summary: RunSummary,
    /// Warnings surfaced by the online run.
    pub warnings: Vec<String>,
    /// Where the per-run CSV was written.
    pub csv_path: PathBuf,
}

/// A failed grid entry; the other runs are unaffected.
#[derive(Debug, Clone)]
pub struct RunFailure {
    pub eta: f64,
    pub message: String,
}

/// Result of a full grid: successes in grid order plus failures.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
}

impl ExperimentOutcome {
    /// True when every grid entry completed.
    pub fn all_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Descriptor recorded in every run summary.
const RNG_DESCRIPTOR: &str = "ChaCha12 (rand_chacha 0.9, seed_from_u64)";

// Stream tags keeping the generator states of the three data products
// disjoint even though they share one user-facing seed.
const STREAM_SHAPE: u64 = 1;
const STREAM_VECTORS: u64 = 2;
const STREAM_POINTS: u64 = 3;

/// Well-conditioned ground-truth matrix derived from the seed: eigenvalues
/// log-uniform in `[1/2, 2]` in a uniformly random orthonormal basis.
pub fn default_sigma_true(n: usize, seed: u64) -> Result<SpdPoint> {
    if n < 1 {
        return Err(Error::ParamOutOfRange {
            name: "n",
            value: n as f64,
            range: "[1, inf)",
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_SHAPE);
    let ln2 = std::f64::consts::LN_2;
    let eigs = DVector::from_fn(n, |_, _| rng.random_range(-ln2..=ln2).exp());
    let gauss = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = gauss.qr().q();
    let mat = &q * DMatrix::from_diagonal(&eigs) * q.transpose();
    SpdPoint::new(crate::spd::symmetrize(mat))
}

/// Zero-mean Gaussian sample vectors with covariance `sigma_true`,
/// deterministic in `seed`: `a_t = Σ_true^{1/2} z_t`.
pub fn gen_gaussian_samples(
    sigma_true: &SpdPoint,
    count: usize,
    seed: u64,
) -> Result<Vec<DVector<f64>>> {
    let n = sigma_true.dim();
    let root = matrix_fn(sigma_true.matrix(), MatrixFn::Sqrt)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_VECTORS);
    Ok((0..count)
        .map(|_| &root * DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal)))
        .collect())
}

/// SPD sample points scattered around `sigma_true`:
/// `Y_t = Exp_{Σ_true}(σ W_t)` with `W_t` symmetric, Gaussian entries
/// scaled by `1/√n` and mirrored across the diagonal. The tangent
/// distribution is symmetric about zero, so the population Fréchet mean is
/// `sigma_true` itself.
pub fn gen_spd_samples(
    sigma_true: &SpdPoint,
    sigma: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<SpdPoint>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::ParamOutOfRange {
            name: "sigma",
            value: sigma,
            range: "[0, inf)",
        });
    }
    let n = sigma_true.dim();
    let m = SpdManifold::new(n)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_POINTS);
    let scale = sigma / (n as f64).sqrt();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut w = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let g: f64 = rng.sample(StandardNormal);
                w[(i, j)] = scale * g;
                w[(j, i)] = scale * g;
            }
        }
        let step = TangentVec::new(sigma_true.clone(), w)?;
        out.push(m.exp(sigma_true, &step)?);
    }
    Ok(out)
}

/// Rescale to unit determinant (the scale section used by paper-style
/// scatter regret).
pub fn det_normalize(x: &SpdPoint) -> Result<SpdPoint> {
    let c = (x.log_det()? / x.dim() as f64).exp();
    SpdPoint::new(x.matrix() / c)
}

fn det_normalized_trajectory(traj: &Trajectory) -> Result<Trajectory> {
    let iterates = traj
        .iterates
        .iter()
        .map(det_normalize)
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        iterates,
        grad_norms: traj.grad_norms.clone(),
        step_sizes: traj.step_sizes.clone(),
        step_times: traj.step_times.clone(),
        warnings: traj.warnings.clone(),
    })
}

/// Round a value through its 12-significant-digit CSV representation, so
/// in-memory arithmetic matches what a reader of the file reconstructs.
fn quantize12(x: f64) -> f64 {
    format!("{x:.11e}").parse().expect("formatted float reparses")
}

fn make_schedule(kind: ScheduleKind, eta: f64, mu: f64) -> Result<StepSchedule> {
    match kind {
        ScheduleKind::Const => StepSchedule::constant(eta),
        ScheduleKind::InvSqrt => StepSchedule::inverse_sqrt(eta),
        ScheduleKind::InvT => StepSchedule::inverse(eta, mu),
    }
}

/// Comparator tolerances; the offline solver gets a generous budget since
/// it runs once per experiment.
const COMPARATOR_TOL: f64 = 1e-7;
const COMPARATOR_MAX_ITERS: usize = 20_000;
const SCATTER_FP_TOL: f64 = 1e-11;

/// Run the full η grid for one experiment.
///
/// Generates the data and the comparator once, plays one online run per
/// grid value on a thread pool (size capped by `HOROOPT_THREADS`), writes
/// one CSV and one final-iterate checkpoint per run plus one comparator
/// checkpoint, and (when configured) one combined SVG regret plot over the
/// successful runs. A failing run is reported in
/// [`ExperimentOutcome::failures`] without disturbing its siblings;
/// failures preparing shared inputs (data, comparator, output directory)
/// abort the whole experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    fs::create_dir_all(&config.out_dir).map_err(|_| Error::InvalidArgument(
        "cannot create output directory",
    ))?;
    let m = SpdManifold::new(config.n)?;
    let sigma_true = default_sigma_true(config.n, config.seed)?;
    let set = config.feasible_set()?;
    let initial = set.project(&m, &SpdPoint::identity(config.n))?;

    // Shared inputs: one data stream, one comparator, for the whole grid.
    let (losses, comparator, paper_normalized) = match config.kind {
        ExperimentKind::Tyler => {
            let samples = gen_gaussian_samples(&sigma_true, config.horizon, config.seed)?;
            let losses = samples
                .iter()
                .map(|a| LossTerm::tyler(a.clone()))
                .collect::<Result<Vec<_>>>()?;
            match config.tyler_mode {
                TylerMode::Ball => {
                    let comparator =
                        offline_minimize(&m, &losses, &set, COMPARATOR_TOL, COMPARATOR_MAX_ITERS)?;
                    (losses, comparator, false)
                }
                TylerMode::Paper => {
                    let fp = tyler_fixed_point(&samples, SCATTER_FP_TOL)?;
                    (losses, det_normalize(&fp)?, true)
                }
            }
        }
        ExperimentKind::Frechet => {
            let targets =
                gen_spd_samples(&sigma_true, config.sigma, config.horizon, config.seed)?;
            let losses: Vec<LossTerm> = targets.into_iter().map(LossTerm::frechet).collect();
            let comparator =
                offline_minimize(&m, &losses, &set, COMPARATOR_TOL, COMPARATOR_MAX_ITERS)?;
            (losses, comparator, false)
        }
    };

    let comparator_path = config.out_dir.join(format!("{}_comparator.mat", config.kind));
    write_matrix_file(&comparator_path, comparator.matrix())?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_cap())
        .build()
        .map_err(|_| Error::InvalidArgument("cannot build run thread pool"))?;

    let results: Vec<std::result::Result<RunRecord, RunFailure>> = pool.install(|| {
        config
            .etas
            .par_iter()
            .map(|&eta| {
                run_single(
                    config,
                    &m,
                    &initial,
                    &losses,
                    &set,
                    &comparator,
                    paper_normalized,
                    eta,
                )
                .map_err(|e| RunFailure {
                    eta,
                    message: e.to_string(),
                })
            })
            .collect()
    });

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(f) => failures.push(f),
        }
    }

    if config.plot && !records.is_empty() {
        let plot_path = config.out_dir.join(format!("{}_regret.svg", config.kind));
        emit_plot(&records, &plot_path, config.log_t)?;
    }

    Ok(ExperimentOutcome { records, failures })
}

fn thread_cap() -> usize {
    std::env::var("HOROOPT_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&k| k >= 1)
        .unwrap_or(0) // 0 lets the pool pick its default size
}

#[allow(clippy::too_many_arguments)]
fn run_single(
    config: &ExperimentConfig,
    m: &SpdManifold,
    initial: &SpdPoint,
    losses: &[LossTerm],
    set: &FeasibleSet<SpdManifold>,
    comparator: &SpdPoint,
    paper_normalized: bool,
    eta: f64,
) -> Result<RunRecord> {
    let started = Instant::now();
    let schedule = make_schedule(config.schedule, eta, config.mu)?;
    let traj = run_rogd(m, initial, losses, &schedule, set).map_err(|e| e.source.clone())?;
    let scored = if paper_normalized {
        det_normalized_trajectory(&traj)?
    } else {
        traj.clone()
    };
    let trace = compute_regret(&scored, losses, comparator)?;

    let mut rows = Vec::with_capacity(losses.len());
    let mut running = 0.0_f64;
    for idx in 0..losses.len() {
        let loss = quantize12(trace.learner_losses[idx]);
        let comparator_loss = quantize12(trace.comparator_losses[idx]);
        running += loss - comparator_loss;
        rows.push(CsvRow {
            t: idx + 1,
            eta_t: traj.step_sizes[idx],
            loss,
            comparator_loss,
            cum_regret: running,
            grad_norm: traj.grad_norms[idx],
        });
    }

    let csv_path = config
        .out_dir
        .join(format!("{}_eta{}.csv", config.kind, eta));
    write_csv(&csv_path, &rows)?;
    let final_path = config
        .out_dir
        .join(format!("{}_eta{}_final.mat", config.kind, eta));
    write_matrix_file(&final_path, traj.final_point().matrix())?;

    let max_grad_norm = traj.grad_norms.iter().copied().fold(0.0_f64, f64::max);
    Ok(RunRecord {
        eta,
        schedule,
        config: config.clone(),
        summary: RunSummary {
            regret_total: rows.last().map(|r| r.cum_regret).unwrap_or(0.0),
            max_grad_norm,
            comparator_grad_norm: trace.comparator_grad_norm,
            wall_time_s: started.elapsed().as_secs_f64(),
            rng: RNG_DESCRIPTOR,
        },
        warnings: traj.warnings,
        rows,
        csv_path,
    })
}

fn io_invalid(_: std::io::Error) -> Error {
    Error::InvalidArgument("cannot write output file")
}

fn write_matrix_file(path: &Path, mat: &DMatrix<f64>) -> Result<()> {
    let mut buf = Vec::new();
    write_matrix_text(&mut buf, mat).map_err(io_invalid)?;
    fs::write(path, buf).map_err(io_invalid)
}

/// Serialize rows in the fixed CSV schema: integer round index, then five
/// floats at 12 significant digits, LF endings, one trailing newline.
fn write_csv(path: &Path, rows: &[CsvRow]) -> Result<()> {
    let mut out = String::with_capacity(rows.len() * 96 + 64);
    out.push_str("t,eta_t,loss,comparator_loss,cum_regret,grad_norm\n");
    for row in rows {
        out.push_str(&format!(
            "{},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}\n",
            row.t, row.eta_t, row.loss, row.comparator_loss, row.cum_regret, row.grad_norm
        ));
    }
    fs::write(path, out).map_err(io_invalid)
}

/// Parse a CSV produced by [`run_experiment`] back into rows (used by the
/// self-checks; tolerant only of the exact schema written here).
pub fn read_csv(path: &Path) -> std::result::Result<Vec<CsvRow>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty CSV".to_string())?;
    if header != "t,eta_t,loss,comparator_loss,cum_regret,grad_norm" {
        return Err(format!("unexpected CSV header `{header}`"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(format!("row {}: expected 6 fields, got {}", i + 1, fields.len()));
        }
        let num = |k: usize| -> std::result::Result<f64, String> {
            fields[k]
                .parse()
                .map_err(|_| format!("row {}: bad float `{}`", i + 1, fields[k]))
        };
        rows.push(CsvRow {
            t: fields[0]
                .parse()
                .map_err(|_| format!("row {}: bad round index `{}`", i + 1, fields[0]))?,
            eta_t: num(1)?,
            loss: num(2)?,
            comparator_loss: num(3)?,
            cum_regret: num(4)?,
            grad_norm: num(5)?,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------
// SVG plot
// ---------------------------------------------------------------------

const PLOT_W: f64 = 900.0;
const PLOT_H: f64 = 560.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 48.0;
const MARGIN_B: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Trim a fixed-point tick label: `25.000000` → `25`, `0.250000` → `0.25`.
fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Write a standalone SVG with one cumulative-regret polyline per record.
///
/// The output is a pure function of `records` and `log_t` (no timestamps,
/// no environment lookups), so identical inputs give identical bytes.
pub fn emit_plot(records: &[RunRecord], path: &Path, log_t: bool) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("cannot plot zero records"));
    }
    let horizon = records[0].rows.len();
    for r in records {
        if r.rows.len() != horizon {
            return Err(Error::DimensionMismatch {
                expected: horizon,
                got: r.rows.len(),
            });
        }
    }
    if horizon == 0 {
        return Err(Error::InvalidArgument("cannot plot empty runs"));
    }

    let mut y_min = 0.0_f64;
    let mut y_max = f64::NEG_INFINITY;
    for r in records {
        for row in &r.rows {
            y_min = y_min.min(row.cum_regret);
            y_max = y_max.max(row.cum_regret);
        }
    }
    if !(y_max > y_min) {
        y_max = y_min + 1.0;
    }
    let t_max = horizon as f64;
    let x_frac = |t: f64| -> f64 {
        if horizon == 1 {
            1.0
        } else if log_t {
            t.log10() / t_max.log10()
        } else {
            (t - 1.0) / (t_max - 1.0)
        }
    };
    let x_pos = |t: f64| MARGIN_L + (PLOT_W - MARGIN_L - MARGIN_R) * x_frac(t);
    let y_pos = |v: f64| {
        PLOT_H - MARGIN_B - (PLOT_H - MARGIN_T - MARGIN_B) * (v - y_min) / (y_max - y_min)
    };

    let cfg = &records[0].config;
    let mode_label = match (cfg.kind, cfg.tyler_mode) {
        (ExperimentKind::Tyler, TylerMode::Paper) => ", paper-style normalization",
        (ExperimentKind::Tyler, TylerMode::Ball) => ", ball-constrained",
        _ => "",
    };
    let title = format!(
        "{} cumulative regret (schedule {}, n={}, T={}, seed={}{})",
        cfg.kind, cfg.schedule, cfg.n, cfg.horizon, cfg.seed, mode_label
    );

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{PLOT_W}\" height=\"{PLOT_H}\" \
         viewBox=\"0 0 {PLOT_W} {PLOT_H}\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{PLOT_W}\" height=\"{PLOT_H}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"26\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">{}</text>\n",
        PLOT_W / 2.0,
        title
    ));

    // Axes.
    let x0 = MARGIN_L;
    let x1 = PLOT_W - MARGIN_R;
    let y0 = PLOT_H - MARGIN_B;
    let y1 = MARGIN_T;
    svg.push_str(&format!(
        "<line x1=\"{x0:.1}\" y1=\"{y0:.1}\" x2=\"{x1:.1}\" y2=\"{y0:.1}\" stroke=\"black\"/>\n"
    ));
    svg.push_str(&format!(
        "<line x1=\"{x0:.1}\" y1=\"{y0:.1}\" x2=\"{x0:.1}\" y2=\"{y1:.1}\" stroke=\"black\"/>\n"
    ));
    for k in 0..=4 {
        let frac = k as f64 / 4.0;
        // x tick at a round t value.
        let t = if horizon == 1 {
            1.0
        } else if log_t {
            10f64.powf(frac * t_max.log10()).round().max(1.0)
        } else {
            (1.0 + frac * (t_max - 1.0)).round()
        };
        let xp = x_pos(t);
        svg.push_str(&format!(
            "<line x1=\"{xp:.1}\" y1=\"{y0:.1}\" x2=\"{xp:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
            y0 + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{xp:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{}</text>\n",
            y0 + 20.0,
            fmt_tick(t)
        ));
        // y tick.
        let v = y_min + frac * (y_max - y_min);
        let yp = y_pos(v);
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{yp:.1}\" x2=\"{x0:.1}\" y2=\"{yp:.1}\" stroke=\"black\"/>\n",
            x0 - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"end\">{}</text>\n",
            x0 - 9.0,
            yp + 4.0,
            fmt_tick(v)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">t</text>\n",
        (x0 + x1) / 2.0,
        PLOT_H - 14.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">cumulative regret</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    ));

    // Curves, downsampled to keep files compact while always retaining the
    // first and last rounds.
    let stride = (horizon / 1500).max(1);
    for (i, rec) in records.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut points = String::new();
        let mut push_point = |row: &CsvRow| {
            points.push_str(&format!(
                "{:.1},{:.1} ",
                x_pos(row.t as f64),
                y_pos(row.cum_regret)
            ));
        };
        for row in rec.rows.iter().step_by(stride) {
            push_point(row);
        }
        if (horizon - 1) % stride != 0 {
            push_point(&rec.rows[horizon - 1]);
        }
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.trim_end()
        ));
        // Legend entry.
        let ly = MARGIN_T + 16.0 + 20.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" \
             stroke-width=\"2\"/>\n",
            x0 + 14.0,
            x0 + 44.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\">\u{3b7}={}</text>\n",
            x0 + 50.0,
            ly + 4.0,
            rec.eta
        ));
    }
    svg.push_str("</svg>\n");
    fs::write(path, svg).map_err(io_invalid)
}
