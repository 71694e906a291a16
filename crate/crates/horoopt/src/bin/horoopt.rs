//! Command-line front end for the online-optimization experiment harness.
//!
//! Two subcommands select the loss family (`tyler` for online scatter
//! estimation, `frechet` for the online Fréchet mean); everything else is
//! configured through flags, an optional `key = value` config file, or the
//! built-in defaults, with that precedence.
//!
//! Exit codes: 0 when every grid run succeeds, 1 when any run fails (or
//! shared setup fails), 2 for invalid configuration or arguments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use horoopt::harness::{
    run_experiment, ConfigOverrides, ExperimentKind, ExperimentOutcome, ScheduleKind, TylerMode,
};

#[derive(Parser)]
#[command(
    name = "horoopt",
    version,
    about = "Online optimization on the SPD manifold: regret experiments over a step-size grid"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Online scatter estimation with losses log(aᵀΣ⁻¹a).
    Tyler(RunArgs),
    /// Online Fréchet mean with losses d²(Σ, Yₜ)/2.
    Frechet(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Matrix dimension n of SPD(n).
    #[arg(long)]
    n: Option<usize>,

    /// Number of online rounds.
    #[arg(long = "T")]
    horizon: Option<usize>,

    /// Step-size scale; repeat the flag to run a grid.
    #[arg(long = "eta")]
    etas: Option<Vec<f64>>,

    /// Step-size schedule shape.
    #[arg(long, value_parser = clap::value_parser!(ScheduleKind))]
    schedule: Option<ScheduleKind>,

    /// Seed for all data generation.
    #[arg(long)]
    seed: Option<u64>,

    /// Path to a matrix file giving the feasible-ball center.
    #[arg(long = "ball-center")]
    ball_center: Option<PathBuf>,

    /// Radius of the feasible geodesic ball.
    #[arg(long = "ball-radius")]
    ball_radius: Option<f64>,

    /// Scale convention for scatter regret (ball | paper).
    #[arg(long = "tyler-mode", value_parser = clap::value_parser!(TylerMode))]
    tyler_mode: Option<TylerMode>,

    /// Tangent spread of generated SPD targets.
    #[arg(long)]
    sigma: Option<f64>,

    /// Output directory for CSV/SVG/matrix artifacts.
    #[arg(long = "out")]
    out_dir: Option<PathBuf>,

    /// Emit the combined regret plot (default on).
    #[arg(long, overrides_with = "no_plot")]
    plot: bool,

    /// Skip the regret plot.
    #[arg(long = "no-plot")]
    no_plot: bool,

    /// Log-scale the t axis of the plot.
    #[arg(long = "log-t")]
    log_t: bool,

    /// Config file with `key = value` lines (flags win over the file).
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            n: self.n,
            horizon: self.horizon,
            etas: self.etas.clone(),
            schedule: self.schedule,
            seed: self.seed,
            ball_center_path: self.ball_center.clone(),
            ball_radius: self.ball_radius,
            tyler_mode: self.tyler_mode,
            sigma: self.sigma,
            out_dir: self.out_dir.clone(),
            plot: match (self.plot, self.no_plot) {
                (false, false) => None,
                (_, no) => Some(!no),
            },
            log_t: if self.log_t { Some(true) } else { None },
        }
    }
}

fn run(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentOutcome, (u8, String)> {
    let file_layer = match &args.config {
        Some(path) => ConfigOverrides::from_file(path).map_err(|e| (2, e))?,
        None => ConfigOverrides::default(),
    };
    let config = args
        .overrides()
        .or(file_layer)
        .into_config(kind)
        .map_err(|e| (2, e))?;

    eprintln!(
        "{kind}: n={}, T={}, schedule={}, eta grid {:?}, seed={}, out={}",
        config.n,
        config.horizon,
        config.schedule,
        config.etas,
        config.seed,
        config.out_dir.display()
    );
    run_experiment(&config).map_err(|e| (1, e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Tyler(a) => (ExperimentKind::Tyler, a),
        Command::Frechet(a) => (ExperimentKind::Frechet, a),
    };

    let outcome = match run(kind, args) {
        Ok(o) => o,
        Err((code, message)) => {
            eprintln!("error: {message}");
            return ExitCode::from(code);
        }
    };

    for rec in &outcome.records {
        let s = &rec.summary;
        println!(
            "eta={}: regret={:.6e}, max |grad|={:.6e}, comparator mean-grad norm={:.3e}, \
             {:.2}s, rng {}",
            rec.eta, s.regret_total, s.max_grad_norm, s.comparator_grad_norm, s.wall_time_s, s.rng
        );
        println!("  csv: {}", rec.csv_path.display());
        for w in &rec.warnings {
            println!("  warning: {w}");
        }
    }
    for f in &outcome.failures {
        eprintln!("eta={}: FAILED — {}", f.eta, f.message);
    }

    if outcome.all_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
