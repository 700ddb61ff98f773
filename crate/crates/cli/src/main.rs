//! `polygin`: reproducible experiments on polyanalytic Ginibre ensembles.
//!
//! Exit codes: 0 success, 1 tolerance or run failure, 2 usage or config error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use num_complex::Complex64;

use polygin::kernels::{KernelPath, Variant};

use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Tolerance(String),

    #[error(transparent)]
    Lib(#[from] polygin::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use polygin::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Tolerance(_) => 1,
            CliError::Lib(e) => match e {
                E::Capacity(_)
                | E::InvalidSpec(_)
                | E::InvalidArgument(_)
                | E::Syntax { .. }
                | E::UnknownIdentifier { .. }
                | E::NonReal(_)
                | E::DegreeBudget { .. }
                | E::GridMismatch(_)
                | E::TooFewReplicates { .. }
                | E::OrderOutOfRange(_)
                | E::Malformed(_) => 2,
                _ => 1,
            },
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "polygin", version, about = "Polyanalytic Ginibre ensembles: kernels, sampling and linear statistics")]
struct Cli {
    /// TOML experiment config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the correlation kernel, or cross-check its evaluation paths.
    Kernel(KernelArgs),
    /// Draw configurations and write them as CSV with a JSON sidecar.
    Sample {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        seeds: SeedArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Monte Carlo cumulants of a linear statistic.
    Stats {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        g: GArgs,
        #[command(flatten)]
        seeds: SeedArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Read configurations from this sample CSV instead of drawing them.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Highest cumulant order (1 to 4).
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Quadrature variance of a linear statistic against the limiting prediction.
    Variance {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        g: GArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Exit with code 1 when the relative error exceeds this.
        #[arg(long)]
        max_relative_error: Option<f64>,
    },
    /// Fluctuation cumulants k2..k4, normality summary and prediction.
    Clt {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        g: GArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        seeds: SeedArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Exit with code 1 when |k3| or |k4| exceeds this many standard errors.
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Run an exact identity suite.
    Verify {
        #[arg(long)]
        suite: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Debug)]
#[command(args_conflicts_with_subcommands = true)]
struct KernelArgs {
    #[command(subcommand)]
    check: Option<KernelCommand>,
    #[command(flatten)]
    spec: SpecArgs,
    /// First point, e.g. `0.3-0.2i`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    z: Option<Complex64>,
    /// Second point.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    w: Option<Complex64>,
    /// basis, explicit or raising.
    #[arg(long, default_value = "basis")]
    path: KernelPath,
    /// Include the Gaussian weight `e^{-n(|z|^2+|w|^2)/2}`.
    #[arg(long, action = ArgAction::Set, default_value_t = true)]
    weighted: bool,
}

#[derive(Subcommand, Debug)]
enum KernelCommand {
    /// Largest relative discrepancy between the three evaluation paths.
    Check(CheckArgs),
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Both full and pure when no variant is given.
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, default_value_t = 1000)]
    pairs: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Points are drawn uniformly from the disk of this radius.
    #[arg(long, default_value_t = 1.3)]
    radius: f64,
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
}

#[derive(Args, Debug, Default)]
struct SpecArgs {
    /// Particles per level, also the field strength.
    #[arg(long)]
    n: Option<u32>,
    /// Number of Landau levels.
    #[arg(long)]
    q: Option<u32>,
    /// full, pure or ginibre (default full).
    #[arg(long)]
    variant: Option<Variant>,
}

#[derive(Args, Debug, Default)]
struct GArgs {
    /// Test function expression, e.g. `bump(0.5,0.2)*harm(1)`.
    #[arg(long, allow_hyphen_values = true)]
    g: Option<String>,
}

#[derive(Args, Debug, Default)]
struct GridArgs {
    /// Radial Gauss-Legendre nodes.
    #[arg(long)]
    nr: Option<usize>,
    /// Angular nodes.
    #[arg(long)]
    ntheta: Option<usize>,
    /// Allowed relative gap between the grid and its refinement.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct SeedArgs {
    /// First seed; replicate i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of replicates.
    #[arg(long)]
    samples: Option<usize>,
    /// Explicit comma-separated seed list.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["seed", "samples"])]
    seeds: Option<Vec<u64>>,
}

#[derive(Args, Debug, Default)]
struct OutArgs {
    /// Output file; reports go to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    s.trim().parse::<Complex64>().map_err(|e| format!("`{s}` is not a complex number: {e}"))
}

impl SpecArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        cfg.spec.n = self.n;
        cfg.spec.q = self.q;
        cfg.spec.variant = self.variant;
    }
}

impl GArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        cfg.g.clone_from(&self.g);
    }
}

impl GridArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        cfg.grid.nr = self.nr;
        cfg.grid.ntheta = self.ntheta;
        cfg.grid.tolerance = self.tolerance;
    }
}

impl SeedArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        cfg.seeds.seed = self.seed;
        cfg.seeds.count = self.samples;
        cfg.seeds.list.clone_from(&self.seeds);
    }
}

impl OutArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        cfg.output.path.clone_from(&self.out);
    }
}

/// Sizes the global rayon pool from `POLYGIN_THREADS`. Results do not depend
/// on the pool size: parallel work is collected in order and reduced serially.
fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("POLYGIN_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("POLYGIN_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(),
    };
    let mut flags = ExperimentConfig::default();
    match cli.command {
        Command::Kernel(args) => match args.check {
            Some(KernelCommand::Check(check)) => {
                check.spec.apply(&mut flags);
                cfg.overlay(&flags);
                commands::kernel_check(&cfg, check.pairs, check.seed, check.radius, check.tolerance)
            }
            None => {
                args.spec.apply(&mut flags);
                cfg.overlay(&flags);
                let z = args.z.ok_or_else(|| CliError::Usage("missing --z".into()))?;
                let w = args.w.ok_or_else(|| CliError::Usage("missing --w".into()))?;
                commands::kernel(&cfg, z, w, args.path, args.weighted)
            }
        },
        Command::Sample { spec, seeds, out } => {
            spec.apply(&mut flags);
            seeds.apply(&mut flags);
            out.apply(&mut flags);
            cfg.overlay(&flags);
            commands::sample(cfg)
        }
        Command::Stats { spec, g, seeds, out, input, k_max } => {
            spec.apply(&mut flags);
            g.apply(&mut flags);
            seeds.apply(&mut flags);
            out.apply(&mut flags);
            flags.output.input = input;
            flags.verify.k_max = k_max;
            cfg.overlay(&flags);
            commands::stats(cfg)
        }
        Command::Variance { spec, g, grid, out, max_relative_error } => {
            spec.apply(&mut flags);
            g.apply(&mut flags);
            grid.apply(&mut flags);
            out.apply(&mut flags);
            flags.verify.max_relative_error = max_relative_error;
            cfg.overlay(&flags);
            commands::variance(cfg)
        }
        Command::Clt { spec, g, grid, seeds, out, sigma } => {
            spec.apply(&mut flags);
            g.apply(&mut flags);
            grid.apply(&mut flags);
            seeds.apply(&mut flags);
            out.apply(&mut flags);
            flags.verify.sigma = sigma;
            cfg.overlay(&flags);
            commands::clt(cfg)
        }
        Command::Verify { suite, out } => {
            flags.verify.suite = suite;
            out.apply(&mut flags);
            cfg.overlay(&flags);
            commands::verify(cfg)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("polygin: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
