use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use plfam_core::averaging::CandidateMode;
use plfam_core::Method;

use crate::commands::{self, BenchArgs, FitArgs, PredictArgs, StandardizeArgs, TauChoice};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "plfam",
    version,
    about = "Partially linear functional additive models with cross-validation model averaging"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit every candidate, choose averaging weights and write a model bundle.
    Fit(FitCmd),
    /// Predict new observations from a model bundle.
    Predict(PredictCmd),
    /// Run replicated simulation benchmarks.
    Bench(BenchCmd),
    /// Standardize numeric columns, or apply stored statistics.
    Standardize(StandardizeCmd),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Cvma,
    Aic,
    Bic,
    Saic,
    Sbic,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Cvma => Method::Cvma,
            MethodArg::Aic => Method::Aic,
            MethodArg::Bic => Method::Bic,
            MethodArg::Saic => Method::Saic,
            MethodArg::Sbic => Method::Sbic,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Nested,
    NonNested,
}

#[derive(Debug, Args)]
pub struct FitCmd {
    #[arg(long)]
    pub scalars: PathBuf,
    #[arg(long)]
    pub curves: PathBuf,
    #[arg(long)]
    pub response: PathBuf,
    /// Candidate-set JSON.
    #[arg(long)]
    pub candidates: PathBuf,
    /// Number of CV folds (overrides the candidate file; default 5).
    #[arg(long = "Q")]
    pub q: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bundle directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Use this smoothing parameter instead of GCV selection.
    #[arg(long, conflicts_with_all = ["tau_min", "tau_max", "tau_count"])]
    pub tau: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub tau_min: f64,
    #[arg(long, default_value_t = 1e4)]
    pub tau_max: f64,
    #[arg(long, default_value_t = 25)]
    pub tau_count: usize,
}

#[derive(Debug, Args)]
pub struct PredictCmd {
    /// Bundle directory written by `fit`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub scalars: PathBuf,
    #[arg(long)]
    pub curves: PathBuf,
    /// Optional observed response; prints the MSPE.
    #[arg(long)]
    pub response: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "cvma")]
    pub method: MethodArg,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchCmd {
    #[arg(long, default_value_t = 1)]
    pub design: u8,
    /// Comma-separated R² levels.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub r2: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 500)]
    pub n_test: usize,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long, default_value_t = 20240901)]
    pub seed: u64,
    #[arg(long = "Q", default_value_t = 5)]
    pub q: usize,
    #[arg(long, value_enum, default_value = "nested")]
    pub mode: ModeArg,
    /// Leading scalar covariates offered to candidates.
    #[arg(long, default_value_t = 5)]
    pub scalar_pool: usize,
    /// Leading transformed scores offered to candidates.
    #[arg(long, default_value_t = 3)]
    pub score_pool: usize,
    /// Directory for raw.csv and summary.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StandardizeCmd {
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated columns (default: all).
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the statistics (default: <out>.stats.json).
    #[arg(long, conflicts_with = "apply")]
    pub stats: Option<PathBuf>,
    /// Apply statistics from a previous run, e.g. training stats to test data.
    #[arg(long)]
    pub apply: Option<PathBuf>,
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("PLFAM_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| {
            CliError::Usage(format!(
                "PLFAM_THREADS must be a positive integer, got `{value}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))
}

pub fn execute(command: Command) -> Result<()> {
    configure_threads()?;
    match command {
        Command::Fit(c) => {
            let tau = match c.tau {
                Some(t) => TauChoice::Fixed(t),
                None => TauChoice::Gcv {
                    lo: c.tau_min,
                    hi: c.tau_max,
                    count: c.tau_count,
                },
            };
            let bundle = commands::fit(&FitArgs {
                scalars: c.scalars,
                curves: c.curves,
                response: c.response,
                candidates: c.candidates,
                q: c.q,
                seed: c.seed,
                out: c.out.clone(),
                tau,
            })?;
            let avg = &bundle.model.average;
            println!(
                "fitted {} candidates on n={} (K={}, Q={}, {})",
                avg.n_candidates(),
                avg.cv.matrix.nrows(),
                bundle.model.fpca.n_components(),
                bundle.folds,
                bundle.smoothing
            );
            println!(
                "AIC selects candidate {}, BIC selects candidate {}",
                avg.criteria.aic_choice + 1,
                avg.criteria.bic_choice + 1
            );
            print!("{}", commands::weight_report_csv(&bundle, Method::Cvma));
            println!("bundle written to {}", c.out.display());
        }
        Command::Predict(c) => {
            let to_stdout = c.out.is_none();
            let p = commands::predict(&PredictArgs {
                model: c.model,
                scalars: c.scalars,
                curves: c.curves,
                response: c.response,
                method: c.method.into(),
                out: c.out,
            })?;
            if to_stdout {
                print!("{}", p.to_csv());
            }
            if let Some(mspe) = p.mspe {
                if to_stdout {
                    eprintln!("MSPE {mspe}");
                } else {
                    println!("MSPE {mspe}");
                }
            }
        }
        Command::Bench(c) => {
            let args = BenchArgs {
                design: c.design,
                r2: c.r2,
                n: c.n,
                n_test: c.n_test,
                reps: c.reps,
                seed: c.seed,
                q: c.q,
                mode: match c.mode {
                    ModeArg::Nested => CandidateMode::Nested,
                    ModeArg::NonNested => CandidateMode::NonNested,
                },
                scalar_pool: c.scalar_pool,
                score_pool: c.score_pool,
                out: c.out,
            };
            println!(
                "design {} | n {} | n_test {} | R2 {:?} | reps {} | seed {} | Q {} | {:?} pools ({}, {})",
                args.design,
                args.n,
                args.n_test,
                args.r2,
                args.reps,
                args.seed,
                args.q,
                args.mode,
                args.scalar_pool,
                args.score_pool
            );
            let outcome = commands::bench(&args)?;
            print!("{}", outcome.table);
            if outcome.failures > 0 {
                println!("{} failed replications excluded", outcome.failures);
            }
            println!(
                "wrote {}/raw.csv and summary.csv in {:.1?}",
                args.out.display(),
                outcome.elapsed
            );
        }
        Command::Standardize(c) => {
            let stats = commands::standardize(&StandardizeArgs {
                input: c.input,
                columns: c.columns,
                out: c.out,
                stats: c.stats,
                apply: c.apply,
            })?;
            for s in &stats.columns {
                println!("{}: mean {} sd {}", s.name, s.mean, s.sd);
            }
        }
    }
    Ok(())
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("plfam: {e}");
            e.exit_code()
        }
    }
}
