//! `gnan` — generate planted benchmark networks with node attributes, fit the
//! joint link/attribute community model, and evaluate or inspect the fits.
//!
//! Exit codes: 0 on success, 1 on usage or I/O errors, 2 when a fit stopped on
//! the iteration cap instead of converging.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use gnan::em::FitConfig;
use gnan::Mode;
use gnan_cli::commands;

#[derive(Parser)]
#[command(
    name = "gnan",
    version,
    about = "Community detection on networks with node attributes",
    propagate_version = true
)]
struct Cli {
    /// Seed override for `generate`/`benchmark`, fit seed for `fit`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Size of the worker thread pool (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory (`generate`/`benchmark`: where files go, default
    /// `out`; `fit`: where the fit file goes, default next to the dataset).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Use links and attributes jointly.
    #[default]
    Both,
    /// Use links only; attribute profiles stay at their initial values.
    Links,
    /// Use attributes only; connectivity profiles stay at their initial values.
    Attrs,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Both => Mode::Both,
            ModeArg::Links => Mode::LinksOnly,
            ModeArg::Attrs => Mode::AttrsOnly,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write every dataset described by an experiment spec to disk.
    Generate {
        /// Experiment spec file.
        spec: PathBuf,
    },
    /// Fit the model to a dataset given by path prefix (reads
    /// `<prefix>.edges` and, if present, `<prefix>.attrs`).
    Fit {
        /// Dataset path prefix (without extension).
        dataset: PathBuf,
        /// Number of communities.
        #[arg(long)]
        communities: usize,
        /// Iteration cap per restart.
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        /// Stop when the bound improves by less than this.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Half-width of the uniform initialisation jitter around 0.5.
        #[arg(long, default_value_t = 0.1)]
        jitter: f64,
        /// Number of random restarts; the best final bound wins.
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        /// Which data the fit uses.
        #[arg(long, value_enum, default_value_t)]
        mode: ModeArg,
    },
    /// Score a fit file (or a directory of them) against ground-truth labels.
    Eval {
        /// A `.fit` file or a directory containing `.fit` files.
        fit: PathBuf,
        /// Ground-truth label file.
        labels: PathBuf,
        /// Also report modularity of the hard partition on this edge list.
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Run the sweep described by a spec in memory and write recovery curves.
    Benchmark {
        /// Experiment spec file.
        spec: PathBuf,
    },
    /// Print per-community attribute profiles from a fit file.
    Inspect {
        /// Fit file.
        fit: PathBuf,
        /// Only show attributes whose profile weight exceeds this.
        #[arg(long, default_value_t = 0.1)]
        threshold: f64,
        /// Optional file naming attributes, one name per line.
        #[arg(long)]
        names: Option<PathBuf>,
        /// Show the full ranking instead of only the strong attributes.
        #[arg(long)]
        full: bool,
    },
}

fn main() -> ExitCode {
    // Die quietly when stdout closes early (`gnan inspect ... | head`)
    // instead of panicking on the broken pipe.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };

    if let Some(threads) = cli.threads {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
        if let Err(err) = pool {
            eprintln!("error: setting up {threads} worker threads: {err}");
            return ExitCode::from(1);
        }
    }

    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let out_dir = cli.out.clone();
    match cli.command {
        Command::Generate { spec } => {
            let out = out_dir.unwrap_or_else(|| PathBuf::from("out"));
            commands::cmd_generate(&spec, cli.seed, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Benchmark { spec } => {
            let out = out_dir.unwrap_or_else(|| PathBuf::from("out"));
            commands::cmd_benchmark(&spec, cli.seed, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Fit { dataset, communities, max_iters, tol, jitter, restarts, mode } => {
            let mut cfg = FitConfig::new(communities, cli.seed.unwrap_or(0));
            cfg.max_iters = max_iters;
            cfg.tolerance = tol;
            cfg.init_jitter = jitter;
            cfg.n_restarts = restarts;
            cfg.mode = mode.into();
            let outcome = commands::cmd_fit(&dataset, cfg, out_dir.as_deref())?;
            if outcome.converged {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("warning: stopped on the iteration cap without converging");
                Ok(ExitCode::from(2))
            }
        }
        Command::Eval { fit, labels, graph } => {
            commands::cmd_eval(&fit, &labels, graph.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Inspect { fit, threshold, names, full } => {
            commands::cmd_inspect(&fit, threshold, names.as_deref(), full)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
