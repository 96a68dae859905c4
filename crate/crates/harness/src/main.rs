use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use jsantalo_harness::config::{Config, SantaloCase, SearchStart};
use jsantalo_harness::experiments::{functional, radial, santalo, search, symmetrize, tools};
use jsantalo_harness::report::{ExperimentReport, EXIT_ERROR};

#[derive(Parser, Debug)]
#[command(name = "jsantalo", version, about = "Volume-product experiments for E_j-polar tuples of convex bodies")]
struct Cli {
    /// Master seed; overrides the configuration file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML configuration with one section per command.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory receiving `<experiment>.json` and `<experiment>.csv`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte Carlo samples per estimate.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Relative tolerance floor added to every statistical comparison.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Degrees {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    j: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Santaló ratios over a random corpus closed by the j-polar.
    VerifySantalo {
        #[arg(long, value_enum)]
        case: Option<CaseArg>,
        #[command(flatten)]
        deg: Degrees,
        #[arg(long)]
        tuples: Option<usize>,
    },
    /// Steiner-symmetrization reduction chains with monotonicity checks.
    Symmetrize {
        #[command(flatten)]
        deg: Degrees,
        #[arg(long)]
        chains: Option<usize>,
    },
    /// Annealed search for tuples with ratio above 1 in open cases.
    Search {
        #[command(flatten)]
        deg: Degrees,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, value_enum)]
        start: Option<StartArg>,
    },
    /// Radial-function condition against S_{k,2/k}-polarity.
    RadialCheck {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        tuples: Option<usize>,
    },
    /// Functional polarity corpora and functional Ball probes.
    Functional {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        tuples: Option<usize>,
    },
    /// j-polar of k − 1 polytope files, written to stdout or `--output`.
    Polar {
        files: Vec<PathBuf>,
        #[arg(long)]
        j: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Exact and Monte Carlo volumes of polytope files.
    Volume { files: Vec<PathBuf> },
    /// Ball functional of a tuple of polytope files.
    Ball {
        files: Vec<PathBuf>,
        #[arg(long)]
        j: usize,
    },
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum CaseArg {
    Unconditional,
    JEqualsK,
    JEvenMixed,
    General,
}

impl From<CaseArg> for SantaloCase {
    fn from(c: CaseArg) -> Self {
        match c {
            CaseArg::Unconditional => Self::Unconditional,
            CaseArg::JEqualsK => Self::JEqualsK,
            CaseArg::JEvenMixed => Self::JEvenMixed,
            CaseArg::General => Self::General,
        }
    }
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum StartArg {
    Ball,
    Random,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    set(&mut cfg.seed, cli.seed);
    set(&mut cfg.samples, cli.samples);
    set(&mut cfg.tol, cli.tol);
    Ok(cfg)
}

fn run(cli: Cli) -> Result<ExperimentReport> {
    let mut cfg = load_config(&cli)?;
    let report = match cli.command {
        Command::VerifySantalo { case, deg, tuples } => {
            let s = &mut cfg.verify_santalo;
            set(&mut s.case, case.map(Into::into));
            set(&mut s.n, deg.n);
            set(&mut s.j, deg.j);
            set(&mut s.k, deg.k);
            set(&mut s.tuples, tuples);
            santalo::cmd_verify_santalo(&cfg)?
        }
        Command::Symmetrize { deg, chains } => {
            let s = &mut cfg.symmetrize;
            set(&mut s.n, deg.n);
            set(&mut s.j, deg.j);
            set(&mut s.k, deg.k);
            set(&mut s.chains, chains);
            symmetrize::cmd_symmetrize_experiment(&cfg)?
        }
        Command::Search { deg, restarts, steps, start } => {
            let s = &mut cfg.search;
            set(&mut s.n, deg.n);
            set(&mut s.j, deg.j);
            set(&mut s.k, deg.k);
            set(&mut s.restarts, restarts);
            set(&mut s.steps, steps);
            set(
                &mut s.start,
                start.map(|a| match a {
                    StartArg::Ball => SearchStart::Ball,
                    StartArg::Random => SearchStart::Random,
                }),
            );
            search::cmd_search_counterexample(&cfg)?
        }
        Command::RadialCheck { n, k, tuples } => {
            let s = &mut cfg.radial;
            set(&mut s.n, n);
            set(&mut s.k, k);
            set(&mut s.tuples, tuples);
            radial::cmd_radial_condition_check(&cfg)?
        }
        Command::Functional { n, tuples } => {
            let s = &mut cfg.functional;
            set(&mut s.n, n);
            set(&mut s.tuples, tuples);
            functional::cmd_functional_suite(&cfg)?
        }
        Command::Polar { files, j, output } => {
            let (report, text) = tools::cmd_polar(&files, j, &cfg)?;
            match output {
                Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
            report
        }
        Command::Volume { files } => tools::cmd_volume(&files, &cfg)?,
        Command::Ball { files, j } => tools::cmd_ball(&files, j, &cfg)?,
    };
    if let Some(dir) = &cli.out {
        report.write(dir)?;
    }
    Ok(report)
}

fn summarize(r: &ExperimentReport) {
    let s = &r.summary;
    eprintln!(
        "{}: {} cases, {} passed, {} failed ({} asserted), {} skipped, {} candidates",
        r.experiment, s.cases, s.passed, s.failed, s.asserted_failures, s.skipped, s.candidates
    );
    for (k, v) in &s.aggregates {
        eprintln!("  {k} = {v}");
    }
    eprintln!("  hash = {}", r.hash);
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(report) => {
            summarize(&report);
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
