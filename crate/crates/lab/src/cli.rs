//! Command-line entry point. Exit codes: 0 success, 1 usage or config
//! error, 2 numerical failure (including non-convergence under `--strict`).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::artifact::{RunArtifact, Table};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::svg::Plot;
use crate::{experiments, init_threads, LabError};

#[derive(Debug, Parser)]
#[command(name = "ergokit", version, about = "Finite-scale ergodic indicators: experiments and inequality suites")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML experiment configuration.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override the configured seed; at most 2^63 - 1 so configs stay valid TOML.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    pub seed: Option<u64>,
    /// Override the output root; artifacts go to <DIR>/<experiment>/fixed.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// What to print on standard output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Treat non-converged estimates as failures (exit 2).
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// The run summary.
    Json,
    /// The first table of the run.
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Local entropy or the correlation-entropy spectrum.
    Entropy {
        #[command(subcommand)]
        which: EntropyCommand,
    },
    /// Return and waiting times, with the h/log λ bounds on expanding maps.
    Recurrence,
    /// Local dimensions and the packing-dimension surrogate.
    Dimension,
    /// Two-sided ball masses and expansivity verdicts.
    Expansive,
    /// Periodic approximation of an analytic target measure.
    Approx,
    /// Batch inequality checks.
    Suite,
    /// Scatter plot of two columns of a CSV file.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum EntropyCommand {
    Local,
    Spectrum,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// Input CSV.
    pub csv: PathBuf,
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: String,
    /// Column whose values split the points into series.
    #[arg(long)]
    pub group: Option<String>,
    #[arg(long)]
    pub log_x: bool,
    #[arg(long)]
    pub log_y: bool,
    /// Output SVG; defaults to the input path with an .svg extension.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

impl Command {
    pub fn kind(&self) -> Option<ExperimentKind> {
        Some(match self {
            Command::Entropy { which: EntropyCommand::Local } => ExperimentKind::EntropyLocal,
            Command::Entropy { which: EntropyCommand::Spectrum } => ExperimentKind::EntropySpectrum,
            Command::Recurrence => ExperimentKind::Recurrence,
            Command::Dimension => ExperimentKind::Dimension,
            Command::Expansive => ExperimentKind::Expansive,
            Command::Approx => ExperimentKind::Approx,
            Command::Suite => ExperimentKind::Suite,
            Command::Plot(_) => return None,
        })
    }
}

/// Resolve the config for `kind`: the file if given (its experiment field
/// is replaced by the subcommand), else the built-in default; then apply
/// overrides. Relative `out` paths in a config file are taken from the
/// working directory.
pub fn resolve_config(kind: ExperimentKind, common: &Common) -> Result<ExperimentConfig, LabError> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default_for(kind),
    };
    cfg.experiment = kind;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out = o.to_string_lossy().into_owned();
    }
    Ok(cfg)
}

/// Run one experiment, write its artifact and return it with its directory.
pub fn execute(cfg: &ExperimentConfig) -> Result<(RunArtifact, PathBuf), LabError> {
    let art = experiments::run(cfg)?;
    let dir = art.write(Path::new(&cfg.out))?;
    Ok((art, dir))
}

fn plot(args: &PlotArgs) -> Result<PathBuf, LabError> {
    let text = std::fs::read_to_string(&args.csv).map_err(|e| LabError::Config(format!("{}: {e}", args.csv.display())))?;
    let name = args.csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "plot".into());
    let table = Table::from_csv(&name, &text)?;
    for c in [Some(&args.x), Some(&args.y), args.group.as_ref()].into_iter().flatten() {
        if !table.header.contains(c) {
            return Err(LabError::Config(format!("column `{c}` not in {}", args.csv.display())));
        }
    }
    let mut p = Plot::from_table(&name, &name, &table, &args.x, &args.y, args.group.as_deref());
    p.log_x = args.log_x;
    p.log_y = args.log_y;
    let out = args.output.clone().unwrap_or_else(|| args.csv.with_extension("svg"));
    std::fs::write(&out, p.render())?;
    Ok(out)
}

fn dispatch(cli: &Cli) -> Result<(), LabError> {
    let Some(kind) = cli.command.kind() else {
        let Command::Plot(args) = &cli.command else { unreachable!("only plot has no experiment kind") };
        println!("{}", plot(args)?.display());
        return Ok(());
    };
    let cfg = resolve_config(kind, &cli.common)?;
    let (art, dir) = execute(&cfg)?;
    match cli.common.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&art.full_summary())?),
        Format::Csv => print!("{}", art.tables.first().map(Table::to_csv).unwrap_or_default()),
    }
    eprintln!("artifacts written to {}", dir.display());
    if cli.common.strict && !art.converged {
        return Err(LabError::NotConverged(format!("{} estimates did not converge", kind.name())));
    }
    Ok(())
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_threads();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
