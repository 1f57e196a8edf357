//! The `footprint` command-line tool.
//!
//! ```text
//! footprint simulate  --config run.json [--seed N | --seeds A..B] [--days N] [--out DIR]
//! footprint decompose --input spy.csv [--dividends] [--output curves.csv]
//! footprint breakeven --nudge 0.0004 --daily-cost 400000
//! footprint variance  --input spy.csv
//! ```

use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use crate::accounting::{breakeven_size, AccountingError};
use crate::config::{ConfigError, SimConfig};
use crate::decompose::{decompose, variance_shares, DecomposeError};
use crate::ingest::{parse_ohlc_csv, IngestError};
use crate::sim::{run_sim, SimError, SimOutput};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot read `{path}`: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write `{path}`: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("`{path}`: {source}")]
    Data { path: PathBuf, source: IngestError },
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    Accounting(#[from] AccountingError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Read { .. } | CliError::Write { .. } => 4,
            CliError::Data { .. } => 5,
            CliError::Decompose(_) | CliError::Accounting(_) | CliError::Sim(_) => 6,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "footprint", version, about = "Intraday round-trip impact simulator and overnight/intraday return decomposition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the market simulation and write per-asset price series plus the ledger.
    Simulate(SimulateArgs),
    /// Cumulative overnight and intraday returns of a daily bar file.
    Decompose(DecomposeArgs),
    /// Portfolio value at which the daily nudge pays for the daily round trip.
    Breakeven(BreakevenArgs),
    /// Intraday and overnight shares of daily log-return variance.
    Variance(VarianceArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Half-open seed range `A..B`, run in parallel, one output directory each.
    #[arg(long)]
    seeds: Option<SeedRange>,
    #[arg(long)]
    days: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[arg(long)]
    input: PathBuf,
    /// Reinvest dividends in the overnight leg.
    #[arg(long)]
    dividends: bool,
    /// Defaults to `<input stem>_decomposition.csv` next to the input.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Defaults to the input file stem.
    #[arg(long)]
    symbol: Option<String>,
}

#[derive(Debug, Args)]
struct BreakevenArgs {
    /// Expected daily price nudge as a fraction of portfolio value.
    #[arg(long, allow_negative_numbers = true)]
    nudge: f64,
    /// Daily round-trip cost in currency.
    #[arg(long, allow_negative_numbers = true)]
    daily_cost: f64,
}

#[derive(Debug, Args)]
struct VarianceArgs {
    #[arg(long)]
    input: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRange(pub Range<u64>);

impl FromStr for SeedRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| format!("expected A..B, got `{s}`"))?;
        let parse = |x: &str| {
            x.trim()
                .parse::<u64>()
                .map_err(|e| format!("bad seed `{x}`: {e}"))
        };
        let (a, b) = (parse(a)?, parse(b)?);
        if a >= b {
            return Err(format!("empty seed range {a}..{b}"));
        }
        Ok(SeedRange(a..b))
    }
}

/// Parses `argv` (including the program name), runs the command and writes
/// human-readable output to `stdout`.
pub fn run<I, T, W>(argv: I, stdout: &mut W) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            return emit(stdout, format_args!("{}", e.to_string().trim_end()));
        }
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    match cli.command {
        Command::Simulate(args) => simulate(args, stdout),
        Command::Decompose(args) => decompose_cmd(args, stdout),
        Command::Breakeven(args) => {
            let v = breakeven_size(args.nudge, args.daily_cost)?;
            emit(stdout, format_args!("{v}"))
        }
        Command::Variance(args) => {
            let series = read_series(&args.input, None)?;
            let shares = variance_shares(&series)?;
            emit(
                stdout,
                format_args!(
                    "intraday_share={:.6} overnight_share={:.6}",
                    shares.intraday_share, shares.overnight_share
                ),
            )
        }
    }
}

fn emit<W: Write>(out: &mut W, args: std::fmt::Arguments<'_>) -> Result<(), CliError> {
    writeln!(out, "{args}").map_err(|source| CliError::Write {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

fn read_series(path: &Path, symbol: Option<&str>) -> Result<crate::PriceSeries, CliError> {
    let file = fs::File::open(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".into());
    parse_ohlc_csv(file, symbol.unwrap_or(&stem)).map_err(|source| match source {
        IngestError::Io(source) => CliError::Read {
            path: path.to_path_buf(),
            source,
        },
        source => CliError::Data {
            path: path.to_path_buf(),
            source,
        },
    })
}

fn decompose_cmd<W: Write>(args: DecomposeArgs, stdout: &mut W) -> Result<(), CliError> {
    let series = read_series(&args.input, args.symbol.as_deref())?;
    let result = decompose(&series, args.dividends)?;
    let output = args.output.unwrap_or_else(|| {
        let stem = args
            .input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "series".into());
        args.input.with_file_name(format!("{stem}_decomposition.csv"))
    });
    let mut buf = Vec::new();
    result
        .write_csv(&mut buf)
        .expect("writing to an in-memory buffer cannot fail");
    write_file(&output, &buf)?;
    emit(stdout, format_args!("{}", result.summary()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn load_config(path: &Path) -> Result<SimConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(SimConfig::from_json(&text)?)
}

fn simulate<W: Write>(args: SimulateArgs, stdout: &mut W) -> Result<(), CliError> {
    let mut cfg = load_config(&args.config)?;
    if let Some(days) = args.days {
        cfg.days = days;
    }
    cfg.validate()?;

    let runs: Vec<(u64, PathBuf)> = match &args.seeds {
        Some(SeedRange(range)) => range
            .clone()
            .map(|s| (s, args.out.join(format!("seed-{s}"))))
            .collect(),
        None => vec![(args.seed.unwrap_or(cfg.seed), args.out.clone())],
    };

    let outputs: Vec<(u64, PathBuf, SimOutput)> = runs
        .into_par_iter()
        .map(|(seed, dir)| run_sim(&cfg, seed).map(|out| (seed, dir, out)))
        .collect::<Result<_, _>>()?;

    for (seed, dir, out) in &outputs {
        write_sim_output(dir, out)?;
        let pnl: f64 = out.ledger.days.iter().map(|d| d.net_pnl()).sum();
        emit(
            stdout,
            format_args!(
                "seed {seed}: {} days, {} assets -> {} (strategy net P&L {pnl:.2})",
                cfg.days,
                out.series.len(),
                dir.display()
            ),
        )?;
        for series in &out.series {
            if let Ok(d) = decompose(series, false) {
                emit(stdout, format_args!("  {}", d.summary()))?;
            }
        }
    }
    Ok(())
}

/// Writes `<SYMBOL>.csv` for every asset and `ledger.csv` into `dir`.
pub fn write_sim_output(dir: &Path, out: &SimOutput) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    for series in &out.series {
        write_file(
            &dir.join(format!("{}.csv", series.symbol())),
            series.to_csv_string().as_bytes(),
        )?;
    }
    let mut buf = Vec::new();
    out.ledger
        .write_csv(&mut buf)
        .expect("writing to an in-memory buffer cannot fail");
    write_file(&dir.join("ledger.csv"), &buf)
}
