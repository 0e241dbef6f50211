//! Command-line front end: `bench-quant`, `bench-tans` and `roundtrip`.
//!
//! Exit codes: 0 ok, 1 usage or I/O error, 2 verification mismatch,
//! 3 decode error. `PPVQ_THREADS` sets the worker thread count.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::{
    bench_quant, bench_tans, roundtrip, BenchConfig, RoundtripConfig, DEFAULT_ALPHABET,
    DEFAULT_POWERS, DEFAULT_STATES, DEFAULT_TRIALS,
};
use crate::error::Error;
use crate::probmodel::Probabilities;
use crate::quantizer::{DEFAULT_OFFSET, DEFAULT_POWER};
use crate::tans::SpreadKind;

pub const THREADS_ENV: &str = "PPVQ_THREADS";

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_MISMATCH: u8 = 2;
pub const EXIT_DECODE: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "ppvq",
    version,
    about = "Quantized distributions for ANS: benches and roundtrip checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean quantization loss and header size over random distributions.
    BenchQuant(BenchQuantArgs),
    /// Mean tANS automaton overhead per spread kind.
    BenchTans(BenchTansArgs),
    /// Full pipeline on one distribution file, with verification.
    Roundtrip(RoundtripArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CommonBench {
    /// Alphabet size D.
    #[arg(long, default_value_t = DEFAULT_ALPHABET)]
    pub alphabet: usize,
    /// Quantization sums K (comma separated or repeated).
    #[arg(long, value_delimiter = ',')]
    pub sum: Vec<u32>,
    /// Deformation powers w.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_POWERS)]
    pub power: Vec<f64>,
    /// Reconstruction offset o.
    #[arg(long, default_value_t = DEFAULT_OFFSET)]
    pub offset: f64,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Distribution file used by every trial instead of random draws.
    #[arg(long)]
    pub dist: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct BenchQuantArgs {
    #[command(flatten)]
    pub common: CommonBench,
    /// Frame lengths N for description-length columns.
    #[arg(long, value_delimiter = ',')]
    pub frames: Vec<u64>,
}

#[derive(Debug, Args)]
pub struct BenchTansArgs {
    #[command(flatten)]
    pub common: CommonBench,
    /// Number of tANS states L.
    #[arg(long, default_value_t = DEFAULT_STATES)]
    pub states: u32,
    /// Spread kinds: fast, tuned-sorted, tuned-bucketed, tuned-iterated-N.
    #[arg(long, value_delimiter = ',', default_values_t = SpreadKind::STANDARD)]
    pub spread: Vec<SpreadKind>,
}

#[derive(Debug, Args)]
pub struct RoundtripArgs {
    /// Distribution file: one probability per line.
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_STATES)]
    pub sum: u32,
    #[arg(long, default_value_t = DEFAULT_POWER)]
    pub power: f64,
    #[arg(long, default_value_t = DEFAULT_OFFSET)]
    pub offset: f64,
    #[arg(long, default_value_t = DEFAULT_STATES)]
    pub states: u32,
    #[arg(long, default_value_t = SpreadKind::TunedSorted)]
    pub spread: SpreadKind,
    /// Number of symbols N to sample and code.
    #[arg(long, default_value_t = 100_000)]
    pub frames: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Decode this header file instead of the freshly encoded header.
    #[arg(long)]
    pub header_in: Option<PathBuf>,
    /// Write the encoded header here.
    #[arg(long)]
    pub header_out: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::VerificationMismatch(_)) => EXIT_MISMATCH,
            CliError::Core(Error::Decode(_)) => EXIT_DECODE,
            _ => EXIT_USAGE,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Parses a distribution file: one decimal probability per line, blank
/// lines ignored.
pub fn parse_distribution(text: &str) -> Result<Probabilities, Error> {
    let values = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, l)| {
            l.parse::<f64>()
                .map_err(|e| Error::InvalidDistribution(format!("line {}: {l:?}: {e}", n + 1)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Probabilities::new(values)
}

pub fn read_distribution(path: &Path) -> Result<Probabilities, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(parse_distribution(&text)?)
}

fn render_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| CliError::Output(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Output(e.to_string()))
}

/// Rows as CSV with a header line, or as a JSON array.
pub fn render<T: Serialize>(rows: &[T], format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Csv => render_csv(rows),
        Format::Json => {
            let mut out =
                serde_json::to_vec_pretty(rows).map_err(|e| CliError::Output(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

fn emit(bytes: &[u8], output: &Output) -> Result<(), CliError> {
    match &output.out {
        Some(path) => fs::write(path, bytes).map_err(io_err(path)),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn bench_config(common: &CommonBench, default_sum: u32) -> Result<BenchConfig, CliError> {
    let distribution = common.dist.as_deref().map(read_distribution).transpose()?;
    Ok(BenchConfig {
        alphabet: common.alphabet,
        sums: if common.sum.is_empty() {
            vec![default_sum]
        } else {
            common.sum.clone()
        },
        powers: common.power.clone(),
        offset: common.offset,
        trials: common.trials,
        seed: common.seed,
        distribution,
        ..Default::default()
    })
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::BenchQuant(args) => {
            let config = BenchConfig {
                frames: args.frames.clone(),
                ..bench_config(&args.common, DEFAULT_STATES)?
            };
            let rows = bench_quant(&config)?;
            emit(
                &render(&rows, args.common.output.format)?,
                &args.common.output,
            )
        }
        Command::BenchTans(args) => {
            let config = BenchConfig {
                states: args.states,
                spreads: args.spread.clone(),
                ..bench_config(&args.common, args.states)?
            };
            let rows = bench_tans(&config)?;
            emit(
                &render(&rows, args.common.output.format)?,
                &args.common.output,
            )
        }
        Command::Roundtrip(args) => {
            let header = match &args.header_in {
                Some(path) => Some(fs::read(path).map_err(io_err(path))?),
                None => None,
            };
            let config = RoundtripConfig {
                distribution: read_distribution(&args.input)?,
                sum: args.sum,
                power: args.power,
                offset: args.offset,
                states: args.states,
                spread: args.spread,
                frames: args.frames,
                seed: args.seed,
                header,
            };
            let (report, encoded) = roundtrip(&config)?;
            if let Some(path) = &args.header_out {
                fs::write(path, &encoded).map_err(io_err(path))?;
            }
            emit(&render(&[report], args.output.format)?, &args.output)
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| {
            Error::InvalidArgument(format!("{THREADS_ENV}={value:?} is not a positive integer"))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Output(e.to_string()))
}

/// Parses `args` and runs the command, reporting failures on standard error.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match configure_threads().and_then(|()| execute(&cli)) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
