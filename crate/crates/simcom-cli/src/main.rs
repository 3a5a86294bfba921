//! Command-line front end: per-block compression, kernel sweeps with CSV
//! output, mode-selection statistics, and trace replay.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use simcom::memsim::Scheme;
use simcom::runner::{self, BaselineMode, RunnerError, SweepConfig};
use simcom::workloads::{KernelKind, SynthKind};

#[derive(Parser)]
#[command(name = "simcom", version, about = "Similarity-aware approximate compression simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress every 64-byte block of a file and print a report.
    Compress(CompressArgs),
    /// Run image kernels across schemes and approximation factors; emit CSV.
    Sweep(SweepArgs),
    /// Mode-selection statistics over synthetic bitmaps.
    Modestats(ModestatsArgs),
    /// Replay a memory access trace under one scheme.
    TraceReplay(TraceReplayArgs),
}

#[derive(Args)]
struct CompressArgs {
    /// Input file; length must be a multiple of 64.
    input: PathBuf,
    /// Compression scheme: simcom, fpc, bdi, biscaling, or raw.
    #[arg(long, default_value = "simcom")]
    scheme: Scheme,
    /// Approximation factor in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    af: f64,
    /// Write the compressed stream here (length-prefixed blocks).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Input images (binary PPM or PGM).
    #[arg(long, required = true, num_args = 1..)]
    images: Vec<PathBuf>,
    /// Kernels to run.
    #[arg(long, value_delimiter = ',', default_values_t = vec![
        KernelKind::Sobel, KernelKind::Conv2d, KernelKind::Grayscale, KernelKind::Histeq,
    ])]
    kernels: Vec<KernelKind>,
    /// Schemes to evaluate.
    #[arg(long, value_delimiter = ',', default_values_t = vec![
        Scheme::Simcom, Scheme::Fpc, Scheme::Bdi, Scheme::Biscaling,
    ])]
    schemes: Vec<Scheme>,
    /// Approximation factors; empty selects the default grid.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    af_list: Option<Vec<f64>>,
    /// Search the af that lands on this output error instead of sweeping.
    #[arg(long, conflicts_with = "af_list")]
    quality_target: Option<f64>,
    /// Count sideband bit changes in bit-write totals.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    count_sideband: bool,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ModestatsArgs {
    /// Bitmap formats as cc,bpc pairs.
    #[arg(long, value_delimiter = ' ', num_args = 0..)]
    formats: Vec<String>,
    /// Generators: gradient, noise, grayscale-in-rgb.
    #[arg(long, value_delimiter = ',', default_values_t = vec![
        SynthKind::Gradient, SynthKind::Noise, SynthKind::GrayscaleInRgb,
    ])]
    kinds: Vec<SynthKind>,
    /// Approximation factor.
    #[arg(long, default_value_t = 0.03)]
    af: f64,
    /// Bitmap edge length in pixels.
    #[arg(long, default_value_t = 96)]
    size: u32,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TraceReplayArgs {
    /// Trace file (one record per line).
    trace: PathBuf,
    /// Compression scheme for approximable writes.
    #[arg(long, default_value = "simcom")]
    scheme: Scheme,
    /// Approximation factor applied to approximable records.
    #[arg(long, default_value_t = 0.0)]
    af: f64,
    /// Raw baseline variant for the bit-write ratio: raw or raw-fnw.
    #[arg(long, default_value = "raw-fnw")]
    baseline: BaselineMode,
    /// Count sideband bit changes in bit-write totals.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    count_sideband: bool,
}

fn parse_format(text: &str) -> Result<(u8, u8), RunnerError> {
    let parts: Vec<&str> = text.split(',').collect();
    let bad = || RunnerError::Usage(format!("bad format `{text}`, expected cc,bpc"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let cc = parts[0].trim().parse().map_err(|_| bad())?;
    let bpc = parts[1].trim().parse().map_err(|_| bad())?;
    Ok((cc, bpc))
}

fn run(cli: Cli) -> Result<(), RunnerError> {
    match cli.command {
        Command::Compress(args) => {
            let report =
                runner::cmd_compress(&args.input, args.scheme, args.af, args.out.as_deref())?;
            print!("{report}");
            Ok(())
        }
        Command::Sweep(args) => {
            let mut config = SweepConfig::new(args.images);
            config.kernels = args.kernels;
            config.schemes = args.schemes;
            if let Some(afs) = args.af_list {
                if !afs.is_empty() {
                    config.afs = afs;
                }
            }
            config.quality_target = args.quality_target;
            config.count_sideband = args.count_sideband;
            config.seed = args.seed;
            let (csv, failures) = runner::cmd_sweep(&config)?;
            match &args.out {
                Some(path) => std::fs::write(path, &csv)
                    .map_err(|e| RunnerError::Run(format!("cannot write {}: {e}", path.display())))?,
                None => print!("{csv}"),
            }
            if failures > 0 {
                return Err(RunnerError::Run(format!("{failures} sweep runs failed")));
            }
            Ok(())
        }
        Command::Modestats(args) => {
            let formats = if args.formats.is_empty() {
                vec![(1, 8), (3, 8), (4, 8), (1, 16), (3, 16), (4, 16)]
            } else {
                args.formats
                    .iter()
                    .map(|f| parse_format(f))
                    .collect::<Result<Vec<_>, _>>()?
            };
            let table = runner::cmd_modestats(
                &formats,
                &args.kinds,
                args.af,
                (args.size, args.size),
                args.seed,
            )?;
            print!("{table}");
            Ok(())
        }
        Command::TraceReplay(args) => {
            let report = runner::cmd_trace_replay(
                &args.trace,
                args.scheme,
                args.af,
                args.baseline,
                args.count_sideband,
            )?;
            print!("{report}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
