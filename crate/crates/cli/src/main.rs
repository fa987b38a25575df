use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use saw_core::analysis::{self, FitOptions, Oscillation, Target};
use saw_core::checkpoint;
use saw_core::doubling::{self, OracleCheck};
use saw_core::series::SeriesRow;
use saw_core::walker::direct_count_with_workers;
use saw_core::{DoublingConfig, SeriesTable, SplitStrategy};

const DIRECT_CAP: usize = 14;
const DOUBLE_CAP: usize = 10;

#[derive(Parser)]
#[command(name = "saw", version, about = "Exact self-avoiding walk counts on the cubic lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count walks of length N by brute force
    Direct(DirectArgs),
    /// Compute Z_2N and P_2N from length-N walks
    Double(DoubleArgs),
    /// Compute Z_{M+N} and P_{M+N} from walks of lengths M and N (experimental)
    Combine(CombineArgs),
    /// Print finite-N exponent estimates
    Analyze(AnalyzeArgs),
    /// Fit the asymptotic form to a range of a series
    Fit(FitArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct Common {
    /// Worker threads
    #[arg(long, env = "SAW_WORKERS", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    workers: u32,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Insert the result row into this series CSV
    #[arg(long, value_name = "CSV")]
    append: Option<PathBuf>,
    /// Allow lengths above the safety cap
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct DirectArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    n: u32,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct DoubleArgs {
    /// Half length N (required unless --merge)
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    n: Option<u32>,
    /// Fold subsets related by lattice symmetry
    #[arg(long, value_enum, default_value = "on")]
    symmetry: Switch,
    #[arg(long, default_value = "none")]
    split: SplitStrategy,
    #[arg(long, default_value_t = 1)]
    parts: usize,
    /// Run only these parts and write checkpoints (repeatable)
    #[arg(long = "part", requires = "checkpoint_dir")]
    part: Vec<usize>,
    #[arg(long)]
    checkpoint_dir: Option<PathBuf>,
    /// Combine the checkpoints in --checkpoint-dir into the final result
    #[arg(long, requires = "checkpoint_dir", conflicts_with = "part")]
    merge: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CombineArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    m: u32,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    n: u32,
    #[arg(long, value_enum, default_value = "on")]
    symmetry: Switch,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum Estimator {
    Theta,
    Nu,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long, value_enum)]
    estimator: Estimator,
    /// Single N to evaluate (all supported N when omitted)
    #[arg(long, allow_negative_numbers = true)]
    at: Option<i64>,
    /// Series CSV (built-in table for N <= 36 when omitted)
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    target: Target,
    /// Inclusive range LO:HI
    #[arg(long, default_value = "18:36", value_parser = parse_range)]
    range: (u32, u32),
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = analysis::fit::DEFAULT_STARTS)]
    starts: usize,
    /// Oscillation term (default: alternating for z, even-only for p)
    #[arg(long)]
    oscillation: Option<Oscillation>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, env = "SAW_WORKERS", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    workers: u32,
}

fn parse_range(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s.split_once(':').ok_or("expected LO:HI")?;
    let lo = a.trim().parse::<u32>().map_err(|e| e.to_string())?;
    let hi = b.trim().parse::<u32>().map_err(|e| e.to_string())?;
    if lo < 1 || lo > hi {
        return Err(format!("invalid range {lo}:{hi}"));
    }
    Ok((lo, hi))
}

fn check_cap(n: usize, cap: usize, hard: usize, force: bool) -> Result<()> {
    if n > hard {
        bail!("n = {n} exceeds the supported maximum {hard}");
    }
    if n > cap && !force {
        bail!("n = {n} exceeds the safety cap {cap}; pass --force to run anyway");
    }
    Ok(())
}

fn emit(common: &Common, csv: String, json: String, row: SeriesRow) -> Result<()> {
    match common.format {
        Format::Csv => println!("{csv}"),
        Format::Json => println!("{json}"),
    }
    if let Some(path) = &common.append {
        SeriesTable::append_to_file(path, row).with_context(|| format!("appending to {}", path.display()))?;
    }
    Ok(())
}

fn cmd_direct(a: DirectArgs) -> Result<()> {
    let n = a.n as usize;
    check_cap(n, DIRECT_CAP, usize::MAX, a.common.force)?;
    let r = direct_count_with_workers(n, a.common.workers as usize)?;
    let row = SeriesRow { n: a.n, z: r.z.clone(), p: r.p.clone() };
    emit(&a.common, row.to_string(), serde_json::to_string(&r)?, row)
}

fn load_table(input: &Option<PathBuf>) -> Result<SeriesTable> {
    match input {
        None => Ok(SeriesTable::reference()),
        Some(p) => SeriesTable::read(p).with_context(|| format!("reading {}", p.display())),
    }
}

fn cmd_double(a: DoubleArgs) -> Result<()> {
    let workers = a.common.workers as usize;
    let result = if a.merge {
        let dir = a.checkpoint_dir.as_deref().expect("required by clap");
        let mut files = checkpoint::list(dir)?;
        if let Some(n) = a.n {
            let prefix = format!("n{n}-");
            files.retain(|p| p.file_name().is_some_and(|f| f.to_string_lossy().starts_with(&prefix)));
        }
        if files.is_empty() {
            bail!("no checkpoints found in {}", dir.display());
        }
        doubling::merge_checkpoints(&files, workers)?
    } else {
        let Some(n) = a.n else { bail!("--n is required unless --merge is given") };
        check_cap(n as usize, DOUBLE_CAP, saw_core::counters::MAX_SITES, a.common.force)?;
        let cfg = DoublingConfig {
            n: n as usize,
            symmetry: matches!(a.symmetry, Switch::On),
            workers,
            split: a.split,
            parts: a.parts,
            only_parts: (!a.part.is_empty()).then(|| a.part.clone()),
            checkpoint_dir: a.checkpoint_dir.clone(),
        };
        match doubling::run_doubling(&cfg)? {
            Some(r) => r,
            None => {
                let dir = a.checkpoint_dir.as_deref().map(Path::display);
                eprintln!("wrote checkpoints for parts {:?} of {} to {}", a.part, a.parts, dir.expect("required by clap"));
                return Ok(());
            }
        }
    };
    eprintln!(
        "subsets={} incidences={} parts={} largest_part={} elapsed={:.3}s peak_rss={}",
        result.stats.subsets,
        result.stats.incidences,
        result.stats.parts,
        result.stats.largest_part,
        result.stats.elapsed.as_secs_f64(),
        peak_rss().unwrap_or_else(|| "n/a".into())
    );
    let row = SeriesRow { n: result.n as u32, z: result.z.clone(), p: result.p.clone() };
    emit(&a.common, result.csv_row(), result.to_json(), row)
}

/// High-water resident set size, where the OS reports it.
fn peak_rss() -> Option<String> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    Some(line["VmHWM:".len()..].trim().replace(' ', ""))
}

fn cmd_combine(a: CombineArgs) -> Result<()> {
    for n in [a.m, a.n] {
        check_cap(n as usize, DOUBLE_CAP, saw_core::counters::MAX_SITES, a.common.force)?;
    }
    let r = doubling::run_combine(a.m as usize, a.n as usize, matches!(a.symmetry, Switch::On), a.common.workers as usize)?;
    match r.oracle {
        OracleCheck::Validated => eprintln!("experimental: result confirmed by brute force"),
        OracleCheck::Unchecked => eprintln!("experimental: length {} is beyond the brute-force check", r.n),
        OracleCheck::Mismatch => bail!("combined result disagrees with brute force for length {}", r.n),
    }
    let row = SeriesRow { n: r.n as u32, z: r.z.clone(), p: r.p.clone() };
    emit(&a.common, r.csv_row(), serde_json::to_string(&r)?, row)
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<()> {
    let t = load_table(&a.input)?;
    type Estimate = fn(&SeriesTable, i64) -> Result<f64, analysis::AnalysisError>;
    let (name, f): (&str, Estimate) = match a.estimator {
        Estimator::Theta => ("theta", analysis::theta_estimate),
        Estimator::Nu => ("nu", analysis::nu_estimate),
    };
    let col: Vec<(i64, f64)> = match a.at {
        Some(n) => vec![(n, f(&t, n)?)],
        None => analysis::estimate_column(&t, f).into_iter().map(|(n, v)| (n as i64, v)).collect(),
    };
    if col.is_empty() {
        bail!("the table has no N where the {name} estimator is defined");
    }
    println!("N,{name}");
    for (n, v) in col {
        println!("{n},{v}");
    }
    Ok(())
}

fn cmd_fit(a: FitArgs) -> Result<()> {
    let t = load_table(&a.input)?;
    let opts = FitOptions {
        seed: a.seed,
        starts: a.starts,
        oscillation: a.oscillation,
        workers: a.workers as usize,
    };
    let r = analysis::fit_series(&t, a.range, a.target, &opts)?;
    println!("{}", r.to_json());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Direct(a) => cmd_direct(a),
        Command::Double(a) => cmd_double(a),
        Command::Combine(a) => cmd_combine(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Fit(a) => cmd_fit(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
