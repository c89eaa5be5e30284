//! `wrsample`: generate populations, draw samples, benchmark the samplers
//! and run the statistical verification suite.
//!
//! Exit status: 0 success, 1 usage or invalid input, 2 verification
//! failure, 3 I/O error.

mod weights;

use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

use clap::{Args, Parser, Subcommand};
use wrsample::bench::{
    bench_grid, gen_population, masspois, run_cell, verify_cases, verify_one, BenchCell,
    CaseVerdict, PopulationKind, PopulationSpec, CSV_HEADER, VERIFY_REPLICATES,
};
use wrsample::{Algorithm, CountingRng, OutputMode, SampleOutput};

use crate::weights::{read_weights, write_weights};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Verify(String),
    Io(String),
}

impl CliError {
    pub fn io(path: &Path, e: io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Verify(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Verify(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<wrsample::Error> for CliError {
    fn from(e: wrsample::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn stdout_error(e: io::Error) -> CliError {
    CliError::Io(format!("stdout: {e}"))
}

/// Accepts plain integers and integral scientific notation such as `1e6`.
fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a count"))?;
    if v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(format!("`{s}` is not a nonnegative integer"))
    }
}

#[derive(Parser)]
#[command(
    name = "wrsample",
    version,
    about = "Weighted random sampling with replacement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a normalized, shuffled benchmark population to a weights file.
    Gen(GenArgs),
    /// Draw one sample from a weights file.
    Sample(SampleArgs),
    /// Time a grid of sampler runs and print CSV.
    Bench(BenchArgs),
    /// Run the exact-multinomial goodness-of-fit suite.
    Verify(VerifyArgs),
    /// Draw a large Poisson sample by mass sampling and summarize it.
    Masspois(MassPoisArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    kind: PopulationKind,
    #[arg(long, value_parser = parse_count)]
    n: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    algo: Algorithm,
    #[arg(long)]
    weights: PathBuf,
    /// Total mass of the file's weights when they are not normalized.
    #[arg(long)]
    total: Option<f64>,
    #[arg(long, value_parser = parse_count)]
    s: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "dense")]
    output: OutputMode,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    algos: Vec<Algorithm>,
    #[arg(long, value_delimiter = ',', required = true)]
    kinds: Vec<PopulationKind>,
    #[arg(long, value_delimiter = ',', value_parser = parse_count, required = true)]
    n: Vec<u64>,
    #[arg(long, value_delimiter = ',', value_parser = parse_count, required = true)]
    s: Vec<u64>,
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<u64>,
    /// Worker threads; cells run sequentially by default for timing fidelity.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value = "dense")]
    output: OutputMode,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    algos: Vec<Algorithm>,
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<u64>,
    #[arg(long, value_parser = parse_count, default_value_t = VERIFY_REPLICATES)]
    replicates: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct MassPoisArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long, value_parser = parse_count)]
    s: u64,
    #[arg(long)]
    seed: u64,
}

/// Runs `task` over `items` on up to `jobs` threads, returning results in
/// input order.
fn run_parallel<T: Sync, R: Send>(
    items: &[T],
    jobs: usize,
    task: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(task).collect();
    }
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    thread::scope(|scope| {
        for _ in 0..jobs {
            let tx = tx.clone();
            let (next, task) = (&next, &task);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                if tx.send((i, task(item))).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);
    let mut results: Vec<(usize, R)> = rx.into_iter().collect();
    results.sort_by_key(|(i, _)| *i);
    results.into_iter().map(|(_, r)| r).collect()
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let w = gen_population(PopulationSpec {
        kind: args.kind,
        n: args.n,
        seed: args.seed,
    })?;
    write_weights(&args.out, &w)
}

fn cmd_sample(args: SampleArgs) -> Result<(), CliError> {
    let mut w = read_weights(&args.weights)?;
    if let Some(total) = args.total {
        if !(total > 0.0 && total.is_finite()) {
            return Err(wrsample::Error::InvalidTotal(total).into());
        }
        w.iter_mut().for_each(|x| *x /= total);
    }
    let mut rng = CountingRng::seeded(args.seed);
    let (out, _) = args.algo.run(&w, args.s, &mut rng, args.output)?;

    let file = fs::File::create(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let mut f = BufWriter::new(file);
    let written = match (&out, args.output) {
        (SampleOutput::Array(v), _) => v.iter().try_for_each(|i| writeln!(f, "{i}")),
        (SampleOutput::Counts(c), OutputMode::Dense) => c
            .to_dense(w.len())?
            .iter()
            .try_for_each(|k| writeln!(f, "{k}")),
        (SampleOutput::Counts(c), _) => c
            .entries()
            .iter()
            .try_for_each(|(i, k)| writeln!(f, "{i},{k}")),
    };
    written
        .and_then(|_| f.flush())
        .map_err(|e| CliError::io(&args.out, e))
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let cells = bench_grid(
        &args.algos,
        &args.kinds,
        &args.n,
        &args.s,
        &args.seeds,
        args.output,
    );
    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "{CSV_HEADER}").map_err(stdout_error)?;
    let print = |out: &mut dyn Write, cell: &BenchCell, r: wrsample::Result<_>| {
        let record: wrsample::bench::BenchRecord = r.map_err(|e| {
            CliError::Usage(format!(
                "{} on {} n={} s={} seed={}: {e}",
                cell.algorithm, cell.kind, cell.n, cell.s, cell.seed
            ))
        })?;
        writeln!(out, "{}", record.csv_row()).map_err(stdout_error)
    };
    if args.jobs <= 1 {
        // Stream rows as cells finish.
        for cell in &cells {
            print(&mut out, cell, run_cell(cell))?;
        }
    } else {
        let results = run_parallel(&cells, args.jobs, run_cell);
        for (cell, r) in cells.iter().zip(results) {
            print(&mut out, cell, r)?;
        }
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    if args.replicates == 0 {
        return Err(CliError::Usage("--replicates must be positive".into()));
    }
    let cases = verify_cases();
    let mut tasks = Vec::new();
    for &algorithm in &args.algos {
        for case in 0..cases.len() {
            for &seed in &args.seeds {
                tasks.push((algorithm, case, seed));
            }
        }
    }
    let reports = run_parallel(&tasks, args.jobs, |&(algorithm, case, seed)| {
        verify_one(algorithm, &cases[case], seed, args.replicates)
    });

    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(
        out,
        "algorithm,case,seed,statistic,dof,p_value,bins_pooled,pass"
    )
    .map_err(stdout_error)?;
    let mut verdicts: Vec<CaseVerdict> = Vec::new();
    for (&(algorithm, case, seed), report) in tasks.iter().zip(reports) {
        let report = report?;
        writeln!(
            out,
            "{algorithm},{case},{seed},{:.6},{},{:.6e},{},{}",
            report.statistic,
            report.dof,
            report.p_value,
            report.bins_pooled,
            report.passes()
        )
        .map_err(stdout_error)?;
        match verdicts.last_mut() {
            Some(v) if v.algorithm == algorithm && v.case == case => v.reports.push((seed, report)),
            _ => verdicts.push(CaseVerdict {
                algorithm,
                case,
                reports: vec![(seed, report)],
            }),
        }
    }
    out.flush().map_err(stdout_error)?;

    let mut failed = 0;
    for &algorithm in &args.algos {
        let mine: Vec<&CaseVerdict> = verdicts
            .iter()
            .filter(|v| v.algorithm == algorithm)
            .collect();
        let bad: Vec<String> = mine
            .iter()
            .filter(|v| !v.passes())
            .map(|v| {
                format!(
                    "case {} ({}/{} seeds)",
                    v.case,
                    v.seeds_passed(),
                    v.reports.len()
                )
            })
            .collect();
        failed += bad.len();
        eprintln!(
            "{algorithm}: {}/{} cases pass{}",
            mine.len() - bad.len(),
            mine.len(),
            if bad.is_empty() {
                String::new()
            } else {
                format!("; failing {}", bad.join(", "))
            }
        );
    }
    if failed > 0 {
        return Err(CliError::Verify(format!(
            "{failed} case(s) failed the 4-of-5 seed rule"
        )));
    }
    Ok(())
}

fn cmd_masspois(args: MassPoisArgs) -> Result<(), CliError> {
    let m = masspois(args.lambda, args.s, args.seed)?;
    println!(
        "lambda={} s={} mean={:.6} variance={:.6} support_points={} wall_ns={}",
        m.lambda, m.s, m.mean, m.variance, m.support_points, m.wall_ns
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Masspois(a) => cmd_masspois(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wrsample: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
