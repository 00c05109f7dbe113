use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kvcbo::config::{Precision, RunConfig};
use kvcbo::report::write_report;
use kvcbo::suites::{run_suite, suite, SUITE_NAMES};
use kvcbo::{emit_report, AggregateReport, Error, Report, ReportFormat, RunReport};

const THREADS_VAR: &str = "KVCBO_THREADS";

#[derive(Parser)]
#[command(name = "kvcbo", version, about = "Consensus-based optimization on the sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the problem described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        runs: Option<usize>,
        /// Report destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: ReportFormat,
    },
    /// Run a built-in benchmark suite.
    Bench {
        /// One of: ackley-d3, ackley-d20, ackley-d20-fast, phase-retrieval-d32, subspace-p2, subspace-p1.
        suite: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        runs: Option<usize>,
        /// Write the full suite report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Csv(_) => 1,
        e if e.is_solver_abort() => 1,
        _ => 2,
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_VAR} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot size the worker pool: {e}")))
}

fn summarize(agg: &AggregateReport) -> String {
    let rate = agg.success_rate.map_or("n/a".to_string(), |r| format!("{:.1}%", 100.0 * r));
    let mut line = format!("{} runs, success {rate}, mean N_avg {:.1}", agg.run_count, agg.mean_n_avg);
    for key in ["squared_error", "sign_symmetric_error", "signal_distance", "relative_energy_gap"] {
        if let Some(m) = agg.metrics.get(key) {
            line.push_str(&format!(", {key} mean {:.3e} median {:.3e}", m.mean, m.median));
        }
    }
    line
}

fn run(
    config: PathBuf,
    seed: Option<u64>,
    runs: Option<usize>,
    out: Option<PathBuf>,
    format: ReportFormat,
) -> Result<(), Error> {
    let mut cfg = RunConfig::from_path(&config)?;
    cfg.seed = seed.unwrap_or(cfg.seed);
    cfg.runs = runs.unwrap_or(cfg.runs);
    cfg.validate()?;
    let (reports, agg): (Vec<RunReport>, AggregateReport) = match cfg.precision {
        Precision::F64 => cfg.execute::<f64>()?,
        Precision::F32 => cfg.execute::<f32>()?,
    };
    let report = if reports.len() == 1 {
        Report::Run(&reports[0])
    } else {
        Report::MonteCarlo { aggregate: &agg, runs: &reports }
    };
    match out {
        Some(path) => emit_report(&report, format, path)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_report(&report, format, &mut lock)?;
            lock.flush()?;
        }
    }
    eprintln!("{}: {}", agg.objective, summarize(&agg));
    Ok(())
}

fn bench(name: &str, seed: Option<u64>, runs: Option<usize>, out: Option<PathBuf>) -> Result<(), Error> {
    let s = suite(name).map_err(|e| Error::Config(format!("{e}; available: {}", SUITE_NAMES.join(", "))))?;
    println!("{}: {}", s.name, s.description);
    for d in &s.deviations {
        println!("  setting: {d}");
    }
    let report = run_suite(&s, seed, runs)?;
    for c in &report.cases {
        println!("  [{}] {} ({:.1}s)", c.label, summarize(&c.aggregate), c.wall_time_secs);
    }
    if let Some(path) = out {
        report.write_json(path)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Run { config, seed, runs, out, format } => run(config, seed, runs, out, format),
        Command::Bench { suite, seed, runs, out } => bench(&suite, seed, runs, out),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
