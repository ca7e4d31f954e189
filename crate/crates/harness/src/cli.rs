//! The `frog` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::config::{Experiment, ExperimentName};
use crate::error::{exit, HarnessError, Result};
use crate::experiments::{run_experiment, Report};
use crate::records::to_json_lines;
use crate::verify::{run_suite, Scale, Suite, DEFAULT_SEED};

#[derive(Debug, Parser)]
#[command(name = "frog", version, about = "Frog-model experiments and verification suites")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Independent runs per rule, read off at each horizon.
    Simulate(RunArgs),
    /// Paired runs under two ordered rules, with an empirical order verdict.
    Compare(RunArgs),
    /// Activation times along lattice directions under two rules.
    Shape(RunArgs),
    /// Runs with mortal frogs: survival curve and dominance checks.
    Death(RunArgs),
    /// Run a verification suite: statistics, orders, operator_a or moments.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Replaces the seed in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON-lines output; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Also write plot data as CSV next to the output.
    #[arg(long)]
    pub emit_csv: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub suite: String,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::PASS };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("frog: {e}");
            e.exit_code()
        }
    }
}

fn set_workers(n: Option<usize>) -> Result<()> {
    if let Some(n) = n {
        if n == 0 {
            return Err(HarnessError::Config("--workers must be at least 1".into()));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<i32> {
    let (expected, args) = match cli.command {
        Command::Simulate(a) => (ExperimentName::Simulate, a),
        Command::Compare(a) => (ExperimentName::Compare, a),
        Command::Shape(a) => (ExperimentName::Shape, a),
        Command::Death(a) => (ExperimentName::Death, a),
        Command::Verify(v) => return verify(v),
    };
    set_workers(args.workers)?;
    let exp = Experiment::load(&args.config, args.seed)?;
    if exp.config.experiment != expected {
        return Err(HarnessError::Config(format!(
            "config describes a `{}` experiment, not `{}`",
            exp.config.experiment.as_str(),
            expected.as_str()
        )));
    }
    let started = unix_now();
    let report = run_experiment(&exp)?;
    let out = args.out.clone().or_else(|| exp.config.out.as_ref().map(|o| {
        args.config.parent().unwrap_or(Path::new(".")).join(o)
    }));
    write_report(&exp, &report, out.as_deref(), args.emit_csv, started)?;
    Ok(report.status.exit_code())
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

/// `run.jsonl` plus `summary.json` gives `run.summary.json`.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "frog".into());
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn write_report(
    exp: &Experiment,
    report: &Report,
    out: Option<&Path>,
    emit_csv: bool,
    started: u64,
) -> Result<()> {
    let lines = to_json_lines(&report.records);
    let summary = serde_json::to_string_pretty(&serde_json::json!({
        "status": report.status,
        "summary": report.summary,
    }))
    .expect("summary serializes");
    match out {
        Some(path) => {
            write_file(path, &lines)?;
            write_file(&sibling(path, "summary.json"), &summary)?;
            let meta = serde_json::json!({
                "config_digest": exp.digest,
                "tool_version": env!("CARGO_PKG_VERSION"),
                "started_unix": started,
                "finished_unix": unix_now(),
                "records": report.records.len(),
            });
            write_file(&sibling(path, "meta.json"), &serde_json::to_string_pretty(&meta).expect("meta"))?;
            if emit_csv {
                for t in &report.tables {
                    write_file(&sibling(path, &format!("{}.csv", t.name)), &t.to_text())?;
                }
            }
            println!("{summary}");
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(lines.as_bytes())
                .map_err(|e| HarnessError::io("<stdout>", e))?;
            eprintln!("{summary}");
            if emit_csv {
                for t in &report.tables {
                    write_file(Path::new(&format!("frog.{}.csv", t.name)), &t.to_text())?;
                }
            }
        }
    }
    Ok(())
}

fn verify(v: VerifyArgs) -> Result<i32> {
    set_workers(v.workers)?;
    let suite: Suite = v.suite.parse()?;
    let report = run_suite(suite, v.seed.unwrap_or(DEFAULT_SEED), &Scale::default())?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    match v.out {
        Some(p) => write_file(&p, &text)?,
        None => println!("{text}"),
    }
    Ok(if report.passed { exit::PASS } else { exit::VIOLATION })
}
