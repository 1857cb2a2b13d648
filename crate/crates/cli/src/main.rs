//! `fairvol` command-line front end.
//!
//! Exit codes: 0 success, 1 data or domain error, 2 usage error.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use fairvol::estimate::RollingConfig;
use fairvol::pipeline::{export_plot_data, export_report, load_csv, run_analysis, ReportFormat};
use fairvol::simulate::{
    gen_demo_panel, simulate, HurstPathMode, HurstPathSpec, MpreSpec, NuPathSpec, ProcessSpec, SimulationSpec,
    DEFAULT_INID_SCHEDULE,
};
use fairvol::stats::sample_acf;
use fairvol::validation::{run_suite, Suite};
use fairvol::{Error, Hurst, PricePath};

const THREADS_VAR: &str = "FAIRVOL_THREADS";

#[derive(Parser)]
#[command(name = "fairvol", version, about = "Fair-volatility analytics: simulation, rolling Hurst estimation, validation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a path and write `index,time,value` CSV.
    Simulate(SimulateArgs),
    /// Analyse one or more `date,close` price files.
    Analyze(AnalyzeArgs),
    /// Run a validation suite and print its pass/fail table.
    Validate(ValidateArgs),
    /// Write the illustrative panels and a simulated-price analysis.
    Demo(DemoArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProcessKind {
    Fbm,
    Fgn,
    Mpre,
    Ar1,
    Iid,
    Inid,
    Concat,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    process: ProcessKind,
    /// Hurst exponent (fbm, fgn, mpre; first segment of concat).
    #[arg(long)]
    h: Option<f64>,
    /// Second-segment Hurst exponent for concat.
    #[arg(long)]
    h2: Option<f64>,
    /// End value of a linear Hurst path for mpre (start is `--h`).
    #[arg(long)]
    h_end: Option<f64>,
    /// Constant scale of the mpre kernel.
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    /// AR(1) coefficient.
    #[arg(long)]
    phi: Option<f64>,
    /// Comma-separated volatility blocks for inid.
    #[arg(long, value_delimiter = ',')]
    schedule: Option<Vec<f64>>,
    /// Number of grid points; total length for concat.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = MpreSpec::DEFAULT_TRUNCATION)]
    truncation: f64,
    #[arg(long, default_value_t = MpreSpec::DEFAULT_SUBSTEPS)]
    substeps: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Both,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Price CSV with header `date,close`; repeat for several instruments.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    #[arg(long, default_value_t = 20)]
    delta: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 120)]
    nu_window: usize,
    /// Report directory; each instrument gets a subdirectory named after it.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
    /// Also write the three plot-panel CSVs.
    #[arg(long)]
    plot_data: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, value_enum)]
    suite: SuiteArg,
    /// Monte-Carlo paths; suite default when omitted.
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Specfun,
    Estimator,
    Prop1,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Specfun => Suite::Specfun,
            SuiteArg::Estimator => Suite::Estimator,
            SuiteArg::Prop1 => Suite::Prop1,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
    /// Length of the simulated price series analysed at the end.
    #[arg(long, default_value_t = 4096)]
    n: usize,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

fn io_err(path: &Path, e: io::Error) -> Failure {
    Failure::Data(format!("i/o error on {}: {e}", path.display()))
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let threads = match configure_threads() {
        Ok(t) => t,
        Err(f) => return report(f),
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a, threads),
        Command::Analyze(a) => cmd_analyze(a, threads),
        Command::Validate(a) => cmd_validate(a, threads),
        Command::Demo(a) => cmd_demo(a, threads),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => report(f),
    }
}

fn report(f: Failure) -> ExitCode {
    match f {
        Failure::Usage(msg) => {
            eprintln!("error: {msg}");
            eprintln!("run `fairvol --help` for usage");
            ExitCode::from(2)
        }
        Failure::Data(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Sizes the global rayon pool from `FAIRVOL_THREADS`; returns the thread count.
fn configure_threads() -> CliResult<usize> {
    if let Ok(raw) = std::env::var(THREADS_VAR) {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::Usage(format!("{THREADS_VAR} must be a positive integer, got `{raw}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Data(format!("cannot build thread pool: {e}")))?;
    }
    Ok(rayon::current_num_threads())
}

fn echo_config(cfg: serde_json::Value) {
    eprintln!("# config {cfg}");
}

fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            }
            Box::new(BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn hurst(value: Option<f64>, flag: &str, process: &str) -> CliResult<Hurst> {
    let h = value.ok_or_else(|| Failure::Usage(format!("--{flag} is required for --process {process}")))?;
    Ok(Hurst::new(h)?)
}

fn unused(flag: &str, present: bool, process: &str) -> CliResult<()> {
    if present {
        return Err(Failure::Usage(format!("--{flag} does not apply to --process {process}")));
    }
    Ok(())
}

fn build_spec(a: &SimulateArgs) -> CliResult<SimulationSpec> {
    let name = match a.process {
        ProcessKind::Fbm => "fbm",
        ProcessKind::Fgn => "fgn",
        ProcessKind::Mpre => "mpre",
        ProcessKind::Ar1 => "ar1",
        ProcessKind::Iid => "iid",
        ProcessKind::Inid => "inid",
        ProcessKind::Concat => "concat",
    };
    if !matches!(a.process, ProcessKind::Concat) {
        unused("h2", a.h2.is_some(), name)?;
    }
    if !matches!(a.process, ProcessKind::Mpre) {
        unused("h-end", a.h_end.is_some(), name)?;
    }
    if !matches!(a.process, ProcessKind::Ar1) {
        unused("phi", a.phi.is_some(), name)?;
    }
    if !matches!(a.process, ProcessKind::Inid) {
        unused("schedule", a.schedule.is_some(), name)?;
    }
    if matches!(a.process, ProcessKind::Ar1 | ProcessKind::Iid | ProcessKind::Inid) {
        unused("h", a.h.is_some(), name)?;
    }
    let process = match a.process {
        ProcessKind::Fbm => ProcessSpec::Fbm { h: hurst(a.h, "h", name)? },
        ProcessKind::Fgn => ProcessSpec::Fgn { h: hurst(a.h, "h", name)? },
        ProcessKind::Mpre => {
            let start = hurst(a.h, "h", name)?;
            let path = match a.h_end {
                Some(end) => HurstPathSpec::with_mode(HurstPathMode::Linear {
                    start: start.get(),
                    end: Hurst::new(end)?.get(),
                }),
                None => HurstPathSpec::constant(start),
            };
            let mut spec = MpreSpec::new(path, NuPathSpec::Constant(a.nu));
            spec.truncation = a.truncation;
            spec.substeps = a.substeps;
            spec.validate()?;
            ProcessSpec::Mpre(spec)
        }
        ProcessKind::Ar1 => ProcessSpec::Ar1 {
            phi: a.phi.ok_or_else(|| Failure::Usage("--phi is required for --process ar1".into()))?,
        },
        ProcessKind::Iid => ProcessSpec::IidGaussian,
        ProcessKind::Inid => ProcessSpec::InidGaussian {
            schedule: a.schedule.clone().unwrap_or_else(|| DEFAULT_INID_SCHEDULE.to_vec()),
        },
        ProcessKind::Concat => ProcessSpec::ConcatFgn {
            h1: hurst(a.h, "h", name)?,
            h2: hurst(a.h2, "h2", name)?,
        },
    };
    Ok(SimulationSpec {
        process,
        n: a.n,
        seed: a.seed,
    })
}

fn cmd_simulate(a: SimulateArgs, threads: usize) -> CliResult<u8> {
    let spec = build_spec(&a)?;
    echo_config(json!({ "command": "simulate", "spec": spec, "threads": threads }));
    let path = simulate(&spec)?;
    let mut out = open_output(a.output.as_deref())?;
    path.write_csv(&mut out)?;
    out.flush().map_err(|e| io_err(a.output.as_deref().unwrap_or(Path::new("<stdout>")), e))?;
    Ok(0)
}

fn write_report(report: &fairvol::AnalysisReport, dir: &Path, format: Format, plot: bool) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    if matches!(format, Format::Json | Format::Both) {
        files.extend(export_report(report, ReportFormat::JsonDocument, dir)?);
    }
    if matches!(format, Format::Csv | Format::Both) {
        files.extend(export_report(report, ReportFormat::CsvTables, dir)?);
    }
    if plot {
        files.extend(export_plot_data(report, dir)?);
    }
    Ok(files)
}

fn print_summary(report: &fairvol::AnalysisReport) {
    let mean_h = report.hurst_summary.map(|s| format!("{:.4}", s.mean)).unwrap_or_else(|| "NA".into());
    let shares = report
        .regime_shares()
        .map(|(r, p)| format!("{} {:.2}%", r.name(), p))
        .join(", ");
    println!(
        "{}: n={} mean H={} CI=[{:.3},{:.3}] H in CI {:.2}% vol in fair band {:.2}% | {}",
        report.instrument.ticker,
        report.instrument.size,
        mean_h,
        report.hurst_ci[0],
        report.hurst_ci[1],
        report.efficiency.pct_h_in_ci,
        report.efficiency.pct_vol_in_ci,
        shares
    );
}

fn cmd_analyze(a: AnalyzeArgs, threads: usize) -> CliResult<u8> {
    let cfg = RollingConfig {
        delta: a.delta,
        alpha: a.alpha,
        nu_window: a.nu_window,
        ..RollingConfig::default()
    };
    cfg.validate()?;
    echo_config(json!({
        "command": "analyze",
        "inputs": a.input,
        "rolling": cfg,
        "output": a.output,
        "plot_data": a.plot_data,
        "threads": threads,
    }));
    for input in &a.input {
        let loaded = load_csv(input)?;
        if loaded.dropped_blank > 0 {
            eprintln!(
                "warning: {}: dropped {} rows with blank close",
                input.display(),
                loaded.dropped_blank
            );
        }
        let report = run_analysis(&loaded.prices, &cfg)?;
        let dir = a.output.join(&report.instrument.ticker);
        write_report(&report, &dir, a.format, a.plot_data)?;
        print_summary(&report);
    }
    Ok(0)
}

fn cmd_validate(a: ValidateArgs, threads: usize) -> CliResult<u8> {
    let suite = Suite::from(a.suite);
    let paths = a.paths.unwrap_or_else(|| suite.default_paths());
    echo_config(json!({
        "command": "validate",
        "suite": suite,
        "paths": paths,
        "seed": a.seed,
        "threads": threads,
    }));
    let table = run_suite(suite, paths, a.seed)?;
    let mut out = open_output(a.output.as_deref())?;
    match a.format {
        TableFormat::Csv => table.write_csv(&mut out)?,
        TableFormat::Json => {
            serde_json::to_writer_pretty(&mut out, &table).map_err(Error::from)?;
            writeln!(out).map_err(|e| io_err(Path::new("<output>"), e))?;
        }
    }
    out.flush().map_err(|e| io_err(Path::new("<output>"), e))?;
    let failures = table.failures();
    eprintln!("{}: {} cases, {} failed", suite.name(), table.rows.len(), failures);
    Ok(if failures == 0 { 0 } else { 1 })
}

fn cmd_demo(a: DemoArgs, threads: usize) -> CliResult<u8> {
    echo_config(json!({ "command": "demo", "seed": a.seed, "n": a.n, "output": a.output, "threads": threads }));
    fs::create_dir_all(&a.output).map_err(|e| io_err(&a.output, e))?;

    let names = ["iid", "inid", "ar1_pos", "ar1_neg"];
    let panels = gen_demo_panel(a.seed)?;
    let acf_path = a.output.join("demo_acf.csv");
    let mut acf_out = csv_writer(&acf_path)?;
    acf_out
        .write_record(["series", "lag1", "lag2", "lag3"])
        .map_err(Error::from)?;
    for (name, panel) in names.iter().zip(&panels) {
        let p = a.output.join(format!("demo_{name}.csv"));
        let mut w = open_output(Some(&p))?;
        panel.write_csv(&mut w)?;
        w.flush().map_err(|e| io_err(&p, e))?;
        let acf = sample_acf(&panel.values, 3)?;
        acf_out
            .write_record([name.to_string(), acf[1].to_string(), acf[2].to_string(), acf[3].to_string()])
            .map_err(Error::from)?;
    }
    acf_out.flush().map_err(|e| io_err(&acf_path, e))?;

    let concat = simulate(&SimulationSpec {
        process: ProcessSpec::ConcatFgn {
            h1: Hurst::new(0.75)?,
            h2: Hurst::new(0.25)?,
        },
        n: 4096,
        seed: a.seed,
    })?;
    let p = a.output.join("demo_concat.csv");
    let mut w = open_output(Some(&p))?;
    concat.write_csv(&mut w)?;
    w.flush().map_err(|e| io_err(&p, e))?;

    // Brownian log-prices through the full pipeline
    let returns = simulate(&SimulationSpec {
        process: ProcessSpec::Fgn { h: Hurst::new(0.5)? },
        n: a.n,
        seed: a.seed,
    })?
    .values;
    let start = NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date");
    let prices = PricePath::from_log_returns("BROWNIAN", start, 100.0, &scale(&returns, 0.01))?;
    let price_path = a.output.join("BROWNIAN.csv");
    let mut w = open_output(Some(&price_path))?;
    prices.write_csv(&mut w)?;
    w.flush().map_err(|e| io_err(&price_path, e))?;
    let report = run_analysis(&prices, &RollingConfig::default())?;
    write_report(&report, &a.output.join("BROWNIAN"), Format::Both, true)?;
    print_summary(&report);
    Ok(0)
}

/// Rescales unit-step increments to a daily-like size.
fn scale(x: &[f64], sd: f64) -> Vec<f64> {
    let n = x.len() as f64;
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    x.iter().map(|v| v * sd / rms).collect()
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}
