//! `shiftdenoise` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 solver
//! stopped before convergence (outputs are still written).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use shiftdenoise::estimators::{
    blockwise_denoise, denoise_full_composite, estimate, fit, CompositeKnobs, EstimatorConfig,
    Filter,
};
use shiftdenoise::harness::{curves_csv, run_scenario, trials_csv, Scenario, ScenarioReport};
use shiftdenoise::io::{read_signal_csv, write_signal_csv};
use shiftdenoise::oracles::{
    interpolating_filter, predictive_filter_separated, predictive_filter_unit_roots, square_oracle,
    SubspaceSpec,
};
use shiftdenoise::par::Execution;
use shiftdenoise::{Domain, Error, Signal};

#[derive(Parser, Debug)]
#[command(
    name = "shiftdenoise",
    version,
    about = "Adaptive convolution-type denoising"
)]
struct Cli {
    /// Worker threads for Monte Carlo trials and blockwise fits.
    #[arg(long, global = true, env = "SHIFTDENOISE_THREADS")]
    threads: Option<usize>,

    /// More log output on stderr (repeatable).
    #[arg(long = "verbose", short = 'v', global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a filter to a signal and write it as JSON.
    Fit {
        /// Signal CSV with header `t,re,im`.
        #[arg(long)]
        input: PathBuf,
        /// Estimator configuration JSON.
        #[arg(long)]
        config: PathBuf,
        /// Filter JSON destination.
        #[arg(long)]
        output: PathBuf,
    },
    /// Denoise a signal.
    Denoise {
        /// Signal CSV with header `t,re,im`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = DenoiseMode::Fit)]
        mode: DenoiseMode,
        /// Filter JSON (mode `filter`).
        #[arg(long)]
        filter: Option<PathBuf>,
        /// Estimator configuration JSON (modes `fit` and `blockwise`).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of harmonics (mode `composite`).
        #[arg(long)]
        s: Option<usize>,
        /// Estimate CSV destination; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Build an oracle filter for a subspace.
    Oracle {
        /// Subspace JSON: `{"modes": [...]}` or `{"poly": [...]}`.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_enum)]
        kind: OracleKind,
        /// Bandwidth of the returned filter.
        #[arg(long)]
        m: usize,
        /// Filter JSON destination; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a Monte Carlo scenario.
    Simulate {
        /// Scenario JSON.
        #[arg(long)]
        scenario: PathBuf,
        /// Report JSON destination.
        #[arg(long)]
        output: PathBuf,
        /// Per-trial CSV destination (keeps per-trial records in the report).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Loss-curve CSV destination.
        #[arg(long)]
        curves: Option<PathBuf>,
        /// Override the scenario's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Extract plot-ready CSV from a simulation report.
    Report {
        /// Report JSON written by `simulate`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Curves)]
        format: ReportFormat,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DenoiseMode {
    /// Apply a given filter wherever the input covers its support.
    Filter,
    /// Fit per `--config` and estimate on its residual window.
    Fit,
    /// Fit per `--config` block by block along the whole input.
    Blockwise,
    /// Full recovery on `D_N`, `N` from the input support.
    Composite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OracleKind {
    /// Two-sided interpolating filter on `D_m`.
    Interp,
    /// Causal filter for distinct unit frequencies.
    Separated,
    /// Causal filter for unit-modulus roots with multiplicities.
    Unitroots,
    /// Square of the interpolating filter on `D_{m/2}`, on `D_m`.
    Square,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Curves,
    Trials,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Data(String),
    NotConverged(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
            Failure::NotConverged(_) => 4,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Data(m) => write!(f, "data error: {m}"),
            Failure::NotConverged(m) => write!(f, "not converged: {m}"),
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("shiftdenoise: {f}");
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> CliResult {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Fit {
            input,
            config,
            output,
        } => cmd_fit(&input, &config, &output),
        Command::Denoise {
            input,
            mode,
            filter,
            config,
            s,
            output,
        } => cmd_denoise(
            &input,
            mode,
            filter.as_deref(),
            config.as_deref(),
            s,
            output.as_deref(),
        ),
        Command::Oracle {
            spec,
            kind,
            m,
            output,
        } => cmd_oracle(&spec, kind, m, output.as_deref()),
        Command::Simulate {
            scenario,
            output,
            csv,
            curves,
            seed,
        } => cmd_simulate(&scenario, &output, csv.as_deref(), curves.as_deref(), seed),
        Command::Report {
            input,
            format,
            output,
        } => cmd_report(&input, format, output.as_deref()),
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: Option<usize>) -> CliResult {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(threads: Option<usize>) -> CliResult {
    if let Some(0) = threads {
        return Err(Failure::Config("--threads must be at least 1".into()));
    }
    if threads.is_some() {
        log::warn!("built without the parallel feature; --threads has no effect");
    }
    Ok(())
}

fn check_input(path: &Path) -> CliResult {
    if !path.is_file() {
        return Err(Failure::Data(format!(
            "input file {} does not exist",
            path.display()
        )));
    }
    Ok(())
}

fn check_output(path: Option<&Path>) -> CliResult {
    let Some(path) = path else { return Ok(()) };
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        return Err(Failure::Data(format!(
            "output directory {} does not exist",
            parent.display()
        )));
    }
    if path.is_dir() {
        return Err(Failure::Data(format!(
            "output {} is a directory",
            path.display()
        )));
    }
    Ok(())
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn read_signal(path: &Path) -> CliResult<Signal> {
    let file =
        fs::File::open(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    read_signal_csv(file).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn read_config(path: &Path) -> CliResult<EstimatorConfig> {
    let text = read_text(path)?;
    EstimatorConfig::from_json(&text)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

/// Write via a temporary file in the destination directory, then rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io_err = |e: std::io::Error| Failure::Data(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.flush().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> CliResult {
    match path {
        Some(p) => write_atomic(p, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::Data(format!("stdout: {e}"))),
    }
}

fn signal_bytes(signal: &Signal) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    write_signal_csv(signal, &mut buf)?;
    Ok(buf)
}

fn filter_bytes(filter: &Filter) -> CliResult<Vec<u8>> {
    let mut text = filter.to_json()?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn cmd_fit(input: &Path, config: &Path, output: &Path) -> CliResult {
    check_input(input)?;
    check_input(config)?;
    check_output(Some(output))?;
    let cfg = read_config(config)?;
    let y = read_signal(input)?;
    let filter = fit(&y, &cfg)?;
    write_atomic(output, &filter_bytes(&filter)?)?;
    if !filter.converged() {
        return Err(Failure::NotConverged(format!(
            "filter written to {} with its convergence flag unset",
            output.display()
        )));
    }
    Ok(())
}

fn require<'a, T>(value: Option<&'a T>, flag: &str, mode: &str) -> CliResult<&'a T>
where
    T: ?Sized,
{
    value.ok_or_else(|| Failure::Config(format!("--mode {mode} needs {flag}")))
}

fn cmd_denoise(
    input: &Path,
    mode: DenoiseMode,
    filter: Option<&Path>,
    config: Option<&Path>,
    s: Option<usize>,
    output: Option<&Path>,
) -> CliResult {
    check_input(input)?;
    let config_path = match mode {
        DenoiseMode::Fit => Some(require(config, "--config", "fit")?),
        DenoiseMode::Blockwise => Some(require(config, "--config", "blockwise")?),
        _ => None,
    };
    let filter_path = match mode {
        DenoiseMode::Filter => Some(require(filter, "--filter", "filter")?),
        _ => None,
    };
    let s = match mode {
        DenoiseMode::Composite => Some(*require(s.as_ref(), "--s", "composite")?),
        _ => None,
    };
    if let Some(p) = filter_path {
        check_input(p)?;
    }
    if let Some(p) = config_path {
        check_input(p)?;
    }
    check_output(output)?;
    let cfg = config_path.map(read_config).transpose()?;
    let loaded = filter_path
        .map(|p| {
            let text = read_text(p)?;
            Filter::from_json(&text).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))
        })
        .transpose()?;
    let y = read_signal(input)?;
    if y.is_empty() {
        return Err(Failure::Data("input signal is empty".into()));
    }

    let mut converged = true;
    let estimate_signal = match mode {
        DenoiseMode::Filter => {
            let f = loaded.expect("checked above");
            let sup = f.support();
            let domain =
                Domain::interval(y.start() + sup.hi(), y.end() + sup.lo()).map_err(|_| {
                    Failure::Data(format!(
                        "input on [{}, {}] is too short for a filter on [{}, {}]",
                        y.start(),
                        y.end(),
                        sup.lo(),
                        sup.hi()
                    ))
                })?;
            estimate(&f, &y, domain)?
        }
        DenoiseMode::Fit => {
            let cfg = cfg.expect("checked above");
            let f = fit(&y, &cfg)?;
            converged = f.converged();
            let window = shiftdenoise::estimators::residual_window(&cfg);
            estimate(&f, &y, window)?
        }
        DenoiseMode::Blockwise => {
            let cfg = cfg.expect("checked above");
            if cfg.h.is_some() {
                return Err(Failure::Config(
                    "blockwise mode needs a two-sided configuration".into(),
                ));
            }
            blockwise_denoise(&y, cfg.m, cfg.n, cfg.mode, &cfg.solver, Execution::Parallel)?
        }
        DenoiseMode::Composite => {
            let big_n = (-y.start()).min(y.end());
            if big_n < 2 {
                return Err(Failure::Data(format!(
                    "composite mode needs input covering [-N, N] with N >= 2, got [{}, {}]",
                    y.start(),
                    y.end()
                )));
            }
            let out = denoise_full_composite(
                &y,
                big_n as usize,
                s.expect("checked above"),
                CompositeKnobs::default(),
                &Default::default(),
            )?;
            converged = out.converged();
            out.estimate
        }
    };
    emit(output, &signal_bytes(&estimate_signal)?)?;
    if !converged {
        return Err(Failure::NotConverged(
            "estimate written from an unconverged fit".into(),
        ));
    }
    Ok(())
}

fn cmd_oracle(spec_path: &Path, kind: OracleKind, m: usize, output: Option<&Path>) -> CliResult {
    check_input(spec_path)?;
    check_output(output)?;
    let text = read_text(spec_path)?;
    let spec = SubspaceSpec::from_json(&text)
        .map_err(|e| Failure::Config(format!("{}: {e}", spec_path.display())))?;
    let filter = match kind {
        OracleKind::Interp => interpolating_filter(&spec, m)?,
        OracleKind::Square => square_oracle(&interpolating_filter(&spec, m / 2)?)?.widen(m)?,
        OracleKind::Separated => {
            let freqs = spec.unit_frequencies()?;
            if freqs.iter().any(|&(_, mult)| mult > 1) {
                return Err(Failure::Config(
                    "--kind separated needs distinct frequencies; use --kind unitroots".into(),
                ));
            }
            let omegas: Vec<f64> = freqs.iter().map(|f| f.0).collect();
            let out = predictive_filter_separated(&omegas, m)?;
            if let Some(w) = &out.warning {
                eprintln!("warning: {w}");
            }
            out.filter
        }
        OracleKind::Unitroots => predictive_filter_unit_roots(&spec, m)?.filter,
    };
    emit(output, &filter_bytes(&filter)?)
}

fn cmd_simulate(
    scenario_path: &Path,
    output: &Path,
    csv: Option<&Path>,
    curves: Option<&Path>,
    seed: Option<u64>,
) -> CliResult {
    check_input(scenario_path)?;
    check_output(Some(output))?;
    check_output(csv)?;
    check_output(curves)?;
    let text = read_text(scenario_path)?;
    let mut scenario = Scenario::from_json(&text)?;
    if let Some(seed) = seed {
        scenario.master_seed = seed;
    }
    if csv.is_some() {
        scenario.per_trial = true;
    }
    let report = run_scenario(&scenario)?;
    let mut json = report.to_json()?;
    json.push('\n');
    write_atomic(output, json.as_bytes())?;
    if let Some(p) = csv {
        write_atomic(p, trials_csv(&report).as_bytes())?;
    }
    if let Some(p) = curves {
        write_atomic(p, curves_csv(&report).as_bytes())?;
    }
    for p in &report.points {
        let r = &p.report;
        if r.failed > 0 || r.non_converged > 0 {
            log::warn!(
                "sigma = {}: {} failed and {} unconverged trials out of {}",
                p.sigma,
                r.failed,
                r.non_converged,
                r.trials
            );
        }
    }
    Ok(())
}

fn cmd_report(input: &Path, format: ReportFormat, output: Option<&Path>) -> CliResult {
    check_input(input)?;
    check_output(output)?;
    let text = read_text(input)?;
    let report: ScenarioReport = serde_json::from_str(&text)
        .map_err(|e| Failure::Data(format!("{}: {e}", input.display())))?;
    let csv = match format {
        ReportFormat::Curves => curves_csv(&report),
        ReportFormat::Trials => {
            if report.points.iter().any(|p| p.report.per_trial.is_none()) {
                return Err(Failure::Config(
                    "report has no per-trial records; rerun simulate with --csv".into(),
                ));
            }
            trials_csv(&report)
        }
    };
    emit(output, csv.as_bytes())
}
