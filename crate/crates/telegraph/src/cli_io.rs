//! Command-line frontend and CSV emission.
//!
//! Every subcommand echoes its fully resolved configuration (defaults and
//! seed included) as `#`-prefixed header lines before emitting results, so
//! any output file is self-describing and reruns are reproducible.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::bounds::{
    integrability_thresholds, risk_neutral_b, total_error_bound_asym, total_error_bound_sym,
};
use crate::core_model::{derive_scalings, lipschitz_kappa, MapKind, ModelParams, ObservableSpec, SimVariant};
use crate::mc_engine::{run_experiment, validate_mgf, ExperimentConfig, ExperimentRow};
use crate::path_samplers::{sample_asym_path, sample_sym_path, sample_telegraph_grid, RngStream};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("failed to write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed CSV at {path} line {line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },
    #[error("invalid lambda grid '{0}': expected start:step:end or a comma list")]
    LambdaGrid(String),
    #[error("{0}")]
    Runtime(String),
}

#[derive(Parser, Debug)]
#[command(
    name = "telegraph",
    about = "Exact telegraph-process simulation, diffusion-limit error bounds and the rate-convergence experiment",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample one exact telegraph path and print it on a time grid
    Simulate(SimulateArgs),
    /// Evaluate the closed-form error bound for one parameter set
    Bound(BoundArgs),
    /// Run the lambda-convergence experiment grid and emit CSV
    Experiment(ExperimentArgs),
    /// Compare the empirical telegraph MGF against the closed form
    MgfCheck(MgfArgs),
    /// Print the weight integrability thresholds
    Thresholds(ThresholdArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    v0: f64,
    /// Second speed state; when given, the asymmetric process is sampled
    #[arg(long = "v0-star")]
    v0_star: Option<f64>,
    #[arg(long = "T", default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value = "alternating")]
    variant: SimVariant,
    #[arg(long = "pin-initial-sign", default_value_t = false)]
    pin_initial_sign: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    substream: u64,
    #[arg(long = "grid-steps", default_value_t = 100)]
    grid_steps: usize,
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    horizon: f64,
    #[arg(long = "L", default_value_t = 1.0)]
    length_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    v0: f64,
    /// Second speed state; when given, the asymmetric bound is evaluated
    #[arg(long = "v0-star")]
    v0_star: Option<f64>,
    /// Volatility; derives a = sigma*sqrt(lambda), b = -sigma^2/2
    #[arg(long)]
    sigma: Option<f64>,
    /// Exponent scale (overrides the sigma-derived value)
    #[arg(long)]
    a: Option<f64>,
    /// Time-drift exponent (overrides the sigma-derived value)
    #[arg(long)]
    b: Option<f64>,
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long = "strike", value_delimiter = ',', default_values_t = vec![0.7, 1.0, 1.3])]
    strikes: Vec<f64>,
    #[arg(long = "sigma", value_delimiter = ',', default_values_t = vec![0.3, 0.5, 0.7])]
    sigmas: Vec<f64>,
    /// Either start:step:end (inclusive) or a comma-separated list
    #[arg(long = "lambda-grid", default_value = "2.5:2.5:100")]
    lambda_grid: String,
    #[arg(long, default_value_t = 10_000_000)]
    samples: u64,
    #[arg(long = "grid-steps", default_value_t = 10_000)]
    grid_steps: usize,
    #[arg(long, default_value = "alternating")]
    variant: SimVariant,
    #[arg(long = "pin-initial-sign", default_value_t = false)]
    pin_initial_sign: bool,
    #[arg(long, default_value_t = 7_461_309_152_763_024_881)]
    seed: u64,
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    /// Audit flag: unit-diffusivity Brownian side instead of v0^2/(lambda L^2)
    #[arg(long = "literal-standard-bm", default_value_t = false)]
    literal_standard_bm: bool,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MgfArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    a: f64,
    #[arg(long = "s", value_delimiter = ',', default_values_t = vec![0.25, 0.5, 1.0])]
    s_list: Vec<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "alternating")]
    variant: SimVariant,
}

#[derive(Args, Debug)]
struct ThresholdArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    horizon: f64,
    #[arg(long = "L", default_value_t = 1.0)]
    length_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    v0: f64,
}

/// Format a float with 17 significant digits, enough to round-trip exactly.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub const CSV_HEADER: &str =
    "K,sigma,lambda,n,est_brownian,se_brownian,est_telegraph,se_telegraph,error,bound_per_C,variant,seed";

/// Write experiment rows as CSV: fixed header, 17-significant-digit floats,
/// LF line endings.
pub fn write_csv<W: Write + ?Sized>(rows: &[ExperimentRow], out: &mut W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(r.strike),
            fmt_f64(r.sigma),
            fmt_f64(r.lambda),
            r.n,
            fmt_f64(r.est_brownian),
            fmt_f64(r.se_brownian),
            fmt_f64(r.est_telegraph),
            fmt_f64(r.se_telegraph),
            fmt_f64(r.error),
            fmt_f64(r.bound_per_c),
            r.variant.as_str(),
            r.seed,
        )?;
    }
    Ok(())
}

pub fn write_csv_path(rows: &[ExperimentRow], path: &Path) -> Result<(), CliError> {
    let file = File::create(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    write_csv(rows, &mut w).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Read experiment rows back from CSV. `#`-prefixed banner lines and the
/// header are skipped.
pub fn read_csv_path(path: &Path) -> Result<Vec<ExperimentRow>, CliError> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    parse_csv(&text).map_err(|(line, reason)| CliError::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    })
}

pub fn parse_csv(text: &str) -> Result<Vec<ExperimentRow>, (usize, String)> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.is_empty() || line.starts_with('#') || line == CSV_HEADER {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 12 {
            return Err((lineno, format!("expected 12 fields, got {}", fields.len())));
        }
        let f = |i: usize| -> Result<f64, (usize, String)> {
            fields[i]
                .parse::<f64>()
                .map_err(|e| (lineno, format!("field {i}: {e}")))
        };
        let u = |i: usize| -> Result<u64, (usize, String)> {
            fields[i]
                .parse::<u64>()
                .map_err(|e| (lineno, format!("field {i}: {e}")))
        };
        rows.push(ExperimentRow {
            strike: f(0)?,
            sigma: f(1)?,
            lambda: f(2)?,
            n: u(3)?,
            est_brownian: f(4)?,
            se_brownian: f(5)?,
            est_telegraph: f(6)?,
            se_telegraph: f(7)?,
            error: f(8)?,
            bound_per_c: f(9)?,
            variant: fields[10]
                .parse::<SimVariant>()
                .map_err(|e| (lineno, e))?,
            seed: u(11)?,
        });
    }
    Ok(rows)
}

/// Parse `start:step:end` (inclusive, with a half-step tolerance on the
/// endpoint) or a comma-separated list of values.
pub fn parse_lambda_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::LambdaGrid(text.to_string());
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let start: f64 = parts[0].parse().map_err(|_| bad())?;
        let step: f64 = parts[1].parse().map_err(|_| bad())?;
        let end: f64 = parts[2].parse().map_err(|_| bad())?;
        if step <= 0.0 || end < start {
            return Err(bad());
        }
        let count = ((end - start) / step + 0.5).floor() as usize + 1;
        Ok((0..count).map(|i| start + step * i as f64).collect())
    } else {
        text.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect()
    }
}

/// Cap the global Rayon pool from the `TELEGRAPH_THREADS` environment
/// variable, if set. Results never depend on the thread count.
pub fn limit_threads_from_env() {
    if let Ok(val) = std::env::var("TELEGRAPH_THREADS") {
        if let Ok(n) = val.parse::<usize>() {
            if n >= 1 {
                // Ignore the error if a global pool already exists.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

/// Entry point used by `main`: parses `std::env::args`, writes to stdout.
pub fn run_from_env() -> i32 {
    limit_threads_from_env();
    let args: Vec<std::ffi::OsString> = std::env::args_os().collect();
    let mut stdout = io::stdout();
    run(args, &mut stdout)
}

/// Parse and execute. Returns the process exit code: 0 on success, 2 on
/// argument errors, 1 on runtime errors.
pub fn run<I, T, W>(args: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Bound(a) => cmd_bound(a, out),
        Command::Experiment(a) => cmd_experiment(a, out),
        Command::MgfCheck(a) => cmd_mgf(a, out),
        Command::Thresholds(a) => cmd_thresholds(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let io_err = |source: io::Error| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    };
    writeln!(
        out,
        "# simulate lambda={} v0={} v0_star={:?} T={} variant={} pin_initial_sign={} seed={} substream={} grid_steps={}",
        a.lambda, a.v0, a.v0_star, a.horizon, a.variant.as_str(), a.pin_initial_sign, a.seed,
        a.substream, a.grid_steps
    )
    .map_err(io_err)?;
    let mut rng = RngStream::new(a.seed, a.substream).rng();
    let (grid, jumps) = match a.v0_star {
        None => {
            let path = sample_sym_path(
                a.lambda,
                a.v0,
                a.horizon,
                a.variant,
                a.pin_initial_sign,
                &mut rng,
            );
            writeln!(out, "# initial_sign={}", path.initial_sign).map_err(io_err)?;
            (sample_telegraph_grid(&path, a.grid_steps), path.jump_times)
        }
        Some(v0_star) => {
            let path = sample_asym_path(a.lambda, a.v0, v0_star, a.horizon, a.variant, &mut rng)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            writeln!(out, "# galilean_sign={} drift_rate={}", path.sign, path.drift_rate)
                .map_err(io_err)?;
            let mut grid = sample_telegraph_grid(&path.sym, a.grid_steps);
            let dt = grid.dt();
            for (i, x) in grid.positions.iter_mut().enumerate() {
                *x = path.drift_rate * (i as f64 * dt) + f64::from(path.sign) * *x;
            }
            (grid, path.sym.jump_times)
        }
    };
    let jumps_str = jumps.iter().map(|t| fmt_f64(*t)).collect::<Vec<_>>().join(" ");
    writeln!(out, "# jump_times={jumps_str}").map_err(io_err)?;
    writeln!(out, "t,x").map_err(io_err)?;
    let dt = grid.dt();
    for (i, &x) in grid.positions.iter().enumerate() {
        writeln!(out, "{},{}", fmt_f64(i as f64 * dt), fmt_f64(x)).map_err(io_err)?;
    }
    Ok(())
}

fn cmd_bound(args: BoundArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = match args.v0_star {
        None => ModelParams::symmetric(args.lambda, args.v0, args.horizon, args.length_scale),
        Some(v0_star) => ModelParams::asymmetric(
            args.lambda,
            args.v0,
            v0_star,
            args.horizon,
            args.length_scale,
        ),
    }
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    let scalings = derive_scalings(&params).map_err(|e| CliError::Runtime(e.to_string()))?;
    let a = match (args.a, args.sigma) {
        (Some(a), _) => a,
        (None, Some(sigma)) => sigma * args.lambda.sqrt(),
        (None, None) => {
            return Err(CliError::Runtime(
                "provide either --sigma or --a (and optionally --b)".into(),
            ))
        }
    };
    let b = match (args.b, args.sigma) {
        (Some(b), _) => b,
        (None, Some(sigma)) => -0.5 * sigma * sigma,
        (None, None) => risk_neutral_b(a, scalings.sigma2),
    };
    let spec = ObservableSpec::new(a, b, MapKind::Identity, MapKind::CallFloor(1.0, 0.0));
    let report = if params.is_symmetric() {
        total_error_bound_sym(&spec, &params, args.c)
    } else {
        total_error_bound_asym(&spec, &params, args.c)
    }
    .map_err(|e| CliError::Runtime(e.to_string()))?;

    let mut text = String::new();
    let _ = writeln!(
        text,
        "# bound lambda={} T={} L={} v0={} v0_star={:?} sigma={:?} a={} b={} C={}",
        args.lambda, args.horizon, args.length_scale, args.v0, args.v0_star, args.sigma, a, b,
        args.c
    );
    let _ = writeln!(text, "T_star = {}", fmt_f64(scalings.t_star));
    let _ = writeln!(text, "L_star = {}", fmt_f64(scalings.l_star));
    let _ = writeln!(text, "sigma2 = {}", fmt_f64(scalings.sigma2));
    let _ = writeln!(text, "drift = {}", fmt_f64(scalings.drift));
    let _ = writeln!(text, "kappa = {}", fmt_f64(lipschitz_kappa(&spec)));
    let _ = writeln!(text, "prefactor = {}", fmt_f64(report.prefactor));
    let _ = writeln!(text, "w2_bound/C = {}", fmt_f64(report.w2_bound / args.c));
    let _ = writeln!(text, "m_brownian = {}", fmt_f64(report.m_brownian));
    let _ = writeln!(text, "m_telegraph_bound = {}", fmt_f64(report.m_telegraph_bound));
    let _ = writeln!(text, "total = {}", fmt_f64(report.total));
    out.write_all(text.as_bytes()).map_err(|source| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

fn experiment_banner(config: &ExperimentConfig) -> String {
    let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    format!(
        "# experiment strikes={} sigmas={} lambda_grid={} samples={} grid_steps={} variant={} pin_initial_sign={} seed={} C={} literal_standard_bm={}\n",
        list(&config.strikes),
        list(&config.sigmas),
        list(&config.lambda_grid),
        config.n_samples,
        config.n_grid_steps,
        config.variant.as_str(),
        config.pin_initial_sign,
        config.seed,
        config.c,
        config.literal_standard_bm,
    )
}

fn cmd_experiment(args: ExperimentArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = ExperimentConfig {
        strikes: args.strikes,
        sigmas: args.sigmas,
        lambda_grid: parse_lambda_grid(&args.lambda_grid)?,
        n_samples: args.samples,
        n_grid_steps: args.grid_steps,
        variant: args.variant,
        pin_initial_sign: args.pin_initial_sign,
        seed: args.seed,
        c: args.c,
        literal_standard_bm: args.literal_standard_bm,
    };
    let banner = experiment_banner(&config);
    out.write_all(banner.as_bytes()).map_err(|source| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })?;
    let rows = run_experiment(&config).map_err(|e| CliError::Runtime(e.to_string()))?;
    match args.out {
        Some(path) => {
            let file = File::create(&path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            let mut w = BufWriter::new(file);
            w.write_all(banner.as_bytes())
                .and_then(|_| write_csv(&rows, &mut w))
                .map_err(|source| CliError::Io { path, source })?;
        }
        None => {
            write_csv(&rows, out).map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            })?;
        }
    }
    Ok(())
}

fn cmd_mgf(args: MgfArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let io_err = |source: io::Error| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    };
    writeln!(
        out,
        "# mgf-check lambda={} a={} s={:?} samples={} seed={} variant={}",
        args.lambda, args.a, args.s_list, args.samples, args.seed, args.variant.as_str()
    )
    .map_err(io_err)?;
    let checks = validate_mgf(
        args.lambda,
        args.a,
        &args.s_list,
        args.samples,
        args.seed,
        args.variant,
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    writeln!(out, "s,empirical,analytic,std_error,z_score").map_err(io_err)?;
    for c in checks {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(c.s),
            fmt_f64(c.empirical),
            fmt_f64(c.analytic),
            fmt_f64(c.std_error),
            fmt_f64(c.z_score)
        )
        .map_err(io_err)?;
    }
    Ok(())
}

fn cmd_thresholds(args: ThresholdArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = ModelParams::symmetric(args.lambda, args.v0, args.horizon, args.length_scale)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let s = derive_scalings(&params).map_err(|e| CliError::Runtime(e.to_string()))?;
    let (a_low, a_high) = integrability_thresholds(s.t_star, s.l_star);
    writeln!(
        out,
        "# thresholds lambda={} T={} L={} v0={}\na_low = {}\na_high = {}",
        args.lambda,
        args.horizon,
        args.length_scale,
        args.v0,
        fmt_f64(a_low),
        fmt_f64(a_high)
    )
    .map_err(|source| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}
