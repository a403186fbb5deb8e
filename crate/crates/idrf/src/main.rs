use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use idrf::error::{Error, Result};
use idrf::error_metrics::c_constant;
use idrf::harness::{
    bench, export_batch, resolved_counts, run_batch, validate_gaussian, Config, MethodConfig,
    OutputConfig, OutputFormat, TargetGrid,
};
use idrf::measures::MeasureSpec;
use idrf::step::{bound_holder, bound_polar, build_grid, step_error, StepPlan};

/// Simulation of infinitely divisible random fields by step-function or
/// Haar wavelet discretization of the integral representation.
#[derive(Parser)]
#[command(name = "idrf", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (sections [kernel], [measure], [method], [output]).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override the configured seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Override the configured realization count.
    #[arg(long, value_name = "R")]
    realizations: Option<usize>,
    /// Override (or set) the output path.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output format: csv, bin or gnuplot.
    #[arg(long, value_name = "FMT")]
    format: Option<String>,
    /// Directory for cached wavelet coefficient inputs.
    #[arg(long, value_name = "DIR")]
    coef_cache: Option<PathBuf>,
    /// Worker threads for the realization batch.
    #[arg(long, value_name = "K", default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a batch of field realizations.
    Simulate(RunArgs),
    /// Print the error bounds for the step scheme over a range of n.
    Bound(RunArgs),
    /// Compare the empirical Gaussian covariance to the closed form.
    ValidateGaussian(RunArgs),
    /// Report cold and warm per-realization timing.
    Bench(RunArgs),
    /// Print summand and random-variable counters for the configured method.
    Count(RunArgs),
}

fn load_config(args: &RunArgs) -> Result<Config> {
    let mut cfg = Config::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(r) = args.realizations {
        cfg.realizations = r;
    }
    Ok(cfg)
}

/// Overlay `--out` / `--format` on the configured `[output]` section.
fn apply_output_overrides(mut cfg: Config, args: &RunArgs) -> Result<Config> {
    if args.out.is_some() || args.format.is_some() {
        let path = match (&args.out, &cfg.output) {
            (Some(p), _) => p.to_string_lossy().into_owned(),
            (None, Some(out)) => out.path.clone(),
            (None, None) => {
                return Err(Error::usage("--format given without --out or [output] path"))
            }
        };
        let format = match &args.format {
            Some(name) => OutputFormat::from_name(name)?,
            None => cfg.output.as_ref().map(|o| o.format.clone()).unwrap_or(OutputFormat::Csv),
        };
        cfg.output = Some(OutputConfig { path, format });
    }
    Ok(cfg)
}

fn cmd_simulate(args: &RunArgs) -> Result<()> {
    let cfg = apply_output_overrides(load_config(args)?, args)?;
    let batch = run_batch(&cfg, args.threads.max(1), args.coef_cache.as_deref())?;
    if batch.is_empty() {
        println!("no realizations requested");
        return Ok(());
    }
    let meta = &batch[0].meta;
    println!(
        "method={} {} measure={} realizations={} summands={} random_variables={}",
        meta.method,
        meta.detail,
        meta.measure.name(),
        batch.len(),
        meta.summands,
        meta.random_variables
    );
    if let Some(out) = &cfg.output {
        let grid = TargetGrid::new(cfg.window, cfg.grid, cfg.dim)?;
        let written = export_batch(&batch, &grid, out)?;
        for path in &written {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

/// One row per resolution: the Hölder bound, the polar refinement (d ≥ 2),
/// and the quadrature value of the actual approximation error at t = 0.
fn cmd_bound(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let kernel = cfg.kernel_spec()?;
    let (c_t, gamma) = kernel
        .holder
        .ok_or_else(|| Error::usage("bound: kernel has no Hölder metadata"))?;
    let a = kernel.support_halfwidth;
    let d = cfg.dim;
    let s = cfg.measure.error_exponent();
    let csv = matches!(&args.format, Some(f) if f == "csv");
    let t0 = vec![0.0; d];
    if csv {
        println!("n,holder_bound,polar_bound,err_s");
    } else {
        println!("kernel={} C_t={c_t:.6} gamma={gamma} A={a} d={d} s={s}", cfg.kernel_name);
        println!("{:>6} {:>14} {:>14} {:>14}", "n", "holder", "polar", "err_s");
    }
    for n in [2usize, 4, 8, 16, 32] {
        let holder = bound_holder(c_t, gamma, a, d, s, n)?;
        let polar = if d >= 2 { Some(bound_polar(c_t, gamma, a, d, s, n)?) } else { None };
        let plan = StepPlan::new(build_grid(a, n, d)?, kernel.clone())?;
        let err = step_error(&plan, &t0, s, 1e-3)?.value;
        let polar_txt = polar.map(|p| format!("{p:.6e}")).unwrap_or_else(|| "-".into());
        if csv {
            println!("{n},{holder:.6e},{polar_txt},{err:.6e}");
        } else {
            println!("{n:>6} {holder:>14.6e} {polar_txt:>14} {err:>14.6e}");
        }
    }
    if let MeasureSpec::Stable { alpha, beta } = cfg.measure {
        if s < alpha {
            let c = c_constant(alpha, beta, s)?;
            println!("stable moment constant c(alpha={alpha}, beta={beta}, p={s}) = {c:.6}");
        }
    }
    Ok(())
}

fn cmd_validate_gaussian(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let report = validate_gaussian(&cfg, cfg.realizations, cfg.tolerance)?;
    println!(
        "realizations={} step_n={} mean={:+.5} variance={:.5}",
        report.realizations, report.step_n, report.mean, report.variance
    );
    println!("{:>10} {:>12} {:>12} {:>12}", "lag", "estimate", "theory", "deviation");
    for lag in &report.lags {
        println!(
            "{:>10.4} {:>12.6} {:>12.6} {:>12.6}",
            lag.h,
            lag.estimate,
            lag.theory,
            (lag.estimate - lag.theory).abs()
        );
    }
    println!(
        "max deviation {:.6} against tolerance {:.6}: {}",
        report.max_abs_deviation,
        report.tolerance,
        if report.pass { "PASS" } else { "FAIL" }
    );
    if !report.pass {
        return Err(Error::validation(format!(
            "covariance deviation {:.6} exceeds tolerance {:.6}",
            report.max_abs_deviation, report.tolerance
        )));
    }
    Ok(())
}

fn cmd_bench(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let report = bench(&cfg, args.coef_cache.as_deref())?;
    println!(
        "realizations={} summands={} random_variables={}",
        report.realizations, report.summands, report.random_variables
    );
    println!(
        "cold: coefficients {:.3} ms, total {:.3} ms",
        report.cold_coefficient_ms, report.cold_total_ms
    );
    println!("warm: median {:.3} ms per realization", report.warm_median_ms);
    Ok(())
}

fn cmd_count(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let (method, u, rv) = resolved_counts(&cfg)?;
    let detail = match &cfg.method {
        MethodConfig::Step { n: Some(n), .. } => format!("n={n}"),
        MethodConfig::Step { epsilon: Some(e), .. } => format!("epsilon={e}"),
        MethodConfig::Step { .. } => String::new(),
        MethodConfig::Wavelet { epsilon, .. } => format!("epsilon={epsilon}"),
    };
    println!("method={method} {detail} summands={u} random_variables={rv}");
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::try_parse().map_err(|e| {
        // clap exits with 2 by default; route parse errors through the
        // usage code instead, but let --help/--version print normally
        if e.use_stderr() {
            Error::usage(e.to_string())
        } else {
            print!("{e}");
            std::process::exit(0);
        }
    })?;
    match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Bound(args) => cmd_bound(args),
        Command::ValidateGaussian(args) => cmd_validate_gaussian(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Count(args) => cmd_count(args),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
