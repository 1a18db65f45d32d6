//! Command-line driver: constants, mesh diagnostics, convergence studies and
//! the adaptive-versus-equidistant comparison.

mod config;

pub use config::{CommandKind, Overrides, RunConfig};

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::analysis::{
    asymptotic_constants, convergence_study, improvement_cell, integral_of_norm, log2_slope,
    reference_coords, write_improvement, write_reports, ErrorReport, ExperimentConfig,
    ImprovementRow, Method, MonteCarloConfig,
};
use crate::mesh::{step_count_bracket, EpsilonRule, Mesh};
use crate::model::{
    benchmark_problem_with, gamma_constant, DecayProfile, Diffusion, SdeProblem, TruncationRule,
};

#[derive(Debug, Parser)]
#[command(
    name = "sde-trunc",
    version,
    about = "Truncated-noise Euler schemes with adaptive step sizes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print gamma and the asymptotic constants of the benchmark.
    Constants(ConstantsArgs),
    /// Build an adaptive mesh and print its diagnostics.
    Mesh(MeshArgs),
    /// Error of one method over an n-grid at a fixed truncation level.
    Convergence(Overrides),
    /// Adaptive versus equidistant at equal cost.
    Compare(Overrides),
    /// Run the command named in a config file.
    Run(Overrides),
}

#[derive(Debug, Args)]
struct ConstantsArgs {
    #[arg(long, default_value_t = 0.9)]
    p: f64,
    /// Initial Simpson panels of the Richardson loop.
    #[arg(long, default_value_t = 64)]
    quad_points: usize,
}

#[derive(Debug, Args)]
struct MeshArgs {
    #[arg(long, default_value_t = 0.9)]
    p: f64,
    #[arg(long)]
    n: usize,
    #[arg(long = "M")]
    coords: usize,
    #[arg(long = "eps-exp", default_value_t = 1.0 / 3.0)]
    eps_exp: f64,
    /// Replace the benchmark by `||sigma|| = c` on `[0, 1.5]`.
    #[arg(long)]
    constant_sigma: Option<f64>,
    /// Write the mesh nodes as CSV.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

/// Parses `args` (including the program name) and runs the command, writing
/// human-readable output to `out`.
pub fn run<I, T, W>(args: I, out: &mut W) -> anyhow::Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) if !err.use_stderr() => {
            write!(out, "{err}")?;
            return Ok(());
        }
        Err(err) => bail!("{}", err.render().to_string().trim()),
    };
    match cli.command {
        Command::Constants(a) => cmd_constants(&a, out),
        Command::Mesh(a) => cmd_mesh(&a, out),
        Command::Convergence(o) => execute(&RunConfig::resolve(&o)?, CommandKind::Convergence, out),
        Command::Compare(o) => execute(&RunConfig::resolve(&o)?, CommandKind::Compare, out),
        Command::Run(o) => {
            if o.config.is_none() {
                bail!("`run` needs --config");
            }
            let cfg = RunConfig::resolve(&o)?;
            execute(&cfg, cfg.command, out)
        }
    }
}

fn cmd_constants<W: Write>(args: &ConstantsArgs, out: &mut W) -> anyhow::Result<()> {
    let gamma = gamma_constant(args.p, 1e-13)?;
    let problem = benchmark_problem_with(args.p, 1, 1.5, 0.9)?;
    let c = asymptotic_constants(&problem, args.quad_points)?;
    writeln!(out, "gamma    {:.8}", gamma.gamma)?;
    writeln!(out, "C_noneq  {:.8}", c.c_noneq)?;
    writeln!(out, "C_eq     {:.8}", c.c_eq)?;
    writeln!(out, "ratio    {:.8}", c.ratio)?;
    Ok(())
}

fn constant_sigma_problem(c: f64, cap: usize) -> anyhow::Result<SdeProblem> {
    if !(c > 0.0 && c.is_finite()) {
        bail!("constant sigma must be positive, got {c}");
    }
    Ok(SdeProblem::new(
        1.5,
        0.9,
        |_, _| 0.0,
        Diffusion::coordinates(cap, move |_, k| if k == 1 { c } else { 0.0 }),
        DecayProfile::power(50.0, c)?,
    )?
    .with_full_norm(move |_| c))
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn cmd_mesh<W: Write>(args: &MeshArgs, out: &mut W) -> anyhow::Result<()> {
    let eps = EpsilonRule::new(args.eps_exp)?;
    let problem = match args.constant_sigma {
        Some(c) => constant_sigma_problem(c, args.coords.max(1))?,
        None => benchmark_problem_with(args.p, args.coords.max(1), 1.5, 0.9)?,
    };
    let mesh = Mesh::adaptive(&problem, args.n, args.coords, eps)?;
    let stats = mesh.stats();
    let k = mesh.intervals();
    let (lower, upper) = step_count_bracket(&problem, args.n, eps);
    let in_bracket = k as f64 >= lower && k as u64 <= upper;
    let step_bound = problem.horizon() / (args.n as f64 * eps.value(args.n));
    // every step but the clipped last one equals the first
    let steps: Vec<f64> = mesh.steps().collect();
    let equidistant = steps[..k - 1]
        .iter()
        .all(|&s| (s - steps[0]).abs() <= 1e-12 * steps[0]);
    writeln!(out, "k*            {k}")?;
    writeln!(out, "max_step      {:.8e}", stats.max_step)?;
    writeln!(out, "min_step      {:.8e}", stats.min_step)?;
    writeln!(
        out,
        "bracket       [{lower:.4}, {upper}] {}",
        verdict(in_bracket)
    )?;
    writeln!(
        out,
        "step_bound    {step_bound:.8e} {}",
        verdict(stats.max_step <= step_bound)
    )?;
    writeln!(
        out,
        "k*T/n         {:.8}",
        k as f64 * problem.horizon() / args.n as f64
    )?;
    writeln!(out, "int_norm      {:.8}", integral_of_norm(&problem)?)?;
    writeln!(
        out,
        "equidistant   {}",
        if equidistant { "yes" } else { "no" }
    )?;
    if let Some(path) = &args.out {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        mesh.write_csv(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn build_problem(cfg: &RunConfig, coord_cap: usize) -> anyhow::Result<SdeProblem> {
    let problem = benchmark_problem_with(
        cfg.p,
        coord_cap,
        cfg.horizon.unwrap_or(1.5),
        cfg.x0.unwrap_or(0.9),
    )?;
    Ok(if cfg.zero_drift {
        problem.with_drift(|_, _| 0.0)
    } else {
        problem
    })
}

fn execute<W: Write>(cfg: &RunConfig, kind: CommandKind, out: &mut W) -> anyhow::Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()?;
    match kind {
        CommandKind::Convergence => {
            let reports = pool.install(|| convergence(cfg))?;
            print_reports(&reports, out)?;
            save(cfg, |w| write_reports(w, &reports, cfg.format, cfg))
        }
        CommandKind::Compare => {
            let mut rows = Vec::new();
            let result = compare(cfg, &pool, &mut rows, out);
            // keep whatever finished before a failing cell
            save(cfg, |w| write_improvement(w, &rows, cfg.format, cfg))?;
            result
        }
    }
}

fn save<F>(cfg: &RunConfig, write: F) -> anyhow::Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> anyhow::Result<()>,
{
    if let Some(path) = &cfg.out {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        write(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn convergence(cfg: &RunConfig) -> anyhow::Result<Vec<ErrorReport>> {
    if cfg.grid.len() < 3 {
        bail!("convergence needs at least 3 grid points");
    }
    let coords = cfg.coords.unwrap_or(500);
    let problem = build_problem(cfg, reference_coords(coords, cfg.w_ratio))?;
    let mc = MonteCarloConfig {
        problem,
        method: cfg.method,
        n: cfg.grid[0],
        coords,
        trajectories: cfg.trajectories,
        ref_n: cfg.ref_n,
        w_ratio: cfg.w_ratio,
        master_seed: cfg.seed,
        epsilon: EpsilonRule::new(cfg.eps_exp)?,
    };
    Ok(convergence_study(&cfg.grid, &mc)?)
}

fn print_reports<W: Write>(reports: &[ErrorReport], out: &mut W) -> anyhow::Result<()> {
    writeln!(
        out,
        "{:>7} {:>7} {:>6} {:>6} {:>11} {:>12} {:>12} {:>12}",
        "n", "k", "M", "K", "cost", "err_hat", "err_std", "predictor"
    )?;
    for r in reports {
        writeln!(
            out,
            "{:>7} {:>7} {:>6} {:>6} {:>11} {:>12.6e} {:>12.6e} {:>12.6e}",
            r.n, r.k, r.m, r.trajectories, r.cost, r.err_hat, r.err_std, r.predictor
        )?;
    }
    let n: Vec<f64> = reports.iter().map(|r| r.n as f64).collect();
    let e: Vec<f64> = reports.iter().map(|r| r.err_hat).collect();
    match log2_slope(&n, &e) {
        Some(s) => writeln!(out, "slope {s:.4}")?,
        None => writeln!(out, "slope n/a")?,
    }
    Ok(())
}

fn compare<W: Write>(
    cfg: &RunConfig,
    pool: &rayon::ThreadPool,
    rows: &mut Vec<ImprovementRow>,
    out: &mut W,
) -> anyhow::Result<()> {
    let truncation = TruncationRule::new(cfg.margin, cfg.scale)?;
    let max_n = *cfg.grid.iter().max().expect("grid validated non-empty");
    let probe = build_problem(cfg, 1)?;
    let max_m = truncation.level(probe.decay(), max_n as u64)? as usize;
    let exp = ExperimentConfig {
        problem: build_problem(cfg, reference_coords(max_m, cfg.w_ratio))?,
        trajectories: cfg.trajectories,
        ref_n: cfg.ref_n,
        w_ratio: cfg.w_ratio,
        master_seed: cfg.seed,
        epsilon: EpsilonRule::new(cfg.eps_exp)?,
        truncation,
    };
    writeln!(
        out,
        "{:>7} {:>7} {:>6} {:>6} {:>7} {:>10} {:>10}",
        "n", "k*", "M", "K", "W_ratio", "ratio", "ratio_std"
    )?;
    for &n in &cfg.grid {
        let row = pool.install(|| improvement_cell(n, &exp))?;
        writeln!(
            out,
            "{:>7} {:>7} {:>6} {:>6} {:>7.2} {:>10.6} {:>10.6}",
            row.n, row.k_star, row.m, row.trajectories, row.w_ratio, row.ratio, row.ratio_std
        )?;
        rows.push(row);
    }
    Ok(())
}

/// Method names accepted by `--method`.
pub(crate) fn parse_method(s: &str) -> Result<Method, String> {
    match s {
        "equidistant" => Ok(Method::Equidistant),
        "adaptive" => Ok(Method::Adaptive),
        _ => Err(format!(
            "unknown method `{s}` (expected equidistant or adaptive)"
        )),
    }
}
