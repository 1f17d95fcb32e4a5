//! `gainloss` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gainloss_core::dynamics::{
    integrate, propagate_noise_unitary, propagate_segmented, IntegratorConfig, Sample, Trajectory,
};
use gainloss_core::experiments::{find_equilibrium_with, SweepConfig};
use gainloss_core::spectral::analyze;
use gainloss_core::state::{DensityMatrix, GainLossModel, Observable};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{emit, fmt_f64, sweep_csv, trajectory_csv};
use crate::report::{to_json, EquilibriumReport, SpectrumReport};
use crate::sweep::{linspace, parallel_sweep, SweepMetadata};

#[derive(Debug, Parser)]
#[command(name = "gainloss", version, about = "Density-matrix dynamics under K = H - iΓ")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads for sweeps (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Relative integrator tolerance; overrides the config file.
    #[arg(long, global = true)]
    pub tol_rel: Option<f64>,
    /// Absolute integrator tolerance; overrides the config file.
    #[arg(long, global = true)]
    pub tol_abs: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trajectory CSV from the integrator, the closed form, or both.
    Evolve(EvolveArgs),
    /// Eigenvalues, phase, overlap matrix and stationary states as JSON.
    Spectrum,
    /// Order parameter of σx - iγσz over a (1/γ, κ) grid.
    Sweep(SweepArgs),
    /// Equilibrium state of a noisy model as JSON.
    Equilibrium,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct EvolveArgs {
    /// Closed-form propagation only.
    #[arg(long)]
    pub exact: bool,
    /// Adaptive integration only (default).
    #[arg(long)]
    pub numeric: bool,
    /// Integrate, compare with the closed form, append the deviation.
    #[arg(long)]
    pub both: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ObservableArg {
    X,
    Y,
    Z,
}

impl ObservableArg {
    fn observable(self) -> Observable {
        match self {
            ObservableArg::X => Observable::pauli_x(),
            ObservableArg::Y => Observable::pauli_y(),
            ObservableArg::Z => Observable::pauli_z(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            ObservableArg::X => "x",
            ObservableArg::Y => "y",
            ObservableArg::Z => "z",
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 0.1)]
    pub gamma_inv_min: f64,
    #[arg(long, default_value_t = 2.0)]
    pub gamma_inv_max: f64,
    #[arg(long, default_value_t = 39)]
    pub points: usize,
    /// Comma-separated noise rates.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub kappa: Vec<f64>,
    #[arg(long, value_enum, default_value_t = ObservableArg::Z)]
    pub observable: ObservableArg,
    /// Simulated-time budget per point (raised near 1/γ = 1).
    #[arg(long, default_value_t = 200.0)]
    pub t_max: f64,
    /// Convergence tolerance of the order parameter.
    #[arg(long, default_value_t = 1e-9)]
    pub order_tol: f64,
    /// Seed for any randomised initial states.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Metadata JSON path (default: `<output>.meta.json`).
    #[arg(long)]
    pub metadata: Option<PathBuf>,
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Evolve(a) => cmd_evolve(g, a),
        Command::Spectrum => cmd_spectrum(g),
        Command::Sweep(a) => cmd_sweep(g, a),
        Command::Equilibrium => cmd_equilibrium(g),
    }
}

fn load_config(g: &GlobalArgs) -> Result<RunConfig, CliError> {
    let path = g
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config is required for this command".into()))?;
    RunConfig::load(path)
}

fn integrator_config(g: &GlobalArgs, cfg: Option<&RunConfig>) -> Result<IntegratorConfig, CliError> {
    let mut ic = IntegratorConfig::default();
    if let Some(t) = cfg.and_then(|c| c.tolerances) {
        ic = ic.with_tolerances(t.rel, t.abs);
    }
    ic = ic.with_tolerances(g.tol_rel.unwrap_or(ic.rel_tol), g.tol_abs.unwrap_or(ic.abs_tol));
    if !(ic.rel_tol > 0.0 && ic.abs_tol > 0.0) {
        return Err(CliError::Config("tolerances must be positive".into()));
    }
    ic.output_interval = cfg.and_then(|c| c.output_interval);
    Ok(ic)
}

/// Sample times of the closed-form run: the output grid, or 100 equal
/// intervals when no grid is configured.
pub fn output_times(t_final: f64, interval: Option<f64>) -> Vec<f64> {
    let dt = interval.unwrap_or(t_final / 100.0);
    let mut times = vec![0.0];
    let mut k = 1u64;
    loop {
        let t = (k as f64 * dt).min(t_final);
        times.push(t);
        if t >= t_final {
            return times;
        }
        k += 1;
    }
}

/// Closed-form trajectory: `κ = 0` uses the propagator of `K`, `Γ = 0`
/// uses the noisy unitary solution.
pub fn exact_trajectory(
    rho0: &DensityMatrix,
    times: &[f64],
    model: &GainLossModel,
) -> Result<Trajectory, CliError> {
    let propagate = |t: f64| -> Result<DensityMatrix, CliError> {
        if model.kappa() == 0.0 {
            Ok(propagate_segmented(rho0, t, model)?.state)
        } else if model.is_hermitian() {
            Ok(propagate_noise_unitary(rho0, t, model)?)
        } else {
            Err(CliError::Unsupported(
                "no closed form with both gain/loss and noise; use --numeric".into(),
            ))
        }
    };
    let samples = times
        .iter()
        .map(|&t| Ok(Sample::new(t, propagate(t)?, model, 0.0)?))
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(Trajectory { samples })
}

fn cmd_evolve(g: &GlobalArgs, a: &EvolveArgs) -> Result<(), CliError> {
    let cfg = load_config(g)?;
    let model = cfg.model.build()?;
    let rho0 = cfg.rho0.build(&model, cfg.seed)?;
    let ic = integrator_config(g, Some(&cfg))?;
    if !(cfg.t_final > 0.0) || !cfg.t_final.is_finite() {
        return Err(CliError::Config("t_final must be positive".into()));
    }
    if let Some(dt) = cfg.output_interval {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(CliError::Config("output_interval must be positive".into()));
        }
    }
    let n = model.dim();
    let bytes = if a.exact {
        let times = output_times(cfg.t_final, cfg.output_interval);
        trajectory_csv(&exact_trajectory(&rho0, &times, &model)?, n)?
    } else {
        let traj = integrate(&rho0, cfg.t_final, &model, &ic)?;
        let mut bytes = trajectory_csv(&traj, n)?;
        if a.both {
            let times: Vec<f64> = traj.times().collect();
            let exact = exact_trajectory(&rho0, &times, &model)?;
            let dev = traj
                .samples
                .iter()
                .zip(&exact.samples)
                .map(|(x, y)| x.state.distance(&y.state))
                .fold(0.0, f64::max);
            bytes.extend_from_slice(format!("# max_deviation,{}\n", fmt_f64(dev)).as_bytes());
        }
        bytes
    };
    emit(g.output.as_deref(), &bytes)
}

fn cmd_spectrum(g: &GlobalArgs) -> Result<(), CliError> {
    let cfg = load_config(g)?;
    let model = cfg.model.build()?;
    let report = SpectrumReport::new(&analyze(&model), &model)?;
    emit(g.output.as_deref(), &to_json(&report))
}

fn cmd_equilibrium(g: &GlobalArgs) -> Result<(), CliError> {
    let cfg = load_config(g)?;
    let model = cfg.model.build()?;
    if model.kappa() == 0.0 {
        return Err(CliError::Unsupported(
            "kappa = 0 has no unique equilibrium; run `spectrum` for the stationary set".into(),
        ));
    }
    let mut ic = integrator_config(g, Some(&cfg))?;
    ic.output_interval = None;
    let eq = find_equilibrium_with(&model, &ic)?;
    emit(g.output.as_deref(), &to_json(&EquilibriumReport::new(&eq, &model)?))
}

fn metadata_path(a: &SweepArgs, output: Option<&Path>) -> Option<PathBuf> {
    a.metadata.clone().or_else(|| {
        output.map(|p| {
            let mut s = p.as_os_str().to_owned();
            s.push(".meta.json");
            PathBuf::from(s)
        })
    })
}

fn cmd_sweep(g: &GlobalArgs, a: &SweepArgs) -> Result<(), CliError> {
    let grid = linspace(a.gamma_inv_min, a.gamma_inv_max, a.points)?;
    if !(a.t_max > 0.0) || !(a.order_tol > 0.0) {
        return Err(CliError::Config("--t-max and --order-tol must be positive".into()));
    }
    let cfg = SweepConfig {
        t_max: a.t_max,
        tol: a.order_tol,
        integrator: integrator_config(g, None)?,
        ..SweepConfig::default()
    };
    let f = a.observable.observable();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = g.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))?;
    let table = pool.install(|| parallel_sweep(&grid, &a.kappa, &f, &cfg, a.seed))?;

    let meta = SweepMetadata::new(&grid, &a.kappa, a.observable.name(), &cfg, a.seed, &table);
    emit(g.output.as_deref(), &sweep_csv(&table)?)?;
    if let Some(p) = metadata_path(a, g.output.as_deref()) {
        emit(Some(&p), &to_json(&meta))?;
    }
    if table.rows.iter().all(|r| r.m.is_nan()) {
        return Err(CliError::Numerical("every sweep point failed".into()));
    }
    Ok(())
}
