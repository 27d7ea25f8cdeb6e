use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use choreo::action::{ActionBreakdown, ActionEvaluator};
use choreo::continuum::{el_residual, residual_grid};
use choreo::io::{write_converge, write_loop, write_scan, write_spectrum, write_trajectory};
use choreo::minimize::{scan_sigma, ScanRow};
use choreo::nbody::{
    choreography_error, converge_ladder, energy, ngon_state, omega_ngon, simulate as run_nbody,
    ConvergeRow, Trajectory,
};
use choreo::{
    compute_spectrum, minimize_action, Init, MinimizeOptions, MinimizeResult, ModelParams,
    QuadratureSpec,
};

use crate::config::List;
use crate::{CliError, Global};

const DEFAULT_SIGMA: f64 = 0.5;

fn emit<T: Serialize>(global: &Global, summary: &T) -> Result<(), CliError> {
    let mut text =
        serde_json::to_string_pretty(summary).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(text.as_bytes())
        .and_then(|_| stdout.flush())
        .map_err(|e| CliError::Io(format!("stdout: {e}")))?;
    if let Some(path) = &global.json {
        std::fs::write(path, &text)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn write_file(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<File>) -> choreo::Result<()>,
) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    write(&mut out).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    out.flush()
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn params(sigma: Option<f64>) -> Result<ModelParams, CliError> {
    let sigma = sigma.unwrap_or(DEFAULT_SIGMA);
    Ok(ModelParams::with_quadrature(
        sigma,
        &QuadratureSpec::for_sigma(sigma),
    )?)
}

fn quad(p: &ModelParams) -> QuadratureSpec {
    QuadratureSpec::for_sigma(p.sigma)
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ConstantsArgs {
    /// Homogeneity exponent in (0, 1) [default: 0.5]
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Serialize)]
struct ConstantsSummary {
    sigma: f64,
    c: f64,
    v2: f64,
    predicted_min: f64,
    lambda_1: f64,
}

pub fn constants(global: &Global, args: ConstantsArgs) -> Result<(), CliError> {
    let p = params(args.sigma)?;
    let sp = compute_spectrum(&p, 1, &quad(&p))?;
    emit(
        global,
        &ConstantsSummary {
            sigma: p.sigma,
            c: p.c,
            v2: p.v2,
            predicted_min: p.predicted_min(),
            lambda_1: sp.lambda(1),
        },
    )
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumArgs {
    /// Homogeneity exponent in (0, 1) [default: 0.5]
    #[arg(long)]
    sigma: Option<f64>,
    /// Number of modes [default: 16]
    #[arg(short = 'K', long = "modes")]
    #[serde(rename = "K")]
    modes: Option<usize>,
    /// CSV file for `k,d_k,lambda_k`
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SpectrumRow {
    k: usize,
    d_k: f64,
    lambda_k: f64,
}

#[derive(Serialize)]
struct SpectrumSummary {
    sigma: f64,
    #[serde(rename = "K")]
    modes: usize,
    lambda_min: f64,
    lambda_min_k: usize,
    rows: Vec<SpectrumRow>,
}

pub fn spectrum(global: &Global, args: SpectrumArgs) -> Result<(), CliError> {
    let p = params(args.sigma)?;
    let modes = args.modes.unwrap_or(16);
    let sp = compute_spectrum(&p, modes, &quad(&p))?;
    if let Some(path) = &args.out {
        write_file(path, |w| write_spectrum(&sp, w))?;
    }
    let (k_min, lambda_min) = sp.lambda_min();
    emit(
        global,
        &SpectrumSummary {
            sigma: p.sigma,
            modes,
            lambda_min,
            lambda_min_k: k_min,
            rows: (1..=modes)
                .map(|k| SpectrumRow {
                    k,
                    d_k: sp.d(k),
                    lambda_k: sp.lambda(k),
                })
                .collect(),
        },
    )?;
    if k_min != 1 {
        return Err(choreo::Error::Consistency(format!(
            "smallest eigenvalue sits at k = {k_min}, not at k = 1"
        ))
        .into());
    }
    Ok(())
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Number of bodies [default: 12]
    #[arg(short = 'N', long = "bodies")]
    #[serde(rename = "N")]
    bodies: Option<usize>,
    /// Homogeneity exponent in (0, 1) [default: 0.5]
    #[arg(long)]
    sigma: Option<f64>,
    /// Length of the run in polygon periods [default: 1]
    #[arg(long)]
    periods: Option<f64>,
    /// Time step; rounded so that the run ends exactly [default: period/steps]
    #[arg(long)]
    dt: Option<f64>,
    /// Steps per period when --dt is not given [default: 4096]
    #[arg(long)]
    steps: Option<usize>,
    /// Write every n-th state to the trajectory file [default: 1]
    #[arg(long)]
    stride: Option<usize>,
    /// CSV file for the trajectory
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SimulateSummary {
    #[serde(rename = "N")]
    bodies: usize,
    sigma: f64,
    periods: f64,
    steps: usize,
    dt: f64,
    omega2: f64,
    omega2_limit: f64,
    omega2_gap: f64,
    energy_drift: f64,
    choreography_error: f64,
    return_error: f64,
}

pub fn simulate(global: &Global, args: SimulateArgs) -> Result<(), CliError> {
    let p = params(args.sigma)?;
    let n = args.bodies.unwrap_or(12);
    let periods = args.periods.unwrap_or(1.0);
    let stride = args.stride.unwrap_or(1);
    let omega = omega_ngon(n, p.sigma)?;
    let period = 2.0 * PI / omega;
    if !(periods.is_finite() && periods * n as f64 >= 1.0) {
        return Err(CliError::Usage(format!(
            "periods must cover at least one shift 1/N of a period, got {periods}"
        )));
    }
    let total = periods * period;
    let steps = match args.dt {
        Some(dt) if dt > 0.0 && dt.is_finite() => (total / dt).round().max(1.0) as usize,
        Some(dt) => return Err(CliError::Usage(format!("dt must be positive, got {dt}"))),
        None => (periods * args.steps.unwrap_or(4096) as f64)
            .round()
            .max(1.0) as usize,
    };
    if stride == 0 || steps % stride != 0 {
        return Err(CliError::Usage(format!(
            "stride {stride} must divide the {steps} steps"
        )));
    }
    let dt = total / steps as f64;
    let initial = ngon_state(n, p.sigma, 2)?;
    let traj = run_nbody(&initial, p.sigma, dt, steps, 1)?;
    let e0 = energy(&initial, p.sigma)?;
    let mut drift = 0.0f64;
    for s in &traj.states {
        drift = drift.max(((energy(s, p.sigma)? - e0) / e0).abs());
    }
    let last = traj.states.last().expect("at least the initial state");
    let return_error = initial
        .positions
        .iter()
        .zip(&last.positions)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let chor = choreography_error(&traj, period / n as f64)?;
    if let Some(path) = &args.out {
        let kept = Trajectory {
            states: traj.states.iter().step_by(stride).cloned().collect(),
            dt: dt * stride as f64,
        };
        write_file(path, |w| write_trajectory(&kept, w))?;
    }
    let limit = p.circle_acceleration();
    emit(
        global,
        &SimulateSummary {
            bodies: n,
            sigma: p.sigma,
            periods,
            steps,
            dt,
            omega2: omega * omega,
            omega2_limit: limit,
            omega2_gap: (omega * omega - limit).abs(),
            energy_drift: drift,
            choreography_error: chor,
            return_error,
        },
    )
}

fn minimize_options(
    grid: Option<usize>,
    max_iterations: Option<usize>,
    tol: Option<f64>,
) -> MinimizeOptions {
    let mut opts = MinimizeOptions::default();
    if let Some(m) = grid {
        opts.grid = m;
    }
    if let Some(n) = max_iterations {
        opts.max_iterations = n;
    }
    if let Some(t) = tol {
        opts.gradient_tol = t;
    }
    opts
}

fn scan_row(p: &ModelParams, seed: u64, r: &Result<MinimizeResult, choreo::Error>) -> ScanRow {
    let predicted = p.predicted_min();
    match r {
        Ok(r) => ScanRow {
            sigma: p.sigma,
            seed,
            predicted_min: predicted,
            achieved_min: r.value,
            gap: r.value - predicted,
            circle_distance: r.circle_distance,
            iterations: r.iterations,
            converged: r.converged,
        },
        Err(_) => ScanRow {
            sigma: p.sigma,
            seed,
            predicted_min: predicted,
            achieved_min: f64::NAN,
            gap: f64::NAN,
            circle_distance: f64::NAN,
            iterations: 0,
            converged: false,
        },
    }
}

fn not_converged(rows: &[ScanRow]) -> Result<(), CliError> {
    let failed = rows.iter().filter(|r| !r.converged).count();
    if failed > 0 {
        return Err(CliError::NotConverged(format!(
            "{failed} of {} runs did not converge",
            rows.len()
        )));
    }
    Ok(())
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct MinimizeArgs {
    /// Homogeneity exponent in (0, 1) [default: 0.5]
    #[arg(long)]
    sigma: Option<f64>,
    /// Fourier modes [default: 8]
    #[arg(short = 'K', long = "modes")]
    #[serde(rename = "K")]
    modes: Option<usize>,
    /// Dimension of the ambient space [default: 2]
    #[arg(short = 'd', long)]
    dim: Option<usize>,
    /// Comma-separated seeds of random starts [default: 0]
    #[arg(long)]
    seeds: Option<List<u64>>,
    /// Start from the unit circle instead of random loops
    #[arg(long)]
    circle: bool,
    /// Time grid of the action quadrature [default: 256]
    #[arg(short = 'M', long = "grid")]
    #[serde(rename = "M")]
    grid: Option<usize>,
    /// Iteration cap per run [default: 5000]
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Gradient norm at which a run has converged [default: 1e-7]
    #[arg(long)]
    gradient_tol: Option<f64>,
    /// CSV file for one row per run
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Loop file for the best final loop
    #[arg(long = "loop", value_name = "FILE")]
    #[serde(rename = "loop")]
    loop_out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Best {
    seed: u64,
    value: f64,
    gap: f64,
    circle_distance: f64,
    gradient_norm: f64,
    iterations: usize,
    el_residual: f64,
    breakdown: ActionBreakdown,
}

#[derive(Serialize)]
struct MinimizeSummary {
    sigma: f64,
    #[serde(rename = "K")]
    modes: usize,
    dim: usize,
    predicted_min: f64,
    runs: Vec<ScanRow>,
    best: Option<Best>,
}

pub fn minimize(global: &Global, args: MinimizeArgs) -> Result<(), CliError> {
    let p = params(args.sigma)?;
    let modes = args.modes.unwrap_or(8);
    let dim = args.dim.unwrap_or(2);
    let opts = minimize_options(args.grid, args.max_iterations, args.gradient_tol);
    // rejects bad shapes before any run starts
    ActionEvaluator::new(&p, dim, modes, opts.grid)?;
    let starts: Vec<(u64, Init)> = if args.circle {
        vec![(0, Init::Circle)]
    } else {
        let seeds = args.seeds.map_or(vec![0], |l| l.0);
        seeds.into_iter().map(|s| (s, Init::Seed(s))).collect()
    };
    let results: Vec<(u64, Result<MinimizeResult, choreo::Error>)> = starts
        .par_iter()
        .map(|&(seed, init)| (seed, minimize_action(&p, dim, modes, init, &opts)))
        .collect();
    let rows: Vec<ScanRow> = results.iter().map(|(s, r)| scan_row(&p, *s, r)).collect();
    let best = results
        .iter()
        .filter_map(|(s, r)| r.as_ref().ok().map(|r| (*s, r)))
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value));

    if let Some(path) = &args.out {
        write_file(path, |w| write_scan(&rows, w))?;
    }
    if let (Some(path), Some((_, r))) = (&args.loop_out, best) {
        write_file(path, |w| write_loop(&r.loop_, w))?;
    }
    let best = match best {
        Some((seed, r)) => Some(Best {
            seed,
            value: r.value,
            gap: r.value - p.predicted_min(),
            circle_distance: r.circle_distance,
            gradient_norm: r.gradient_norm,
            iterations: r.iterations,
            el_residual: el_residual(&r.loop_, &p, &quad(&p), residual_grid(modes))?,
            breakdown: r.breakdown,
        }),
        None => None,
    };
    emit(
        global,
        &MinimizeSummary {
            sigma: p.sigma,
            modes,
            dim,
            predicted_min: p.predicted_min(),
            runs: rows.clone(),
            best,
        },
    )?;
    not_converged(&rows)
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ScanArgs {
    /// Comma-separated σ values [default: 0.25,0.5,0.75]
    #[arg(long)]
    sigmas: Option<List<f64>>,
    /// Comma-separated seeds [default: 0,1,2,3,4]
    #[arg(long)]
    seeds: Option<List<u64>>,
    /// Fourier modes [default: 8]
    #[arg(short = 'K', long = "modes")]
    #[serde(rename = "K")]
    modes: Option<usize>,
    /// Dimension of the ambient space [default: 2]
    #[arg(short = 'd', long)]
    dim: Option<usize>,
    /// Time grid of the action quadrature [default: 256]
    #[arg(short = 'M', long = "grid")]
    #[serde(rename = "M")]
    grid: Option<usize>,
    /// Iteration cap per run [default: 5000]
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Gradient norm at which a run has converged [default: 1e-7]
    #[arg(long)]
    gradient_tol: Option<f64>,
    /// CSV file for one row per (σ, seed)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ScanSummary {
    #[serde(rename = "K")]
    modes: usize,
    dim: usize,
    rows: Vec<ScanRow>,
}

pub fn scan(global: &Global, args: ScanArgs) -> Result<(), CliError> {
    let sigmas = args.sigmas.map_or(vec![0.25, 0.5, 0.75], |l| l.0);
    let seeds = args.seeds.map_or((0..5).collect(), |l| l.0);
    let modes = args.modes.unwrap_or(8);
    let dim = args.dim.unwrap_or(2);
    let opts = minimize_options(args.grid, args.max_iterations, args.gradient_tol);
    for &s in &sigmas {
        ActionEvaluator::new(&params(Some(s))?, dim, modes, opts.grid)?;
    }
    let rows = scan_sigma(&sigmas, dim, modes, &seeds, &opts)?;
    if let Some(path) = &args.out {
        write_file(path, |w| write_scan(&rows, w))?;
    }
    emit(
        global,
        &ScanSummary {
            modes,
            dim,
            rows: rows.clone(),
        },
    )?;
    not_converged(&rows)
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ConvergeArgs {
    /// Homogeneity exponent in (0, 1) [default: 0.5]
    #[arg(long)]
    sigma: Option<f64>,
    /// Comma-separated body counts [default: 64,128,...,4096]
    #[arg(long)]
    ladder: Option<List<usize>>,
    /// CSV file for `N,force_gap,omega2,omega2_gap`
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ConvergeSummary {
    sigma: f64,
    omega2_limit: f64,
    /// Least-squares slope of log force_gap against log N.
    force_slope: Option<f64>,
    rows: Vec<ConvergeRow>,
}

fn log_log_slope(rows: &[ConvergeRow]) -> Option<f64> {
    if rows.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| ((r.n as f64).ln(), r.force_gap.ln()))
        .collect();
    let m = pts.len() as f64;
    let (mx, my) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x / m, b + y / m));
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

pub fn converge(global: &Global, args: ConvergeArgs) -> Result<(), CliError> {
    let p = params(args.sigma)?;
    let ladder = args
        .ladder
        .map_or((6..=12).map(|j| 1usize << j).collect(), |l| l.0);
    let rows = converge_ladder(&p, &ladder, &quad(&p))?;
    if let Some(path) = &args.out {
        write_file(path, |w| write_converge(&rows, w))?;
    }
    emit(
        global,
        &ConvergeSummary {
            sigma: p.sigma,
            omega2_limit: p.circle_acceleration(),
            force_slope: log_log_slope(&rows),
            rows,
        },
    )
}
