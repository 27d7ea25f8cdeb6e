//! Descent on the truncated action and distance to the circle orbit.
//!
//! Steps are preconditioned by the kinetic Hessian, i.e. mode `k` of the
//! gradient is divided by `2v²(2πk)²`, which turns the raw coefficient
//! gradient into an `H¹` gradient and removes the `k²` stiffness of the
//! kinetic term. Step lengths come from Armijo backtracking.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::{ActionBreakdown, ActionEvaluator, Terms, DEFAULT_GRID};
use crate::continuum::{compute_spectrum, Spectrum};
use crate::error::{Error, Result};
use crate::fourier::FourierLoop;
use crate::params::ModelParams;
use crate::quadrature::QuadratureSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimizeOptions {
    pub max_iterations: usize,
    /// Euclidean norm of the coefficient gradient at which descent stops.
    pub gradient_tol: f64,
    /// Grid used while descending.
    pub grid: usize,
    /// Grid used for the reported value.
    pub report_grid: usize,
    pub armijo: f64,
    pub max_step: f64,
    pub max_restarts: usize,
    /// Relative size of the perturbation applied on restart.
    pub perturbation: f64,
    pub quadrature: Option<QuadratureSpec>,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            gradient_tol: 1e-7,
            grid: 256,
            report_grid: DEFAULT_GRID,
            armijo: 1e-4,
            max_step: 1.0,
            max_restarts: 3,
            perturbation: 1e-2,
            quadrature: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    Circle,
    Seed(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeResult {
    #[serde(rename = "loop")]
    pub loop_: FourierLoop,
    pub value: f64,
    pub breakdown: ActionBreakdown,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub circle_distance: f64,
    pub restarts: usize,
    /// Action after every accepted step, starting with the initial loop.
    pub history: Vec<f64>,
    /// Smallest `A - Ā` over every evaluated loop.
    pub relaxation_margin: f64,
    /// Smallest `Ā - 2π²v²(1 + 2/σ)` over every evaluated loop.
    pub bound_margin: f64,
}

struct Descent<'a> {
    evaluator: &'a ActionEvaluator,
    predicted: f64,
    relaxation_margin: f64,
    bound_margin: f64,
}

impl Descent<'_> {
    fn record(&mut self, b: &ActionBreakdown) {
        self.relaxation_margin = self.relaxation_margin.min(b.total - b.bar);
        self.bound_margin = self.bound_margin.min(b.bar - self.predicted);
    }

    fn value(&mut self, loop_: &FourierLoop) -> Option<f64> {
        let b = self.evaluator.breakdown(loop_).ok()?;
        self.record(&b);
        b.total.is_finite().then_some(b.total)
    }

    fn value_and_gradient(&mut self, loop_: &FourierLoop) -> Result<(f64, FourierLoop)> {
        let (b, g) = self.evaluator.value_and_gradient(loop_, Terms::All)?;
        self.record(&b);
        Ok((b.total, g))
    }
}

fn precondition(grad: &FourierLoop, v2: f64) -> FourierLoop {
    let mut out = grad.clone();
    for k in 1..=grad.modes() {
        let f = 1.0 / (2.0 * v2 * (2.0 * PI * k as f64).powi(2));
        out.mode_mut(k).iter_mut().for_each(|a| *a *= f);
    }
    out
}

/// Random loop with decaying modes, scaled to `∫μξ = 1` and rejected until
/// it is simple with speed bounded away from zero.
pub fn random_init(
    dim: usize,
    modes: usize,
    seed: u64,
    spectrum: &Spectrum,
) -> Result<FourierLoop> {
    if spectrum.modes() < modes {
        return Err(Error::Configuration(format!(
            "spectrum has {} modes, {modes} requested",
            spectrum.modes()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10_000 {
        let mut candidate = FourierLoop::zeros(dim, modes)?;
        for k in 1..=modes {
            let amp = 1.0 / (k * k) as f64;
            for a in candidate.mode_mut(k) {
                *a = Complex64::new(
                    amp * rng.random_range(-1.0..1.0),
                    amp * rng.random_range(-1.0..1.0),
                );
            }
        }
        let mu_xi: f64 = (1..=modes)
            .map(|k| 2.0 * candidate.mode_norm_sq(k) * spectrum.d(k))
            .sum();
        if mu_xi <= 0.0 {
            continue;
        }
        let candidate = candidate.scaled(mu_xi.sqrt().recip());
        let (chord, speed) = candidate.separation(16 * modes.max(8));
        if chord > 0.05 && speed > 0.1 {
            return Ok(candidate);
        }
    }
    Err(Error::NonConvergence(format!(
        "no simple random loop found for seed {seed}"
    )))
}

fn perturb(loop_: &FourierLoop, size: f64, seed: u64) -> FourierLoop {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = size * loop_.coefficient_norm();
    let mut out = loop_.clone();
    for a in out.coefficients_mut() {
        *a += Complex64::new(
            scale * rng.random_range(-1.0..1.0),
            scale * rng.random_range(-1.0..1.0),
        );
    }
    out
}

/// Minimizes the action over loops in R^`dim` with `modes` Fourier modes.
pub fn minimize_action(
    params: &ModelParams,
    dim: usize,
    modes: usize,
    init: Init,
    opts: &MinimizeOptions,
) -> Result<MinimizeResult> {
    let quad = opts
        .quadrature
        .unwrap_or_else(|| QuadratureSpec::for_sigma(params.sigma));
    let start = match init {
        Init::Circle => {
            let mut e1 = vec![0.0; dim];
            let mut e2 = vec![0.0; dim];
            e1[0] = 1.0;
            e2[1] = 1.0;
            FourierLoop::from_frame(&e1, &e2, modes)?
        }
        Init::Seed(seed) => {
            let spectrum = compute_spectrum(params, modes, &quad)?;
            random_init(dim, modes, seed, &spectrum)?
        }
    };
    let seed = match init {
        Init::Seed(s) => s,
        Init::Circle => 0,
    };
    minimize_from(params, start, seed, opts)
}

/// Minimizes starting from a given loop. `seed` drives restart
/// perturbations.
pub fn minimize_from(
    params: &ModelParams,
    start: FourierLoop,
    seed: u64,
    opts: &MinimizeOptions,
) -> Result<MinimizeResult> {
    if opts.grid < 2 * start.modes() + 2 || opts.max_step <= 0.0 || opts.gradient_tol <= 0.0 {
        return Err(Error::domain("invalid minimizer options"));
    }
    let quad = opts
        .quadrature
        .unwrap_or_else(|| QuadratureSpec::for_sigma(params.sigma));
    let evaluator =
        ActionEvaluator::with_quadrature(params, start.dim(), start.modes(), opts.grid, &quad)?;
    let mut descent = Descent {
        evaluator: &evaluator,
        predicted: params.predicted_min(),
        relaxation_margin: f64::INFINITY,
        bound_margin: f64::INFINITY,
    };

    let mut current = start;
    let (mut value, mut grad) = descent.value_and_gradient(&current)?;
    let mut history = vec![value];
    let mut iterations = 0;
    let mut restarts = 0;
    let mut step = opts.max_step;
    let mut converged = grad.coefficient_norm() < opts.gradient_tol;

    while !converged && iterations < opts.max_iterations {
        let direction = precondition(&grad, params.v2);
        let slope = grad.coefficient_dot(&direction)?;
        let mut alpha = (2.0 * step).min(opts.max_step);
        let mut accepted = None;
        while alpha > 1e-14 {
            let trial = current.axpy(-alpha, &direction)?;
            if let Some(v) = descent.value(&trial) {
                if v <= value - opts.armijo * alpha * slope {
                    accepted = Some(trial);
                    break;
                }
            }
            alpha *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some(next) => {
                step = alpha;
                current = next;
                let (v, g) = descent.value_and_gradient(&current)?;
                value = v;
                grad = g;
                history.push(value);
            }
            None => {
                // the best possible decrease is below the round-off of the
                // value: the loop is stationary to working precision
                let floor = 64.0 * f64::EPSILON * value.abs().max(1.0);
                if restarts >= opts.max_restarts || slope * opts.max_step <= floor {
                    break;
                }
                restarts += 1;
                current = perturb(&current, opts.perturbation, seed ^ (restarts as u64) << 32);
                let (v, g) = descent.value_and_gradient(&current)?;
                value = v;
                grad = g;
                step = opts.max_step;
                history.push(value);
            }
        }
        converged = grad.coefficient_norm() < opts.gradient_tol;
    }

    let report = ActionEvaluator::with_quadrature(
        params,
        current.dim(),
        current.modes(),
        opts.report_grid,
        &quad,
    )?;
    let breakdown = report.breakdown(&current)?;
    descent.record(&breakdown);
    Ok(MinimizeResult {
        circle_distance: circle_distance(&current),
        value: breakdown.total,
        breakdown,
        gradient_norm: grad.coefficient_norm(),
        iterations,
        converged,
        restarts,
        history,
        relaxation_margin: descent.relaxation_margin,
        bound_margin: descent.bound_margin,
        loop_: current,
    })
}

/// `E₁ = 2 Re a₁`, `E₂ = -2 Im a₁`, so that the first mode is
/// `E₁ cos 2πt + E₂ sin 2πt`.
pub fn frame(loop_: &FourierLoop) -> (Vec<f64>, Vec<f64>) {
    let a1 = loop_.mode(1);
    (
        a1.iter().map(|a| 2.0 * a.re).collect(),
        a1.iter().map(|a| -2.0 * a.im).collect(),
    )
}

/// Gram matrix `[[E₁·E₁, E₁·E₂], [E₁·E₂, E₂·E₂]]` as `(g11, g12, g22)`.
fn frame_gram(loop_: &FourierLoop) -> (f64, f64, f64) {
    let (e1, e2) = frame(loop_);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    (dot(&e1, &e1), dot(&e1, &e2), dot(&e2, &e2))
}

/// Singular values of the `2 × d` matrix with rows `E₁`, `E₂`, largest first.
pub fn frame_singular_values(loop_: &FourierLoop) -> (f64, f64) {
    let (a, b, c) = frame_gram(loop_);
    let mean = 0.5 * (a + c);
    let radius = (0.25 * (a - c).powi(2) + b * b).sqrt();
    ((mean + radius).sqrt(), (mean - radius).max(0.0).sqrt())
}

/// `√(Σ_{k≥2} ‖a_k‖²) / ‖a₁‖`.
pub fn spectral_tail(loop_: &FourierLoop) -> f64 {
    let head = loop_.mode_norm_sq(1);
    let tail: f64 = (2..=loop_.modes()).map(|k| loop_.mode_norm_sq(k)).sum();
    if head == 0.0 {
        return f64::INFINITY;
    }
    (tail / head).sqrt()
}

/// Distance from the orbit of the unit circle under phase shifts and
/// rotations: the largest of the spectral tail, `|‖a₁‖² - 1/2|` and the
/// Frobenius defect of the Gram matrix of `(E₁, E₂)` from the identity.
///
/// Each term is already invariant under both symmetries, so no minimization
/// over the phase is needed.
pub fn circle_distance(loop_: &FourierLoop) -> f64 {
    let (a, b, c) = frame_gram(loop_);
    let gram_defect = ((a - 1.0).powi(2) + 2.0 * b * b + (c - 1.0).powi(2)).sqrt();
    spectral_tail(loop_)
        .max((loop_.mode_norm_sq(1) - 0.5).abs())
        .max(gram_defect)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub sigma: f64,
    pub seed: u64,
    pub predicted_min: f64,
    pub achieved_min: f64,
    pub gap: f64,
    pub circle_distance: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// One multistart row per `(σ, seed)`; failed runs are kept as rows with
/// `converged = false` and NaN values.
pub fn scan_sigma(
    sigmas: &[f64],
    dim: usize,
    modes: usize,
    seeds: &[u64],
    opts: &MinimizeOptions,
) -> Result<Vec<ScanRow>> {
    let params = sigmas
        .iter()
        .map(|&s| ModelParams::new(s))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(&ModelParams, u64)> = params
        .iter()
        .flat_map(|p| seeds.iter().map(move |&seed| (p, seed)))
        .collect();
    Ok(jobs
        .into_par_iter()
        .map(|(params, seed)| {
            let sigma = params.sigma;
            let predicted = params.predicted_min();
            match minimize_action(params, dim, modes, Init::Seed(seed), opts) {
                Ok(r) => ScanRow {
                    sigma,
                    seed,
                    predicted_min: predicted,
                    achieved_min: r.value,
                    gap: r.value - predicted,
                    circle_distance: r.circle_distance,
                    iterations: r.iterations,
                    converged: r.converged,
                },
                Err(_) => ScanRow {
                    sigma,
                    seed,
                    predicted_min: predicted,
                    achieved_min: f64::NAN,
                    gap: f64::NAN,
                    circle_distance: f64::NAN,
                    iterations: 0,
                    converged: false,
                },
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn circle_in_space_has_zero_distance() {
        let s = 0.5f64.sqrt();
        let c = FourierLoop::from_frame(&[s, s, 0.0], &[0.0, 0.0, 1.0], 3)
            .unwrap()
            .phase_shifted(0.37);
        assert!(circle_distance(&c) < 1e-12);
        let (s1, s2) = frame_singular_values(&c);
        assert_abs_diff_eq!(s1, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn third_mode_bump_is_seen() {
        let mut c = FourierLoop::unit_circle().with_modes(3).unwrap();
        c.mode_mut(3)[0] = Complex64::new(0.1, 0.0);
        assert!(circle_distance(&c) >= 0.1);
    }

    #[test]
    fn ellipse_is_not_a_circle() {
        assert!(circle_distance(&FourierLoop::ellipse(1.0, 0.5)) > 0.1);
    }

    #[test]
    fn empty_seed_list_gives_empty_table() {
        let rows = scan_sigma(&[0.5], 2, 4, &[], &MinimizeOptions::default()).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn random_init_is_normalised_and_reproducible() {
        let p = ModelParams::new(0.5).unwrap();
        let spec = compute_spectrum(&p, 6, &QuadratureSpec::default()).unwrap();
        let a = random_init(2, 6, 11, &spec).unwrap();
        let b = random_init(2, 6, 11, &spec).unwrap();
        assert_eq!(a, b);
        let mu_xi: f64 = (1..=6).map(|k| 2.0 * a.mode_norm_sq(k) * spec.d(k)).sum();
        assert_abs_diff_eq!(mu_xi, 1.0, epsilon = 1e-12);
    }
}
