//! The continuum limit of the weakly interacting N-body problem.
//!
//! For a travelling wave `q(s, t) = y(s - vt)` the equation of motion reads
//! `v² ÿ(s) = F(s)` with the principal-value force
//!
//! ```text
//! F(s) = -σ lim_{δ→0} ∫_{s+δ}^{1+s-δ} (y(s) - y(r)) / ‖y(s) - y(r)‖^(2+σ) dr.
//! ```
//!
//! Writing `r = s + t` and `u(t) = (y(s+t) - y(s)) / t`, the integrand is
//! `sign(t) |t|^(-1-σ) u/‖u‖^(2+σ)`. Inside a window `|t| < ε` the odd part
//! `sign(t)|t|^(-1-σ) ẏ/‖ẏ‖^(2+σ)` integrates to zero and is subtracted; what
//! remains is `|t|^-σ` times a smooth function and goes to the weighted
//! rule. Outside the window the integrand is smooth.
//!
//! The nonlocal operator `Δ^μ y(t) = ∫_0^1 μ(s)(2y(t) - y(t+s) - y(t-s)) ds`
//! is diagonal on Fourier modes with eigenvalues `d_k`; see [`Spectrum`].

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{cis_minus_linear, cis_minus_one, norm, FourierLoop};
use crate::params::{sine_ratio, ModelParams};
use crate::quadrature::{QuadratureSpec, WindowedRule};

const TWO_PI: f64 = 2.0 * PI;

/// Smallest admissible speed `‖ẏ‖` where the PV force is evaluated.
pub const MIN_SPEED: f64 = 1e-8;
/// Chords between points more than `1/(4K)` apart must exceed this.
pub const SELF_INTERSECTION_FLOOR: f64 = 1e-6;
/// No chord may be shorter than this anywhere.
pub const COLLISION_FLOOR: f64 = 1e-9;

/// Eigenvalues of `Δ^μ` on modes `1..=K` and of `-ÿ = λ Δ^μ y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub sigma: f64,
    /// `d_k`, `k = 1..=K` at index `k - 1`.
    pub d: Vec<f64>,
    /// `λ_k = 4π²k² / d_k`.
    pub lambda: Vec<f64>,
}

impl Spectrum {
    pub fn modes(&self) -> usize {
        self.d.len()
    }

    pub fn d(&self, k: usize) -> f64 {
        self.d[k - 1]
    }

    pub fn lambda(&self, k: usize) -> f64 {
        self.lambda[k - 1]
    }

    /// `(k, λ_k)` with the smallest eigenvalue.
    pub fn lambda_min(&self) -> (usize, f64) {
        self.lambda
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, &l)| {
                if l < best.1 {
                    (i + 1, l)
                } else {
                    best
                }
            })
    }

    pub(crate) fn check_covers(&self, loop_: &FourierLoop, params: &ModelParams) -> Result<()> {
        if self.modes() < loop_.modes() {
            return Err(Error::Configuration(format!(
                "spectrum has {} modes but the loop has {}",
                self.modes(),
                loop_.modes()
            )));
        }
        if self.sigma != params.sigma {
            return Err(Error::Configuration(format!(
                "spectrum computed for sigma = {} but params have sigma = {}",
                self.sigma, params.sigma
            )));
        }
        Ok(())
    }
}

fn spectrum_rule(quad: &QuadratureSpec, sigma: f64, modes: usize) -> Result<WindowedRule> {
    let window = (0.25 / modes as f64).min(0.25);
    WindowedRule::new(quad, sigma, window, 0.5, 2 * modes + 2)
}

fn spectrum_values(params: &ModelParams, modes: usize, quad: &QuadratureSpec) -> Result<Vec<f64>> {
    let rule = spectrum_rule(quad, params.sigma, modes)?;
    let (sigma, c) = (params.sigma, params.c);
    Ok((1..=modes)
        .into_par_iter()
        .map(|k| {
            let kf = k as f64;
            // 4 sin²(kπs) s^σ / (c (2 sin πs)^(2+σ)) on the window
            let near = |s: f64| {
                let ratio = (PI * kf * s).sin() / (PI * s).sin();
                ratio * ratio * sine_ratio(s).powf(sigma) / c
            };
            let far = |s: f64| {
                let num = 4.0 * (PI * kf * s).sin().powi(2);
                num / (c * (2.0 * (PI * s).sin()).powf(2.0 + sigma))
            };
            2.0 * rule.integrate(near, far)
        })
        .collect())
}

/// `d_k = ∫_0^1 4 sin²(kπs) / (c (2 sin πs)^(2+σ)) ds` for `k = 1..=K`.
///
/// Every `d_k` is also computed with twice the nodes and panels; a relative
/// disagreement above `1e-10` is reported as a quadrature failure.
pub fn compute_spectrum(
    params: &ModelParams,
    modes: usize,
    quad: &QuadratureSpec,
) -> Result<Spectrum> {
    if modes < 1 {
        return Err(Error::domain("spectrum needs K >= 1"));
    }
    let d = spectrum_values(params, modes, quad)?;
    let check = spectrum_values(params, modes, &quad.refined(2))?;
    for (k, (a, b)) in d.iter().zip(&check).enumerate() {
        if !a.is_finite() || (a - b).abs() > 1e-10 * a.abs().max(1.0) {
            return Err(Error::Quadrature(format!(
                "d_{} = {a} does not agree with refined value {b}",
                k + 1
            )));
        }
    }
    let lambda = d
        .iter()
        .enumerate()
        .map(|(i, dk)| (TWO_PI * (i + 1) as f64).powi(2) / dk)
        .collect();
    Ok(Spectrum {
        sigma: params.sigma,
        d,
        lambda,
    })
}

/// Precomputed nodes and phase factors for PV force evaluation on one loop.
pub struct PvIntegrator<'a> {
    loop_: &'a FourierLoop,
    sigma: f64,
    near_t: Vec<f64>,
    near_w: Vec<f64>,
    /// `(e^(iθ) - 1 - iθ) / t` for `θ = 2πkt`, row per node.
    near_factor: Vec<Complex64>,
    far_w: Vec<f64>,
    far_t: Vec<f64>,
    /// `e^(iθ) - 1`, row per node.
    far_factor: Vec<Complex64>,
    guard_from: f64,
}

impl<'a> PvIntegrator<'a> {
    /// Window `ε = 1/(8K)`.
    pub fn new(
        loop_: &'a FourierLoop,
        params: &ModelParams,
        quad: &QuadratureSpec,
    ) -> Result<Self> {
        Self::with_window(loop_, params, quad, 0.125 / loop_.modes() as f64)
    }

    pub fn with_window(
        loop_: &'a FourierLoop,
        params: &ModelParams,
        quad: &QuadratureSpec,
        window: f64,
    ) -> Result<Self> {
        if !(window > 0.0 && window < 0.5) {
            return Err(Error::domain(format!(
                "PV window must lie in (0, 1/2), got {window}"
            )));
        }
        let panels = ((1.0 - 2.0 * window) / window).ceil() as usize;
        let rule = WindowedRule::new(quad, params.sigma, window, 1.0 - window, panels)?;
        let modes = loop_.modes();
        let mut near_factor = Vec::with_capacity(rule.near.len() * modes);
        for &t in &rule.near.nodes {
            for k in 1..=modes {
                near_factor.push(cis_minus_linear(TWO_PI * k as f64 * t) / t);
            }
        }
        let mut far_factor = Vec::with_capacity(rule.far.len() * modes);
        for &t in &rule.far.nodes {
            for k in 1..=modes {
                far_factor.push(cis_minus_one(TWO_PI * k as f64 * t));
            }
        }
        Ok(Self {
            loop_,
            sigma: params.sigma,
            near_t: rule.near.nodes,
            near_w: rule.near.weights,
            near_factor,
            far_t: rule.far.nodes,
            far_w: rule.far.weights,
            far_factor,
            guard_from: 0.25 / modes as f64,
        })
    }

    /// `F(s)`.
    pub fn force(&self, s: f64) -> Result<Vec<f64>> {
        let l = self.loop_;
        let (dim, modes) = (l.dim(), l.modes());
        let p = 2.0 + self.sigma;
        let mut b = vec![Complex64::new(0.0, 0.0); dim * modes];
        l.rotated_coefficients(s, &mut b);

        let ik: Vec<Complex64> = (1..=modes)
            .map(|k| Complex64::new(0.0, TWO_PI * k as f64))
            .collect();
        let mut velocity = vec![0.0; dim];
        FourierLoop::real_combination(dim, &b, &ik, &mut velocity);
        let speed2: f64 = velocity.iter().map(|x| x * x).sum();
        if speed2.sqrt() < MIN_SPEED {
            return Err(Error::DegenerateCurve(format!(
                "speed {:e} at s = {s} is below {MIN_SPEED:e}",
                speed2.sqrt()
            )));
        }
        let inv_speed_p = speed2.powf(-0.5 * p);

        let mut total = vec![0.0; dim];
        let mut chord = vec![0.0; dim];
        let mut distances = Vec::with_capacity(self.far_t.len());
        for (i, (&t, &w)) in self.far_t.iter().zip(&self.far_w).enumerate() {
            FourierLoop::real_combination(
                dim,
                &b,
                &self.far_factor[i * modes..(i + 1) * modes],
                &mut chord,
            );
            let dist = norm(&chord);
            distances.push(dist);
            let floor = if t >= self.guard_from && t <= 1.0 - self.guard_from {
                SELF_INTERSECTION_FLOOR
            } else {
                COLLISION_FLOOR
            };
            if dist < floor {
                return Err(Error::DegenerateCurve(format!(
                    "chord {dist:e} between s = {s} and r = {} (not a simple curve)",
                    s + t
                )));
            }
            let scale = w * dist.powf(-p);
            total
                .iter_mut()
                .zip(&chord)
                .for_each(|(a, x)| *a += scale * x);
        }

        self.check_between_nodes(s, &b, &distances)?;

        // remainder after subtracting the odd singular part
        let mut plus = vec![0.0; dim];
        let mut minus = vec![0.0; dim];
        let mut diff_plus = vec![0.0; dim];
        let mut diff_minus = vec![0.0; dim];
        let mut mirrored = vec![Complex64::new(0.0, 0.0); modes];
        for (i, (&t, &w)) in self.near_t.iter().zip(&self.near_w).enumerate() {
            let row = &self.near_factor[i * modes..(i + 1) * modes];
            FourierLoop::real_combination(dim, &b, row, &mut plus);
            mirrored
                .iter_mut()
                .zip(row)
                .for_each(|(m, z)| *m = -z.conj());
            FourierLoop::real_combination(dim, &b, &mirrored, &mut minus);
            kernel_increment(&velocity, speed2, inv_speed_p, p, &plus, &mut diff_plus)
                .map_err(|_| degenerate_near(s, t))?;
            kernel_increment(&velocity, speed2, inv_speed_p, p, &minus, &mut diff_minus)
                .map_err(|_| degenerate_near(s, t))?;
            let scale = w / t;
            for ((a, dp), dm) in total.iter_mut().zip(&diff_plus).zip(&diff_minus) {
                *a += scale * (dp - dm);
            }
        }
        total.iter_mut().for_each(|a| *a *= self.sigma);
        Ok(total)
    }
}

impl PvIntegrator<'_> {
    /// The chord can vanish between far nodes. Its `t`-derivative is bounded
    /// by `L = Σ_k 4πk‖a_k‖`, so only node-local minima closer to zero than
    /// `L` times the node spacing need a closer look.
    fn check_between_nodes(&self, s: f64, b: &[Complex64], distances: &[f64]) -> Result<()> {
        let l = self.loop_;
        let (dim, modes) = (l.dim(), l.modes());
        let lipschitz: f64 = (1..=modes)
            .map(|k| 2.0 * TWO_PI * k as f64 * l.mode_norm_sq(k).sqrt())
            .sum();
        let mut chord = vec![0.0; dim];
        let mut factors = vec![Complex64::new(0.0, 0.0); modes];
        let mut chord_at = |t: f64| {
            for (k, f) in factors.iter_mut().enumerate() {
                *f = cis_minus_one(TWO_PI * (k + 1) as f64 * t);
            }
            FourierLoop::real_combination(dim, b, &factors, &mut chord);
            norm(&chord)
        };
        let t = &self.far_t;
        for i in 1..distances.len().saturating_sub(1) {
            if t[i] < self.guard_from || t[i] > 1.0 - self.guard_from {
                continue;
            }
            let d = distances[i];
            if d > distances[i - 1] || d > distances[i + 1] {
                continue;
            }
            let (mut lo, mut hi) = (t[i - 1], t[i + 1]);
            if d - lipschitz * (hi - lo) >= SELF_INTERSECTION_FLOOR {
                continue;
            }
            // golden section on the bracketing pair of intervals
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let mut x1 = hi - g * (hi - lo);
            let mut x2 = lo + g * (hi - lo);
            let (mut f1, mut f2) = (chord_at(x1), chord_at(x2));
            for _ in 0..60 {
                if f1 < f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - g * (hi - lo);
                    f1 = chord_at(x1);
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + g * (hi - lo);
                    f2 = chord_at(x2);
                }
            }
            let least = f1.min(f2);
            if least < SELF_INTERSECTION_FLOOR {
                return Err(Error::DegenerateCurve(format!(
                    "chord {least:e} between s = {s} and r = {} (not a simple curve)",
                    s + 0.5 * (lo + hi)
                )));
            }
        }
        Ok(())
    }
}

fn degenerate_near(s: f64, t: f64) -> Error {
    Error::DegenerateCurve(format!(
        "difference quotient collapses near s = {s}, t = {t}"
    ))
}

/// `u/‖u‖^p - ẏ/‖ẏ‖^p` for `u = ẏ + w`, without cancellation when `w` is small.
fn kernel_increment(
    velocity: &[f64],
    speed2: f64,
    inv_speed_p: f64,
    p: f64,
    w: &[f64],
    out: &mut [f64],
) -> std::result::Result<(), ()> {
    let cross: f64 = w.iter().zip(velocity).map(|(a, v)| a * (2.0 * v + a)).sum();
    let r = cross / speed2;
    if 1.0 + r < 1e-12 {
        return Err(());
    }
    let log_ratio = r.ln_1p();
    let power = (-0.5 * p * log_ratio).exp();
    let power_m1 = (-0.5 * p * log_ratio).exp_m1();
    for ((o, a), v) in out.iter_mut().zip(w).zip(velocity) {
        *o = inv_speed_p * (a * power + v * power_m1);
    }
    Ok(())
}

/// PV force `F(s)` with the default window `1/(8K)`.
pub fn pv_force(
    loop_: &FourierLoop,
    s: f64,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<Vec<f64>> {
    PvIntegrator::new(loop_, params, quad)?.force(s)
}

/// `v² ÿ(t_m) - F(t_m)` at `t_m = m/M`.
pub fn el_residual_field(
    loop_: &FourierLoop,
    params: &ModelParams,
    quad: &QuadratureSpec,
    grid: usize,
) -> Result<Vec<Vec<f64>>> {
    if grid == 0 {
        return Err(Error::domain("residual grid must be non-empty"));
    }
    let integrator = PvIntegrator::new(loop_, params, quad)?;
    (0..grid)
        .into_par_iter()
        .map(|m| {
            let s = m as f64 / grid as f64;
            let force = integrator.force(s)?;
            let acc = loop_.acceleration(s);
            Ok(acc
                .iter()
                .zip(&force)
                .map(|(a, f)| params.v2 * a - f)
                .collect())
        })
        .collect()
}

/// Default residual grid `max(64, 8K)`.
pub fn residual_grid(modes: usize) -> usize {
    (8 * modes).max(64)
}

/// Euler-Lagrange residual `max_m ‖v² ÿ(t_m) - F(t_m)‖`.
pub fn el_residual(
    loop_: &FourierLoop,
    params: &ModelParams,
    quad: &QuadratureSpec,
    grid: usize,
) -> Result<f64> {
    Ok(el_residual_field(loop_, params, quad, grid)?
        .iter()
        .map(|r| norm(r))
        .fold(0.0, f64::max))
}

/// Residual of the unit circle `x(s) = e^(2πis)` at wave speed `params.v2`.
pub fn circle_residual(params: &ModelParams, quad: &QuadratureSpec) -> Result<f64> {
    el_residual(&FourierLoop::unit_circle(), params, quad, residual_grid(1))
}

/// `Δ^μ y(t)` by direct quadrature of `μ(s)(2y(t) - y(t+s) - y(t-s))`.
///
/// The integrand is symmetric about `s = 1/2`, so twice the half interval is
/// integrated, with weight `s^-σ` near `s = 0`.
pub fn delta_mu_pointwise(
    loop_: &FourierLoop,
    t: f64,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<Vec<f64>> {
    let rule = spectrum_rule(quad, params.sigma, loop_.modes())?;
    let dim = loop_.dim();
    let (sigma, c) = (params.sigma, params.c);
    let mut fwd = vec![0.0; dim];
    let mut back = vec![0.0; dim];
    let mut second_difference = |s: f64| -> Vec<f64> {
        loop_.chord_into(t, s, &mut fwd);
        loop_.chord_into(t, -s, &mut back);
        fwd.iter().zip(&back).map(|(a, b)| -(a + b)).collect()
    };
    let mut out = vec![0.0; dim];
    for (s, w) in rule.near.iter() {
        let sine = 2.0 * (PI * s).sin();
        let scale = w * sine_ratio(s).powf(sigma) / (c * sine * sine);
        out.iter_mut()
            .zip(second_difference(s))
            .for_each(|(o, x)| *o += scale * x);
    }
    for (s, w) in rule.far.iter() {
        let scale = w * (2.0 * (PI * s).sin()).powf(-(2.0 + sigma)) / c;
        out.iter_mut()
            .zip(second_difference(s))
            .for_each(|(o, x)| *o += scale * x);
    }
    out.iter_mut().for_each(|o| *o *= 2.0);
    Ok(out)
}

/// `Δ^μ` in coefficient space: `a_k -> d_k a_k`.
pub fn delta_mu_spectral(
    loop_: &FourierLoop,
    spectrum: &Spectrum,
    params: &ModelParams,
) -> Result<FourierLoop> {
    spectrum.check_covers(loop_, params)?;
    let mut out = loop_.clone();
    for k in 1..=loop_.modes() {
        let d = spectrum.d(k);
        out.mode_mut(k).iter_mut().for_each(|a| *a *= d);
    }
    Ok(out)
}
