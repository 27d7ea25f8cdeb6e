//! The limiting action functional and its relaxations.
//!
//! ```text
//! A(y)  = v²/2 ∫‖ẏ‖² + 1/2 ∫∫ ‖y(s) - y(r)‖^-σ dr ds
//! Ã(y)  = v²/2 ∫‖ẏ‖² + (4π²v²/σ) (∫μξ_y)^(-σ/2)
//! Ā(y)  = 2π²v² (∫μξ_y + (2/σ)(∫μξ_y)^(-σ/2))
//! ```
//!
//! with `A >= Ã >= Ā >= 2π²v²(1 + 2/σ)`, all equalities holding exactly at
//! unit circles.
//!
//! The potential is integrated as `∫_0^1 ds ∫_0^(1/2) ‖y(s+t) - y(s)‖^-σ dt`
//! (the `t > 1/2` half is the mirror image), trapezoid in `s` and a windowed
//! singular rule in `t`. [`ActionEvaluator::gradient`] differentiates exactly
//! this discretization, so it agrees with finite differences of
//! [`ActionEvaluator::breakdown`] to round-off.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuum::{compute_spectrum, Spectrum, COLLISION_FLOOR};
use crate::error::{Error, Result};
use crate::fourier::{cis_minus_one, cis_turns, FourierLoop};
use crate::params::{sine_ratio, ModelParams};
use crate::quadrature::{QuadratureSpec, WindowedRule};

const TWO_PI: f64 = 2.0 * PI;

/// Grid used for reported functional values.
pub const DEFAULT_GRID: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionBreakdown {
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
    pub tilde: f64,
    pub bar: f64,
    pub mu_xi: f64,
}

/// Serialized form of a breakdown together with the discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionReport {
    pub sigma: f64,
    #[serde(rename = "K")]
    pub modes: usize,
    #[serde(rename = "M")]
    pub grid: usize,
    #[serde(flatten)]
    pub breakdown: ActionBreakdown,
}

/// Which parts of the action enter a gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terms {
    All,
    KineticOnly,
}

/// Reusable discretization of the action for loops with fixed `(d, K)`.
#[derive(Debug, Clone)]
pub struct ActionEvaluator {
    params: ModelParams,
    spectrum: Spectrum,
    dim: usize,
    modes: usize,
    grid: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `(e^(iθ) - 1)/t` on window nodes and `e^(iθ) - 1` beyond, `θ = 2πkt`,
    /// one row of `K` factors per node. Window rows already carry `t^σ`
    /// through the rule weights.
    factors: Vec<Complex64>,
    /// `t` on window nodes, 1 elsewhere: the chord is `scale * u`.
    chord_scale: Vec<f64>,
    /// `e^(2πiks)` per grid point, row of `K`.
    phases: Vec<Complex64>,
}

impl ActionEvaluator {
    pub fn new(params: &ModelParams, dim: usize, modes: usize, grid: usize) -> Result<Self> {
        Self::with_quadrature(
            params,
            dim,
            modes,
            grid,
            &QuadratureSpec::for_sigma(params.sigma),
        )
    }

    pub fn with_quadrature(
        params: &ModelParams,
        dim: usize,
        modes: usize,
        grid: usize,
        quad: &QuadratureSpec,
    ) -> Result<Self> {
        if grid < 2 * modes + 2 {
            return Err(Error::domain(format!(
                "grid of {grid} points cannot resolve {modes} modes"
            )));
        }
        FourierLoop::zeros(dim, modes)?;
        let spectrum = compute_spectrum(params, modes, quad)?;
        let window = 0.125 / modes as f64;
        let panels = ((0.5 - window) / window).ceil() as usize;
        let rule = WindowedRule::new(quad, params.sigma, window, 0.5, panels)?;

        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut factors = Vec::new();
        let mut chord_scale = Vec::new();
        for (t, w) in rule.near.iter() {
            nodes.push(t);
            weights.push(w);
            chord_scale.push(t);
            factors.extend((1..=modes).map(|k| cis_minus_one(TWO_PI * k as f64 * t) / t));
        }
        for (t, w) in rule.far.iter() {
            nodes.push(t);
            weights.push(w);
            chord_scale.push(1.0);
            factors.extend((1..=modes).map(|k| cis_minus_one(TWO_PI * k as f64 * t)));
        }
        let phases = (0..grid)
            .flat_map(|m| {
                let s = m as f64 / grid as f64;
                (1..=modes).map(move |k| cis_turns(k as f64 * s))
            })
            .collect();
        Ok(Self {
            params: *params,
            spectrum,
            dim,
            modes,
            grid,
            nodes,
            weights,
            factors,
            chord_scale,
            phases,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    fn check_shape(&self, loop_: &FourierLoop) -> Result<()> {
        if loop_.dim() != self.dim || loop_.modes() != self.modes {
            return Err(Error::Configuration(format!(
                "evaluator built for (d, K) = ({}, {}), loop has ({}, {})",
                self.dim,
                self.modes,
                loop_.dim(),
                loop_.modes()
            )));
        }
        Ok(())
    }

    /// Potential and, optionally, its coefficient gradient.
    fn potential(
        &self,
        loop_: &FourierLoop,
        with_gradient: bool,
    ) -> Result<(f64, Option<Vec<Complex64>>)> {
        let (dim, modes) = (self.dim, self.modes);
        let sigma = self.params.sigma;
        let a = loop_.coefficients();
        let per_point: Vec<(f64, Vec<Complex64>)> = (0..self.grid)
            .into_par_iter()
            .map(|m| {
                let phase = &self.phases[m * modes..(m + 1) * modes];
                let mut b = vec![Complex64::new(0.0, 0.0); dim * modes];
                for k in 0..modes {
                    for j in 0..dim {
                        b[k * dim + j] = a[k * dim + j] * phase[k];
                    }
                }
                let mut u = vec![0.0; dim];
                let mut acc = 0.0;
                let mut h = if with_gradient {
                    vec![Complex64::new(0.0, 0.0); dim * modes]
                } else {
                    Vec::new()
                };
                for (i, &w) in self.weights.iter().enumerate() {
                    let row = &self.factors[i * modes..(i + 1) * modes];
                    FourierLoop::real_combination(dim, &b, row, &mut u);
                    let n2: f64 = u.iter().map(|x| x * x).sum();
                    if n2.sqrt() * self.chord_scale[i] < COLLISION_FLOOR {
                        let s = m as f64 / self.grid as f64;
                        return Err(Error::InfiniteAction(format!(
                            "chord between s = {s} and s + {} below {COLLISION_FLOOR:e}",
                            self.nodes[i]
                        )));
                    }
                    let value = n2.powf(-0.5 * sigma);
                    acc += w * value;
                    if with_gradient {
                        // d/du ‖u‖^-σ = -σ ‖u‖^(-σ-2) u, mapped through u = 2 Re(Σ b_k f_k)
                        let gamma = -2.0 * sigma * w * value / n2;
                        for (k, f) in row.iter().enumerate() {
                            let fc = f.conj();
                            for j in 0..dim {
                                h[k * dim + j] += fc * (gamma * u[j]);
                            }
                        }
                    }
                }
                Ok((acc, h))
            })
            .collect::<Result<_>>()?;

        let scale = 1.0 / self.grid as f64;
        let value = scale * crate::reduce::sum(per_point.iter().map(|p| p.0));
        if !with_gradient {
            return Ok((value, None));
        }
        let mut grad = vec![Complex64::new(0.0, 0.0); dim * modes];
        for k in 0..modes {
            for j in 0..dim {
                let idx = k * dim + j;
                let re = crate::reduce::sum(
                    per_point
                        .iter()
                        .enumerate()
                        .map(|(m, p)| (self.phases[m * modes + k].conj() * p.1[idx]).re),
                );
                let im = crate::reduce::sum(
                    per_point
                        .iter()
                        .enumerate()
                        .map(|(m, p)| (self.phases[m * modes + k].conj() * p.1[idx]).im),
                );
                grad[idx] = Complex64::new(re, im) * scale;
            }
        }
        Ok((value, Some(grad)))
    }

    pub fn mu_xi(&self, loop_: &FourierLoop) -> f64 {
        (1..=loop_.modes())
            .map(|k| 2.0 * loop_.mode_norm_sq(k) * self.spectrum.d(k))
            .sum()
    }

    pub fn breakdown(&self, loop_: &FourierLoop) -> Result<ActionBreakdown> {
        self.check_shape(loop_)?;
        let (potential, _) = self.potential(loop_, false)?;
        Ok(self.assemble(loop_, potential))
    }

    fn assemble(&self, loop_: &FourierLoop, potential: f64) -> ActionBreakdown {
        let p = &self.params;
        let kinetic = 0.5 * p.v2 * loop_.kinetic_integral();
        let mu_xi = self.mu_xi(loop_);
        let relaxed = mu_xi.powf(-0.5 * p.sigma);
        ActionBreakdown {
            kinetic,
            potential,
            total: kinetic + potential,
            tilde: kinetic + 4.0 * PI * PI * p.v2 / p.sigma * relaxed,
            bar: 2.0 * PI * PI * p.v2 * (mu_xi + 2.0 / p.sigma * relaxed),
            mu_xi,
        }
    }

    /// Gradient with respect to the coefficients: entry `(k, j)` is
    /// `∂A/∂Re a_kj + i ∂A/∂Im a_kj`.
    pub fn gradient(&self, loop_: &FourierLoop, terms: Terms) -> Result<FourierLoop> {
        Ok(self.value_and_gradient(loop_, terms)?.1)
    }

    pub fn value_and_gradient(
        &self,
        loop_: &FourierLoop,
        terms: Terms,
    ) -> Result<(ActionBreakdown, FourierLoop)> {
        self.check_shape(loop_)?;
        let mut grad = self.kinetic_gradient(loop_);
        let breakdown = match terms {
            Terms::KineticOnly => self.assemble(loop_, f64::NAN),
            Terms::All => {
                let (potential, pg) = self.potential(loop_, true)?;
                let pg = pg.expect("gradient requested");
                grad.coefficients_mut()
                    .iter_mut()
                    .zip(pg)
                    .for_each(|(g, p)| *g += p);
                self.assemble(loop_, potential)
            }
        };
        Ok((breakdown, grad))
    }

    /// `2 v² (2πk)² a_k`.
    fn kinetic_gradient(&self, loop_: &FourierLoop) -> FourierLoop {
        let mut grad = loop_.clone();
        for k in 1..=self.modes {
            let f = 2.0 * self.params.v2 * (TWO_PI * k as f64).powi(2);
            grad.mode_mut(k).iter_mut().for_each(|a| *a *= f);
        }
        grad
    }
}

/// Breakdown of the action on an `M`-point grid.
pub fn action(loop_: &FourierLoop, params: &ModelParams, grid: usize) -> Result<ActionBreakdown> {
    ActionEvaluator::new(params, loop_.dim(), loop_.modes(), grid)?.breakdown(loop_)
}

pub fn action_gradient(
    loop_: &FourierLoop,
    params: &ModelParams,
    grid: usize,
) -> Result<FourierLoop> {
    ActionEvaluator::new(params, loop_.dim(), loop_.modes(), grid)?.gradient(loop_, Terms::All)
}

/// `∫μξ_y = ∫ Δ^μ y · y = Σ_k 2 ‖a_k‖² d_k`.
///
/// Also integrates `μ ξ_y` directly, with `ξ_y` from grid quadrature of the
/// squared chords, and fails if the two disagree by more than `1e-6`
/// relative.
pub fn mu_xi_inner(loop_: &FourierLoop, spectrum: &Spectrum, params: &ModelParams) -> Result<f64> {
    spectrum.check_covers(loop_, params)?;
    let spectral: f64 = (1..=loop_.modes())
        .map(|k| 2.0 * loop_.mode_norm_sq(k) * spectrum.d(k))
        .sum();

    let samples = 4 * loop_.modes() + 4;
    let mut chord = vec![0.0; loop_.dim()];
    let mut xi = |t: f64| -> f64 {
        (0..samples)
            .map(|m| {
                loop_.chord_into(m as f64 / samples as f64, t, &mut chord);
                chord.iter().map(|x| x * x).sum::<f64>()
            })
            .sum::<f64>()
            / samples as f64
    };
    let quad = QuadratureSpec::for_sigma(params.sigma);
    let window = 0.25 / loop_.modes() as f64;
    let rule = WindowedRule::new(&quad, params.sigma, window, 0.5, 2 * loop_.modes() + 2)?;
    let (sigma, c) = (params.sigma, params.c);
    let mut direct = 0.0;
    for (t, w) in rule.near.iter() {
        let sine = 2.0 * (PI * t).sin();
        direct += w * xi(t) * sine_ratio(t).powf(sigma) / (c * sine * sine);
    }
    for (t, w) in rule.far.iter() {
        direct += w * xi(t) * (2.0 * (PI * t).sin()).powf(-(2.0 + sigma)) / c;
    }
    direct *= 2.0;

    if (direct - spectral).abs() > 1e-6 * spectral.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Consistency(format!(
            "coefficient route gives {spectral}, direct quadrature {direct}"
        )));
    }
    Ok(spectral)
}

/// `∫‖ẏ‖² - 4π² ∫μξ_y = Σ_k 2‖a_k‖² 4π²(k² - d_k)`, non-negative, zero only
/// on pure first-mode loops.
pub fn kinetic_gap(loop_: &FourierLoop, spectrum: &Spectrum) -> Result<f64> {
    if spectrum.modes() < loop_.modes() {
        return Err(Error::Configuration(format!(
            "spectrum has {} modes but the loop has {}",
            spectrum.modes(),
            loop_.modes()
        )));
    }
    Ok((1..=loop_.modes())
        .map(|k| {
            let kf = k as f64;
            2.0 * loop_.mode_norm_sq(k) * 4.0 * PI * PI * (kf * kf - spectrum.d(k))
        })
        .sum())
}

/// `Φ(ξ) = (∫μξ)^β ∫ξ^-β` for a positive function `ξ` on `(0, 1)` vanishing
/// quadratically at both ends.
///
/// For `β = σ/2` this is at least `c`, with equality exactly when `ξ` is
/// proportional to `4 sin²(πt)`.
pub fn holder_phi(
    xi: impl Fn(f64) -> f64,
    params: &ModelParams,
    beta: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if !(beta > 0.0 && 2.0 * beta < 1.0) {
        return Err(Error::domain(format!(
            "beta must lie in (0, 1/2) for an integrable ξ^-β, got {beta}"
        )));
    }
    let (sigma, c) = (params.sigma, params.c);
    let sample = |t: f64| -> Result<f64> {
        let v = xi(t);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::domain(format!("ξ({t}) = {v} is not positive")))
        }
    };
    let window = 0.25;
    let weighted = WindowedRule::new(quad, sigma, window, 1.0 - window, 4)?;
    let inverse = WindowedRule::new(quad, 2.0 * beta, window, 1.0 - window, 4)?;

    let mu_regular = |t: f64| {
        let sine = 2.0 * (PI * t).sin();
        sine_ratio(t).powf(sigma) / (c * sine * sine)
    };
    let mut mu_xi = 0.0;
    for (t, w) in weighted.near.iter() {
        mu_xi += w * mu_regular(t) * (sample(t)? + sample(1.0 - t)?);
    }
    for (t, w) in weighted.far.iter() {
        mu_xi += w * (2.0 * (PI * t).sin()).powf(-(2.0 + sigma)) / c * sample(t)?;
    }

    let mut xi_inv = 0.0;
    for (t, w) in inverse.near.iter() {
        let scale = t.powf(2.0 * beta);
        xi_inv += w * scale * (sample(t)?.powf(-beta) + sample(1.0 - t)?.powf(-beta));
    }
    for (t, w) in inverse.far.iter() {
        xi_inv += w * sample(t)?.powf(-beta);
    }
    Ok(mu_xi.powf(beta) * xi_inv)
}

/// `∫_0^1 ‖y(s+t) - y(s)‖^-σ ds` on an `M`-point grid, for fixed `t`.
pub fn chord_power_mean(loop_: &FourierLoop, t: f64, sigma: f64, grid: usize) -> f64 {
    let mut chord = vec![0.0; loop_.dim()];
    (0..grid)
        .map(|m| {
            loop_.chord_into(m as f64 / grid as f64, t, &mut chord);
            chord.iter().map(|x| x * x).sum::<f64>().powf(-0.5 * sigma)
        })
        .sum::<f64>()
        / grid as f64
}
