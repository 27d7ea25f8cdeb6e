//! Zero-mean periodic loops in R^d.
//!
//! A [`FourierLoop`] stores `K` complex d-vectors `a_1..a_K` and realises
//! `y(t) = Σ_k a_k e^(2πikt) + conj(a_k) e^(-2πikt)`. There is no `k = 0`
//! slot, so every loop has zero mean. Samples on a uniform grid
//! ([`SampledLoop`]) are derived from the coefficients, never the reverse,
//! except through the explicit projection [`fit_fourier`].

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierLoop {
    dim: usize,
    modes: usize,
    /// Row-major `[k][j]`, `k = 1..=modes` stored at row `k - 1`.
    coeffs: Vec<Complex64>,
}

/// `e^(iθ)` for `θ = 2π k t`, reducing `k t` mod 1 first.
#[inline]
pub(crate) fn cis_turns(turns: f64) -> Complex64 {
    let (s, c) = (TWO_PI * turns.rem_euclid(1.0)).sin_cos();
    Complex64::new(c, s)
}

/// `(e^(iθ) - 1)`, accurate for small θ.
#[inline]
pub(crate) fn cis_minus_one(theta: f64) -> Complex64 {
    let half = 0.5 * theta;
    let s = half.sin();
    // 2i sin(θ/2) e^(iθ/2) = -2 sin²(θ/2) + i sin θ
    Complex64::new(-2.0 * s * s, theta.sin())
}

/// `(e^(iθ) - 1 - iθ)`, accurate for small θ.
#[inline]
pub(crate) fn cis_minus_linear(theta: f64) -> Complex64 {
    let s = (0.5 * theta).sin();
    Complex64::new(-2.0 * s * s, sin_minus_identity(theta))
}

/// `sin θ - θ` without cancellation.
#[inline]
pub(crate) fn sin_minus_identity(theta: f64) -> f64 {
    if theta.abs() < 0.5 {
        let t2 = theta * theta;
        // -θ³/3! + θ⁵/5! - ... through θ¹⁵
        let mut term = -theta * t2 / 6.0;
        let mut acc = term;
        for n in (4..=16).step_by(2) {
            term *= -t2 / (n as f64 * (n + 1) as f64);
            acc += term;
        }
        acc
    } else {
        theta.sin() - theta
    }
}

impl FourierLoop {
    /// The zero loop with `modes` coefficients in R^`dim`.
    pub fn zeros(dim: usize, modes: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::domain(format!("dimension must be >= 2, got {dim}")));
        }
        if modes < 1 {
            return Err(Error::domain("a loop needs at least one Fourier mode"));
        }
        Ok(Self {
            dim,
            modes,
            coeffs: vec![Complex64::new(0.0, 0.0); dim * modes],
        })
    }

    /// Builds a loop from one row of `dim` coefficients per mode `k = 1..`.
    pub fn from_modes(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut out = Self::zeros(dim, rows.len())?;
        for (k, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::domain(format!(
                    "mode {} has {} components, expected {dim}",
                    k + 1,
                    row.len()
                )));
            }
            out.mode_mut(k + 1).copy_from_slice(row);
        }
        Ok(out)
    }

    /// `y(t) = (cos 2πt, sin 2πt)`.
    pub fn unit_circle() -> Self {
        Self::ellipse(1.0, 1.0)
    }

    /// `y(t) = (A cos 2πt, B sin 2πt)`.
    pub fn ellipse(a: f64, b: f64) -> Self {
        let mut out = Self::zeros(2, 1).expect("valid shape");
        out.mode_mut(1)
            .copy_from_slice(&[Complex64::new(0.5 * a, 0.0), Complex64::new(0.0, -0.5 * b)]);
        out
    }

    /// `y(t) = e1 cos 2πt + e2 sin 2πt` padded to `modes` modes.
    pub fn from_frame(e1: &[f64], e2: &[f64], modes: usize) -> Result<Self> {
        if e1.len() != e2.len() {
            return Err(Error::domain("frame vectors differ in length"));
        }
        let mut out = Self::zeros(e1.len(), modes)?;
        for (j, a) in out.mode_mut(1).iter_mut().enumerate() {
            *a = Complex64::new(0.5 * e1[j], -0.5 * e2[j]);
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Coefficients of mode `k` (1-based).
    pub fn mode(&self, k: usize) -> &[Complex64] {
        assert!(
            k >= 1 && k <= self.modes,
            "mode {k} out of range 1..={}",
            self.modes
        );
        &self.coeffs[(k - 1) * self.dim..k * self.dim]
    }

    pub fn mode_mut(&mut self, k: usize) -> &mut [Complex64] {
        assert!(
            k >= 1 && k <= self.modes,
            "mode {k} out of range 1..={}",
            self.modes
        );
        &mut self.coeffs[(k - 1) * self.dim..k * self.dim]
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// `‖a_k‖²`.
    pub fn mode_norm_sq(&self, k: usize) -> f64 {
        self.mode(k).iter().map(Complex64::norm_sqr).sum()
    }

    /// Copy with `modes` modes, truncating or zero-padding.
    pub fn with_modes(&self, modes: usize) -> Result<Self> {
        let mut out = Self::zeros(self.dim, modes)?;
        for k in 1..=modes.min(self.modes) {
            out.mode_mut(k).copy_from_slice(self.mode(k));
        }
        Ok(out)
    }

    /// `Σ_k a_k e^(2πik s)`, per mode, as `b_k = a_k e_k(s)`.
    pub(crate) fn rotated_coefficients(&self, s: f64, out: &mut [Complex64]) {
        for k in 1..=self.modes {
            let e = cis_turns(k as f64 * s);
            let row = &self.coeffs[(k - 1) * self.dim..k * self.dim];
            for (o, a) in out[(k - 1) * self.dim..k * self.dim].iter_mut().zip(row) {
                *o = a * e;
            }
        }
    }

    /// Sums `2 Re(Σ_k b_k f_k)` into `out`, where `b` is row-major like the
    /// coefficients and `f_k` is one scalar per mode.
    #[inline]
    pub(crate) fn real_combination(
        dim: usize,
        b: &[Complex64],
        factors: &[Complex64],
        out: &mut [f64],
    ) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (k, f) in factors.iter().enumerate() {
            let row = &b[k * dim..(k + 1) * dim];
            for (o, z) in out.iter_mut().zip(row) {
                *o += 2.0 * (z.re * f.re - z.im * f.im);
            }
        }
    }

    fn combine(&self, t: f64, factor: impl Fn(usize) -> Complex64, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for k in 1..=self.modes {
            let z = cis_turns(k as f64 * t) * factor(k);
            for (o, a) in out.iter_mut().zip(self.mode(k)) {
                *o += 2.0 * (a.re * z.re - a.im * z.im);
            }
        }
    }

    pub fn position_into(&self, t: f64, out: &mut [f64]) {
        self.combine(t, |_| Complex64::new(1.0, 0.0), out);
    }

    pub fn velocity_into(&self, t: f64, out: &mut [f64]) {
        self.combine(t, |k| Complex64::new(0.0, TWO_PI * k as f64), out);
    }

    pub fn acceleration_into(&self, t: f64, out: &mut [f64]) {
        self.combine(
            t,
            |k| Complex64::new(-(TWO_PI * k as f64).powi(2), 0.0),
            out,
        );
    }

    pub fn position(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.position_into(t, &mut out);
        out
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.velocity_into(t, &mut out);
        out
    }

    pub fn acceleration(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.acceleration_into(t, &mut out);
        out
    }

    /// Position and exact term-by-term velocity at `t`.
    pub fn evaluate(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        (self.position(t), self.velocity(t))
    }

    /// Chord `y(s + t) - y(s)`, without cancellation for small `t`.
    pub fn chord_into(&self, s: f64, t: f64, out: &mut [f64]) {
        self.combine(s, |k| cis_minus_one(TWO_PI * k as f64 * t), out);
    }

    pub fn chord(&self, s: f64, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.chord_into(s, t, &mut out);
        out
    }

    /// `∫_0^1 ‖ẏ‖² = 2 Σ_k (2πk)² ‖a_k‖²`.
    pub fn kinetic_integral(&self) -> f64 {
        (1..=self.modes)
            .map(|k| 2.0 * (TWO_PI * k as f64).powi(2) * self.mode_norm_sq(k))
            .sum()
    }

    /// `∫_0^1 ‖y‖² = 2 Σ_k ‖a_k‖²`.
    pub fn l2_norm_sq(&self) -> f64 {
        (1..=self.modes).map(|k| 2.0 * self.mode_norm_sq(k)).sum()
    }

    /// Mean squared chord `ξ_y(t) = ∫_0^1 ‖y(s+t) - y(s)‖² ds
    /// = Σ_k 8 ‖a_k‖² sin²(πkt)`.
    pub fn xi(&self, t: f64) -> f64 {
        (1..=self.modes)
            .map(|k| 8.0 * self.mode_norm_sq(k) * (PI * k as f64 * t).sin().powi(2))
            .sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|a| *a *= factor);
        out
    }

    /// `self + step * other`.
    pub fn axpy(&self, step: f64, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * step;
        }
        Ok(out)
    }

    /// Real inner product of the coefficient arrays seen as real vectors.
    pub fn coefficient_dot(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum())
    }

    pub fn coefficient_norm(&self) -> f64 {
        self.coeffs
            .iter()
            .map(Complex64::norm_sqr)
            .sum::<f64>()
            .sqrt()
    }

    /// Time shift `t -> t + t0`: `a_k -> a_k e^(2πik t0)`.
    pub fn phase_shifted(&self, t0: f64) -> Self {
        let mut out = self.clone();
        for k in 1..=self.modes {
            let e = cis_turns(k as f64 * t0);
            out.mode_mut(k).iter_mut().for_each(|a| *a *= e);
        }
        out
    }

    /// Applies the `dim × dim` row-major matrix `m` to every coefficient.
    pub fn transformed(&self, m: &[f64]) -> Result<Self> {
        if m.len() != self.dim * self.dim {
            return Err(Error::domain("matrix does not match the loop dimension"));
        }
        let mut out = self.clone();
        for k in 1..=self.modes {
            let src = self.mode(k).to_vec();
            for (i, o) in out.mode_mut(k).iter_mut().enumerate() {
                *o = (0..self.dim).map(|j| src[j] * m[i * self.dim + j]).sum();
            }
        }
        Ok(out)
    }

    /// Real coordinates `[Re a_1^1, Im a_1^1, Re a_1^2, ...]`.
    pub fn to_real_vec(&self) -> Vec<f64> {
        self.coeffs.iter().flat_map(|a| [a.re, a.im]).collect()
    }

    pub fn from_real_vec(dim: usize, modes: usize, x: &[f64]) -> Result<Self> {
        if x.len() != 2 * dim * modes {
            return Err(Error::domain(format!(
                "expected {} real coordinates, got {}",
                2 * dim * modes,
                x.len()
            )));
        }
        let mut out = Self::zeros(dim, modes)?;
        for (a, pair) in out.coeffs.iter_mut().zip(x.chunks_exact(2)) {
            *a = Complex64::new(pair[0], pair[1]);
        }
        Ok(out)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.modes != other.modes {
            return Err(Error::Configuration(format!(
                "loop shapes differ: ({}, {}) vs ({}, {})",
                self.dim, self.modes, other.dim, other.modes
            )));
        }
        Ok(())
    }

    /// Smallest chord between grid points more than `M/(4K)` steps apart, and
    /// the smallest speed on the grid. Both vanish on non-simple or singular
    /// curves.
    pub fn separation(&self, m: usize) -> (f64, f64) {
        let samples = sample_loop(self, m.max(4)).expect("m >= 4");
        let m = samples.len();
        let skip = (m / (4 * self.modes)).max(1);
        let mut min_chord = f64::INFINITY;
        for i in 0..m {
            for j in i + skip..m {
                if m - (j - i) < skip {
                    continue;
                }
                let d: f64 = samples
                    .point(i)
                    .iter()
                    .zip(samples.point(j))
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                min_chord = min_chord.min(d);
            }
        }
        let min_speed = (0..m)
            .map(|i| norm(&self.velocity(i as f64 / m as f64)))
            .fold(f64::INFINITY, f64::min);
        (min_chord, min_speed)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A loop sampled at `t_m = m/M`, `m = 0..M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledLoop {
    dim: usize,
    samples: Vec<f64>,
}

impl SampledLoop {
    pub fn new(dim: usize, samples: Vec<f64>) -> Result<Self> {
        if dim < 2 || !samples.len().is_multiple_of(dim) {
            return Err(Error::domain(
                "samples do not form whole points in R^d, d >= 2",
            ));
        }
        Ok(Self { dim, samples })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Point `m`, indices taken mod `M`.
    pub fn point(&self, m: usize) -> &[f64] {
        let i = m % self.len();
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.chunks_exact(self.dim)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for p in self.points() {
            for (m, x) in mean.iter_mut().zip(p) {
                *m += x;
            }
        }
        let n = self.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }
}

/// Samples `loop_` at `M` uniform times; `M` must be even and at least 2.
pub fn sample_loop(loop_: &FourierLoop, m: usize) -> Result<SampledLoop> {
    if m < 2 || !m.is_multiple_of(2) {
        return Err(Error::domain(format!(
            "sample count must be even and >= 2, got {m}"
        )));
    }
    let d = loop_.dim();
    let mut samples = vec![0.0; m * d];
    for (i, chunk) in samples.chunks_exact_mut(d).enumerate() {
        loop_.position_into(i as f64 / m as f64, chunk);
    }
    SampledLoop::new(d, samples)
}

/// Discrete Fourier projection onto modes `1..=K`.
///
/// The `k = 0` component is dropped, which subtracts the sample mean.
/// Lossless for trigonometric polynomials of degree `K` when `M >= 2K + 2`.
pub fn fit_fourier(samples: &SampledLoop, modes: usize) -> Result<FourierLoop> {
    let m = samples.len();
    if m < 2 {
        return Err(Error::domain(format!("need at least 2 samples, got {m}")));
    }
    let mut out = FourierLoop::zeros(samples.dim(), modes)?;
    for k in 1..=modes {
        let row = out.mode_mut(k);
        for (i, p) in samples.points().enumerate() {
            let e = cis_turns(-(k as f64) * i as f64 / m as f64);
            for (a, x) in row.iter_mut().zip(p) {
                *a += e * *x;
            }
        }
        row.iter_mut().for_each(|a| *a /= m as f64);
    }
    Ok(out)
}
