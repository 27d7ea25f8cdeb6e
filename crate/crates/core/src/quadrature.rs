//! Quadrature for integrands with integrable algebraic endpoint singularities.
//!
//! Every singular integral in this crate reduces to the form
//! `∫_0^L t^(-α) g(t) dt` with `g` smooth and `0 <= α < 1`, possibly glued to
//! a smooth remainder on `[L, b]`. [`WeightedRule`] handles the singular piece
//! with one of two schemes:
//!
//! * Gauss-Jacobi with weight `(1 + x)^(-α)`: spectral convergence in the node
//!   count when `g` is analytic.
//! * Midpoint rule on a graded mesh `x_j = L (j/n)^q`: second order
//!   (error ratio 4 under node doubling) once `q >= 2 / (1 - α)`.
//!
//! [`WindowedRule`] pairs a weighted rule on the window `[0, h]` with a
//! composite Gauss-Legendre rule on `[h, b]`.

use std::num::NonZeroUsize;

use gauss_quad::{FiniteAboveNegOneF64, GaussJacobi, GaussLegendre};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Order of each Gauss-Legendre panel used on smooth subintervals.
pub const PANEL_ORDER: usize = 16;

/// Minimum node count accepted by [`QuadratureSpec`].
pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    GaussJacobi,
    GradedMidpoint,
}

/// How endpoint-singular pieces are integrated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    /// Nodes of the weighted rule on each singular window.
    pub nodes: usize,
    /// Mesh grading exponent `q`; only used by [`Scheme::GradedMidpoint`].
    pub grading: f64,
}

impl QuadratureSpec {
    pub fn new(scheme: Scheme, nodes: usize, grading: f64) -> Result<Self> {
        if nodes < MIN_NODES {
            return Err(Error::domain(format!(
                "quadrature needs at least {MIN_NODES} nodes, got {nodes}"
            )));
        }
        if !(grading >= 1.0 && grading.is_finite()) {
            return Err(Error::domain(format!(
                "grading exponent must be >= 1, got {grading}"
            )));
        }
        Ok(Self {
            scheme,
            nodes,
            grading,
        })
    }

    pub fn gauss_jacobi(nodes: usize) -> Result<Self> {
        Self::new(Scheme::GaussJacobi, nodes, 1.0)
    }

    pub fn graded_midpoint(nodes: usize, grading: f64) -> Result<Self> {
        Self::new(Scheme::GradedMidpoint, nodes, grading)
    }

    /// Default Gauss-Jacobi rule, carrying the grading `2/(1-σ)` that the
    /// graded fallback would need for the same σ.
    pub fn for_sigma(sigma: f64) -> Self {
        Self {
            scheme: Scheme::GaussJacobi,
            nodes: 32,
            grading: (2.0 / (1.0 - sigma)).max(1.0),
        }
    }

    /// Same scheme with `factor` times as many nodes.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            nodes: self.nodes * factor.max(1),
            ..*self
        }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::for_sigma(0.5)
    }
}

/// Nodes and weights for `∫_0^L t^(-α) g(t) dt ≈ Σ w_i g(t_i)`.
///
/// The weights already contain the factor `t^(-α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedRule {
    pub alpha: f64,
    pub length: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WeightedRule {
    pub fn new(spec: &QuadratureSpec, alpha: f64, length: f64) -> Result<Self> {
        check_exponent(alpha)?;
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::domain(format!(
                "window length must be positive, got {length}"
            )));
        }
        let (nodes, weights) = match spec.scheme {
            Scheme::GaussJacobi => gauss_jacobi_left(spec.nodes, alpha, length)?,
            Scheme::GradedMidpoint => graded_midpoint_left(spec.nodes, spec.grading, alpha, length),
        };
        Ok(Self {
            alpha,
            length,
            nodes,
            weights,
        })
    }

    pub fn integrate(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        crate::reduce::sum(
            self.nodes
                .iter()
                .zip(&self.weights)
                .map(|(&t, &w)| w * g(t)),
        )
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

fn check_exponent(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::domain(format!(
            "singularity exponent must be in [0, 1), got {alpha}"
        )));
    }
    if alpha >= 1.0 {
        return Err(Error::Quadrature(format!(
            "endpoint singularity t^-{alpha} is not integrable"
        )));
    }
    Ok(())
}

fn gauss_jacobi_left(n: usize, alpha: f64, length: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let deg = NonZeroUsize::new(n).ok_or_else(|| Error::domain("zero quadrature nodes"))?;
    let a = FiniteAboveNegOneF64::new(0.0).expect("0 is a valid Jacobi exponent");
    let b = FiniteAboveNegOneF64::new(-alpha)
        .ok_or_else(|| Error::domain(format!("invalid Jacobi exponent {}", -alpha)))?;
    let rule = GaussJacobi::new(deg, a, b);
    // t = L (1 + x) / 2, so t^-α dt = (L/2)^(1-α) (1 + x)^-α dx.
    let scale = (0.5 * length).powf(1.0 - alpha);
    let mut pairs: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * length * (1.0 + x), w * scale))
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(pairs.into_iter().unzip())
}

fn graded_midpoint_left(n: usize, grading: f64, alpha: f64, length: f64) -> (Vec<f64>, Vec<f64>) {
    let mesh = |j: usize| length * (j as f64 / n as f64).powf(grading);
    (0..n)
        .map(|j| {
            let (lo, hi) = (mesh(j), mesh(j + 1));
            let mid = 0.5 * (lo + hi);
            (mid, (hi - lo) * mid.powf(-alpha))
        })
        .unzip()
}

/// Composite Gauss-Legendre rule with `panels` equal panels on `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SmoothRule {
    pub fn composite(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let panels = panels.max(1);
        let base = GaussLegendre::new(NonZeroUsize::new(order.max(1)).expect("order >= 1"));
        let width = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let lo = a + width * p as f64;
            for &(x, w) in base.as_node_weight_pairs() {
                nodes.push(lo + 0.5 * width * (1.0 + x));
                weights.push(0.5 * width * w);
            }
        }
        Self { nodes, weights }
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        crate::reduce::sum(
            self.nodes
                .iter()
                .zip(&self.weights)
                .map(|(&t, &w)| w * f(t)),
        )
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// A weighted rule on `[0, window]` glued to a composite smooth rule on
/// `[window, far_end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedRule {
    pub window: f64,
    pub near: WeightedRule,
    pub far: SmoothRule,
}

impl WindowedRule {
    pub fn new(
        spec: &QuadratureSpec,
        alpha: f64,
        window: f64,
        far_end: f64,
        panels: usize,
    ) -> Result<Self> {
        if !(window > 0.0 && window < far_end) {
            return Err(Error::domain(format!(
                "window {window} must lie inside (0, {far_end})"
            )));
        }
        Ok(Self {
            window,
            near: WeightedRule::new(spec, alpha, window)?,
            far: SmoothRule::composite(window, far_end, panels, PANEL_ORDER),
        })
    }

    /// `∫_0^b f` where `regular(t) = t^α f(t)` on the window and `plain = f`
    /// beyond it.
    pub fn integrate(&self, regular: impl FnMut(f64) -> f64, plain: impl FnMut(f64) -> f64) -> f64 {
        self.near.integrate(regular) + self.far.integrate(plain)
    }
}

/// Algebraic endpoint behaviour of an integrand on `(0, 1)`:
/// `f(s) ~ s^-left` at 0 and `f(s) ~ (1 - s)^-right` at 1. Zero means regular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointExponents {
    pub left: f64,
    pub right: f64,
}

impl EndpointExponents {
    pub fn both(alpha: f64) -> Self {
        Self {
            left: alpha,
            right: alpha,
        }
    }

    pub fn left(alpha: f64) -> Self {
        Self {
            left: alpha,
            right: 0.0,
        }
    }

    pub fn right(alpha: f64) -> Self {
        Self {
            left: 0.0,
            right: alpha,
        }
    }

    pub fn none() -> Self {
        Self {
            left: 0.0,
            right: 0.0,
        }
    }
}

/// Integrates `f` over `(0, 1)` given its endpoint singularity exponents.
///
/// The interval is split at 1/2 and each half is integrated with a weighted
/// rule at its singular end. The integral is evaluated at `n`, `2n` and `4n`
/// nodes; if the successive differences neither fall below round-off nor
/// contract, the singularity is reported as non-integrable.
pub fn singular_integral(
    f: impl Fn(f64) -> f64,
    exponents: EndpointExponents,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_exponent(exponents.left)?;
    check_exponent(exponents.right)?;
    let estimates = [1, 2, 4]
        .into_iter()
        .map(|factor| split_integral(&f, exponents, &quad.refined(factor)))
        .collect::<Result<Vec<_>>>()?;
    let (coarse, mid, fine) = (estimates[0], estimates[1], estimates[2]);
    if !fine.is_finite() {
        return Err(Error::Quadrature(format!("integral evaluated to {fine}")));
    }
    let tol = 1e-12 * fine.abs().max(1.0);
    let last = (fine - mid).abs();
    let previous = (mid - coarse).abs();
    if last <= tol || last <= 0.6 * previous {
        Ok(fine)
    } else {
        Err(Error::Quadrature(format!(
            "no convergence under refinement: successive differences {previous:e} then {last:e}"
        )))
    }
}

fn split_integral(
    f: &impl Fn(f64) -> f64,
    exponents: EndpointExponents,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let left = WeightedRule::new(quad, exponents.left, 0.5)?;
    let right = WeightedRule::new(quad, exponents.right, 0.5)?;
    let a = exponents.left;
    let b = exponents.right;
    Ok(left.integrate(|t| f(t) * t.powf(a)) + right.integrate(|t| f(1.0 - t) * t.powf(b)))
}
