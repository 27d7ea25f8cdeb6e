//! Reference values computed without the library's quadrature engine.
#![allow(dead_code)]

use std::f64::consts::PI;

use choreo::FourierLoop;
use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `∫_0^1 (2 sin πt)^-σ dt = Γ(1-σ) / Γ(1-σ/2)²`.
pub fn c_gamma(sigma: f64) -> f64 {
    gamma(1.0 - sigma) / gamma(1.0 - 0.5 * sigma).powi(2)
}

/// Same constant written through the duplication formula.
pub fn c_gamma_duplicated(sigma: f64) -> f64 {
    2f64.powf(-sigma) * gamma(0.5 * (1.0 - sigma)) / (PI.sqrt() * gamma(1.0 - 0.5 * sigma))
}

pub fn v2_gamma(sigma: f64) -> f64 {
    sigma * c_gamma(sigma) / (8.0 * PI * PI)
}

/// `I_j / c` with `I_j = ∫_0^1 (2 sin πs)^-σ cos(2πjs) ds`.
fn cosine_moment_ratio(sigma: f64, j: usize) -> f64 {
    let b = 1.0 - 0.5 * sigma;
    let mut r = 1.0;
    for m in 1..=j {
        r *= -(b - m as f64) / (b + (m - 1) as f64);
    }
    r
}

/// `d_k` from the Fejér expansion `sin²(kx)/sin²(x) = k + 2Σ_{j<k}(k-j)cos(2jx)`.
pub fn d_gamma(sigma: f64, k: usize) -> f64 {
    let mut d = k as f64;
    for j in 1..k {
        d += 2.0 * (k - j) as f64 * cosine_moment_ratio(sigma, j);
    }
    d
}

/// Composite Gauss-Legendre on `[a, b]`.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let rule = GaussLegendre::new(std::num::NonZeroUsize::new(order).unwrap());
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for &(x, w) in rule.as_node_weight_pairs() {
            total += 0.5 * h * w * f(lo + 0.5 * h * (x + 1.0));
        }
    }
    total
}

/// `∫_0^(1/2) t^-σ g(t) dt` after `t = u^(1/(1-σ))`, which absorbs the
/// weight: the integrand becomes `g(t(u)) / (1 - σ)`.
pub fn weighted_by_substitution(g: impl Fn(f64) -> f64, sigma: f64, end: f64) -> f64 {
    let p = 1.0 / (1.0 - sigma);
    let umax = end.powf(1.0 - sigma);
    gauss_legendre(|u| g(u.powf(p)) * p, 0.0, umax, 64, 20)
}

/// `c` by the substitution oracle on both halves.
pub fn c_substitution(sigma: f64) -> f64 {
    let regular = |t: f64| (t / (2.0 * (PI * t).sin())).powf(sigma);
    2.0 * weighted_by_substitution(regular, sigma, 0.5)
}

/// Riemann zeta for `0 < s < 1` through the alternating series (Borwein).
pub fn zeta(s: f64) -> f64 {
    let n = 30usize;
    let d: Vec<f64> = (0..=n)
        .scan(0.0, |acc, i| {
            *acc += (n as f64) * factorial_ratio(n, i) * 4f64.powi(i as i32);
            Some(*acc)
        })
        .collect();
    let mut eta = 0.0;
    for k in 0..n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        eta += sign * (d[k] - d[n]) / ((k + 1) as f64).powf(s);
    }
    eta /= -d[n];
    eta / (1.0 - 2f64.powf(1.0 - s))
}

/// `(n+i-1)! / ((n-i)! (2i)!)`.
fn factorial_ratio(n: usize, i: usize) -> f64 {
    let mut r = 1.0;
    for m in (n - i + 1)..=(n + i - 1) {
        r *= m as f64;
    }
    for m in 1..=(2 * i) {
        r /= m as f64;
    }
    if i == 0 {
        1.0 / n as f64
    } else {
        r
    }
}

/// Random loop with coefficients uniform in `[-1, 1]`, damped by `1/k^decay`.
pub fn random_loop(dim: usize, modes: usize, seed: u64, decay: f64) -> FourierLoop {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut l = FourierLoop::zeros(dim, modes).unwrap();
    for k in 1..=modes {
        let amp = (k as f64).powf(-decay);
        for a in l.mode_mut(k) {
            *a = Complex64::new(
                amp * rng.random_range(-1.0..1.0),
                amp * rng.random_range(-1.0..1.0),
            );
        }
    }
    l
}

/// Random loop that is simple with speed bounded away from zero.
pub fn random_simple_loop(dim: usize, modes: usize, seed: u64) -> FourierLoop {
    for attempt in 0..1000u64 {
        let l = random_loop(
            dim,
            modes,
            seed.wrapping_mul(7919).wrapping_add(attempt),
            2.0,
        );
        let (chord, speed) = l.separation(32 * modes.max(4));
        if chord > 0.05 && speed > 0.2 {
            return l;
        }
    }
    panic!("no simple loop for seed {seed}");
}

/// Rotation by `angle` in the `(i, j)` coordinate plane of R^dim.
pub fn rotation(dim: usize, i: usize, j: usize, angle: f64) -> Vec<f64> {
    let mut m = vec![0.0; dim * dim];
    for k in 0..dim {
        m[k * dim + k] = 1.0;
    }
    let (s, c) = angle.sin_cos();
    m[i * dim + i] = c;
    m[j * dim + j] = c;
    m[i * dim + j] = -s;
    m[j * dim + i] = s;
    m
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
