mod common;

use std::f64::consts::PI;

use approx::assert_relative_eq;
use choreo::action::{
    action, action_gradient, chord_power_mean, holder_phi, kinetic_gap, mu_xi_inner,
    ActionEvaluator, ActionReport, Terms,
};
use choreo::continuum::el_residual_field;
use choreo::fourier::{fit_fourier, SampledLoop};
use choreo::{compute_spectrum, make_params, FourierLoop, QuadratureSpec};
use common::*;
use num_complex::Complex64;

/// `(1/2)(1/M) Σ_i [(1/M) Σ_{j≠i} ‖y_i - y_j‖^-σ - 2ζ(σ) M^(σ-1) ‖ẏ_i‖^-σ]`.
///
/// Skipping the diagonal undercounts the `|t|^-σ` singularity by
/// `-2ζ(σ) h^(1-σ) ‖ẏ‖^-σ` to leading order, which is added back.
fn naive_potential(l: &FourierLoop, sigma: f64, m: usize) -> f64 {
    let points: Vec<Vec<f64>> = (0..m).map(|i| l.position(i as f64 / m as f64)).collect();
    let z = zeta(sigma);
    let mut total = 0.0;
    for i in 0..m {
        let mut row = 0.0;
        for j in 0..m {
            if i != j {
                let r: f64 = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                row += r.powf(-sigma);
            }
        }
        let speed = l
            .velocity(i as f64 / m as f64)
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        total += row / m as f64 - 2.0 * z * (m as f64).powf(sigma - 1.0) * speed.powf(-sigma);
    }
    0.5 * total / m as f64
}

#[test]
fn zeta_oracle_reference_values() {
    assert_relative_eq!(zeta(0.5), -1.4603545088095868, max_relative = 1e-12);
    assert_relative_eq!(zeta(0.25), -0.8132784052618224, max_relative = 1e-12);
}

#[test]
fn circle_breakdown_matches_oracle() {
    for sigma in [0.25, 0.5, 0.75] {
        let p = make_params(sigma).unwrap();
        let b = action(&FourierLoop::unit_circle(), &p, 512).unwrap();
        let v2 = v2_gamma(sigma);
        assert_relative_eq!(b.kinetic, 2.0 * PI * PI * v2, max_relative = 1e-10);
        assert_relative_eq!(b.potential, 0.5 * c_gamma(sigma), max_relative = 1e-10);
        assert_relative_eq!(
            b.total,
            2.0 * PI * PI * v2 * (1.0 + 2.0 / sigma),
            max_relative = 1e-10
        );
    }
    let p = make_params(0.5).unwrap();
    let b = action(&FourierLoop::unit_circle(), &p, 512).unwrap();
    assert!((b.kinetic - 0.147543).abs() < 1e-6);
    assert!((b.potential - 0.59017).abs() < 1e-5);
}

#[test]
fn homogeneity_under_scaling() {
    let sigma = 0.5;
    let p = make_params(sigma).unwrap();
    let a = action(&FourierLoop::unit_circle(), &p, 256).unwrap();
    let b = action(&FourierLoop::unit_circle().scaled(2.0), &p, 256).unwrap();
    assert_relative_eq!(b.kinetic, 4.0 * a.kinetic, max_relative = 1e-13);
    assert_relative_eq!(
        b.potential,
        2f64.powf(-sigma) * a.potential,
        max_relative = 1e-12
    );
}

#[test]
fn potential_matches_corrected_pair_sum() {
    for seed in 0..3 {
        let sigma = 0.5;
        let p = make_params(sigma).unwrap();
        let l = random_simple_loop(2, 3, seed);
        let b = action(&l, &p, 512).unwrap();
        let naive = naive_potential(&l, sigma, 512);
        assert_relative_eq!(b.potential, naive, max_relative = 1e-4);
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let p = make_params(0.5).unwrap();
    for seed in 0..3 {
        let l = random_simple_loop(2, 4, 10 + seed);
        let ev = ActionEvaluator::new(&p, 2, 4, 256).unwrap();
        let g = ev.gradient(&l, Terms::All).unwrap().to_real_vec();
        let x = l.to_real_vec();
        let scale = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let h = 1e-5;
        for i in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fp = ev
                .breakdown(&FourierLoop::from_real_vec(2, 4, &xp).unwrap())
                .unwrap()
                .total;
            let fm = ev
                .breakdown(&FourierLoop::from_real_vec(2, 4, &xm).unwrap())
                .unwrap()
                .total;
            let fd = (fp - fm) / (2.0 * h);
            assert!(
                (fd - g[i]).abs() < 1e-5 * scale,
                "seed {seed}, coordinate {i}: {fd} vs {}",
                g[i]
            );
        }
    }
}

#[test]
fn kinetic_gradient_is_exact() {
    let p = make_params(0.5).unwrap();
    let l = random_loop(3, 5, 4, 1.0);
    let ev = ActionEvaluator::new(&p, 3, 5, 64).unwrap();
    let g = ev.gradient(&l, Terms::KineticOnly).unwrap();
    for k in 1..=5 {
        let f = 2.0 * p.v2 * (2.0 * PI * k as f64).powi(2);
        for (a, b) in g.mode(k).iter().zip(l.mode(k)) {
            assert!((a - b * f).norm() <= 1e-15 * (b * f).norm());
        }
    }
}

#[test]
fn circle_is_critical() {
    let p = make_params(0.5).unwrap();
    let g = action_gradient(&FourierLoop::unit_circle().with_modes(4).unwrap(), &p, 256).unwrap();
    assert!(g.coefficient_norm() < 1e-5);
}

#[test]
fn gradient_is_the_projected_euler_lagrange_field() {
    let p = make_params(0.5).unwrap();
    let quad = QuadratureSpec::default();
    for seed in 0..4 {
        let l = random_simple_loop(2, 4, 20 + seed);
        let g = action_gradient(&l, &p, 512).unwrap();
        let field = el_residual_field(&l, &p, &quad, 512).unwrap();
        let samples = SampledLoop::new(2, field.concat()).unwrap();
        // L² gradient is -(v²ÿ - F); its coefficients enter twice
        let projected = fit_fourier(&samples, 4).unwrap().scaled(-2.0);
        let cosine = g.coefficient_dot(&projected).unwrap()
            / (g.coefficient_norm() * projected.coefficient_norm());
        assert!(cosine > 0.999, "seed {seed}: cosine {cosine}");
    }
}

#[test]
fn mu_xi_examples() {
    let p = make_params(0.5).unwrap();
    let sp = compute_spectrum(&p, 6, &QuadratureSpec::default()).unwrap();
    let circle = FourierLoop::unit_circle();
    assert_relative_eq!(
        mu_xi_inner(&circle, &sp, &p).unwrap(),
        1.0,
        max_relative = 1e-12
    );
    assert_eq!(
        mu_xi_inner(&FourierLoop::zeros(2, 3).unwrap(), &sp, &p).unwrap(),
        0.0
    );
    let l = random_loop(2, 6, 1, 1.0);
    let base = mu_xi_inner(&l, &sp, &p).unwrap();
    assert_relative_eq!(
        mu_xi_inner(&l.scaled(1.5), &sp, &p).unwrap(),
        2.25 * base,
        max_relative = 1e-12
    );
}

#[test]
fn kinetic_gap_examples() {
    let p = make_params(0.5).unwrap();
    let sp = compute_spectrum(&p, 2, &QuadratureSpec::default()).unwrap();
    assert!(kinetic_gap(&FourierLoop::unit_circle(), &sp).unwrap().abs() < 1e-8);
    let mut pure = FourierLoop::zeros(2, 2).unwrap();
    pure.mode_mut(2)[0] = Complex64::new(1.0, 0.0);
    let gap = kinetic_gap(&pure, &sp).unwrap();
    let expected = 2.0 * (16.0 * PI * PI - 4.0 * PI * PI * d_gamma(0.5, 2));
    assert_relative_eq!(gap, expected, max_relative = 1e-9);
    assert!((gap - 105.3).abs() < 0.05);
}

#[test]
fn holder_equality_case() {
    for sigma in [0.25, 0.5, 0.75] {
        let p = make_params(sigma).unwrap();
        let quad = QuadratureSpec::for_sigma(sigma);
        let hat = |t: f64| 4.0 * (PI * t).sin().powi(2);
        let value = holder_phi(hat, &p, 0.5 * sigma, &quad).unwrap();
        assert_relative_eq!(value, c_gamma(sigma), max_relative = 1e-8);
        let doubled = holder_phi(|t| 2.0 * hat(t), &p, 0.5 * sigma, &quad).unwrap();
        assert_relative_eq!(doubled, value, max_relative = 1e-12);
        let bumped = holder_phi(
            |t| hat(t) * (1.0 + 0.3 * (2.0 * PI * t).sin().powi(2)),
            &p,
            0.5 * sigma,
            &quad,
        )
        .unwrap();
        assert!(bumped > value * (1.0 + 1e-6));
    }
}

#[test]
fn jensen_equality_on_the_circle() {
    let sigma = 0.5;
    let c = FourierLoop::unit_circle();
    for t in [0.05, 0.3, 0.5, 0.8] {
        let mean = chord_power_mean(&c, t, sigma, 64);
        assert_relative_eq!(mean, c.xi(t).powf(-0.5 * sigma), max_relative = 1e-8);
    }
}

#[test]
fn bar_is_the_shell_profile() {
    let p = make_params(0.5).unwrap();
    let l = random_simple_loop(2, 4, 2);
    let b = action(&l, &p, 256).unwrap();
    assert_relative_eq!(
        b.bar,
        2.0 * PI * PI * p.v2 * p.shell_profile(b.mu_xi),
        max_relative = 1e-14
    );
}

#[test]
fn report_serializes_all_fields() {
    let p = make_params(0.5).unwrap();
    let b = action(&FourierLoop::unit_circle(), &p, 64).unwrap();
    let report = ActionReport {
        sigma: 0.5,
        modes: 1,
        grid: 64,
        breakdown: b,
    };
    let v: serde_json::Value = serde_json::to_value(report).unwrap();
    for key in [
        "kinetic",
        "potential",
        "total",
        "tilde",
        "bar",
        "mu_xi",
        "sigma",
        "K",
        "M",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}
