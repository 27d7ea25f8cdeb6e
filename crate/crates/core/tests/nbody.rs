mod common;

use std::f64::consts::PI;

use approx::assert_relative_eq;
use choreo::nbody::{
    accelerations, choreography_error, converge_ladder, discrete_action, discrete_force_vs_pv,
    energy, ngon_state, omega_ngon, potential, simulate, Trajectory,
};
use choreo::{make_params, FourierLoop, NBodyState, QuadratureSpec};
use common::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(n: usize, dim: usize, seed: u64) -> NBodyState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let v: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let masses: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let total: f64 = masses.iter().sum();
    for d in 0..dim {
        let com = (0..n).map(|i| masses[i] * q[i * dim + d]).sum::<f64>() / total;
        (0..n).for_each(|i| q[i * dim + d] -= com);
    }
    NBodyState::with_masses(dim, masses, q, v).unwrap()
}

fn one_period(n: usize, sigma: f64, steps: usize) -> Trajectory {
    let state = ngon_state(n, sigma, 2).unwrap();
    let period = 2.0 * PI / omega_ngon(n, sigma).unwrap();
    simulate(&state, sigma, period / steps as f64, steps, 1).unwrap()
}

#[test]
fn triangle_frequency() {
    let w2 = omega_ngon(3, 0.5).unwrap().powi(2);
    assert_relative_eq!(w2, 0.5 / 6.0 * 2.0 * 3f64.powf(-0.25), max_relative = 1e-14);
    assert!((w2 - 0.12663).abs() < 1e-5);
}

#[test]
fn polygons_are_relative_equilibria() {
    for n in 3..=64 {
        let s = ngon_state(n, 0.5, 2).unwrap();
        let w2 = omega_ngon(n, 0.5).unwrap().powi(2);
        let a = accelerations(&s, 0.5).unwrap();
        for i in 0..n {
            let q = s.position(i);
            let radial =
                ((a[2 * i] + w2 * q[0]).powi(2) + (a[2 * i + 1] + w2 * q[1]).powi(2)).sqrt();
            assert!(radial < 1e-10, "N {n}, body {i}: {radial:e}");
            let tangential = -a[2 * i] * q[1] + a[2 * i + 1] * q[0];
            assert!(tangential.abs() < 1e-12);
        }
    }
}

#[test]
fn frequency_tends_to_the_continuum_value() {
    let sigma = 0.5;
    let limit = 4.0 * PI * PI * v2_gamma(sigma);
    let values: Vec<f64> = (6..=12)
        .map(|j| omega_ngon(1 << j, sigma).unwrap().powi(2))
        .collect();
    assert!(values.windows(2).all(|w| w[0] < w[1]));
    assert!(values.iter().all(|v| *v < limit));
    assert!((values.last().unwrap() - limit).abs() < 2e-2 * limit);
    // Riemann sum of (2 sin πt)^-σ misses ~ 2ζ(σ) N^(σ-1) (2π)^-σ
    let n = 4096f64;
    let predicted = limit + sigma * zeta(sigma) * n.powf(sigma - 1.0) * (2.0 * PI).powf(-sigma);
    assert_relative_eq!(*values.last().unwrap(), predicted, max_relative = 1e-5);
}

#[test]
fn square_state() {
    let s = ngon_state(4, 0.5, 2).unwrap();
    let w = omega_ngon(4, 0.5).unwrap();
    for i in 0..4 {
        let v = s.velocity(i);
        assert_relative_eq!((v[0] * v[0] + v[1] * v[1]).sqrt(), w, max_relative = 1e-14);
    }
    assert!(s.center_of_mass().iter().all(|x| x.abs() < 1e-15));
    assert!(s.momentum().iter().all(|x| x.abs() < 1e-15));
    let e = energy(&s, 0.5).unwrap();
    assert_relative_eq!(
        e,
        s.kinetic() - potential(&s, 0.5).unwrap(),
        max_relative = 1e-15
    );
}

#[test]
fn pair_forces_cancel() {
    for seed in 0..10 {
        let s = random_state(7, 3, seed);
        let a = accelerations(&s, 0.4).unwrap();
        for d in 0..3 {
            let total: f64 = (0..7).map(|i| s.masses[i] * a[i * 3 + d]).sum();
            assert!(total.abs() < 1e-12, "seed {seed}: {total:e}");
        }
    }
}

#[test]
fn polygon_returns_after_one_period() {
    let traj = one_period(12, 0.5, 4096);
    let (first, last) = (&traj.states[0], traj.states.last().unwrap());
    let back = first
        .positions
        .iter()
        .zip(&last.positions)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(back < 1e-5, "{back:e}");
    let e0 = energy(first, 0.5).unwrap();
    let drift = traj
        .states
        .iter()
        .map(|s| ((energy(s, 0.5).unwrap() - e0) / e0).abs())
        .fold(0.0, f64::max);
    assert!(drift < 1e-7, "{drift:e}");
    for s in &traj.states {
        assert!(s.center_of_mass().iter().all(|x| x.abs() < 1e-10));
        assert!(s.momentum().iter().all(|x| x.abs() < 1e-10));
    }
}

#[test]
fn polygon_is_a_choreography() {
    let n = 5;
    let traj = one_period(n, 0.5, 4096);
    let tau = 2.0 * PI / omega_ngon(n, 0.5).unwrap() / n as f64;
    assert!(choreography_error(&traj, tau).unwrap() < 1e-5);
}

#[test]
fn choreography_error_is_second_order_in_the_step() {
    let n = 5;
    let tau = 2.0 * PI / omega_ngon(n, 0.5).unwrap() / n as f64;
    let coarse = choreography_error(&one_period(n, 0.5, 250), tau).unwrap();
    let fine = choreography_error(&one_period(n, 0.5, 500), tau).unwrap();
    let ratio = coarse / fine;
    assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
}

#[test]
fn perturbed_polygon_is_not_a_choreography() {
    let n = 5;
    let mut state = ngon_state(n, 0.5, 2).unwrap();
    state.positions[0] += 0.1;
    let period = 2.0 * PI / omega_ngon(n, 0.5).unwrap();
    let tau = period / n as f64;
    let traj = simulate(&state, 0.5, period / 1000.0, 400, 1).unwrap();
    assert!(choreography_error(&traj, tau).unwrap() >= 0.05);
}

#[test]
fn static_polygon_action_is_the_potential() {
    let n = 6;
    let mut s = ngon_state(n, 0.5, 2).unwrap();
    s.velocities.iter_mut().for_each(|v| *v = 0.0);
    let mut states = Vec::new();
    for i in 0..=10 {
        let mut si = s.clone();
        si.time = i as f64 / 10.0;
        states.push(si);
    }
    let traj = Trajectory { states, dt: 0.1 };
    let expected: f64 = (1..n)
        .map(|j| (2.0 * (PI * j as f64 / n as f64).sin()).powf(-0.5))
        .sum::<f64>()
        / (2.0 * n as f64);
    assert_relative_eq!(
        discrete_action(&traj, 0.5).unwrap(),
        expected,
        max_relative = 1e-13
    );
}

#[test]
fn polygon_action_tends_to_the_circle_minimum() {
    let sigma = 0.5;
    let p = make_params(sigma).unwrap();
    let mut gaps = Vec::new();
    // at N = 1024 the polygon's short-wavelength instability blows up within the unit span
    for n in [16, 64, 256] {
        let state = ngon_state(n, sigma, 2).unwrap();
        let traj = simulate(&state, sigma, 1.0 / 200.0, 200, 1).unwrap();
        let a = discrete_action(&traj, sigma).unwrap();
        // L = ω²(1/2 + 1/σ) is constant along the motion, so the gap is
        // that of ω², which is ~ σζ(σ) N^(σ-1) (2π)^-σ
        let predicted = (0.5 + 1.0 / sigma)
            * sigma
            * zeta(sigma)
            * (n as f64).powf(sigma - 1.0)
            * (2.0 * PI).powf(-sigma);
        assert_relative_eq!(a - p.predicted_min(), predicted, max_relative = 1e-3);
        gaps.push((a - p.predicted_min()).abs());
    }
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn action_requires_unit_span() {
    let traj = one_period(4, 0.5, 64);
    assert!(discrete_action(&traj, 0.5).is_err());
}

#[test]
fn discrete_force_approaches_the_principal_value() {
    let sigma = 0.5;
    let p = make_params(sigma).unwrap();
    let quad = QuadratureSpec::default();
    let ladder: Vec<usize> = (6..=12).map(|j| 1 << j).collect();
    let rows = converge_ladder(&p, &ladder, &quad).unwrap();
    let gaps: Vec<f64> = rows.iter().map(|r| r.force_gap).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]));
    let n: Vec<f64> = ladder.iter().map(|&n| n as f64).collect();
    let slope = log_log_slope(&n, &gaps);
    assert!((slope + (1.0 - sigma)).abs() < 0.15, "slope {slope}");
    let coarse = discrete_force_vs_pv(2, &p, &FourierLoop::unit_circle(), 0.0, &quad).unwrap();
    assert!(coarse.gap.is_finite() && coarse.gap > gaps[0]);
}

#[test]
fn discrete_force_on_a_general_loop() {
    let p = make_params(0.5).unwrap();
    let quad = QuadratureSpec::default();
    let l = random_simple_loop(2, 3, 1);
    let gaps: Vec<f64> = [64, 256, 1024]
        .iter()
        .map(|&n| discrete_force_vs_pv(n, &p, &l, 0.25, &quad).unwrap().gap)
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
}
