//! Discrete dynamics `m_i q̈_i = -Σ_j σ m_i m_j (q_i - q_j) / ‖q_i - q_j‖^(2+σ)`,
//! the rotating regular polygon, and the bridge to the continuum force.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuum::{pv_force, COLLISION_FLOOR};
use crate::error::{Error, Result};
use crate::fourier::{norm, FourierLoop};
use crate::params::{check_sigma, ModelParams};
use crate::quadrature::QuadratureSpec;
use crate::reduce;

/// Below this many bodies forces are summed on the calling thread.
const PARALLEL_BODIES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NBodyState {
    pub dim: usize,
    pub masses: Vec<f64>,
    /// Row-major, `dim` entries per body.
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    pub time: f64,
}

impl NBodyState {
    /// Equal masses `1/N`.
    pub fn new(dim: usize, positions: Vec<f64>, velocities: Vec<f64>) -> Result<Self> {
        let n = positions.len().checked_div(dim).unwrap_or(0);
        Self::with_masses(dim, vec![1.0 / n.max(1) as f64; n], positions, velocities)
    }

    pub fn with_masses(
        dim: usize,
        masses: Vec<f64>,
        positions: Vec<f64>,
        velocities: Vec<f64>,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::domain(format!(
                "dimension must be at least 2, got {dim}"
            )));
        }
        let n = masses.len();
        if n < 2 {
            return Err(Error::domain(format!("need at least 2 bodies, got {n}")));
        }
        if positions.len() != n * dim || velocities.len() != n * dim {
            return Err(Error::domain(format!(
                "{n} bodies in dimension {dim} need {} coordinates",
                n * dim
            )));
        }
        if masses.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return Err(Error::domain("masses must be positive and finite"));
        }
        Ok(Self {
            dim,
            masses,
            positions,
            velocities,
            time: 0.0,
        })
    }

    pub fn bodies(&self) -> usize {
        self.masses.len()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.velocities[i * self.dim..(i + 1) * self.dim]
    }

    fn weighted_sum(&self, data: &[f64]) -> Vec<f64> {
        let rows: Vec<Vec<f64>> = (0..self.bodies())
            .map(|i| {
                data[i * self.dim..(i + 1) * self.dim]
                    .iter()
                    .map(|x| self.masses[i] * x)
                    .collect()
            })
            .collect();
        reduce::sum_vectors(self.dim, rows.iter().map(|r| r.as_slice()))
    }

    pub fn center_of_mass(&self) -> Vec<f64> {
        let total: f64 = self.masses.iter().sum();
        self.weighted_sum(&self.positions)
            .into_iter()
            .map(|x| x / total)
            .collect()
    }

    pub fn momentum(&self) -> Vec<f64> {
        self.weighted_sum(&self.velocities)
    }

    pub fn kinetic(&self) -> f64 {
        reduce::sum(
            (0..self.bodies()).map(|i| {
                0.5 * self.masses[i] * self.velocity(i).iter().map(|v| v * v).sum::<f64>()
            }),
        )
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn body_acceleration(state: &NBodyState, sigma: f64, i: usize) -> Result<Vec<f64>> {
    let dim = state.dim;
    let qi = state.position(i);
    let mut acc = vec![0.0; dim];
    for j in 0..state.bodies() {
        if j == i {
            continue;
        }
        let qj = state.position(j);
        let r = distance(qi, qj);
        if r < COLLISION_FLOOR {
            let (i, j) = (i.min(j), i.max(j));
            return Err(Error::Collision { i, j, distance: r });
        }
        let f = sigma * state.masses[j] * r.powf(-(2.0 + sigma));
        for d in 0..dim {
            acc[d] -= f * (qi[d] - qj[d]);
        }
    }
    Ok(acc)
}

/// `a_i = -Σ_{j≠i} σ m_j (q_i - q_j) / ‖q_i - q_j‖^(2+σ)`, row-major.
pub fn accelerations(state: &NBodyState, sigma: f64) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    let n = state.bodies();
    let rows: Vec<Vec<f64>> = if n >= PARALLEL_BODIES {
        (0..n)
            .into_par_iter()
            .map(|i| body_acceleration(state, sigma, i))
            .collect::<Result<_>>()?
    } else {
        (0..n)
            .map(|i| body_acceleration(state, sigma, i))
            .collect::<Result<_>>()?
    };
    Ok(rows.concat())
}

/// `U = Σ_{i<j} m_i m_j / ‖q_i - q_j‖^σ`.
pub fn potential(state: &NBodyState, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let n = state.bodies();
    let mut terms = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let r = distance(state.position(i), state.position(j));
            if r < COLLISION_FLOOR {
                return Err(Error::Collision { i, j, distance: r });
            }
            terms.push(state.masses[i] * state.masses[j] * r.powf(-sigma));
        }
    }
    Ok(reduce::sum(terms))
}

/// Conserved energy `K - U`.
pub fn energy(state: &NBodyState, sigma: f64) -> Result<f64> {
    Ok(state.kinetic() - potential(state, sigma)?)
}

/// Lagrangian `K + U`.
pub fn lagrangian(state: &NBodyState, sigma: f64) -> Result<f64> {
    Ok(state.kinetic() + potential(state, sigma)?)
}

/// Angular velocity of the rigidly rotating unit `N`-gon with masses `1/N`:
/// `ω² = σ/(2N) Σ_{j=1}^{N-1} (2 sin(πj/N))^-σ`.
pub fn omega_ngon(n: usize, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if n < 2 {
        return Err(Error::domain(format!("need at least 2 bodies, got {n}")));
    }
    let sum = reduce::sum((1..n).map(|j| (2.0 * (PI * j as f64 / n as f64).sin()).powf(-sigma)));
    Ok((sigma / (2.0 * n as f64) * sum).sqrt())
}

/// Unit `N`-gon rotating counter-clockwise at [`omega_ngon`].
pub fn ngon_state(n: usize, sigma: f64, dim: usize) -> Result<NBodyState> {
    if dim != 2 {
        return Err(Error::domain(format!(
            "the rotating polygon is planar; dimension {dim} is not supported"
        )));
    }
    let omega = omega_ngon(n, sigma)?;
    let mut positions = Vec::with_capacity(2 * n);
    let mut velocities = Vec::with_capacity(2 * n);
    for j in 0..n {
        let (s, c) = (2.0 * PI * j as f64 / n as f64).sin_cos();
        positions.extend([c, s]);
        velocities.extend([-omega * s, omega * c]);
    }
    NBodyState::new(2, positions, velocities)
}

/// One velocity-Verlet step. Negative `dt` integrates backwards.
pub fn step(state: &NBodyState, dt: f64, sigma: f64) -> Result<NBodyState> {
    let acc = accelerations(state, sigma)?;
    step_with(state, &acc, dt, sigma).map(|(s, _)| s)
}

/// Verlet step reusing the accelerations at the start; returns the new state
/// and its accelerations.
fn step_with(
    state: &NBodyState,
    acc: &[f64],
    dt: f64,
    sigma: f64,
) -> Result<(NBodyState, Vec<f64>)> {
    if !(dt.is_finite() && dt != 0.0) {
        return Err(Error::domain(format!(
            "time step must be finite and non-zero, got {dt}"
        )));
    }
    let mut next = state.clone();
    for ((q, v), a) in next.positions.iter_mut().zip(&state.velocities).zip(acc) {
        *q += dt * v + 0.5 * dt * dt * a;
    }
    let acc_next = accelerations(&next, sigma)?;
    for ((v, a0), a1) in next.velocities.iter_mut().zip(acc).zip(&acc_next) {
        *v += 0.5 * dt * (a0 + a1);
    }
    next.time = state.time + dt;
    Ok((next, acc_next))
}

/// Uniformly spaced snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<NBodyState>,
    pub dt: f64,
}

impl Trajectory {
    pub fn span(&self) -> f64 {
        match (self.states.first(), self.states.last()) {
            (Some(a), Some(b)) => b.time - a.time,
            _ => 0.0,
        }
    }

    /// Positions of body `i` at time `t`, linear between snapshots.
    fn interpolate(&self, i: usize, t: f64, out: &mut [f64]) {
        let t0 = self.states[0].time;
        let last = self.states.len() - 1;
        let x = ((t - t0) / self.dt).clamp(0.0, last as f64);
        let lo = (x.floor() as usize).min(last.saturating_sub(1));
        let frac = x - lo as f64;
        let a = self.states[lo].position(i);
        let b = self.states[(lo + 1).min(last)].position(i);
        for d in 0..out.len() {
            out[d] = a[d] + frac * (b[d] - a[d]);
        }
    }
}

/// Integrates `steps` Verlet steps, keeping every `stride`-th state.
pub fn simulate(
    initial: &NBodyState,
    sigma: f64,
    dt: f64,
    steps: usize,
    stride: usize,
) -> Result<Trajectory> {
    if stride == 0 {
        return Err(Error::domain("snapshot stride must be positive"));
    }
    let mut states = vec![initial.clone()];
    let mut state = initial.clone();
    let mut acc = accelerations(&state, sigma)?;
    for n in 1..=steps {
        let (next, acc_next) = step_with(&state, &acc, dt, sigma)?;
        state = next;
        acc = acc_next;
        if n % stride == 0 {
            states.push(state.clone());
        }
    }
    Ok(Trajectory {
        states,
        dt: dt * stride as f64,
    })
}

/// `max_i max_t ‖q_{i+1}(t) - q_i(t + τ)‖` over snapshot times `t` with
/// `t + τ` inside the trajectory.
pub fn choreography_error(traj: &Trajectory, tau: f64) -> Result<f64> {
    if traj.states.len() < 2 || tau.is_nan() || tau <= 0.0 || traj.span() < tau * (1.0 - 1e-12) {
        return Err(Error::domain(format!(
            "trajectory of span {} does not cover a shift of {tau}",
            traj.span()
        )));
    }
    let first = &traj.states[0];
    let (n, dim) = (first.bodies(), first.dim);
    let end = traj.states[traj.states.len() - 1].time;
    let mut shifted = vec![0.0; dim];
    let mut worst: f64 = 0.0;
    for state in &traj.states {
        let t = state.time + tau;
        if t > end + 1e-12 * end.abs().max(1.0) {
            break;
        }
        for i in 0..n {
            traj.interpolate(i, t, &mut shifted);
            worst = worst.max(distance(state.position((i + 1) % n), &shifted));
        }
    }
    Ok(worst)
}

/// Trapezoid value of `∫ (K + U) dt` over a trajectory spanning unit time.
pub fn discrete_action(traj: &Trajectory, sigma: f64) -> Result<f64> {
    if traj.states.len() < 2 || (traj.span() - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!(
            "action is defined on a unit time span, trajectory spans {}",
            traj.span()
        )));
    }
    let values: Vec<f64> = traj
        .states
        .iter()
        .map(|s| {
            lagrangian(s, sigma).map_err(|e| match e {
                Error::Collision { i, j, distance } => Error::InfiniteAction(format!(
                    "bodies {i} and {j} at distance {distance:e} at t = {}",
                    s.time
                )),
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    let last = values.len() - 1;
    let interior = reduce::sum(values[1..last].iter().copied());
    Ok(traj.dt * (interior + 0.5 * (values[0] + values[last])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceComparison {
    pub discrete: Vec<f64>,
    pub continuum: Vec<f64>,
    pub gap: f64,
}

/// Force on the body at `s` when the loop carries `N` equally spaced bodies,
/// against the principal-value force of the continuum.
pub fn discrete_force_vs_pv(
    n: usize,
    params: &ModelParams,
    loop_: &FourierLoop,
    s: f64,
    quad: &QuadratureSpec,
) -> Result<ForceComparison> {
    if n < 2 {
        return Err(Error::domain(format!("need at least 2 bodies, got {n}")));
    }
    let index = s * n as f64;
    if (index - index.round()).abs() > 1e-9 * n as f64 {
        return Err(Error::domain(format!(
            "s = {s} is not on the grid of spacing 1/{n}"
        )));
    }
    let dim = loop_.dim();
    let sigma = params.sigma;
    let ds = 1.0 / n as f64;
    let mut chord = vec![0.0; dim];
    let mut rows = Vec::with_capacity(n - 1);
    for j in 1..n {
        loop_.chord_into(s, j as f64 * ds, &mut chord);
        let r = norm(&chord);
        if r < COLLISION_FLOOR {
            return Err(Error::Collision {
                i: 0,
                j,
                distance: r,
            });
        }
        let f = sigma * ds * r.powf(-(2.0 + sigma));
        rows.push(chord.iter().map(|c| f * c).collect::<Vec<f64>>());
    }
    let discrete = reduce::sum_vectors(dim, rows.iter().map(|r| r.as_slice()));
    let continuum = pv_force(loop_, s, params, quad)?;
    let gap = distance(&discrete, &continuum);
    Ok(ForceComparison {
        discrete,
        continuum,
        gap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergeRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub force_gap: f64,
    pub omega2: f64,
    pub omega2_gap: f64,
}

/// Force gap on the unit circle at `s = 0` and `|ω² - 4π²v²|` for each `N`.
pub fn converge_ladder(
    params: &ModelParams,
    ladder: &[usize],
    quad: &QuadratureSpec,
) -> Result<Vec<ConvergeRow>> {
    let circle = FourierLoop::unit_circle();
    let limit = params.circle_acceleration();
    ladder
        .iter()
        .map(|&n| {
            let gap = discrete_force_vs_pv(n, params, &circle, 0.0, quad)?.gap;
            let omega2 = omega_ngon(n, params.sigma)?.powi(2);
            Ok(ConvergeRow {
                n,
                force_gap: gap,
                omega2,
                omega2_gap: (omega2 - limit).abs(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_body_hand_value() {
        let s = NBodyState::new(2, vec![1.0, 0.0, -1.0, 0.0], vec![0.0; 4]).unwrap();
        let a = accelerations(&s, 0.5).unwrap();
        let expected = -0.5 * 0.5 * 2.0 / 2f64.powf(2.5);
        assert_abs_diff_eq!(a[0], expected, epsilon = 1e-15);
        assert_abs_diff_eq!(a[2], -expected, epsilon = 1e-15);
        assert_abs_diff_eq!(expected, -0.08839, epsilon = 1e-5);
    }

    #[test]
    fn coincident_bodies_report_the_pair() {
        let s = NBodyState::new(2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0], vec![0.0; 6]).unwrap();
        assert!(matches!(
            accelerations(&s, 0.5),
            Err(Error::Collision { i: 0, j: 2, .. })
        ));
    }

    #[test]
    fn square_positions() {
        let s = ngon_state(4, 0.5, 2).unwrap();
        let expected = [1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0];
        for (a, b) in s.positions.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert!(ngon_state(4, 0.5, 3).is_err());
    }

    #[test]
    fn reversibility() {
        let s = ngon_state(6, 0.5, 2).unwrap();
        let there = step(&s, 1e-2, 0.5).unwrap();
        let back = step(&there, -1e-2, 0.5).unwrap();
        for (a, b) in back.positions.iter().zip(&s.positions) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
        for (a, b) in back.velocities.iter().zip(&s.velocities) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_snapshot_is_too_short() {
        let s = ngon_state(3, 0.5, 2).unwrap();
        let t = Trajectory {
            states: vec![s],
            dt: 0.1,
        };
        assert!(matches!(choreography_error(&t, 0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn off_grid_sample_point_rejected() {
        let p = ModelParams::new(0.5).unwrap();
        let r = discrete_force_vs_pv(
            8,
            &p,
            &FourierLoop::unit_circle(),
            0.1,
            &QuadratureSpec::default(),
        );
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}
