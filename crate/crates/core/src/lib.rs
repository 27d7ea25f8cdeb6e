//! Continuous choreographies of the weakly interacting N-body problem.
//!
//! Bodies attract through the pair potential `m_i m_j ‖q_i - q_j‖^-σ`,
//! `0 < σ < 1`. As `N → ∞` with masses `1/N`, simple choreographies become
//! travelling waves `y(s - vt)` of a loop `y` solving
//!
//! ```text
//! v² ÿ(s) = σ PV ∫_0^1 (y(s+t) - y(s)) / ‖y(s+t) - y(s)‖^(2+σ) dt
//! ```
//!
//! The unit circle solves this at `v² = σc/(8π²)` and minimizes the
//! associated action, with value `2π²v²(1 + 2/σ)`.
//!
//! Modules:
//! - [`params`]: `σ`, `c`, `v²`
//! - [`quadrature`]: rules for weights `t^-α` at an endpoint
//! - [`fourier`]: loops as truncated Fourier series
//! - [`continuum`]: the nonlocal operator spectrum and the principal-value force
//! - [`action`]: the action, its relaxations and gradient
//! - [`minimize`]: descent and distance to the circle
//! - [`nbody`]: discrete dynamics and the bridge to the continuum
//! - [`io`]: CSV/JSON records

pub mod action;
pub mod continuum;
pub mod error;
pub mod fourier;
pub mod io;
pub mod minimize;
pub mod nbody;
pub mod params;
pub mod quadrature;
pub mod reduce;

pub use action::{ActionBreakdown, ActionEvaluator, ActionReport, Terms};
pub use continuum::{compute_spectrum, el_residual, pv_force, Spectrum};
pub use error::{Error, Result};
pub use fourier::{FourierLoop, SampledLoop};
pub use minimize::{minimize_action, Init, MinimizeOptions, MinimizeResult, ScanRow};
pub use nbody::{ConvergeRow, NBodyState, Trajectory};
pub use params::{make_params, ModelParams};
pub use quadrature::{QuadratureSpec, Scheme};
