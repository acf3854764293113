//! Solver for the pulse-area equation of a microwave pulse driving a lossy
//! two-level system,
//!
//! ```text
//!     theta''(tau) = M^2 exp(-lambda*theta/2) sin(theta)
//! ```
//!
//! where `theta` is the accumulated pulse area, `M` the peak Rabi rate and
//! `lambda` the dissipation scale. The equation is solved along the branch
//! that rises out of `theta -> 0`, on which the first integral
//!
//! ```text
//!     theta'(tau) = M sqrt( B(theta) / (1 + lambda^2/4) )
//!     B(theta)    = 2 - exp(-lambda*theta/2) (2 cos(theta) + lambda sin(theta))
//! ```
//!
//! holds exactly. Two independent routes produce the same trajectory:
//! quadrature of the implicit solution `tau(theta)` (and of the carrier
//! phase `phi(theta)`), and direct adaptive Runge-Kutta integration of the
//! second-order equation. Keeping both routes honest against each other is
//! the point of the crate; see `analysis` for the audit machinery.
//!
//! Conventions: time in ns, rates in rad/ns, areas and phases in rad.
//! Every trajectory is anchored so that `tau = 0` and `phi = 0` at
//! `theta = pi`.

pub mod analysis;
pub mod area;
pub mod error;
pub mod interp;
pub mod model;
pub mod ode;
pub mod quad;
pub mod solver;

pub use analysis::{
    build_audit_report, find_envelope_extrema, gamma_audit, measure_asymptotes,
    phase_slope_limit, plateau_envelope_limit, route_difference, soliton_oracle,
    strong_damping_plateau, strong_damping_slope, AsymptoteFit, AuditReport, Extremum,
    ExtremumKind, GammaAudit, SolitonReference, EXTREMA_PLACEMENT_TOL, ROUTE_PHI_TOL,
    ROUTE_THETA_TOL, SOLITON_TOL,
};
pub use area::{area_bracket, area_bracket_deriv, clamp_count, reset_clamp_count, theta_dot};
pub use error::Error;
pub use model::{
    make_params, peak_coupling_freq, Anchor, ModelParams, SolverConfig, Trajectory,
};
pub use solver::{
    integrate_ivp, invert_theta, phi_of_theta, solve_trajectory, tau_of_theta, Method,
};
