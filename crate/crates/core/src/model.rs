//! Physical parameters, solver configuration and the solved trajectory.

use crate::error::Error;
use crate::interp;

/// Full turn in radians; the area equation's period.
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Physical parameters of the driven two-level system.
///
/// All rates are per nanosecond, so `m = 2.0` means a peak Rabi rate of
/// 2 rad/ns (a characteristic time of 0.5 ns).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Peak Rabi rate M, 1/ns. Sets the time scale of the pulse.
    m: f64,
    /// Dimensionless dissipation scale lambda >= 0. Zero recovers the
    /// lossless self-induced-transparency limit.
    lambda: f64,
    /// Dipole coupling mu multiplying the envelope; envelope = theta_dot/mu.
    mu: f64,
    /// Qubit transition frequency, rad/ns. Not used by the reduced area
    /// dynamics; recorded for unit bookkeeping. Default 2*pi*5 (a 5 GHz
    /// splitting).
    omega_z: f64,
}

impl ModelParams {
    /// Rate constructor used by tests that want to set M directly.
    pub fn from_rate(m: f64, lambda: f64) -> Result<Self, Error> {
        if !m.is_finite() || m <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "m",
                value: m,
                reason: "peak Rabi rate must be finite and positive",
            });
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: lambda,
                reason: "dissipation scale must be finite and non-negative",
            });
        }
        Ok(ModelParams {
            m,
            lambda,
            mu: 1.0,
            omega_z: TWO_PI * 5.0,
        })
    }

    /// Replace the dipole coupling (default 1).
    pub fn with_mu(mut self, mu: f64) -> Result<Self, Error> {
        if !mu.is_finite() || mu <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "mu",
                value: mu,
                reason: "dipole coupling must be finite and positive",
            });
        }
        self.mu = mu;
        Ok(self)
    }

    /// Replace the recorded transition frequency (rad/ns).
    pub fn with_omega_z(mut self, omega_z: f64) -> Result<Self, Error> {
        if !omega_z.is_finite() || omega_z <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "omega_z",
                value: omega_z,
                reason: "transition frequency must be finite and positive",
            });
        }
        self.omega_z = omega_z;
        Ok(self)
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn omega_z(&self) -> f64 {
        self.omega_z
    }

    /// Characteristic time 1/M in ns; returns the duration passed to
    /// [`make_params`] to machine precision.
    pub fn m_inv_ns(&self) -> f64 {
        1.0 / self.m
    }

    /// Peak Rabi frequency 2M/(2 pi) in GHz; see [`peak_coupling_freq`].
    pub fn peak_coupling_freq_ghz(&self) -> f64 {
        peak_coupling_freq(self)
    }
}

/// Build model parameters from the characteristic time `m_inv_ns` (ns) and
/// the dissipation scale `lambda`. The Rabi rate is `M = 1/m_inv_ns`; the
/// dipole coupling defaults to 1.
pub fn make_params(m_inv_ns: f64, lambda: f64) -> Result<ModelParams, Error> {
    if !m_inv_ns.is_finite() || m_inv_ns <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "m_inv_ns",
            value: m_inv_ns,
            reason: "characteristic time must be finite and positive",
        });
    }
    ModelParams::from_rate(1.0 / m_inv_ns, lambda)
}

/// Peak coupling frequency mu*E_peak/(2 pi) in GHz. The envelope peaks at
/// 2M/mu, so the peak coupling is 2M/(2 pi) regardless of mu; with
/// M = 2 1/ns this is 0.6366 GHz.
pub fn peak_coupling_freq(params: &ModelParams) -> f64 {
    2.0 * params.m / TWO_PI
}

/// Anchoring convention for the time and phase origin.
///
/// Only one convention is defined: `tau = 0` and `phi = 0` where the area
/// passes `theta = pi`. Fixing it for every lambda makes trajectories with
/// different dissipation directly comparable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Anchor {
    #[default]
    ThetaPi,
}

/// Numerical controls for both solver routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Lower area cutoff, rad. The branch leaves theta = 0 only
    /// asymptotically, so the grid starts slightly above it.
    pub theta_min: f64,
    /// Upper end of the area grid, rad.
    pub theta_max: f64,
    /// Number of rows in the resampled uniform-tau output.
    pub n_grid: usize,
    /// Absolute tolerance for quadrature panels and integrator steps.
    pub abs_tol: f64,
    /// Relative tolerance for quadrature panels and integrator steps.
    pub rel_tol: f64,
    /// Origin convention; see [`Anchor`].
    pub anchor: Anchor,
}

impl SolverConfig {
    /// Default configuration for the given dissipation scale. The undamped
    /// equation approaches 2 pi only asymptotically, so its grid stops just
    /// short of it; damped runs continue to 6 pi to expose the asymptotic
    /// plateau.
    pub fn for_lambda(lambda: f64) -> Self {
        let theta_max = if lambda == 0.0 {
            TWO_PI - 1e-3
        } else {
            3.0 * TWO_PI
        };
        SolverConfig {
            theta_min: 1e-3,
            theta_max,
            n_grid: 1001,
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            anchor: Anchor::ThetaPi,
        }
    }

    /// Check the structural invariants that do not depend on lambda:
    /// `0 < theta_min < pi < theta_max`, tolerances in (0, 1), and at least
    /// two output rows.
    pub fn validate(&self) -> Result<(), Error> {
        let pi = std::f64::consts::PI;
        if !self.theta_min.is_finite() || self.theta_min <= 0.0 || self.theta_min >= pi {
            return Err(Error::InvalidParameter {
                name: "theta_min",
                value: self.theta_min,
                reason: "lower cutoff must lie in (0, pi)",
            });
        }
        if !self.theta_max.is_finite() || self.theta_max <= pi {
            return Err(Error::InvalidParameter {
                name: "theta_max",
                value: self.theta_max,
                reason: "upper bound must be finite and exceed pi",
            });
        }
        if self.n_grid < 2 {
            return Err(Error::InvalidParameter {
                name: "n_grid",
                value: self.n_grid as f64,
                reason: "need at least two output rows",
            });
        }
        for (name, value) in [("abs_tol", self.abs_tol), ("rel_tol", self.rel_tol)] {
            if !value.is_finite() || value <= 0.0 || value >= 1.0 {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "tolerance must lie in (0, 1)",
                });
            }
        }
        Ok(())
    }
}

/// A solved, anchored trajectory on a uniform tau grid.
///
/// All arrays have the same length (>= 2). `theta` is strictly increasing,
/// `theta_dot` is non-negative, `envelope[i]` is exactly
/// `theta_dot[i]/mu`, and `phi` is non-decreasing (identically zero when
/// `lambda = 0`).
#[derive(Debug, Clone)]
pub struct Trajectory {
    tau: Vec<f64>,
    theta: Vec<f64>,
    theta_dot: Vec<f64>,
    envelope: Vec<f64>,
    phi: Vec<f64>,
    params: ModelParams,
    config: SolverConfig,
}

impl Trajectory {
    /// Assemble and validate a trajectory. `envelope` is derived here from
    /// `theta_dot` and `mu` so the exact-quotient invariant holds by
    /// construction.
    pub fn new(
        params: ModelParams,
        config: SolverConfig,
        tau: Vec<f64>,
        theta: Vec<f64>,
        theta_dot: Vec<f64>,
        phi: Vec<f64>,
    ) -> Result<Self, Error> {
        let n = tau.len();
        if n < 2 {
            return Err(Error::InvalidTrajectory(format!(
                "need at least two samples, got {n}"
            )));
        }
        if theta.len() != n || theta_dot.len() != n || phi.len() != n {
            return Err(Error::InvalidTrajectory(format!(
                "array lengths differ: tau {n}, theta {}, theta_dot {}, phi {}",
                theta.len(),
                theta_dot.len(),
                phi.len()
            )));
        }
        for (name, arr) in [
            ("tau", &tau),
            ("theta", &theta),
            ("theta_dot", &theta_dot),
            ("phi", &phi),
        ] {
            if arr.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidTrajectory(format!(
                    "non-finite value in {name}"
                )));
            }
        }
        for i in 1..n {
            if tau[i] <= tau[i - 1] {
                return Err(Error::InvalidTrajectory(format!(
                    "tau not strictly increasing at index {i}"
                )));
            }
            if theta[i] <= theta[i - 1] {
                return Err(Error::InvalidTrajectory(format!(
                    "theta not strictly increasing at index {i}"
                )));
            }
        }
        if let Some(i) = theta_dot.iter().position(|&v| v < 0.0) {
            return Err(Error::InvalidTrajectory(format!(
                "negative theta_dot at index {i}"
            )));
        }
        if params.lambda() == 0.0 {
            if let Some(i) = phi.iter().position(|&v| v != 0.0) {
                return Err(Error::InvalidTrajectory(format!(
                    "phi must vanish identically without dissipation; phi[{i}] = {:e}",
                    phi[i]
                )));
            }
        } else if let Some(i) = (1..n).find(|&i| phi[i] < phi[i - 1]) {
            return Err(Error::InvalidTrajectory(format!(
                "phi decreases at index {i}"
            )));
        }
        let envelope = theta_dot.iter().map(|&v| v / params.mu()).collect();
        Ok(Trajectory {
            tau,
            theta,
            theta_dot,
            envelope,
            phi,
            params,
            config,
        })
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_dot(&self) -> &[f64] {
        &self.theta_dot
    }

    pub fn envelope(&self) -> &[f64] {
        &self.envelope
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// First and last stored tau, ns.
    pub fn tau_range(&self) -> (f64, f64) {
        (self.tau[0], *self.tau.last().unwrap())
    }

    /// Area at an arbitrary tau inside the stored range, by monotone cubic
    /// interpolation with the stored rates as slopes. Exact at grid nodes.
    pub fn theta_at(&self, tau: f64) -> Result<f64, Error> {
        let i = interp::locate(&self.tau, tau)?;
        if tau == self.tau[i] {
            return Ok(self.theta[i]);
        }
        if tau == self.tau[i + 1] {
            return Ok(self.theta[i + 1]);
        }
        let h = self.tau[i + 1] - self.tau[i];
        let delta = (self.theta[i + 1] - self.theta[i]) / h;
        let (m0, m1) = interp::monotone_slopes(delta, self.theta_dot[i], self.theta_dot[i + 1]);
        Ok(interp::hermite_value(
            self.tau[i],
            h,
            self.theta[i],
            self.theta[i + 1],
            m0,
            m1,
            tau,
        ))
    }

    /// Rate at an arbitrary tau, interpolating the stored rates with the
    /// acceleration as slopes.
    pub fn theta_dot_at(&self, tau: f64) -> Result<f64, Error> {
        let i = interp::locate(&self.tau, tau)?;
        if tau == self.tau[i] {
            return Ok(self.theta_dot[i]);
        }
        if tau == self.tau[i + 1] {
            return Ok(self.theta_dot[i + 1]);
        }
        let h = self.tau[i + 1] - self.tau[i];
        Ok(interp::hermite_value(
            self.tau[i],
            h,
            self.theta_dot[i],
            self.theta_dot[i + 1],
            self.accel(i),
            self.accel(i + 1),
            tau,
        ))
    }

    /// Envelope at an arbitrary tau, in the same units as M/mu.
    pub fn envelope_at(&self, tau: f64) -> Result<f64, Error> {
        Ok(self.theta_dot_at(tau)? / self.params.mu())
    }

    /// Carrier phase at an arbitrary tau, monotone interpolation with the
    /// exact phase rate as slopes.
    pub fn phi_at(&self, tau: f64) -> Result<f64, Error> {
        let i = interp::locate(&self.tau, tau)?;
        if tau == self.tau[i] {
            return Ok(self.phi[i]);
        }
        if tau == self.tau[i + 1] {
            return Ok(self.phi[i + 1]);
        }
        let h = self.tau[i + 1] - self.tau[i];
        let delta = (self.phi[i + 1] - self.phi[i]) / h;
        let (m0, m1) = interp::monotone_slopes(delta, self.phi_rate(i), self.phi_rate(i + 1));
        Ok(interp::hermite_value(
            self.tau[i],
            h,
            self.phi[i],
            self.phi[i + 1],
            m0,
            m1,
            tau,
        ))
    }

    /// theta'' at sample i from the area equation itself.
    fn accel(&self, i: usize) -> f64 {
        let p = &self.params;
        let th = self.theta[i];
        p.m() * p.m() * (-0.5 * p.lambda() * th).exp() * th.sin()
    }

    /// dphi/dtau at sample i; zero without dissipation.
    fn phi_rate(&self, i: usize) -> f64 {
        let p = &self.params;
        if p.lambda() == 0.0 || self.theta_dot[i] == 0.0 {
            return 0.0;
        }
        let m2 = p.m() * p.m();
        m2 * (-(-p.lambda() * self.theta[i]).exp_m1()) / self.theta_dot[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_send_sync<T: Send + Sync>() {}

    #[test]
    fn types_are_shareable() {
        assert_send_sync::<ModelParams>();
        assert_send_sync::<SolverConfig>();
        assert_send_sync::<Trajectory>();
    }

    #[test]
    fn make_params_inverts_duration() {
        let p = make_params(0.5, 0.0).unwrap();
        assert_eq!(p.m(), 2.0);
        assert_eq!(p.m_inv_ns(), 0.5);
        assert_eq!(p.mu(), 1.0);
        assert!((p.omega_z() - TWO_PI * 5.0).abs() < 1e-15);

        // Round trip stays at machine precision for an awkward duration too.
        let q = make_params(0.3, 1.0).unwrap();
        assert!((q.m_inv_ns() - 0.3).abs() <= 1e-15 * 0.3);
    }

    #[test]
    fn make_params_rejects_bad_input() {
        assert!(make_params(0.0, 0.0).is_err());
        assert!(make_params(-1.0, 0.0).is_err());
        assert!(make_params(f64::NAN, 0.0).is_err());
        assert!(make_params(f64::INFINITY, 0.0).is_err());
        assert!(make_params(0.5, -0.1).is_err());
        assert!(make_params(0.5, f64::NAN).is_err());
        assert!(ModelParams::from_rate(2.0, 0.0).unwrap().with_mu(0.0).is_err());
    }

    #[test]
    fn peak_coupling_matches_rate() {
        // M = 2 1/ns drives the qubit at 4 rad/ns at the pulse peak,
        // i.e. 0.6366 GHz.
        let p = make_params(0.5, 0.0).unwrap();
        let f = peak_coupling_freq(&p);
        assert!((f - 0.636_619_772_367_581_3).abs() < 1e-15, "f = {f}");
        assert_eq!(f, p.peak_coupling_freq_ghz());

        let unit = ModelParams::from_rate(1.0, 0.0).unwrap();
        assert!((peak_coupling_freq(&unit) - 1.0 / std::f64::consts::PI).abs() < 1e-16);
    }

    #[test]
    fn config_defaults_split_on_lambda() {
        let undamped = SolverConfig::for_lambda(0.0);
        assert!((undamped.theta_max - (TWO_PI - 1e-3)).abs() < 1e-15);
        undamped.validate().unwrap();

        let damped = SolverConfig::for_lambda(0.5);
        assert!((damped.theta_max - 3.0 * TWO_PI).abs() < 1e-12);
        damped.validate().unwrap();

        assert_eq!(damped.theta_min, 1e-3);
        assert_eq!(damped.n_grid, 1001);
        assert_eq!(damped.abs_tol, 1e-10);
        assert_eq!(damped.rel_tol, 1e-8);
    }

    #[test]
    fn config_validation_rejects_bad_shapes() {
        let mut c = SolverConfig::for_lambda(1.0);
        c.theta_min = 0.0;
        assert!(c.validate().is_err());

        let mut c = SolverConfig::for_lambda(1.0);
        c.theta_min = 3.2; // above pi
        assert!(c.validate().is_err());

        let mut c = SolverConfig::for_lambda(1.0);
        c.theta_max = 3.0; // below pi
        assert!(c.validate().is_err());

        let mut c = SolverConfig::for_lambda(1.0);
        c.n_grid = 1;
        assert!(c.validate().is_err());

        let mut c = SolverConfig::for_lambda(1.0);
        c.rel_tol = 1.0;
        assert!(c.validate().is_err());

        let mut c = SolverConfig::for_lambda(1.0);
        c.abs_tol = 0.0;
        assert!(c.validate().is_err());
    }

    fn tiny_trajectory(lambda: f64, phi: Vec<f64>) -> Result<Trajectory, Error> {
        let params = ModelParams::from_rate(2.0, lambda).unwrap();
        let config = SolverConfig::for_lambda(lambda);
        Trajectory::new(
            params,
            config,
            vec![0.0, 0.5, 1.0],
            vec![1.0, 2.0, 3.0],
            vec![1.0, 1.5, 1.0],
            phi,
        )
    }

    #[test]
    fn trajectory_envelope_is_exact_quotient() {
        let params = ModelParams::from_rate(2.0, 0.5)
            .unwrap()
            .with_mu(0.7)
            .unwrap();
        let config = SolverConfig::for_lambda(0.5);
        let t = Trajectory::new(
            params,
            config,
            vec![0.0, 1.0],
            vec![1.0, 2.0],
            vec![3.0, 4.0],
            vec![0.0, 0.1],
        )
        .unwrap();
        assert_eq!(t.envelope()[0], 3.0 / 0.7);
        assert_eq!(t.envelope()[1], 4.0 / 0.7);
    }

    #[test]
    fn trajectory_rejects_broken_invariants() {
        // phi must vanish without dissipation
        assert!(tiny_trajectory(0.0, vec![0.0, 0.1, 0.2]).is_err());
        assert!(tiny_trajectory(0.0, vec![0.0, 0.0, 0.0]).is_ok());
        // phi must not decrease with dissipation
        assert!(tiny_trajectory(0.5, vec![0.0, 0.2, 0.1]).is_err());

        // theta must strictly increase
        let params = ModelParams::from_rate(2.0, 0.5).unwrap();
        let config = SolverConfig::for_lambda(0.5);
        assert!(Trajectory::new(
            params,
            config,
            vec![0.0, 0.5, 1.0],
            vec![1.0, 1.0, 3.0],
            vec![1.0, 1.0, 1.0],
            vec![0.0, 0.1, 0.2],
        )
        .is_err());

        // theta_dot must be non-negative
        assert!(Trajectory::new(
            params,
            config,
            vec![0.0, 0.5, 1.0],
            vec![1.0, 2.0, 3.0],
            vec![1.0, -0.1, 1.0],
            vec![0.0, 0.1, 0.2],
        )
        .is_err());

        // arrays must agree in length
        assert!(Trajectory::new(
            params,
            config,
            vec![0.0, 0.5, 1.0],
            vec![1.0, 2.0],
            vec![1.0, 1.0, 1.0],
            vec![0.0, 0.1, 0.2],
        )
        .is_err());
    }

    #[test]
    fn trajectory_interpolation_is_exact_at_nodes() {
        let t = tiny_trajectory(0.5, vec![0.0, 0.1, 0.2]).unwrap();
        assert_eq!(t.theta_at(0.5).unwrap(), 2.0);
        assert_eq!(t.phi_at(1.0).unwrap(), 0.2);
        assert_eq!(t.theta_dot_at(0.0).unwrap(), 1.0);
        assert!(t.theta_at(1.5).is_err());
        assert!(t.theta_at(-0.1).is_err());
    }
}
