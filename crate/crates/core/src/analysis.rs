//! Diagnostics built on solved trajectories: closed-form reference for the
//! undamped pulse, envelope extrema, asymptotic fits, the dephasing-budget
//! audit, and the combined self-check report.

use crate::area;
use crate::error::Error;
use crate::model::{ModelParams, SolverConfig, Trajectory};
use crate::solver::{solve_trajectory, Method};

use std::f64::consts::PI;

/// Hard bound on the undamped pulse against its closed form, rad.
pub const SOLITON_TOL: f64 = 1e-6;

/// Hard bound on how far an envelope extremum may sit from a multiple of
/// pi in area, rad.
pub const EXTREMA_PLACEMENT_TOL: f64 = 1e-3;

/// Hard bound on the area disagreement between the two routes, rad.
pub const ROUTE_THETA_TOL: f64 = 1e-6;

/// Hard bound on the phase disagreement between the two routes, rad.
pub const ROUTE_PHI_TOL: f64 = 1e-5;

/// Extremum brackets are refined below this width, ns.
const EXTREMUM_BRACKET_NS: f64 = 1e-4;

/// Envelope wiggles smaller than this fraction of the peak are resampling
/// noise, not extrema.
const PROMINENCE_FLOOR: f64 = 1e-8;

/// Closed-form undamped pulse sampled on a caller grid:
/// theta = 4 atan exp(M tau), envelope = (2M/mu) sech(M tau), phi = 0.
#[derive(Debug, Clone)]
pub struct SolitonReference {
    pub theta: Vec<f64>,
    pub theta_dot: Vec<f64>,
    pub envelope: Vec<f64>,
    pub phi: Vec<f64>,
}

/// Evaluate the closed form; defined only without dissipation.
pub fn soliton_oracle(tau: &[f64], params: &ModelParams) -> Result<SolitonReference, Error> {
    if params.lambda() != 0.0 {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: params.lambda(),
            reason: "the closed-form pulse exists only without dissipation",
        });
    }
    if tau.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite time in oracle grid".into()));
    }
    let m = params.m();
    let mu = params.mu();
    let mut theta = Vec::with_capacity(tau.len());
    let mut theta_dot = Vec::with_capacity(tau.len());
    let mut envelope = Vec::with_capacity(tau.len());
    for &t in tau {
        let x = m * t;
        theta.push(4.0 * x.exp().atan());
        // sech through the stable 2 e^-|x| / (1 + e^-2|x|) form.
        let e = (-x.abs()).exp();
        let sech = 2.0 * e / (1.0 + e * e);
        theta_dot.push(2.0 * m * sech);
        envelope.push(2.0 * m * sech / mu);
    }
    Ok(SolitonReference {
        theta,
        theta_dot,
        envelope,
        phi: vec![0.0; tau.len()],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumKind {
    Maximum,
    Minimum,
}

/// One refined envelope extremum.
#[derive(Debug, Clone, Copy)]
pub struct Extremum {
    pub kind: ExtremumKind,
    /// Time of the extremum, ns.
    pub tau: f64,
    /// Area there, rad.
    pub theta: f64,
    /// Envelope there, in units of M/mu.
    pub envelope: f64,
    /// Distance from theta to the nearest multiple of pi, rad.
    pub theta_mod_pi: f64,
}

/// Distance to the nearest multiple of pi.
fn fold_to_pi(theta: f64) -> f64 {
    (theta / PI - (theta / PI).round()).abs() * PI
}

/// Locate interior envelope extrema: discrete sign changes of the sampled
/// differences, screened by prominence, then sharpened by iterated
/// three-point parabolic steps on the interpolated envelope.
pub fn find_envelope_extrema(traj: &Trajectory) -> Result<Vec<Extremum>, Error> {
    let tau = traj.tau();
    let env = traj.envelope();
    let n = env.len();
    let peak = env.iter().cloned().fold(0.0_f64, f64::max);
    let floor = PROMINENCE_FLOOR * peak;

    let mut out = Vec::new();
    for i in 1..n - 1 {
        let d_prev = env[i] - env[i - 1];
        let d_next = env[i + 1] - env[i];
        let kind = if d_prev > 0.0 && d_next <= 0.0 {
            ExtremumKind::Maximum
        } else if d_prev < 0.0 && d_next >= 0.0 {
            ExtremumKind::Minimum
        } else {
            continue;
        };
        if prominence(env, i, kind) < floor {
            continue;
        }
        let sign = match kind {
            ExtremumKind::Maximum => 1.0,
            ExtremumKind::Minimum => -1.0,
        };
        let t_star = refine_extremum(traj, tau[i - 1], tau[i], tau[i + 1], sign)?;
        let theta = traj.theta_at(t_star)?;
        out.push(Extremum {
            kind,
            tau: t_star,
            theta,
            envelope: traj.envelope_at(t_star)?,
            theta_mod_pi: fold_to_pi(theta),
        });
    }
    Ok(out)
}

/// Smaller of the rise into and the fall out of the candidate extremum.
fn prominence(env: &[f64], i: usize, kind: ExtremumKind) -> f64 {
    let sign = match kind {
        ExtremumKind::Maximum => 1.0,
        ExtremumKind::Minimum => -1.0,
    };
    let mut left = i;
    while left > 0 && sign * (env[left] - env[left - 1]) >= 0.0 {
        left -= 1;
    }
    let mut right = i;
    while right + 1 < env.len() && sign * (env[right] - env[right + 1]) >= 0.0 {
        right += 1;
    }
    let rise = sign * (env[i] - env[left]);
    let fall = sign * (env[i] - env[right]);
    rise.min(fall)
}

/// Shrink [lo, hi] around the extremum of sign * envelope by parabolic
/// interpolation with bisection fallback.
fn refine_extremum(
    traj: &Trajectory,
    lo: f64,
    mid: f64,
    hi: f64,
    sign: f64,
) -> Result<f64, Error> {
    let f = |t: f64| -> Result<f64, Error> { Ok(sign * traj.envelope_at(t)?) };
    let (mut x0, mut x1, mut x2) = (lo, mid, hi);
    let (mut f0, mut f1, mut f2) = (f(x0)?, f(x1)?, f(x2)?);

    for iter in 0..100 {
        if x2 - x0 <= EXTREMUM_BRACKET_NS {
            break;
        }
        // Parabolic vertex on even turns; every other turn bisects the
        // wider half so the bracket is guaranteed to shrink geometrically.
        let mut x_new = f64::NAN;
        if iter % 2 == 0 {
            let d01 = x1 - x0;
            let d21 = x1 - x2;
            let num = d01 * d01 * (f1 - f2) - d21 * d21 * (f1 - f0);
            let den = d01 * (f1 - f2) - d21 * (f1 - f0);
            if den.abs() > 0.0 {
                x_new = x1 - 0.5 * num / den;
            }
        }
        let margin = 0.01 * (x2 - x0);
        if !(x_new > x0 + margin && x_new < x2 - margin) || (x_new - x1).abs() < 1e-18 {
            x_new = if x1 - x0 > x2 - x1 {
                0.5 * (x0 + x1)
            } else {
                0.5 * (x1 + x2)
            };
        }
        let f_new = f(x_new)?;
        if x_new > x1 {
            if f_new >= f1 {
                (x0, f0, x1, f1) = (x1, f1, x_new, f_new);
            } else {
                (x2, f2) = (x_new, f_new);
            }
        } else if f_new >= f1 {
            (x2, f2, x1, f1) = (x1, f1, x_new, f_new);
        } else {
            (x0, f0) = (x_new, f_new);
        }
    }
    Ok(x1)
}

/// Asymptotic plateau and phase slope measured from the tail of a damped
/// trajectory, with their closed-form limits.
#[derive(Debug, Clone, Copy)]
pub struct AsymptoteFit {
    /// Mean envelope over the fit window, in units of M/mu.
    pub plateau: f64,
    /// Closed-form limit M sqrt(2 / (1 + lambda^2/4)) / mu.
    pub plateau_exact: f64,
    pub plateau_rel_err: f64,
    /// Least-squares dphi/dtau over the fit window, rad/ns.
    pub slope: f64,
    /// Closed-form limit M sqrt((1 + lambda^2/4) / 2).
    pub slope_exact: f64,
    pub slope_rel_err: f64,
}

/// Closed-form envelope plateau of a damped pulse.
pub fn plateau_envelope_limit(params: &ModelParams) -> f64 {
    let a = 0.5 * params.lambda();
    params.m() * (2.0 / (1.0 + a * a)).sqrt() / params.mu()
}

/// Closed-form asymptotic phase slope of a damped pulse.
pub fn phase_slope_limit(params: &ModelParams) -> f64 {
    let a = 0.5 * params.lambda();
    params.m() * ((1.0 + a * a) / 2.0).sqrt()
}

/// Strong-damping estimate of the plateau: sqrt(8) M / (lambda mu).
pub fn strong_damping_plateau(params: &ModelParams) -> f64 {
    8.0_f64.sqrt() * params.m() / (params.lambda() * params.mu())
}

/// Strong-damping estimate of the phase slope: M lambda / sqrt(8).
pub fn strong_damping_slope(params: &ModelParams) -> f64 {
    params.m() * params.lambda() / 8.0_f64.sqrt()
}

/// Fit the tail (last fifth in time) of a damped run against the closed
/// asymptotic limits. Needs the area to have reached at least 4 pi so the
/// tail is actually asymptotic.
pub fn measure_asymptotes(traj: &Trajectory) -> Result<AsymptoteFit, Error> {
    let theta_end = *traj.theta().last().unwrap();
    if theta_end < 4.0 * PI {
        return Err(Error::InsufficientRange(format!(
            "asymptote fit needs the area to reach 4 pi, got {theta_end:.3}"
        )));
    }
    let tau = traj.tau();
    let (lo, hi) = traj.tau_range();
    let cutoff = lo + 0.8 * (hi - lo);
    let start = tau.partition_point(|&t| t < cutoff);
    if tau.len() - start < 8 {
        return Err(Error::InsufficientRange(format!(
            "asymptote fit window holds only {} samples",
            tau.len() - start
        )));
    }

    let env = &traj.envelope()[start..];
    let plateau = env.iter().sum::<f64>() / env.len() as f64;

    let ts = &tau[start..];
    let phis = &traj.phi()[start..];
    let t_mean = ts.iter().sum::<f64>() / ts.len() as f64;
    let p_mean = phis.iter().sum::<f64>() / phis.len() as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, p) in ts.iter().zip(phis) {
        num += (t - t_mean) * (p - p_mean);
        den += (t - t_mean) * (t - t_mean);
    }
    let slope = num / den;

    let plateau_exact = plateau_envelope_limit(traj.params());
    let slope_exact = phase_slope_limit(traj.params());
    Ok(AsymptoteFit {
        plateau,
        plateau_exact,
        plateau_rel_err: ((plateau - plateau_exact) / plateau_exact).abs(),
        slope,
        slope_exact,
        slope_rel_err: ((slope - slope_exact) / slope_exact).abs(),
    })
}

/// Accumulated dephasing budget against the lambda-times-area law.
#[derive(Debug, Clone)]
pub struct GammaAudit {
    /// Slope of the assumed linear dephasing spectrum gamma = slope * rate.
    pub spectral_slope: f64,
    pub tau: Vec<f64>,
    /// Gamma(tau) / (lambda theta(tau)); zero where the denominator is.
    pub ratio: Vec<f64>,
}

/// Integrate gamma(rate) sin^2(phi) over the trajectory (trapezoid in the
/// area variable, the short stretch below the grid start completed with
/// the phase frozen at its first sample) and compare the running total
/// with lambda times the area. The default spectrum slope 2 lambda makes
/// the ratio tend to one once the phase winds quickly enough to average
/// sin^2 to a half; early on, and for other slopes, the ratio simply
/// reports what the model gives.
pub fn gamma_audit(traj: &Trajectory, spectral_slope: Option<f64>) -> GammaAudit {
    let lambda = traj.params().lambda();
    let slope = spectral_slope.unwrap_or(2.0 * lambda);
    let theta = traj.theta();
    let phi = traj.phi();
    let n = theta.len();

    let sin2 = |p: f64| {
        let s = p.sin();
        s * s
    };

    let mut ratio = Vec::with_capacity(n);
    // gamma(rate) d tau = slope * rate d tau = slope * d theta.
    let mut acc = theta[0] * sin2(phi[0]);
    let to_ratio = |acc: f64, th: f64| {
        let denom = lambda * th;
        if denom <= 0.0 {
            0.0
        } else {
            slope * acc / denom
        }
    };
    ratio.push(to_ratio(acc, theta[0]));
    for j in 1..n {
        acc += 0.5 * (sin2(phi[j - 1]) + sin2(phi[j])) * (theta[j] - theta[j - 1]);
        ratio.push(to_ratio(acc, theta[j]));
    }

    GammaAudit {
        spectral_slope: slope,
        tau: traj.tau().to_vec(),
        ratio,
    }
}

/// Worst-case differences between two trajectories over their common time
/// window, sampled densely through the interpolants.
pub fn route_difference(
    a: &Trajectory,
    b: &Trajectory,
    n_samples: usize,
) -> Result<(f64, f64), Error> {
    let lo = a.tau_range().0.max(b.tau_range().0);
    let hi = a.tau_range().1.min(b.tau_range().1);
    if hi <= lo {
        return Err(Error::Domain(
            "trajectories share no time window to compare".into(),
        ));
    }
    let mut d_theta: f64 = 0.0;
    let mut d_phi: f64 = 0.0;
    for k in 0..n_samples {
        let t = (lo + (hi - lo) * k as f64 / (n_samples - 1) as f64).clamp(lo, hi);
        d_theta = d_theta.max((a.theta_at(t)? - b.theta_at(t)?).abs());
        d_phi = d_phi.max((a.phi_at(t)? - b.phi_at(t)?).abs());
    }
    Ok((d_theta, d_phi))
}

/// Everything the self-audit measures for one parameter set.
#[derive(Debug, Clone)]
pub struct AuditReport {
    pub lambda: f64,
    pub tau_range: (f64, f64),
    pub theta_end: f64,
    /// theta_end - 2 pi; positive means the pulse pushed past a full turn.
    pub final_area_excess: f64,
    pub route_max_abs_dtheta: f64,
    pub route_max_abs_dphi: f64,
    /// Undamped runs only: worst area error against the closed form.
    pub soliton_max_abs_theta_err: Option<f64>,
    /// Undamped runs only: worst envelope error against the closed form.
    pub soliton_max_abs_env_err: Option<f64>,
    pub extrema: Vec<Extremum>,
    /// Worst |theta mod pi| over the extrema; zero when there are none.
    pub max_extremum_offset: f64,
    /// Tail fits; absent when the run is too short to be asymptotic.
    pub asymptotes: Option<AsymptoteFit>,
    /// Mean dephasing-budget ratio over the samples past theta = pi.
    pub gamma_mean_ratio: f64,
    /// Radicand clamps that fired during the two solves (best effort;
    /// the counter is process-wide).
    pub clamp_events: u64,
}

impl AuditReport {
    /// Names of the hard invariants this report violates, empty when sound.
    pub fn hard_failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if let Some(err) = self.soliton_max_abs_theta_err {
            if err > SOLITON_TOL {
                out.push("soliton");
            }
        }
        if self.max_extremum_offset > EXTREMA_PLACEMENT_TOL {
            out.push("extrema-placement");
        }
        if self.route_max_abs_dtheta > ROUTE_THETA_TOL
            || self.route_max_abs_dphi > ROUTE_PHI_TOL
        {
            out.push("route-equivalence");
        }
        out
    }
}

/// Solve with both routes and collect every diagnostic into one report.
pub fn build_audit_report(
    params: &ModelParams,
    config: &SolverConfig,
) -> Result<AuditReport, Error> {
    let clamps_before = area::clamp_count();
    let by_quadrature = solve_trajectory(params, config, Method::Quadrature)?;
    let by_time = solve_trajectory(params, config, Method::Ivp)?;
    let clamp_events = area::clamp_count().saturating_sub(clamps_before);

    let (route_max_abs_dtheta, route_max_abs_dphi) =
        route_difference(&by_quadrature, &by_time, 2048)?;

    let (mut soliton_theta, mut soliton_env) = (None, None);
    if params.lambda() == 0.0 {
        let mut worst_theta: f64 = 0.0;
        let mut worst_env: f64 = 0.0;
        for traj in [&by_quadrature, &by_time] {
            let (lo, hi) = traj.tau_range();
            let (wlo, whi) = (lo.max(-2.0), hi.min(2.0));
            if whi <= wlo {
                continue;
            }
            let grid: Vec<f64> = (0..1001)
                .map(|k| (wlo + (whi - wlo) * k as f64 / 1000.0).clamp(wlo, whi))
                .collect();
            let oracle = soliton_oracle(&grid, params)?;
            for (k, &t) in grid.iter().enumerate() {
                worst_theta = worst_theta.max((traj.theta_at(t)? - oracle.theta[k]).abs());
                worst_env = worst_env.max((traj.envelope_at(t)? - oracle.envelope[k]).abs());
            }
        }
        soliton_theta = Some(worst_theta);
        soliton_env = Some(worst_env);
    }

    let extrema = find_envelope_extrema(&by_quadrature)?;
    let max_extremum_offset = extrema
        .iter()
        .map(|e| e.theta_mod_pi)
        .fold(0.0_f64, f64::max);

    let asymptotes = measure_asymptotes(&by_quadrature).ok();

    let gamma = gamma_audit(&by_quadrature, None);
    let theta = by_quadrature.theta();
    let late: Vec<f64> = gamma
        .ratio
        .iter()
        .zip(theta)
        .filter(|(_, &th)| th >= PI)
        .map(|(&r, _)| r)
        .collect();
    let gamma_mean_ratio = if late.is_empty() {
        0.0
    } else {
        late.iter().sum::<f64>() / late.len() as f64
    };

    let theta_end = *theta.last().unwrap();
    Ok(AuditReport {
        lambda: params.lambda(),
        tau_range: by_quadrature.tau_range(),
        theta_end,
        final_area_excess: theta_end - 2.0 * PI,
        route_max_abs_dtheta,
        route_max_abs_dphi,
        soliton_max_abs_theta_err: soliton_theta,
        soliton_max_abs_env_err: soliton_env,
        extrema,
        max_extremum_offset,
        asymptotes,
        gamma_mean_ratio,
        clamp_events,
    })
}
