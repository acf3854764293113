//! The two independent solution routes for the damped area equation.
//!
//! Route one exploits the first integral: dtau/dtheta and dphi/dtheta are
//! explicit functions of theta, so tau(theta) and phi(theta) follow from
//! one-dimensional quadrature. Both integrands carry a 1/theta singularity
//! at the launch end (and, without damping, a mirrored one at 2 pi); the
//! singular part integrates to a logarithm analytically and only the smooth
//! remainder is handed to the adaptive rule.
//!
//! Route two integrates the area equation as an initial value problem in
//! time with an embedded Runge-Kutta pair, sharing nothing with route one
//! past the energy bracket used for the launch rate. Agreement between the
//! routes is the solver's strongest self-check.
//!
//! Both routes anchor tau = 0 and phi = 0 where theta crosses pi and
//! resample onto a uniform time grid with exact-slope cubic segments.

use crate::area::{area_bracket, theta_dot};
use crate::error::Error;
use crate::interp::CubicHermite;
use crate::model::{ModelParams, SolverConfig, Trajectory};
use crate::ode::Integrator;
use crate::quad;

use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;

/// Width of the singular zones at theta = 0 (and 2 pi for lambda = 0)
/// inside which the logarithmic part is split off analytically.
const SINGULAR_ZONE: f64 = 0.5;

/// Nodes of the geometric sub-grid covering a singular zone.
const N_SINGULAR: usize = 512;

/// Lower bound on the nodes of the uniform mid-range sub-grid.
const N_MAIN_MIN: usize = 1537;

/// The time integrator runs this much tighter than the configured
/// tolerances: near the launch point and (undamped) near 2 pi the rate
/// tends to zero and position errors grow like the energy error divided by
/// the rate, so per-step accuracy has to outrun the requested accuracy.
const IVP_TOL_FACTOR: f64 = 1e-4;

/// First-integral drift beyond this fraction of M^2 aborts the time route;
/// loose tolerances widen the threshold so the audit can still compare
/// routes instead of dying early.
fn drift_threshold(rtol_eff: f64, atol_eff: f64) -> f64 {
    (1e4 * (rtol_eff + atol_eff)).max(1e-4)
}

/// Which route to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Quadrature,
    Ivp,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "quadrature" => Ok(Method::Quadrature),
            "ivp" => Ok(Method::Ivp),
            other => Err(Error::Domain(format!(
                "unknown method '{other}', expected 'quadrature' or 'ivp'"
            ))),
        }
    }
}

/// Solve on the configured grid with the chosen route.
pub fn solve_trajectory(
    params: &ModelParams,
    config: &SolverConfig,
    method: Method,
) -> Result<Trajectory, Error> {
    config.validate()?;
    check_reachable(params, config)?;
    match method {
        Method::Quadrature => solve_quadrature(params, config),
        Method::Ivp => integrate_ivp(params, config),
    }
}

/// Undamped pulses never pass 2 pi, so asking for that is a domain error
/// rather than an endless solve.
fn check_reachable(params: &ModelParams, config: &SolverConfig) -> Result<(), Error> {
    if params.lambda() == 0.0 && config.theta_max >= TWO_PI {
        return Err(Error::Domain(format!(
            "without dissipation the area saturates at 2 pi; theta_max = {} is unreachable",
            config.theta_max
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// integrands
// ---------------------------------------------------------------------------

/// dtau/dtheta in units of 1/M: sqrt(1 + a^2) / sqrt(B).
fn tau_integrand(theta: f64, lambda: f64) -> f64 {
    let a = 0.5 * lambda;
    ((1.0 + a * a) / area_bracket(theta, lambda)).sqrt()
}

/// tau integrand with its 1/theta pole removed; smooth down to theta = 0.
fn tau_integrand_reg(theta: f64, lambda: f64) -> f64 {
    tau_integrand(theta, lambda) - 1.0 / theta
}

/// dphi/dtheta = (1 + a^2)(1 - exp(-lambda theta)) / B. The expm1 grouping
/// keeps it finite at large lambda theta where the textbook sinh over
/// exponential form overflows.
fn phi_integrand(theta: f64, lambda: f64) -> f64 {
    let a = 0.5 * lambda;
    (1.0 + a * a) * (-(-lambda * theta).exp_m1()) / area_bracket(theta, lambda)
}

/// phi integrand with its lambda/theta pole removed.
fn phi_integrand_reg(theta: f64, lambda: f64) -> f64 {
    phi_integrand(theta, lambda) - lambda / theta
}

// ---------------------------------------------------------------------------
// segment quadrature with analytic log subtraction
// ---------------------------------------------------------------------------

#[derive(Clone, Copy)]
enum Kind {
    Tau,
    Phi,
}

/// Integral of the chosen integrand over [lo, hi], splitting at the
/// singular-zone edges and subtracting the logarithmic parts there.
fn segment_integral(
    kind: Kind,
    lo: f64,
    hi: f64,
    params: &ModelParams,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64, Error> {
    debug_assert!(lo < hi);
    let lambda = params.lambda();
    let mirror_edge = TWO_PI - SINGULAR_ZONE;

    // Cut points where the treatment changes.
    let mut cuts = vec![lo];
    if lo < SINGULAR_ZONE && hi > SINGULAR_ZONE {
        cuts.push(SINGULAR_ZONE);
    }
    if lambda == 0.0 && lo < mirror_edge && hi > mirror_edge {
        cuts.push(mirror_edge);
    }
    cuts.push(hi);

    let mut total = 0.0;
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        total += if b <= SINGULAR_ZONE {
            // The subtracted integrands are differences of terms of size
            // 1/theta (lambda/theta for the phase), so one evaluation
            // carries that much rounding noise; declare it.
            match kind {
                Kind::Tau => {
                    let noise = 2.0 * f64::EPSILON / a;
                    let smooth = quad::integrate(
                        |t| tau_integrand_reg(t, lambda),
                        a,
                        b,
                        abs_tol,
                        rel_tol,
                        noise,
                    )?;
                    smooth.value + (b / a).ln()
                }
                Kind::Phi => {
                    let noise = 2.0 * f64::EPSILON * lambda / a;
                    let smooth = quad::integrate(
                        |t| phi_integrand_reg(t, lambda),
                        a,
                        b,
                        abs_tol,
                        rel_tol,
                        noise,
                    )?;
                    smooth.value + lambda * (b / a).ln()
                }
            }
        } else if lambda == 0.0 && a >= mirror_edge {
            // Mirror through u = 2 pi - theta; B is symmetric there when
            // undamped, and phi vanishes identically anyway.
            match kind {
                Kind::Tau => {
                    let (ua, ub) = (TWO_PI - b, TWO_PI - a);
                    let noise = 2.0 * f64::EPSILON / ua;
                    let smooth = quad::integrate(
                        |u| tau_integrand_reg(u, 0.0),
                        ua,
                        ub,
                        abs_tol,
                        rel_tol,
                        noise,
                    )?;
                    smooth.value + (ub / ua).ln()
                }
                Kind::Phi => 0.0,
            }
        } else {
            let f = |t: f64| match kind {
                Kind::Tau => tau_integrand(t, lambda),
                Kind::Phi => phi_integrand(t, lambda),
            };
            quad::integrate(f, a, b, abs_tol, rel_tol, 0.0)?.value
        };
    }
    Ok(total)
}

/// Signed integral between arbitrary ordered-or-not bounds.
fn signed_segment(
    kind: Kind,
    from: f64,
    to: f64,
    params: &ModelParams,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64, Error> {
    if from == to {
        return Ok(0.0);
    }
    if from < to {
        segment_integral(kind, from, to, params, abs_tol, rel_tol)
    } else {
        Ok(-segment_integral(kind, to, from, params, abs_tol, rel_tol)?)
    }
}

// ---------------------------------------------------------------------------
// anchored tau(theta) and phi(theta) on a caller grid
// ---------------------------------------------------------------------------

fn check_theta_grid(theta: &[f64], params: &ModelParams) -> Result<(), Error> {
    if theta.len() < 2 {
        return Err(Error::Domain(format!(
            "area grid needs at least two points, got {}",
            theta.len()
        )));
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite value in area grid".into()));
    }
    if theta[0] <= 0.0 {
        return Err(Error::Domain(format!(
            "area grid must start above zero, got {:e}",
            theta[0]
        )));
    }
    if theta.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("area grid must be strictly increasing".into()));
    }
    if params.lambda() == 0.0 && *theta.last().unwrap() >= TWO_PI {
        return Err(Error::Domain(
            "undamped area saturates at 2 pi; grid reaches past it".into(),
        ));
    }
    Ok(())
}

/// Times at which the area passes each grid value, anchored so that
/// tau = 0 at theta = pi.
pub fn tau_of_theta(
    theta: &[f64],
    params: &ModelParams,
    config: &SolverConfig,
) -> Result<Vec<f64>, Error> {
    config.validate()?;
    check_theta_grid(theta, params)?;
    anchored_profile(Kind::Tau, theta, params, config)
        .map(|v| v.into_iter().map(|x| x / params.m()).collect())
}

/// Carrier phase accumulated up to each grid value, anchored so that
/// phi = 0 at theta = pi. Identically zero without dissipation.
pub fn phi_of_theta(
    theta: &[f64],
    params: &ModelParams,
    config: &SolverConfig,
) -> Result<Vec<f64>, Error> {
    config.validate()?;
    check_theta_grid(theta, params)?;
    if params.lambda() == 0.0 {
        return Ok(vec![0.0; theta.len()]);
    }
    anchored_profile(Kind::Phi, theta, params, config)
}

/// Prefix sums of segment integrals over the grid, shifted so the value at
/// theta = pi is exactly zero.
fn anchored_profile(
    kind: Kind,
    theta: &[f64],
    params: &ModelParams,
    config: &SolverConfig,
) -> Result<Vec<f64>, Error> {
    let span = theta.last().unwrap() - theta[0];
    let rel = config.rel_tol;
    let share = |w: f64| config.abs_tol * (w / span).max(1e-6);

    let mut out = Vec::with_capacity(theta.len());
    out.push(0.0);
    for w in theta.windows(2) {
        let dv = segment_integral(kind, w[0], w[1], params, share(w[1] - w[0]), rel)?;
        let prev = *out.last().unwrap();
        out.push(prev + dv);
    }

    // Shift so the profile vanishes at pi: reference the grid node nearest
    // pi and bridge the remaining distance with one more integral.
    let r = nearest_index(theta, PI);
    let bridge = signed_segment(kind, PI, theta[r], params, share(1.0), rel)?;
    let offset = out[r] - bridge;
    for v in &mut out {
        *v -= offset;
    }
    // Exactness at an exact-pi node: the bridge is zero there by the
    // from == to short-circuit, so out[r] becomes exactly zero.
    Ok(out)
}

fn nearest_index(grid: &[f64], x: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, &g) in grid.iter().enumerate() {
        let d = (g - x).abs();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// quadrature route
// ---------------------------------------------------------------------------

/// Internal fine grid over [theta_min, theta_max]: geometric inside the
/// singular zones (uniform in the log variable, hence uniform in time),
/// uniform in between, with pi inserted exactly.
fn fine_grid(params: &ModelParams, config: &SolverConfig) -> Vec<f64> {
    let lambda = params.lambda();
    let (lo, hi) = (config.theta_min, config.theta_max);
    let mirror_edge = TWO_PI - SINGULAR_ZONE;

    let mut nodes: Vec<f64> = Vec::new();

    // Launch zone, geometric.
    let main_lo = if lo < SINGULAR_ZONE {
        push_geometric(&mut nodes, lo, SINGULAR_ZONE, N_SINGULAR);
        SINGULAR_ZONE
    } else {
        lo
    };

    // Mid range, uniform, split at pi so the anchor is a grid node.
    let main_hi = if lambda == 0.0 && hi > mirror_edge {
        mirror_edge
    } else {
        hi
    };
    let n_main = N_MAIN_MIN.max(4 * config.n_grid);
    let frac = ((PI - main_lo) / (main_hi - main_lo)).clamp(0.05, 0.95);
    let n_left = ((n_main as f64 * frac) as usize).max(2);
    let n_right = (n_main - n_left.min(n_main - 2)).max(2);
    push_uniform(&mut nodes, main_lo, PI, n_left);
    push_uniform(&mut nodes, PI, main_hi, n_right);

    // Saturation zone (undamped only), geometric in u = 2 pi - theta.
    if lambda == 0.0 && hi > mirror_edge {
        let u_lo = TWO_PI - hi;
        let mut mirrored = Vec::new();
        push_geometric(&mut mirrored, u_lo, SINGULAR_ZONE, N_SINGULAR);
        for &u in mirrored.iter().rev() {
            push_node(&mut nodes, TWO_PI - u);
        }
    }
    nodes
}

fn push_node(nodes: &mut Vec<f64>, x: f64) {
    if nodes.last() != Some(&x) {
        nodes.push(x);
    }
}

fn push_geometric(nodes: &mut Vec<f64>, lo: f64, hi: f64, n: usize) {
    let r = (hi / lo).powf(1.0 / (n - 1) as f64);
    let mut x = lo;
    for k in 0..n {
        push_node(nodes, if k == n - 1 { hi } else { x });
        x *= r;
    }
}

fn push_uniform(nodes: &mut Vec<f64>, lo: f64, hi: f64, n: usize) {
    let h = (hi - lo) / (n - 1) as f64;
    for k in 0..n {
        let x = if k == n - 1 { hi } else { lo + k as f64 * h };
        push_node(nodes, x);
    }
}

fn solve_quadrature(params: &ModelParams, config: &SolverConfig) -> Result<Trajectory, Error> {
    let theta_nodes = fine_grid(params, config);
    let tau_nodes = tau_of_theta(&theta_nodes, params, config)?;
    let phi_nodes = phi_of_theta(&theta_nodes, params, config)?;

    let n = theta_nodes.len();
    let mut v_nodes = Vec::with_capacity(n);
    for &th in &theta_nodes {
        v_nodes.push(theta_dot(th, params)?);
    }

    // theta(tau) with the exact rate as slope; phi(tau) with the exact
    // phase rate as slope.
    let theta_of_tau = CubicHermite::new(
        tau_nodes.clone(),
        theta_nodes.clone(),
        v_nodes.clone(),
        true,
    )?;
    let lambda = params.lambda();
    let m2 = params.m() * params.m();
    let phi_of_tau = if lambda > 0.0 {
        let phi_slopes: Vec<f64> = theta_nodes
            .iter()
            .zip(&v_nodes)
            .map(|(&th, &v)| m2 * (-(-lambda * th).exp_m1()) / v)
            .collect();
        Some(CubicHermite::new(
            tau_nodes.clone(),
            phi_nodes,
            phi_slopes,
            true,
        )?)
    } else {
        None
    };

    let (tau_lo, tau_hi) = (tau_nodes[0], *tau_nodes.last().unwrap());
    let ng = config.n_grid;
    let dt = (tau_hi - tau_lo) / (ng - 1) as f64;
    let mut tau = Vec::with_capacity(ng);
    let mut theta = Vec::with_capacity(ng);
    let mut v = Vec::with_capacity(ng);
    let mut phi = Vec::with_capacity(ng);
    for j in 0..ng {
        let t = if j == ng - 1 {
            tau_hi
        } else {
            tau_lo + j as f64 * dt
        };
        let th = theta_of_tau.eval(t)?;
        tau.push(t);
        theta.push(th);
        // The rate comes straight from the energy bracket at the
        // interpolated area, not from differentiating the interpolant.
        v.push(theta_dot(th, params)?);
        phi.push(match &phi_of_tau {
            Some(spline) => spline.eval(t)?,
            None => 0.0,
        });
    }

    Trajectory::new(*params, *config, tau, theta, v, phi)
}

// ---------------------------------------------------------------------------
// time route
// ---------------------------------------------------------------------------

/// Integrate the area equation in time from theta_min on the branch picked
/// by the first integral, then anchor and resample.
///
/// The final state is located on the dense interpolant where theta crosses
/// theta_max. If the configured tolerances are loose enough that the
/// numerical energy slips below the separatrix and the area turns back,
/// the run is truncated at the turning point instead of failing, so the
/// caller can still compare routes and see the disagreement.
pub fn integrate_ivp(params: &ModelParams, config: &SolverConfig) -> Result<Trajectory, Error> {
    config.validate()?;
    check_reachable(params, config)?;

    let m = params.m();
    let m2 = m * m;
    let lambda = params.lambda();
    let a = 0.5 * lambda;
    let theta_max = config.theta_max;

    let rtol_eff = (config.rel_tol * IVP_TOL_FACTOR).max(1e-13);
    let atol_eff = (config.abs_tol * IVP_TOL_FACTOR).max(1e-15);
    let drift_max = drift_threshold(rtol_eff, atol_eff);

    // State [theta, rate, phase].
    let rhs = move |_t: f64, y: &[f64; 3]| {
        let th = y[0];
        let v = y[1];
        let accel = m2 * (-a * th).exp() * th.sin();
        let phi_dot = if lambda == 0.0 || v <= 0.0 {
            0.0
        } else {
            m2 * (-(-lambda * th).exp_m1()) / v
        };
        [v, accel, phi_dot]
    };

    let v0 = theta_dot(config.theta_min, params)?;
    let mut ode = Integrator::new(rhs, 0.0, [config.theta_min, v0, 0.0], rtol_eff, atol_eff)
        .with_h0(1e-3 / m)
        .with_h_max(0.25 / m)
        .with_max_steps(200_000);

    // Sample nodes: (t, y, rhs(y)) at every accepted step end.
    let mut nodes: Vec<(f64, [f64; 3], [f64; 3])> = Vec::new();
    nodes.push((0.0, *ode.y(), rhs(0.0, ode.y())));
    let mut anchor: Option<(f64, f64)> = None; // (t at pi, phi at pi)

    loop {
        let step = ode.step()?;

        if anchor.is_none() && step.y0[0] < PI && step.y1[0] >= PI {
            let t_pi = step
                .find_root(|y| y[0] - PI)
                .expect("theta crosses pi inside this step");
            let y_pi = step.eval(t_pi);
            anchor = Some((t_pi, y_pi[2]));
        }

        // Turning point: the numerical energy fell below the separatrix
        // (possible only at very loose tolerances). Truncate there.
        if step.y1[1] <= 0.0 || step.y1[0] <= step.y0[0] {
            if let Some(t_stop) = step.find_root(|y| y[1]) {
                if t_stop > step.t0 {
                    let y_stop = step.eval(t_stop);
                    if y_stop[0] > step.y0[0] {
                        nodes.push((t_stop, y_stop, rhs(t_stop, &y_stop)));
                    }
                }
            }
            break;
        }

        if step.y1[0] >= theta_max {
            let t_end = step
                .find_root(|y| y[0] - theta_max)
                .expect("theta crosses theta_max inside this step");
            let y_end = step.eval(t_end);
            if t_end > step.t0 && y_end[0] > nodes.last().unwrap().1[0] {
                nodes.push((t_end, y_end, rhs(t_end, &y_end)));
            }
            break;
        }

        // First-integral drift, in units of M^2.
        let drift =
            (step.y1[1] * step.y1[1] - m2 * area_bracket(step.y1[0], lambda) / (1.0 + a * a))
                .abs()
                / m2;
        if drift > drift_max {
            return Err(Error::FirstIntegralDrift {
                tau: step.t1,
                drift,
                threshold: drift_max,
            });
        }

        nodes.push((step.t1, step.y1, rhs(step.t1, &step.y1)));
    }

    let (t_pi, phi_pi) = anchor.ok_or_else(|| {
        Error::Domain("the area never reached pi, so the trajectory cannot be anchored".into())
    })?;

    // Drop any trailing nodes that stopped making forward progress.
    while nodes.len() > 2 {
        let k = nodes.len();
        if nodes[k - 1].1[0] > nodes[k - 2].1[0] {
            break;
        }
        nodes.pop();
    }
    if nodes.len() < 2 {
        return Err(Error::Domain(
            "time integration produced fewer than two usable samples".into(),
        ));
    }

    let tau_n: Vec<f64> = nodes.iter().map(|(t, _, _)| t - t_pi).collect();
    let theta_n: Vec<f64> = nodes.iter().map(|(_, y, _)| y[0]).collect();
    let v_n: Vec<f64> = nodes.iter().map(|(_, y, _)| y[1].max(0.0)).collect();
    let phi_n: Vec<f64> = nodes.iter().map(|(_, y, _)| y[2] - phi_pi).collect();
    let accel_n: Vec<f64> = nodes.iter().map(|(_, _, f)| f[1]).collect();
    let phi_dot_n: Vec<f64> = nodes.iter().map(|(_, _, f)| f[2]).collect();

    let theta_of_tau = CubicHermite::new(tau_n.clone(), theta_n, v_n.clone(), true)?;
    let v_of_tau = CubicHermite::new(tau_n.clone(), v_n, accel_n, false)?;
    let phi_of_tau = if lambda > 0.0 {
        Some(CubicHermite::new(tau_n.clone(), phi_n, phi_dot_n, true)?)
    } else {
        None
    };

    let (tau_lo, tau_hi) = (tau_n[0], *tau_n.last().unwrap());
    let ng = config.n_grid;
    let dt = (tau_hi - tau_lo) / (ng - 1) as f64;
    let mut tau = Vec::with_capacity(ng);
    let mut theta = Vec::with_capacity(ng);
    let mut v = Vec::with_capacity(ng);
    let mut phi = Vec::with_capacity(ng);
    for j in 0..ng {
        let t = if j == ng - 1 {
            tau_hi
        } else {
            tau_lo + j as f64 * dt
        };
        tau.push(t);
        theta.push(theta_of_tau.eval(t)?);
        v.push(v_of_tau.eval(t)?.max(0.0));
        phi.push(match &phi_of_tau {
            Some(spline) => spline.eval(t)?,
            None => 0.0,
        });
    }

    Trajectory::new(*params, *config, tau, theta, v, phi)
}

// ---------------------------------------------------------------------------
// inversion
// ---------------------------------------------------------------------------

/// Time at which the stored area profile passes `theta`. Exact at grid
/// nodes; between nodes the same monotone interpolant as
/// [`Trajectory::theta_at`] is bisected.
pub fn invert_theta(traj: &Trajectory, theta: f64) -> Result<f64, Error> {
    let th = traj.theta();
    let tau = traj.tau();
    let n = th.len();
    if !(theta >= th[0] && theta <= th[n - 1]) {
        return Err(Error::OutOfRange {
            query: theta,
            lo: th[0],
            hi: th[n - 1],
        });
    }
    // partition_point gives the first index with th[i] > theta.
    let i = th.partition_point(|&v| v <= theta);
    if i > 0 && th[i - 1] == theta {
        return Ok(tau[i - 1]);
    }
    let seg = i.clamp(1, n - 1) - 1;

    let (mut lo, mut hi) = (tau[seg], tau[seg + 1]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if traj.theta_at(mid)? <= theta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
