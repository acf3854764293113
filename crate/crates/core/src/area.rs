//! The first integral of the damped area equation.
//!
//! Multiplying theta'' = M^2 exp(-lambda theta/2) sin theta by theta' and
//! integrating from theta = 0 gives
//!
//!   theta'^2 = M^2 B(theta) / (1 + lambda^2/4),
//!   B(theta) = 2 - exp(-lambda theta/2) (2 cos theta + lambda sin theta).
//!
//! B vanishes quadratically at theta = 0, so the textbook expression loses
//! half its digits there to cancellation. Below a crossover this module
//! sums the series
//!
//!   B = 2 (1 + a^2) Im sum_{k>=1} (i - a)^k theta^{k+1} / (k+1)!,  a = lambda/2,
//!
//! and above it regroups the closed form around expm1 and half-angle terms
//! so that the undamped limit reduces to 4 sin^2(theta/2) exactly.

use crate::error::Error;
use crate::model::ModelParams;
use std::sync::atomic::{AtomicU64, Ordering};

/// Below this value of theta * sqrt(1 + a^2) the series form is used.
pub(crate) const SERIES_CROSSOVER: f64 = 0.5;

/// Radicand values in (-RADICAND_CLAMP, 0) snap to zero; anything more
/// negative is a hard error.
const RADICAND_CLAMP: f64 = 1e-12;

/// Process-wide count of radicand clamps, for diagnostics.
static CLAMP_COUNT: AtomicU64 = AtomicU64::new(0);

/// Number of times a slightly negative radicand was snapped to zero since
/// start or the last [`reset_clamp_count`].
pub fn clamp_count() -> u64 {
    CLAMP_COUNT.load(Ordering::Relaxed)
}

/// Reset the clamp diagnostic counter.
pub fn reset_clamp_count() {
    CLAMP_COUNT.store(0, Ordering::Relaxed);
}

/// The energy bracket B(theta); non-negative for theta >= 0.
pub fn area_bracket(theta: f64, lambda: f64) -> f64 {
    let a = 0.5 * lambda;
    let one_plus_a2 = 1.0 + a * a;
    if theta.abs() * one_plus_a2.sqrt() < SERIES_CROSSOVER {
        return series_bracket(theta, a, one_plus_a2);
    }
    // 2 [ -expm1(-a theta) (cos theta + a sin theta) + 2 sin^2(theta/2)
    //     - a sin theta ]; the grouping avoids the 2 - 2 cos theta
    // cancellation and reduces to 4 sin^2(theta/2) when lambda = 0.
    let (sin_t, cos_t) = theta.sin_cos();
    let half_sin = (0.5 * theta).sin();
    2.0 * ((-(-a * theta).exp_m1()) * (cos_t + a * sin_t) + 2.0 * half_sin * half_sin
        - a * sin_t)
}

/// Series form of B for small theta, summed in complex arithmetic.
fn series_bracket(theta: f64, a: f64, one_plus_a2: f64) -> f64 {
    if theta == 0.0 {
        return 0.0;
    }
    // t_k = (i - a)^k theta^{k+1} / (k+1)!, starting at k = 1.
    let mut term_re = -a * theta * theta / 2.0;
    let mut term_im = theta * theta / 2.0;
    let mut sum_im = term_im;
    for k in 1..40 {
        // t_{k+1} = t_k * (i - a) * theta / (k + 2)
        let f = theta / (k + 2) as f64;
        let re = (-a * term_re - term_im) * f;
        let im = (term_re - a * term_im) * f;
        term_re = re;
        term_im = im;
        sum_im += term_im;
        if term_re.abs() + term_im.abs() < 1e-18 * sum_im.abs() {
            break;
        }
    }
    2.0 * one_plus_a2 * sum_im
}

/// dB/dtheta = 2 (1 + a^2) exp(-a theta) sin theta. Vanishing exactly at
/// theta = n pi, it places the envelope extrema on the multiples of pi.
pub fn area_bracket_deriv(theta: f64, lambda: f64) -> f64 {
    let a = 0.5 * lambda;
    2.0 * (1.0 + a * a) * (-a * theta).exp() * theta.sin()
}

/// Area growth rate on the branch launched from theta = 0:
/// theta' = M sqrt(B / (1 + a^2)).
pub fn theta_dot(theta: f64, params: &ModelParams) -> Result<f64, Error> {
    let a = 0.5 * params.lambda();
    let radicand = area_bracket(theta, params.lambda()) / (1.0 + a * a);
    Ok(params.m() * guarded_sqrt(radicand, theta)?)
}

/// sqrt with the documented tolerance for rounding noise: radicands in
/// (-1e-12, 0) count as zero and bump the clamp counter, anything more
/// negative reports a genuine domain violation.
pub(crate) fn guarded_sqrt(radicand: f64, theta: f64) -> Result<f64, Error> {
    if radicand >= 0.0 {
        return Ok(radicand.sqrt());
    }
    if radicand > -RADICAND_CLAMP {
        CLAMP_COUNT.fetch_add(1, Ordering::Relaxed);
        return Ok(0.0);
    }
    Err(Error::NegativeRadicand {
        theta,
        value: radicand,
    })
}
