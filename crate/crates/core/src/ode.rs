//! Embedded Dormand-Prince 5(4) integrator with dense output.
//!
//! Classic explicit Runge-Kutta pair: the fifth-order solution propagates,
//! the embedded fourth-order solution provides the per-step error estimate,
//! and the first-same-as-last property recycles the seventh stage. Each
//! accepted step exposes a quartic interpolant so event times can be located
//! without shrinking steps.

use crate::error::Error;

// Nodes.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

// Stage coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

// Fifth-order weights (also the seventh stage row).
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Dense-output weights.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// Step controller.
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
const ORDER_EXP: f64 = -0.2; // 1 / (order + 1) for the fifth-order pair

/// One accepted step with its quartic interpolant.
#[derive(Debug, Clone, Copy)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    cont: [[f64; N]; 5],
}

impl<const N: usize> Step<N> {
    /// Interpolated state at t inside [t0, t1].
    pub fn eval(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let s = (t - self.t0) / h;
        let s1 = 1.0 - s;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = self.cont[0][i]
                + s * (self.cont[1][i]
                    + s1 * (self.cont[2][i] + s * (self.cont[3][i] + s1 * self.cont[4][i])));
        }
        out
    }

    /// Time in [t0, t1] where g(y(t)) crosses zero, located by bisection on
    /// the interpolant. None when g does not change sign over the step.
    pub fn find_root<G: Fn(&[f64; N]) -> f64>(&self, g: G) -> Option<f64> {
        let g0 = g(&self.y0);
        let g1 = g(&self.y1);
        if g0 == 0.0 {
            return Some(self.t0);
        }
        if g1 == 0.0 {
            return Some(self.t1);
        }
        if g0.signum() == g1.signum() {
            return None;
        }
        let (mut lo, mut hi) = (self.t0, self.t1);
        let mut g_lo = g0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let gm = g(&self.eval(mid));
            if gm == 0.0 {
                return Some(mid);
            }
            if gm.signum() == g_lo.signum() {
                lo = mid;
                g_lo = gm;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

/// Driver state for one initial-value integration.
pub struct Integrator<const N: usize, F: Fn(f64, &[f64; N]) -> [f64; N]> {
    f: F,
    t: f64,
    y: [f64; N],
    k1: [f64; N],
    h: f64,
    rtol: f64,
    atol: f64,
    h_max: f64,
    max_steps: usize,
    accepted: usize,
    rejected: usize,
    last_rejected: bool,
}

impl<const N: usize, F: Fn(f64, &[f64; N]) -> [f64; N]> Integrator<N, F> {
    pub fn new(f: F, t0: f64, y0: [f64; N], rtol: f64, atol: f64) -> Self {
        let k1 = f(t0, &y0);
        Integrator {
            f,
            t: t0,
            y: y0,
            k1,
            h: 1e-3,
            rtol,
            atol,
            h_max: f64::INFINITY,
            max_steps: 200_000,
            accepted: 0,
            rejected: 0,
            last_rejected: false,
        }
    }

    /// Initial step size (forward integration only).
    pub fn with_h0(mut self, h0: f64) -> Self {
        self.h = h0.abs().max(f64::MIN_POSITIVE);
        self
    }

    /// Cap on the step size.
    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max.abs();
        self
    }

    /// Cap on accepted plus rejected steps.
    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64; N] {
        &self.y
    }

    pub fn accepted(&self) -> usize {
        self.accepted
    }

    pub fn rejected(&self) -> usize {
        self.rejected
    }

    /// Advance by one accepted step and return it with its interpolant.
    pub fn step(&mut self) -> Result<Step<N>, Error> {
        loop {
            if self.accepted + self.rejected >= self.max_steps {
                return Err(Error::StepBudgetExceeded(self.max_steps));
            }
            let h = self.h.min(self.h_max);
            if h <= 16.0 * f64::EPSILON * self.t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { tau: self.t, h });
            }

            let (t, y, k1) = (self.t, self.y, self.k1);
            let f = &self.f;
            let stage = |c: f64, add: &dyn Fn(usize) -> f64| {
                let mut ya = [0.0; N];
                for i in 0..N {
                    ya[i] = y[i] + h * add(i);
                }
                f(t + c * h, &ya)
            };

            let k2 = stage(C2, &|i| A21 * k1[i]);
            let k3 = stage(C3, &|i| A31 * k1[i] + A32 * k2[i]);
            let k4 = stage(C4, &|i| A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            let k5 = stage(C5, &|i| {
                A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]
            });
            let k6 = stage(1.0, &|i| {
                A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]
            });

            let mut y1 = [0.0; N];
            for i in 0..N {
                y1[i] = y[i]
                    + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
            }
            let k7 = (self.f)(t + h, &y1);

            // Weighted RMS of the embedded error.
            let mut err_sq = 0.0;
            for i in 0..N {
                let e = h
                    * (E1 * k1[i]
                        + E3 * k3[i]
                        + E4 * k4[i]
                        + E5 * k5[i]
                        + E6 * k6[i]
                        + E7 * k7[i]);
                let scale = self.atol + self.rtol * y[i].abs().max(y1[i].abs());
                err_sq += (e / scale) * (e / scale);
            }
            let err_norm = (err_sq / N as f64).sqrt();

            let factor = if err_norm == 0.0 {
                FAC_MAX
            } else {
                (SAFETY * err_norm.powf(ORDER_EXP)).clamp(FAC_MIN, FAC_MAX)
            };

            if err_norm <= 1.0 {
                let mut cont = [[0.0; N]; 5];
                for i in 0..N {
                    let dy = y1[i] - y[i];
                    let bspl = h * k1[i] - dy;
                    cont[0][i] = y[i];
                    cont[1][i] = dy;
                    cont[2][i] = bspl;
                    cont[3][i] = dy - h * k7[i] - bspl;
                    cont[4][i] = h
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i]);
                }
                let step = Step {
                    t0: t,
                    t1: t + h,
                    y0: y,
                    y1,
                    cont,
                };
                self.t = t + h;
                self.y = y1;
                self.k1 = k7; // first-same-as-last
                self.accepted += 1;
                // No growth right after a rejection, per usual practice.
                self.h = h * if self.last_rejected {
                    factor.min(1.0)
                } else {
                    factor
                };
                self.last_rejected = false;
                return Ok(step);
            }

            self.rejected += 1;
            self.last_rejected = true;
            self.h = h * factor;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn exponential_growth_to_tolerance() {
        let mut ode = Integrator::new(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 1e-10, 1e-12)
            .with_h0(1e-3);
        // Step past t = 1 and read the crossing off the interpolant.
        let step = loop {
            let s = ode.step().unwrap();
            if s.t1 >= 1.0 {
                break s;
            }
        };
        let y = step.eval(1.0)[0];
        assert!(
            (y - std::f64::consts::E).abs() < 1e-8,
            "y(1) = {y}, expected e"
        );
    }

    #[test]
    fn oscillator_conserves_energy() {
        // y'' = -y as a first-order pair; integrate ten periods.
        let mut ode = Integrator::new(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            1e-10,
            1e-12,
        )
        .with_h0(1e-2);
        let t_end = 20.0 * PI;
        while ode.t() < t_end {
            ode.step().unwrap();
        }
        let y = ode.y();
        let energy = y[0] * y[0] + y[1] * y[1];
        assert!((energy - 1.0).abs() < 1e-7, "energy drifted to {energy}");
    }

    #[test]
    fn dense_output_tracks_the_tolerance() {
        // y' = cos t. The interpolant error constant sits a little above
        // the step error constant, and both scale as h^5, so the worst
        // dense error must fall linearly with the tolerance.
        let worst_at = |rtol: f64| {
            let mut ode =
                Integrator::new(|t: f64, _: &[f64; 1]| [t.cos()], 0.0, [0.0], rtol, 1e-2 * rtol)
                    .with_h0(0.05);
            let mut worst: f64 = 0.0;
            while ode.t() < 6.0 {
                let step = ode.step().unwrap();
                for frac in [0.25, 0.5, 0.75] {
                    let t = step.t0 + frac * (step.t1 - step.t0);
                    let err = (step.eval(t)[0] - t.sin()).abs();
                    worst = worst.max(err);
                }
            }
            worst
        };
        let loose = worst_at(1e-8);
        assert!(loose < 5e-7, "dense output off by {loose:e} at rtol 1e-8");
        let tight = worst_at(1e-10);
        assert!(tight < 5e-9, "dense output off by {tight:e} at rtol 1e-10");
        assert!(
            tight < loose / 20.0,
            "interpolant error should scale with tolerance: {loose:e} -> {tight:e}"
        );
    }

    #[test]
    fn root_finding_on_a_step() {
        // Lift y' = 1 across y = 2.5 and locate the crossing.
        let mut ode =
            Integrator::new(|_, _: &[f64; 1]| [1.0], 0.0, [0.0], 1e-9, 1e-12).with_h0(1.0);
        let step = loop {
            let s = ode.step().unwrap();
            if s.y1[0] >= 2.5 {
                break s;
            }
        };
        let t_cross = step.find_root(|y| y[0] - 2.5).unwrap();
        assert!((t_cross - 2.5).abs() < 1e-10, "crossing at {t_cross}");
        // No sign change means no root.
        assert!(step.find_root(|y| y[0] - 100.0).is_none());
    }

    #[test]
    fn step_budget_is_enforced() {
        let mut ode = Integrator::new(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 1e-12, 1e-14)
            .with_h0(1e-6)
            .with_h_max(1e-6)
            .with_max_steps(50);
        let err = loop {
            match ode.step() {
                Ok(_) => continue,
                Err(e) => break e,
            }
        };
        assert!(matches!(err, Error::StepBudgetExceeded(50)));
    }

    #[test]
    fn discontinuity_collapses_the_step() {
        // A jump in the right-hand side defeats the error estimate, so the
        // controller shrinks h until it underflows.
        let mut ode = Integrator::new(
            |t: f64, _: &[f64; 1]| [if t < 0.5 { 0.0 } else { 1e6 }],
            0.0,
            [0.0],
            1e-14,
            1e-16,
        )
        .with_h0(0.4);
        let err = loop {
            match ode.step() {
                Ok(_) => continue,
                Err(e) => break e,
            }
        };
        assert!(
            matches!(err, Error::StepSizeUnderflow { .. } | Error::StepBudgetExceeded(_)),
            "unexpected error {err:?}"
        );
    }
}
