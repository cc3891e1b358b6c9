//! Dormand–Prince 5(4) embedded Runge–Kutta pair with PI step-size control
//! and the standard fourth-order continuous extension.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const PI_BETA: f64 = 0.04;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Upper bound on the step size; `None` means the integration span.
    pub h_max: Option<f64>,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rtol: 1e-8,
            atol: 1e-10,
            max_steps: 1_000_000,
            h_max: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Continuous extension over the last accepted step.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    coef: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.coef;
        std::array::from_fn(|i| {
            r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])))
        })
    }
}

/// Adaptive Dormand–Prince integrator over a fixed-size state.
pub struct Dopri5<F, const N: usize> {
    f: F,
    control: StepControl,
    t: f64,
    y: [f64; N],
    k1: [f64; N],
    h: f64,
    err_old: f64,
    stats: StepStats,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        y[i] + h * acc
    })
}

impl<F, const N: usize> Dopri5<F, N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    pub fn new(mut f: F, t0: f64, y0: [f64; N], t_end: f64, control: StepControl) -> Self {
        let k1 = f(t0, &y0);
        let mut solver = Dopri5 {
            f,
            control,
            t: t0,
            y: y0,
            k1,
            h: 0.0,
            err_old: 1e-4,
            stats: StepStats { evaluations: 1, ..Default::default() },
        };
        solver.h = solver.initial_step(t_end - t0);
        solver
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64; N] {
        &self.y
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    /// Replaces the current state, e.g. after a projection onto an invariant set.
    pub fn reset_state(&mut self, y: [f64; N]) {
        self.y = y;
        self.k1 = (self.f)(self.t, &y);
        self.stats.evaluations += 1;
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.control.atol + self.control.rtol * a.abs().max(b.abs())
    }

    fn initial_step(&mut self, span: f64) -> f64 {
        let h_max = self.control.h_max.unwrap_or(span).min(span);
        let mut d0: f64 = 0.0;
        let mut d1: f64 = 0.0;
        for i in 0..N {
            let sk = self.scale(self.y[i], 0.0);
            d0 = d0.max((self.y[i] / sk).abs());
            d1 = d1.max((self.k1[i] / sk).abs());
        }
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }.min(h_max);
        let y1 = axpy(&self.y, h0, &[(1.0, &self.k1)]);
        let f1 = (self.f)(self.t + h0, &y1);
        self.stats.evaluations += 1;
        let d2 = (0..N)
            .map(|i| ((f1[i] - self.k1[i]) / self.scale(self.y[i], 0.0)).abs())
            .fold(0.0, f64::max)
            / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(h_max)
    }

    /// Advances by one accepted step, never past `t_end`.
    pub fn step(&mut self, t_end: f64) -> Result<DenseStep<N>> {
        let h_max = self.control.h_max.unwrap_or(f64::INFINITY);
        let expo = 0.2 - PI_BETA * 0.75;
        loop {
            if self.stats.accepted + self.stats.rejected >= self.control.max_steps {
                return Err(Error::MaxStepsExceeded(self.control.max_steps));
            }
            let mut h = self.h.min(h_max);
            let remaining = t_end - self.t;
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            if h.abs() <= 1e-14 * self.t.abs().max(1.0) {
                return Err(Error::StepFailure { t: self.t, h });
            }

            let (t, y) = (self.t, self.y);
            let f = &mut self.f;
            let k1 = self.k1;
            let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
            let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(
                t + C5 * h,
                &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = f(
                t + h,
                &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let k7 = f(t + h, &y_new);
            self.stats.evaluations += 6;

            let mut err: f64 = 0.0;
            for i in 0..N {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                err = err.max((e / self.scale(y[i], y_new[i])).abs());
            }
            if !err.is_finite() {
                self.stats.rejected += 1;
                self.h = h * FAC_MIN;
                continue;
            }

            let fac11 = err.powf(expo);
            if err <= 1.0 {
                let fac = (fac11 / self.err_old.powf(PI_BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                self.err_old = err.max(1e-4);
                self.stats.accepted += 1;

                let coef = {
                    let r2: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
                    let r3: [f64; N] = std::array::from_fn(|i| h * k1[i] - r2[i]);
                    let r4: [f64; N] = std::array::from_fn(|i| r2[i] - h * k7[i] - r3[i]);
                    let r5: [f64; N] = std::array::from_fn(|i| {
                        h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                    });
                    [y, r2, r3, r4, r5]
                };
                self.t = if last { t_end } else { t + h };
                self.y = y_new;
                self.k1 = k7;
                // Keep the proposed step for the next call rather than the truncated final one.
                self.h = if last { self.h } else { h / fac };
                return Ok(DenseStep { t0: t, h, coef });
            }
            self.stats.rejected += 1;
            self.h = h / (fac11 / SAFETY).min(1.0 / FAC_MIN);
        }
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`, recording every accepted step.
pub fn solve<F, const N: usize>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    control: StepControl,
) -> Result<(Vec<f64>, Vec<[f64; N]>, StepStats)>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut solver = Dopri5::new(f, t0, y0, t_end, control);
    let mut ts = vec![t0];
    let mut ys = vec![y0];
    while solver.t() < t_end {
        solver.step(t_end)?;
        ts.push(solver.t());
        ys.push(*solver.y());
    }
    Ok((ts, ys, solver.stats()))
}
