//! Dormand–Prince 5(4) with PI step-size control and the order-4 continuous
//! extension of Hairer & Wanner's DOPRI5.

use crate::error::{Error, Result};
use crate::flow::{rhs_array, Trajectory};
use crate::model::PhaseState;

type State = [f64; 6];

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
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Continuous extension over the last accepted step.
struct Dense {
    t_old: f64,
    h: f64,
    r: [State; 5],
}

impl Dense {
    fn eval(&self, t: f64) -> State {
        let theta = (t - self.t_old) / self.h;
        let theta1 = 1.0 - theta;
        let mut out = [0.0; 6];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.r[0][i]
                + theta
                    * (self.r[1][i]
                        + theta1 * (self.r[2][i] + theta * (self.r[3][i] + theta1 * self.r[4][i])));
        }
        out
    }
}

/// Adaptive integrator for the Hamiltonian vector field.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    rtol: f64,
    atol: f64,
    max_steps: usize,
    stats: StepStats,
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            max_steps: 1_000_000,
            stats: StepStats::default(),
        }
    }

    pub fn with_max_steps(mut self, n: usize) -> Self {
        self.max_steps = n;
        self
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    fn error_norm(&self, y: &State, y_new: &State, err: &State) -> f64 {
        let sum: f64 = (0..6)
            .map(|i| {
                let sk = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                (err[i] / sk).powi(2)
            })
            .sum();
        (sum / 6.0).sqrt()
    }

    fn initial_step(&mut self, y: &State, f0: &State, t_end: f64) -> f64 {
        let scale = |i: usize| self.atol + self.rtol * y[i].abs();
        let d0 = (0..6).map(|i| (y[i] / scale(i)).powi(2)).sum::<f64>().sqrt();
        let d1 = (0..6).map(|i| (f0[i] / scale(i)).powi(2)).sum::<f64>().sqrt();
        let h0 = if d0 < 1e-10 || d1 < 1e-10 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min(t_end);
        let mut y1 = *y;
        for i in 0..6 {
            y1[i] += h0 * f0[i];
        }
        let f1 = rhs_array(&y1);
        self.stats.evaluations += 1;
        let d2 = (0..6)
            .map(|i| ((f1[i] - f0[i]) / scale(i)).powi(2))
            .sum::<f64>()
            .sqrt()
            / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(t_end)
    }

    /// Core loop; `on_step` sees every accepted step with its interpolant.
    fn run(
        &mut self,
        y0: State,
        t_end: f64,
        mut on_step: impl FnMut(f64, &State, &Dense),
    ) -> std::result::Result<(), (f64, String)> {
        let mut t = 0.0;
        let mut y = y0;
        let mut k1 = rhs_array(&y);
        self.stats.evaluations += 1;
        let mut h = self.initial_step(&y, &k1, t_end);
        let mut err_old: f64 = 1e-4;
        let mut reject = false;

        while t < t_end {
            if self.stats.accepted + self.stats.rejected >= self.max_steps {
                return Err((t, format!("step budget of {} exhausted", self.max_steps)));
            }
            if t + 1.01 * h >= t_end {
                h = t_end - t;
            }
            if h.abs() <= 10.0 * f64::EPSILON * t.abs().max(1.0) {
                return Err((t, format!("step size underflow (h = {h:e})")));
            }

            let mut s = [0.0; 6];
            let stage = |s: &mut State, f: &dyn Fn(usize) -> f64| {
                for i in 0..6 {
                    s[i] = y[i] + h * f(i);
                }
            };
            stage(&mut s, &|i| A21 * k1[i]);
            let k2 = rhs_array(&s);
            stage(&mut s, &|i| A31 * k1[i] + A32 * k2[i]);
            let k3 = rhs_array(&s);
            stage(&mut s, &|i| A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            let k4 = rhs_array(&s);
            stage(&mut s, &|i| {
                A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]
            });
            let k5 = rhs_array(&s);
            stage(&mut s, &|i| {
                A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]
            });
            let k6 = rhs_array(&s);
            let mut y_new = [0.0; 6];
            for i in 0..6 {
                y_new[i] = y[i]
                    + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            let k7 = rhs_array(&y_new);
            self.stats.evaluations += 6;

            let mut err = [0.0; 6];
            for i in 0..6 {
                err[i] = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            }
            let en = self.error_norm(&y, &y_new, &err);
            if !en.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                self.stats.rejected += 1;
                h *= FAC_MIN;
                reject = true;
                continue;
            }

            // PI controller (Gustafsson), as in DOPRI5.
            let expo = 0.2 - 0.75 * BETA;
            let fac11 = en.powf(expo);
            if en <= 1.0 {
                let fac = (fac11 / err_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut h_new = h / fac;
                if reject {
                    h_new = h_new.min(h);
                }
                err_old = en.max(1e-4);

                let mut dense = Dense {
                    t_old: t,
                    h,
                    r: [[0.0; 6]; 5],
                };
                for i in 0..6 {
                    let ydiff = y_new[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    dense.r[0][i] = y[i];
                    dense.r[1][i] = ydiff;
                    dense.r[2][i] = bspl;
                    dense.r[3][i] = ydiff - h * k7[i] - bspl;
                    dense.r[4][i] = h
                        * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                            + D7 * k7[i]);
                }

                let last = t + h >= t_end;
                t = if last { t_end } else { t + h };
                y = y_new;
                k1 = k7;
                self.stats.accepted += 1;
                on_step(t, &y, &dense);
                h = h_new;
                reject = false;
            } else {
                h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
                self.stats.rejected += 1;
                reject = true;
            }
        }
        Ok(())
    }

    /// Returns the state at `t = 0` and after every accepted step.
    pub fn solve_steps(&mut self, y0: State, t_end: f64) -> Result<(Vec<f64>, Vec<State>)> {
        let mut times = vec![0.0];
        let mut states = vec![y0];
        let res = self.run(y0, t_end, |t, y, _| {
            times.push(t);
            states.push(*y);
        });
        match res {
            Ok(()) => Ok((times, states)),
            Err((t, reason)) => Err(partial_error(t, reason, times, states)),
        }
    }

    /// Returns the state at each requested time (increasing, starting at 0).
    pub fn solve_dense(&mut self, y0: State, times: &[f64]) -> Result<Vec<State>> {
        let t_end = *times.last().expect("non-empty sample times");
        let mut out = Vec::with_capacity(times.len());
        let mut next = 0;
        while next < times.len() && times[next] <= 0.0 {
            out.push(y0);
            next += 1;
        }
        if next == times.len() {
            return Ok(out);
        }
        let res = self.run(y0, t_end, |t, y, dense| {
            while next < times.len() && times[next] <= t {
                out.push(if times[next] == t { *y } else { dense.eval(times[next]) });
                next += 1;
            }
        });
        match res {
            Ok(()) => Ok(out),
            Err((t, reason)) => {
                let n = out.len();
                Err(partial_error(t, reason, times[..n].to_vec(), out))
            }
        }
    }
}

fn partial_error(t: f64, reason: String, times: Vec<f64>, states: Vec<State>) -> Error {
    Error::Integration {
        t,
        reason,
        partial: Box::new(Trajectory::from_samples(
            times,
            states.into_iter().map(PhaseState::from_array).collect(),
        )),
    }
}
