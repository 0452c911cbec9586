//! Three-stage Gauss–Legendre collocation (order 6), fixed step, stages
//! solved by fixed-point iteration. Used to cross-check the adaptive solver.

use crate::error::{Error, Result};
use crate::flow::{check_sample_times, rhs_array, Trajectory};
use crate::model::{nan_max, NormalizedCovector, PhaseState};

type State = [f64; 6];

struct Tableau {
    a: [[f64; 3]; 3],
    b: [f64; 3],
}

fn tableau() -> Tableau {
    let r = 15f64.sqrt();
    Tableau {
        a: [
            [5.0 / 36.0, 2.0 / 9.0 - r / 15.0, 5.0 / 36.0 - r / 30.0],
            [5.0 / 36.0 + r / 24.0, 2.0 / 9.0, 5.0 / 36.0 - r / 24.0],
            [5.0 / 36.0 + r / 30.0, 2.0 / 9.0 + r / 15.0, 5.0 / 36.0],
        ],
        b: [5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0],
    }
}

const MAX_ITER: usize = 100;

fn step(tab: &Tableau, y: &State, h: f64) -> Option<State> {
    let f0 = rhs_array(y);
    let mut k = [f0; 3];
    for _ in 0..MAX_ITER {
        let mut next = [[0.0; 6]; 3];
        for (s, ks) in next.iter_mut().enumerate() {
            let mut ys = *y;
            for i in 0..6 {
                ys[i] += h * (0..3).map(|j| tab.a[s][j] * k[j][i]).sum::<f64>();
            }
            *ks = rhs_array(&ys);
        }
        let delta = (0..3)
            .flat_map(|s| (0..6).map(move |i| (s, i)))
            .map(|(s, i)| (next[s][i] - k[s][i]).abs() / (1.0 + k[s][i].abs()))
            .fold(0.0, nan_max);
        k = next;
        if delta <= 1e-15 {
            let mut out = *y;
            for i in 0..6 {
                out[i] += h * (0..3).map(|j| tab.b[j] * k[j][i]).sum::<f64>();
            }
            return Some(out);
        }
    }
    None
}

/// Integrates through `times` with steps no longer than `max_step`; each
/// sample interval is split into equal steps so samples are hit exactly.
pub fn integrate_gauss(c: &NormalizedCovector, times: &[f64], max_step: f64) -> Result<Trajectory> {
    check_sample_times(times)?;
    if max_step.is_nan() || max_step <= 0.0 {
        return Err(Error::domain(format!("step {max_step} must be positive")));
    }
    let tab = tableau();
    let mut y = c.initial_state().to_array();
    let mut states = vec![PhaseState::from_array(y)];
    for w in times.windows(2) {
        let n = ((w[1] - w[0]) / max_step).ceil().max(1.0) as usize;
        let h = (w[1] - w[0]) / n as f64;
        for j in 0..n {
            y = match step(&tab, &y, h) {
                Some(v) => v,
                None => {
                    let t = w[0] + j as f64 * h;
                    let n = states.len();
                    return Err(Error::Integration {
                        t,
                        reason: "collocation iteration did not converge".into(),
                        partial: Box::new(Trajectory::from_samples(times[..n].to_vec(), states)),
                    });
                }
            };
        }
        states.push(PhaseState::from_array(y));
    }
    Ok(Trajectory::from_samples(times.to_vec(), states))
}
