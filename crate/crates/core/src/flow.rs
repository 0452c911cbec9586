//! Numerical integration of the normal Hamiltonian system
//!
//! ```text
//! ẋ = ½ e^{-2z} p_x + ½ p_y      ṗ_x = 0
//! ẏ = ½ e^{2z} p_y + ½ p_x       ṗ_y = 0
//! ż = p_z                         ṗ_z = ½ e^{-2z} p_x² - ½ e^{2z} p_y²
//! ```
//!
//! from the identity. This is the reference the closed-form geodesics are
//! checked against, so it shares no code with them beyond the model.

mod dopri5;
mod gauss;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    admissibility_residual, hamiltonian, nan_max, sub_riemannian_speed, NormalizedCovector,
    PhaseState, Velocity,
};

pub use dopri5::{Dopri5, StepStats};
pub use gauss::integrate_gauss;

/// Right-hand side of the Hamiltonian system as `(ẋ, ẏ, ż, ṗ_x, ṗ_y, ṗ_z)`.
pub fn hamiltonian_rhs(s: &PhaseState) -> [f64; 6] {
    let e2 = (2.0 * s.point.z).exp();
    let em2 = (-2.0 * s.point.z).exp();
    [
        0.5 * em2 * s.px + 0.5 * s.py,
        0.5 * e2 * s.py + 0.5 * s.px,
        s.pz,
        0.0,
        0.0,
        0.5 * em2 * s.px * s.px - 0.5 * e2 * s.py * s.py,
    ]
}

pub(crate) fn rhs_array(y: &[f64; 6]) -> [f64; 6] {
    hamiltonian_rhs(&PhaseState::from_array(*y))
}

pub fn velocity(s: &PhaseState) -> Velocity {
    let d = hamiltonian_rhs(s);
    Velocity::new(d[0], d[1], d[2])
}

/// Per-sample invariant residuals.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Residual {
    /// `H - ½`.
    pub h_err: f64,
    pub px_drift: f64,
    pub py_drift: f64,
    /// Sub-Riemannian speed of the Hamiltonian velocity minus one.
    pub speed_err: f64,
    /// `ẏ - e^{2z} ẋ` of the Hamiltonian velocity.
    pub adm_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
    pub residuals: Vec<Residual>,
}

impl Trajectory {
    /// Assembles a trajectory and fills the residual record. The reference
    /// momenta for the drift columns are taken from the first state.
    pub fn from_samples(times: Vec<f64>, states: Vec<PhaseState>) -> Self {
        assert_eq!(times.len(), states.len());
        let (px0, py0) = states.first().map_or((0.0, 0.0), |s| (s.px, s.py));
        let residuals = states
            .iter()
            .map(|s| {
                let v = velocity(s);
                Residual {
                    h_err: hamiltonian(s) - 0.5,
                    px_drift: s.px - px0,
                    py_drift: s.py - py0,
                    speed_err: sub_riemannian_speed(s, &v) - 1.0,
                    adm_err: admissibility_residual(s, &v),
                }
            })
            .collect();
        Self {
            times,
            states,
            residuals,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&PhaseState> {
        self.states.last()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DriftReport {
    pub h: f64,
    pub px: f64,
    pub py: f64,
    pub speed: f64,
    pub admissibility: f64,
}

impl DriftReport {
    pub fn max(&self, other: &DriftReport) -> DriftReport {
        DriftReport {
            h: nan_max(self.h, other.h),
            px: nan_max(self.px, other.px),
            py: nan_max(self.py, other.py),
            speed: nan_max(self.speed, other.speed),
            admissibility: nan_max(self.admissibility, other.admissibility),
        }
    }
}

/// Worst absolute residuals over the trajectory.
pub fn invariant_drift(traj: &Trajectory) -> DriftReport {
    traj.residuals
        .iter()
        .fold(DriftReport::default(), |acc, r| DriftReport {
            h: nan_max(acc.h, r.h_err.abs()),
            px: nan_max(acc.px, r.px_drift.abs()),
            py: nan_max(acc.py, r.py_drift.abs()),
            speed: nan_max(acc.speed, r.speed_err.abs()),
            admissibility: nan_max(acc.admissibility, r.adm_err.abs()),
        })
}

fn check_tol(tol: f64) -> Result<()> {
    if !(1e-13..=1e-3).contains(&tol) {
        return Err(Error::domain(format!("tolerance {tol} outside [1e-13, 1e-3]")));
    }
    Ok(())
}

/// Integrates from `(0, 0, 0, √2 a, √2 b, pz0)` to `t_max`, sampling at every
/// accepted step.
pub fn integrate(c: &NormalizedCovector, t_max: f64, tol: f64) -> Result<Trajectory> {
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::domain(format!("t_max = {t_max} must be positive")));
    }
    check_tol(tol)?;
    let mut solver = Dopri5::new(tol, tol);
    let (times, states) = solver.solve_steps(c.initial_state().to_array(), t_max)?;
    Ok(Trajectory::from_samples(
        times,
        states.into_iter().map(PhaseState::from_array).collect(),
    ))
}

/// Integrates through the requested sample times using dense output. The
/// times must start at 0 and be strictly increasing.
pub fn integrate_at(c: &NormalizedCovector, times: &[f64], tol: f64) -> Result<Trajectory> {
    check_sample_times(times)?;
    check_tol(tol)?;
    let mut solver = Dopri5::new(tol, tol);
    let states = solver.solve_dense(c.initial_state().to_array(), times)?;
    Ok(Trajectory::from_samples(
        times.to_vec(),
        states.into_iter().map(PhaseState::from_array).collect(),
    ))
}

pub(crate) fn check_sample_times(times: &[f64]) -> Result<()> {
    match times.first() {
        None => return Err(Error::domain("empty sample time list")),
        Some(&t) if t != 0.0 => {
            return Err(Error::domain(format!("sample times must start at 0, got {t}")))
        }
        _ => {}
    }
    if let Some(w) = times
        .windows(2)
        .find(|w| w[1] <= w[0] || !w[1].is_finite())
    {
        return Err(Error::domain(format!(
            "sample times must be finite and strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// `n` equally spaced times on `[0, t_max]`, endpoints included.
pub fn uniform_times(t_max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    t_max
                } else {
                    t_max * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn cov(a: f64, b: f64, pz0: f64) -> NormalizedCovector {
        NormalizedCovector::new(a, b, pz0).unwrap()
    }

    #[test]
    fn rhs_examples() {
        assert_eq!(
            hamiltonian_rhs(&PhaseState::new(0.0, 0.0, 0.0, 0.0, 0.0, 1.0)),
            [0.0, 0.0, 1.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(
            hamiltonian_rhs(&PhaseState::new(0.0, 0.0, 0.0, 1.0, 1.0, 0.0)),
            [1.0, 1.0, 0.0, 0.0, 0.0, 0.0]
        );
        let d = hamiltonian_rhs(&PhaseState::new(0.0, 0.0, 0.0, SQRT_2 * 0.3, SQRT_2 * 0.3, 0.8));
        // ẋ = ẏ = (a + b)/√2
        assert!((d[0] - 0.6 / SQRT_2).abs() < 1e-15);
        assert!((d[1] - 0.6 / SQRT_2).abs() < 1e-15);
        assert_eq!(d[2], 0.8);
        assert!(d[5].abs() < 1e-15);
    }

    #[test]
    fn vertical_geodesic() {
        let tr = integrate(&cov(0.0, 0.0, 1.0), 2.0, 1e-12).unwrap();
        let end = tr.last().unwrap().point;
        assert_eq!(*tr.times.last().unwrap(), 2.0);
        assert!(end.x.abs() < 1e-14 && end.y.abs() < 1e-14);
        assert!((end.z - 2.0).abs() < 1e-12);
        let d = invariant_drift(&tr);
        assert!(d.h < 1e-13 && d.px == 0.0 && d.py == 0.0);
    }

    #[test]
    fn line_geodesic() {
        let tr = integrate(&cov(0.5, 0.5, 0.0), 1.0, 1e-12).unwrap();
        let end = tr.last().unwrap();
        assert!((end.point.x - FRAC_1_SQRT_2).abs() < 1e-13);
        assert!((end.point.y - FRAC_1_SQRT_2).abs() < 1e-13);
        assert!(end.point.z.abs() < 1e-13);
        assert!(tr.states.iter().all(|s| s.pz.abs() <= 1e-12));
    }

    #[test]
    fn regression_endpoint_a03() {
        // Frozen from the Gauss-Legendre cross-check (fixed step 1e-3).
        let c = cov(0.3, 0.3, 0.8);
        let tr = integrate_at(&c, &[0.0, 3.0], 1e-12).unwrap();
        let end = tr.last().unwrap();
        let gl = integrate_gauss(&c, &[0.0, 3.0], 1e-3).unwrap();
        assert!(end.max_abs_diff(gl.last().unwrap()) < 1e-9);
    }

    #[test]
    fn dense_output_matches_step_grid() {
        let c = NormalizedCovector::from_ab(0.2, -0.4, true).unwrap();
        let steps = integrate(&c, 4.0, 1e-11).unwrap();
        let dense = integrate_at(&c, &uniform_times(4.0, 37), 1e-11).unwrap();
        assert!(steps.last().unwrap().max_abs_diff(dense.last().unwrap()) < 1e-9);
        let gl = integrate_gauss(&c, &uniform_times(4.0, 37), 1e-3).unwrap();
        for (s, g) in dense.states.iter().zip(&gl.states) {
            assert!(s.max_abs_diff(g) < 1e-8);
        }
    }

    #[test]
    fn invalid_arguments() {
        let c = cov(0.0, 0.0, 1.0);
        assert!(integrate(&c, 0.0, 1e-10).is_err());
        assert!(integrate(&c, 1.0, 1e-14).is_err());
        assert!(integrate(&c, 1.0, 1e-2).is_err());
        assert!(integrate_at(&c, &[0.1, 1.0], 1e-10).is_err());
        assert!(integrate_at(&c, &[0.0, 1.0, 1.0], 1e-10).is_err());
    }

    #[test]
    fn blow_up_reports_partial_trajectory() {
        let mut solver = Dopri5::new(1e-12, 1e-12).with_max_steps(5);
        let err = solver
            .solve_steps(cov(0.3, 0.3, 0.8).initial_state().to_array(), 100.0)
            .unwrap_err();
        match err {
            Error::Integration { partial, .. } => assert!(!partial.is_empty()),
            e => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn uniform_time_grid() {
        assert_eq!(uniform_times(2.0, 3), vec![0.0, 1.0, 2.0]);
        assert_eq!(uniform_times(5.0, 1), vec![0.0]);
    }
}
