//! Sampling of geodesic spheres from the identity.
//!
//! A grid node `(θ, μ)` selects the unit covector with
//! `a + b = cos θ`, `p_z(0) = sin θ` and initial acceleration
//! `(x + y)''(0) = √2 p_z(0) (b - a) = μ`.

use std::f64::consts::{FRAC_PI_6, SQRT_2};

use rayon::prelude::*;
use serde::Serialize;

use crate::closedform::{self, GeodesicCase};
use crate::error::{Error, Result};
use crate::flow;
use crate::model::{hamiltonian, nan_max, GroupPoint, NormalizedCovector};

/// Tolerance of the numerical fallback.
const FALLBACK_TOL: f64 = 1e-12;
/// A closed-form endpoint whose `H` is off by more than this is recomputed
/// numerically.
const LEVEL_SET_SLACK: f64 = 1e-8;

/// Empirical bound `‖p‖ <= C r` on the Euclidean norm of sphere points,
/// measured over the default grid for `r` in `(0, 0.25]` (observed maximum
/// ratio 1.0011 at `r = 0.25`).
pub const NORM_RATIO_BOUND: f64 = 1.01;

pub fn covector_from_grid(theta: f64, mu: f64) -> Result<NormalizedCovector> {
    if !(theta.is_finite() && mu.is_finite()) {
        return Err(Error::domain(format!("non-finite grid node ({theta}, {mu})")));
    }
    let (s, c) = theta.sin_cos();
    if s == 0.0 {
        if mu != 0.0 {
            return Err(Error::domain(format!(
                "μ = {mu} requires sin θ ≠ 0 (θ = {theta})"
            )));
        }
        return NormalizedCovector::new(0.5 * c, 0.5 * c, 0.0);
    }
    let diff = mu / (SQRT_2 * s);
    NormalizedCovector::new(0.5 * (c - diff), 0.5 * (c + diff), s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphereSpec {
    pub radius: f64,
    pub theta_range: (f64, f64),
    pub mu_range: (f64, f64),
    pub n_theta: usize,
    pub n_mu: usize,
}

impl SphereSpec {
    /// Default ranges `θ ∈ [π/6, 5π/6]`, `μ ∈ [-45, 45]` on a 32×32 grid.
    pub fn new(radius: f64) -> Self {
        Self {
            radius,
            theta_range: (FRAC_PI_6, 5.0 * FRAC_PI_6),
            mu_range: (-45.0, 45.0),
            n_theta: 32,
            n_mu: 32,
        }
    }

    pub fn with_grid(mut self, n_theta: usize, n_mu: usize) -> Self {
        self.n_theta = n_theta;
        self.n_mu = n_mu;
        self
    }

    /// The same grid over `θ ∈ [-θ_max, -θ_min]`.
    pub fn mirrored(&self) -> Self {
        Self {
            theta_range: (-self.theta_range.1, -self.theta_range.0),
            ..*self
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::domain(format!("radius {} must be positive", self.radius)));
        }
        if self.n_theta < 2 || self.n_mu < 2 {
            return Err(Error::domain(format!(
                "grid {}x{} needs at least two nodes per axis",
                self.n_theta, self.n_mu
            )));
        }
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !ok(self.theta_range) || !ok(self.mu_range) {
            return Err(Error::domain("ranges must be finite with min <= max"));
        }
        Ok(())
    }

    pub fn theta(&self, i: usize) -> f64 {
        lerp(self.theta_range, i, self.n_theta)
    }

    pub fn mu(&self, j: usize) -> f64 {
        lerp(self.mu_range, j, self.n_mu)
    }
}

fn lerp((lo, hi): (f64, f64), i: usize, n: usize) -> f64 {
    if i + 1 == n {
        hi
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpherePoint {
    pub theta: f64,
    pub mu: f64,
    /// Endpoint; NaN when the node failed.
    pub point: GroupPoint,
    pub case: Option<GeodesicCase>,
    /// Endpoint came from the numerical flow instead of the closed form.
    pub fallback: bool,
    pub error: Option<String>,
}

impl SpherePoint {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereGrid {
    pub spec: SphereSpec,
    /// Row-major: `θ` index outer, `μ` index inner.
    pub points: Vec<SpherePoint>,
}

impl SphereGrid {
    pub fn get(&self, i: usize, j: usize) -> &SpherePoint {
        &self.points[i * self.spec.n_mu + j]
    }

    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| !p.is_ok()).count()
    }

    pub fn fallbacks(&self) -> usize {
        self.points.iter().filter(|p| p.fallback).count()
    }
}

fn endpoint(c: &NormalizedCovector, r: f64) -> Result<(GroupPoint, bool)> {
    if let Ok(s) = closedform::eval(c, r) {
        if s.is_finite() && (hamiltonian(&s) - 0.5).abs() <= LEVEL_SET_SLACK {
            return Ok((s.point, false));
        }
    }
    let tr = flow::integrate_at(c, &[0.0, r], FALLBACK_TOL)?;
    let end = tr.last().expect("two samples");
    Ok((end.point, true))
}

fn sample_node(spec: &SphereSpec, i: usize, j: usize) -> SpherePoint {
    let (theta, mu) = (spec.theta(i), spec.mu(j));
    let nan = GroupPoint::new(f64::NAN, f64::NAN, f64::NAN);
    let c = match covector_from_grid(theta, mu) {
        Ok(c) => c,
        Err(e) => {
            return SpherePoint {
                theta,
                mu,
                point: nan,
                case: None,
                fallback: false,
                error: Some(e.to_string()),
            }
        }
    };
    let case = Some(closedform::branch(&c));
    match endpoint(&c, spec.radius) {
        Ok((point, fallback)) => SpherePoint {
            theta,
            mu,
            point,
            case,
            fallback,
            error: None,
        },
        Err(e) => SpherePoint {
            theta,
            mu,
            point: nan,
            case,
            fallback: true,
            error: Some(e.to_string()),
        },
    }
}

/// Evaluates the endpoint at arc length `spec.radius` for every grid node.
/// Nodes are computed in parallel; the output order is always row-major.
pub fn sample_sphere(spec: &SphereSpec) -> Result<SphereGrid> {
    spec.validate()?;
    let n_mu = spec.n_mu;
    let points = (0..spec.n_theta * n_mu)
        .into_par_iter()
        .map(|idx| sample_node(spec, idx / n_mu, idx % n_mu))
        .collect();
    Ok(SphereGrid {
        spec: *spec,
        points,
    })
}

/// Largest deviation between `g` and the swap-reflection of `mirror`, where
/// `mirror` was sampled from `g.spec.mirrored()`. Node `(i, j)` of the mirror
/// grid sits at `-θ` of node `(n - 1 - i, j)`.
pub fn mirror_deviation(g: &SphereGrid, mirror: &SphereGrid) -> Result<f64> {
    if mirror.spec != g.spec.mirrored() {
        return Err(Error::domain("grids are not mirror images"));
    }
    let n = g.spec.n_theta;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..g.spec.n_mu {
            let p = g.get(n - 1 - i, j);
            let q = mirror.get(i, j);
            if p.is_ok() && q.is_ok() {
                worst = nan_max(worst, p.point.swap_reflect().max_abs_diff(&q.point));
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn grid_covector_examples() {
        let c = covector_from_grid(FRAC_PI_2, 0.0).unwrap();
        assert!(c.a.abs() < 1e-16 && c.b.abs() < 1e-16 && c.pz0 == 1.0);
        let c = covector_from_grid(0.0, 0.0).unwrap();
        assert_eq!((c.a, c.b, c.pz0), (0.5, 0.5, 0.0));
        let c = covector_from_grid(FRAC_PI_2, SQRT_2).unwrap();
        assert!((c.a + 0.5).abs() < 1e-15 && (c.b - 0.5).abs() < 1e-15);
        assert_eq!(c.pz0, 1.0);
        assert!(covector_from_grid(0.0, 1.0).is_err());
        assert!(covector_from_grid(-0.0, -1.0).is_err());
        assert!(covector_from_grid(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn mu_is_initial_acceleration() {
        // Second difference of x + y from the numerical flow.
        let (theta, mu) = (1.1, 2.5);
        let c = covector_from_grid(theta, mu).unwrap();
        let h = 1e-3;
        let tr = flow::integrate_at(&c, &[0.0, h, 2.0 * h], 1e-13).unwrap();
        let s: Vec<f64> = tr.states.iter().map(|s| s.point.x + s.point.y).collect();
        let d1 = (s[1] - s[0]) / h;
        let v0 = SQRT_2 * theta.cos();
        let acc = 2.0 * (d1 - v0) / h;
        assert!((acc - mu).abs() < 1e-2, "{acc}");
        let fd = (s[2] - 2.0 * s[1] + s[0]) / (h * h);
        assert!((fd - mu).abs() < 1e-2, "{fd}");
    }

    #[test]
    fn mirror_covector_is_swap_image() {
        for (theta, mu) in [(0.7, 3.0), (2.0, -40.0), (FRAC_PI_2, 0.0)] {
            let c = covector_from_grid(theta, mu).unwrap();
            let m = covector_from_grid(-theta, mu).unwrap();
            let s = c.swap_reflect();
            assert!((m.a - s.a).abs() < 1e-14 && (m.b - s.b).abs() < 1e-14);
            assert_eq!(m.pz0, s.pz0);
        }
    }

    #[test]
    fn small_grid_layout() {
        let spec = SphereSpec::new(0.15).with_grid(3, 4);
        let g = sample_sphere(&spec).unwrap();
        assert_eq!(g.points.len(), 12);
        assert_eq!(g.get(0, 0).theta, FRAC_PI_6);
        assert_eq!(g.get(2, 3).theta, 5.0 * FRAC_PI_6);
        assert_eq!(g.get(1, 3).mu, 45.0);
        assert_eq!(g.failures(), 0);
        for p in &g.points {
            let c = covector_from_grid(p.theta, p.mu).unwrap();
            assert_eq!(p.point, closedform::eval(&c, 0.15).unwrap().point);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(sample_sphere(&SphereSpec::new(0.0)).is_err());
        assert!(sample_sphere(&SphereSpec::new(0.1).with_grid(1, 5)).is_err());
        let mut s = SphereSpec::new(0.1);
        s.mu_range = (1.0, -1.0);
        assert!(sample_sphere(&s).is_err());
    }

    #[test]
    fn failed_nodes_are_recorded() {
        let mut s = SphereSpec::new(0.1).with_grid(2, 2);
        s.theta_range = (0.0, 0.5);
        s.mu_range = (-1.0, 1.0);
        let g = sample_sphere(&s).unwrap();
        assert_eq!(g.failures(), 2);
        assert!(g.get(0, 0).point.x.is_nan());
        assert!(g.get(1, 1).is_ok());
    }

    #[test]
    fn mirror_property() {
        let spec = SphereSpec::new(0.25).with_grid(8, 8);
        let g = sample_sphere(&spec).unwrap();
        let m = sample_sphere(&spec.mirrored()).unwrap();
        assert!(mirror_deviation(&g, &m).unwrap() <= 1e-8);
        assert!(mirror_deviation(&g, &g).is_err());
    }

    #[test]
    fn shrinks_to_identity() {
        for r in [1e-3, 0.15, 0.25] {
            let g = sample_sphere(&SphereSpec::new(r)).unwrap();
            let worst = g.points.iter().map(|p| p.point.norm()).fold(0.0, nan_max);
            assert!(worst <= NORM_RATIO_BOUND * r, "r = {r}: {worst}");
        }
    }
}
