//! Randomized invariant suites. Each suite draws its samples from a seeded
//! ChaCha stream, evaluates them in parallel and reduces in sample order, so
//! a report depends only on `(suite, n, seed)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::closedform::{self, GeodesicCase};
use crate::elliptic::{incomplete_e, incomplete_f, jacobi, EllipticModulus};
use crate::error::Result;
use crate::flow::{self, uniform_times};
use crate::model::NormalizedCovector;
use crate::quad;

const ODE_TOL: f64 = 1e-12;
const MAX_REPORTED_ERRORS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Elliptic,
    Conservation,
    Oracle,
    Symmetry,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::Elliptic,
        Suite::Conservation,
        Suite::Oracle,
        Suite::Symmetry,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Elliptic => "elliptic",
            Suite::Conservation => "conservation",
            Suite::Oracle => "oracle",
            Suite::Symmetry => "symmetry",
        }
    }

    fn checks(&self) -> &'static [(&'static str, f64)] {
        match self {
            Suite::Elliptic => &[
                ("sn2_plus_cn2", 1e-12),
                ("dn2_plus_k2sn2", 1e-12),
                ("F_vs_quadrature", 1e-10),
                ("E_vs_quadrature", 1e-10),
            ],
            Suite::Conservation => &[
                ("H", 1e-9),
                ("px", 1e-12),
                ("py", 1e-12),
                ("speed", 1e-8),
                ("admissibility", 1e-8),
            ],
            Suite::Oracle => &[("closed_vs_ode", 1e-6)],
            Suite::Symmetry => &[("closed_swap", 1e-8), ("ode_swap", 1e-8)],
        }
    }
}

/// Worst value of one invariant with the sample that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub worst: f64,
    pub tolerance: f64,
    pub violations: usize,
    pub passed: bool,
    pub worst_params: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleError {
    pub params: Value,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub n: usize,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub error_count: usize,
    pub errors: Vec<SampleError>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub seed: u64,
    pub n: usize,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

impl Report {
    /// Checks that failed, with their offending parameters.
    pub fn failures(&self) -> Vec<(&'static str, &Check)> {
        self.suites
            .iter()
            .flat_map(|s| s.checks.iter().filter(|c| !c.passed).map(move |c| (s.suite, c)))
            .collect()
    }
}

/// Admissible covector with `a, b ∈ [-1, 1]`.
pub fn random_covector(rng: &mut impl Rng) -> NormalizedCovector {
    loop {
        let a: f64 = rng.gen_range(-1.0..=1.0);
        let b: f64 = rng.gen_range(-1.0..=1.0);
        let up = rng.gen_bool(0.5);
        if (a + b).abs() <= 1.0 {
            if let Ok(c) = NormalizedCovector::from_ab(a, b, up) {
                return c;
            }
        }
    }
}

/// Generic covector with `10⁻³ <= |a|, |b| <= 1` and `ab < ¼ - 10⁻³`.
pub fn random_generic_covector(rng: &mut impl Rng) -> NormalizedCovector {
    loop {
        let mag = |rng: &mut dyn rand::RngCore| {
            let m: f64 = rng.gen_range(1e-3..=1.0);
            if rng.gen_bool(0.5) {
                m
            } else {
                -m
            }
        };
        let a = mag(rng);
        let b = mag(rng);
        let up = rng.gen_bool(0.5);
        if (a + b).abs() <= 1.0 && a * b < 0.25 - 1e-3 {
            if let Ok(c) = NormalizedCovector::from_ab(a, b, up) {
                if closedform::branch(&c) == GeodesicCase::Generic {
                    return c;
                }
            }
        }
    }
}

fn cov_params(c: &NormalizedCovector) -> Value {
    json!({ "a": c.a, "b": c.b, "pz0": c.pz0 })
}

type Sample = std::result::Result<Vec<(f64, Value)>, String>;

fn elliptic_sample(u: f64, k: f64, phi: f64) -> Sample {
    let p = json!({ "u": u, "k": k, "phi": phi });
    let m = EllipticModulus::new(k).map_err(|e| e.to_string())?;
    let j = jacobi(u, m).map_err(|e| e.to_string())?;
    let f = incomplete_f(phi, m).map_err(|e| e.to_string())?;
    let e = incomplete_e(phi, m).map_err(|e| e.to_string())?;
    Ok(vec![
        ((j.sn * j.sn + j.cn * j.cn - 1.0).abs(), p.clone()),
        ((j.dn * j.dn + m.m() * j.sn * j.sn - 1.0).abs(), p.clone()),
        ((f - quad::legendre_f(phi, k)).abs(), p.clone()),
        ((e - quad::legendre_e(phi, k)).abs(), p),
    ])
}

fn conservation_sample(c: &NormalizedCovector) -> Sample {
    let p = cov_params(c);
    let tr = flow::integrate(c, 10.0, ODE_TOL).map_err(|e| e.to_string())?;
    let d = flow::invariant_drift(&tr);
    Ok([d.h, d.px, d.py, d.speed, d.admissibility]
        .into_iter()
        .map(|v| (v, p.clone()))
        .collect())
}

/// Largest componentwise deviation over the samples, with the time at which
/// it occurs.
fn worst_gap(
    times: &[f64],
    lhs: impl Iterator<Item = crate::model::PhaseState>,
    rhs: impl Iterator<Item = crate::model::PhaseState>,
) -> (f64, f64) {
    lhs.zip(rhs)
        .zip(times)
        .map(|((l, r), &t)| (l.max_abs_diff(&r), t))
        .fold((0.0, 0.0), |acc, x| {
            if acc.0.is_nan() || !(x.0.is_nan() || x.0 > acc.0) {
                acc
            } else {
                x
            }
        })
}

fn with_time(p: &Value, t: f64) -> Value {
    let mut p = p.clone();
    p["t"] = json!(t);
    p
}

fn oracle_sample(c: &NormalizedCovector) -> Sample {
    let p = cov_params(c);
    let times = uniform_times(5.0, 51);
    let closed = closedform::eval_trajectory(c, &times).map_err(|e| e.to_string())?;
    let ode = flow::integrate_at(c, &times, ODE_TOL).map_err(|e| e.to_string())?;
    let (gap, t) = worst_gap(&times, closed.states.into_iter(), ode.states.into_iter());
    Ok(vec![(gap, with_time(&p, t))])
}

fn symmetry_sample(c: &NormalizedCovector) -> Sample {
    let p = cov_params(c);
    let s = c.swap_reflect();
    let times = uniform_times(5.0, 26);
    let err = |e: crate::Error| e.to_string();
    let closed = closedform::eval_trajectory(c, &times).map_err(err)?;
    let closed_s = closedform::eval_trajectory(&s, &times).map_err(err)?;
    let ode = flow::integrate_at(c, &times, ODE_TOL).map_err(err)?;
    let ode_s = flow::integrate_at(&s, &times, ODE_TOL).map_err(err)?;
    let (g1, t1) = worst_gap(
        &times,
        closed.states.iter().map(|s| s.swap_reflect()),
        closed_s.states.into_iter(),
    );
    let (g2, t2) = worst_gap(
        &times,
        ode.states.iter().map(|s| s.swap_reflect()),
        ode_s.states.into_iter(),
    );
    Ok(vec![(g1, with_time(&p, t1)), (g2, with_time(&p, t2))])
}

fn reduce(suite: Suite, n: usize, inputs: Vec<Value>, samples: Vec<Sample>) -> SuiteReport {
    let mut checks: Vec<Check> = suite
        .checks()
        .iter()
        .map(|&(name, tolerance)| Check {
            name,
            worst: 0.0,
            tolerance,
            violations: 0,
            passed: true,
            worst_params: Value::Null,
        })
        .collect();
    let mut errors = Vec::new();
    let mut error_count = 0;
    for (input, sample) in inputs.into_iter().zip(samples) {
        match sample {
            Ok(values) => {
                for (check, (v, params)) in checks.iter_mut().zip(values) {
                    if v.is_nan() || v > check.tolerance {
                        check.violations += 1;
                    }
                    if v.is_nan() || v > check.worst {
                        check.worst = v;
                        check.worst_params = params;
                    }
                }
            }
            Err(message) => {
                error_count += 1;
                if errors.len() < MAX_REPORTED_ERRORS {
                    errors.push(SampleError {
                        params: input,
                        message,
                    });
                }
            }
        }
    }
    for c in &mut checks {
        c.passed = c.violations == 0;
    }
    SuiteReport {
        suite: suite.name(),
        n,
        passed: error_count == 0 && checks.iter().all(|c| c.passed),
        checks,
        error_count,
        errors,
    }
}

pub fn run_suite(suite: Suite, n: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (inputs, samples): (Vec<Value>, Vec<Sample>) = match suite {
        Suite::Elliptic => {
            let draws: Vec<(f64, f64, f64)> = (0..n)
                .map(|_| {
                    (
                        rng.gen_range(-10.0..=10.0),
                        rng.gen_range(0.0..=0.999),
                        rng.gen_range(-10.0..=10.0),
                    )
                })
                .collect();
            let samples = draws
                .par_iter()
                .map(|&(u, k, phi)| elliptic_sample(u, k, phi))
                .collect();
            let inputs = draws
                .iter()
                .map(|&(u, k, phi)| json!({ "u": u, "k": k, "phi": phi }))
                .collect();
            (inputs, samples)
        }
        Suite::Conservation | Suite::Oracle | Suite::Symmetry => {
            let draws: Vec<NormalizedCovector> = (0..n)
                .map(|_| match suite {
                    Suite::Oracle => random_generic_covector(&mut rng),
                    _ => random_covector(&mut rng),
                })
                .collect();
            let f = match suite {
                Suite::Conservation => conservation_sample,
                Suite::Oracle => oracle_sample,
                _ => symmetry_sample,
            };
            let samples = draws.par_iter().map(f).collect();
            (draws.iter().map(cov_params).collect(), samples)
        }
    };
    reduce(suite, n, inputs, samples)
}

pub fn run(suites: &[Suite], n: usize, seed: u64) -> Result<Report> {
    if n == 0 {
        return Err(crate::Error::Domain("sample count must be positive".into()));
    }
    let suites: Vec<SuiteReport> = suites.iter().map(|&s| run_suite(s, n, seed)).collect();
    Ok(Report {
        seed,
        n,
        passed: suites.iter().all(|s| s.passed),
        suites,
    })
}
