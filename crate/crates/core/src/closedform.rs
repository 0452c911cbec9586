//! Closed-form normal geodesics from the identity.
//!
//! With `u = e^z` the level set `H = ½` gives `u̇² = u² - (a + b u²)²
//! = -b² (u² - σ₁²)(u² - σ₂²)`, so `u` oscillates between the turning points
//! `σ₂ <= 1 <= σ₁`. Writing `ω = σ₁|b|` and `k'² = σ₂²/σ₁²`,
//!
//! ```text
//! e^{z(t)} = σ₁ dn(s, k),         s = ω t + s₀,
//! x(t) = (b t + (ω/a) [G(s) - G(s₀)]) / √2,   G(s) = E(am s) - k² sn s cn s / dn s,
//! y(t) = (a t + (ω/b) [E(am s) - E(am s₀)]) / √2,
//! ```
//!
//! where the phase `s₀` places `u(0) = 1` on the side of the turning point
//! selected by the sign of `p_z(0)`. The sign of `b` enters only through
//! the prefactors, so no separate branch is needed for `b < 0`.
//!
//! The degenerate families `a = b = 0`, `a = 0`, `b = 0` and `ab = ¼` are
//! elementary.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::elliptic::{incomplete_e, incomplete_f, jacobi, EllipticModulus};
use crate::error::{Error, Result};
use crate::flow::{check_sample_times, Trajectory};
use crate::model::{NormalizedCovector, PhaseState};

/// Default boundary width used to classify covectors.
pub const DEFAULT_EPS: f64 = 1e-9;

/// Below this discriminant `1 - 4ab` the line formula replaces the generic
/// one; the discarded oscillation has amplitude at most `sqrt(1 - 4ab)`.
const LINE_DISCRIMINANT: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeodesicCase {
    Generic,
    /// `a = b = 0`: the vertical line `z = ±t`.
    Vertical,
    /// `a = 0, b ≠ 0`.
    AZero,
    /// `b = 0, a ≠ 0`.
    BZero,
    /// `ab = ¼`, i.e. `a = b = ±½`, `p_z = 0`.
    Line,
}

impl GeodesicCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            GeodesicCase::Generic => "generic",
            GeodesicCase::Vertical => "vertical",
            GeodesicCase::AZero => "a_zero",
            GeodesicCase::BZero => "b_zero",
            GeodesicCase::Line => "line",
        }
    }
}

pub fn classify(c: &NormalizedCovector, eps: f64) -> GeodesicCase {
    let a_zero = c.a.abs() < eps;
    let b_zero = c.b.abs() < eps;
    match (a_zero, b_zero) {
        (true, true) => GeodesicCase::Vertical,
        (true, false) => GeodesicCase::AZero,
        (false, true) => GeodesicCase::BZero,
        _ if (c.a * c.b - 0.25).abs() < eps => GeodesicCase::Line,
        _ => GeodesicCase::Generic,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenericParams {
    pub a: f64,
    pub b: f64,
    pub pz0: f64,
    /// Larger turning point of `u = e^z`.
    pub sigma1: f64,
    /// Smaller turning point of `u = e^z`.
    pub sigma2: f64,
    /// Angular rate `σ₁|b|` of the elliptic argument.
    pub omega: f64,
    pub modulus: EllipticModulus,
    /// Elliptic argument at `t = 0`.
    pub s0: f64,
    /// Phase shift: the elliptic argument is `ω (t - t₀)`.
    pub t0: f64,
    /// `G(s₀)`, the additive constant of `x(t)`.
    pub x_const: f64,
    /// `E(am s₀)`, the additive constant of `y(t)`.
    pub y_const: f64,
}

/// `(E(am s), G(s), sn, cn, dn)` at elliptic argument `s`.
fn elliptic_terms(s: f64, m: EllipticModulus) -> Result<(f64, f64, f64, f64, f64)> {
    let j = jacobi(s, m)?;
    let e = incomplete_e(j.am, m)?;
    let g = e - m.m() * j.sn * j.cn / j.dn;
    Ok((e, g, j.sn, j.cn, j.dn))
}

pub fn generic_params(c: &NormalizedCovector) -> Result<GenericParams> {
    let (a, b, pz0) = (c.a, c.b, c.pz0);
    let ab = a * b;
    if a == 0.0 || b == 0.0 || ab >= 0.25 {
        return Err(Error::domain(format!(
            "covector (a = {a}, b = {b}) is not generic: need a, b ≠ 0 and ab < 1/4"
        )));
    }
    let disc = 1.0 - 4.0 * ab;
    let sd = disc.sqrt();
    // ω² = σ₁² b² and σ₂² = a²/ω² (Vieta), avoiding the cancellation in
    // (1 - 2ab - sqrt(1 - 4ab)) / 2b².
    let omega2 = 0.5 * (1.0 - 2.0 * ab + sd);
    let omega = omega2.sqrt();
    let sigma1 = omega / b.abs();
    let sigma2 = a.abs() / omega;
    let kprime = ab.abs() / omega2;
    let modulus = EllipticModulus::from_complement(kprime.min(1.0))?;

    // Phase from sn²(s₀) = (σ₁² - 1)/(σ₁² - σ₂²), cn²(s₀) = (1 - σ₂²)/(σ₁² - σ₂²),
    // with P = ω² - b² = b²(σ₁² - 1), Q = ω² - a² = ω²(1 - σ₂²), PQ = ω² pz0².
    let s = a + b;
    let lin_p = 1.0 - 2.0 * b * s;
    let lin_q = 1.0 - 2.0 * a * s;
    let (p, q) = if lin_p >= 0.0 {
        let p = 0.5 * (lin_p + sd);
        let q = if lin_q >= 0.0 {
            0.5 * (lin_q + sd)
        } else {
            omega2 * pz0 * pz0 / p
        };
        (p, q)
    } else {
        let q = 0.5 * (lin_q + sd);
        (omega2 * pz0 * pz0 / q, q)
    };
    if !(p.is_finite() && q.is_finite()) || (p <= 0.0 && q <= 0.0) {
        return Err(Error::domain(format!(
            "degenerate turning points for covector ({a}, {b}, {pz0})"
        )));
    }
    let phi0 = (p.max(0.0).sqrt() / b.abs()).atan2(q.max(0.0).sqrt() / omega);
    let v = incomplete_f(phi0, modulus)?;
    // u must be increasing at t = 0 when p_z(0) > 0, so s₀ sits before the
    // maximum of dn at s = 0.
    let s0 = if pz0 >= 0.0 { -v } else { v };
    let (y_const, x_const, ..) = elliptic_terms(s0, modulus)?;
    Ok(GenericParams {
        a,
        b,
        pz0,
        sigma1,
        sigma2,
        omega,
        modulus,
        s0,
        t0: -s0 / omega,
        x_const,
        y_const,
    })
}

impl GenericParams {
    /// Period of `z(t)`: `2K(k)/ω`.
    pub fn z_period(&self) -> f64 {
        2.0 * crate::elliptic::complete_k(self.modulus) / self.omega
    }

    pub fn eval(&self, t: f64) -> Result<PhaseState> {
        let s = self.omega * t + self.s0;
        let (e, g, sn, cn, dn) = elliptic_terms(s, self.modulus)?;
        let x = (self.b * t + self.omega / self.a * (g - self.x_const)) / SQRT_2;
        let y = (self.a * t + self.omega / self.b * (e - self.y_const)) / SQRT_2;
        let z = (self.sigma1 * dn).ln();
        let pz = -self.omega * self.modulus.m() * sn * cn / dn;
        Ok(PhaseState::new(
            x,
            y,
            z,
            SQRT_2 * self.a,
            SQRT_2 * self.b,
            pz,
        ))
    }
}

/// `ln cosh x` without overflow.
fn ln_cosh(x: f64) -> f64 {
    let ax = x.abs();
    ax + (-2.0 * ax).exp().ln_1p() - std::f64::consts::LN_2
}

/// Constants of an elementary geodesic with one vanishing momentum
/// component. In the `a = 0` family `u = sech(t - t₁)/|b|`, in the `b = 0`
/// family `u = |a| cosh(t - t₁)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperbolic {
    /// The nonzero normalized momentum (`b` when `a = 0`, `a` when `b = 0`).
    pub c: f64,
    /// Time of the extremum of `z`.
    pub t1: f64,
    tanh_t1: f64,
}

impl Hyperbolic {
    /// `t₁ = ±ln((1 + |pz0|)/|c|)`, the stabilized form of `ln C`.
    fn new(c: f64, pz0: f64, sign: f64) -> Self {
        let t1 = if pz0 == 0.0 {
            0.0
        } else {
            sign * pz0.signum() * ((1.0 + pz0.abs()) / c.abs()).ln()
        };
        Self {
            c,
            t1,
            tanh_t1: t1.tanh(),
        }
    }
}

/// Precomputed evaluator for a single covector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geodesic {
    Generic(GenericParams),
    Vertical { pz0: f64, a: f64, b: f64 },
    AZero { a: f64, pz0: f64, h: Hyperbolic },
    BZero { b: f64, pz0: f64, h: Hyperbolic },
    Line { a: f64, b: f64, pz0: f64 },
}

impl Geodesic {
    pub fn new(c: &NormalizedCovector) -> Result<Self> {
        Ok(match branch(c) {
            GeodesicCase::Generic => Geodesic::Generic(generic_params(c)?),
            GeodesicCase::Vertical => Geodesic::Vertical {
                pz0: c.pz0,
                a: c.a,
                b: c.b,
            },
            // ż(0) = pz0 with z = -ln|b| - ln cosh(t - t₁) needs tanh t₁ = pz0.
            GeodesicCase::AZero => Geodesic::AZero {
                a: c.a,
                pz0: c.pz0,
                h: Hyperbolic::new(c.b, c.pz0, 1.0),
            },
            // ż(0) = pz0 with z = ln|a| + ln cosh(t - t₁) needs tanh t₁ = -pz0.
            GeodesicCase::BZero => Geodesic::BZero {
                b: c.b,
                pz0: c.pz0,
                h: Hyperbolic::new(c.a, c.pz0, -1.0),
            },
            GeodesicCase::Line => Geodesic::Line {
                a: c.a,
                b: c.b,
                pz0: c.pz0,
            },
        })
    }

    pub fn case(&self) -> GeodesicCase {
        match self {
            Geodesic::Generic(_) => GeodesicCase::Generic,
            Geodesic::Vertical { .. } => GeodesicCase::Vertical,
            Geodesic::AZero { .. } => GeodesicCase::AZero,
            Geodesic::BZero { .. } => GeodesicCase::BZero,
            Geodesic::Line { .. } => GeodesicCase::Line,
        }
    }

    pub fn eval(&self, t: f64) -> Result<PhaseState> {
        if !t.is_finite() {
            return Err(Error::domain(format!("t = {t} is not finite")));
        }
        match *self {
            Geodesic::Generic(ref p) => p.eval(t),
            Geodesic::Vertical { pz0, a, b } => Ok(PhaseState::new(
                0.0,
                0.0,
                pz0 * t,
                SQRT_2 * a,
                SQRT_2 * b,
                pz0,
            )),
            Geodesic::AZero { a, h, .. } => {
                let b = h.c;
                let th = (t - h.t1).tanh();
                Ok(PhaseState::new(
                    b * t / SQRT_2,
                    (th + h.tanh_t1) / (SQRT_2 * b),
                    -b.abs().ln() - ln_cosh(t - h.t1),
                    SQRT_2 * a,
                    SQRT_2 * b,
                    -th,
                ))
            }
            Geodesic::BZero { b, h, .. } => {
                let a = h.c;
                let th = (t - h.t1).tanh();
                Ok(PhaseState::new(
                    (th + h.tanh_t1) / (SQRT_2 * a),
                    a * t / SQRT_2,
                    a.abs().ln() + ln_cosh(t - h.t1),
                    SQRT_2 * a,
                    SQRT_2 * b,
                    th,
                ))
            }
            Geodesic::Line { a, b, pz0 } => {
                let v = (a + b) * t / SQRT_2;
                Ok(PhaseState::new(v, v, 0.0, SQRT_2 * a, SQRT_2 * b, pz0))
            }
        }
    }

    pub fn metadata(&self, c: &NormalizedCovector) -> GeodesicMeta {
        let mut meta = GeodesicMeta {
            a: c.a,
            b: c.b,
            pz0: c.pz0,
            case: self.case(),
            sigma1: None,
            sigma2: None,
            k: None,
            t0: None,
        };
        if let Geodesic::Generic(p) = self {
            meta.sigma1 = Some(p.sigma1);
            meta.sigma2 = Some(p.sigma2);
            meta.k = Some(p.modulus.k());
            meta.t0 = Some(p.t0);
        }
        meta
    }
}

/// Formula branch used by [`eval`]: [`classify`] at [`DEFAULT_EPS`], except
/// that covectors near `ab = ¼` stay on the generic branch until the
/// discriminant is below round-off scale.
pub fn branch(c: &NormalizedCovector) -> GeodesicCase {
    match classify(c, DEFAULT_EPS) {
        GeodesicCase::Line if 1.0 - 4.0 * c.a * c.b > LINE_DISCRIMINANT => GeodesicCase::Generic,
        other => other,
    }
}

/// Geodesic point and momenta at arc length `t`.
pub fn eval(c: &NormalizedCovector, t: f64) -> Result<PhaseState> {
    Geodesic::new(c)?.eval(t)
}

/// Samples [`eval`] at `times` (increasing, starting at 0).
pub fn eval_trajectory(c: &NormalizedCovector, times: &[f64]) -> Result<Trajectory> {
    check_sample_times(times)?;
    let g = Geodesic::new(c)?;
    let states = times
        .iter()
        .map(|&t| g.eval(t))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory::from_samples(times.to_vec(), states))
}

/// Per-geodesic metadata record; generic-only fields are `null` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeodesicMeta {
    pub a: f64,
    pub b: f64,
    pub pz0: f64,
    pub case: GeodesicCase,
    pub sigma1: Option<f64>,
    pub sigma2: Option<f64>,
    pub k: Option<f64>,
    pub t0: Option<f64>,
}
