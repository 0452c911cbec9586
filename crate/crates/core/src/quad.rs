//! Direct quadrature of the Legendre integrals. Shares nothing with the
//! Carlson reduction, so it serves as an independent oracle for
//! [`crate::elliptic`].

use std::f64::consts::FRAC_PI_2;

use quadrature::double_exponential;

const TARGET: f64 = 1e-14;

/// `∫₀^φ f(θ) dθ`, split at multiples of `π/2` where the integrands peak.
fn integrate_split(f: impl Fn(f64) -> f64 + Copy, phi: f64) -> f64 {
    let sign = phi.signum();
    let end = phi.abs();
    let mut total = 0.0;
    let mut lo = 0.0;
    while lo < end {
        let hi = (lo + FRAC_PI_2).min(end);
        total += double_exponential::integrate(f, lo, hi, TARGET).integral;
        lo = hi;
    }
    sign * total
}

/// `F(φ, k) = ∫₀^φ dθ / sqrt(1 - k² sin²θ)`.
pub fn legendre_f(phi: f64, k: f64) -> f64 {
    let m = k * k;
    integrate_split(move |t: f64| 1.0 / (1.0 - m * t.sin().powi(2)).sqrt(), phi)
}

/// `E(φ, k) = ∫₀^φ sqrt(1 - k² sin²θ) dθ`.
pub fn legendre_e(phi: f64, k: f64) -> f64 {
    let m = k * k;
    integrate_split(move |t: f64| (1.0 - m * t.sin().powi(2)).sqrt(), phi)
}

/// `dn⁻¹(w)` for `k' <= w <= 1`, as `F(φ, k)` with `k sin φ = sqrt(1 - w²)`.
pub fn inverse_dn(w: f64, k: f64) -> f64 {
    let s = (((1.0 - w) * (1.0 + w)).sqrt() / k).min(1.0);
    legendre_f(s.asin(), k)
}
