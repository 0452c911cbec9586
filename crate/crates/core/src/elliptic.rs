//! Jacobi elliptic functions and Legendre elliptic integrals of the first and
//! second kind, for real arguments and real modulus `0 <= k < 1`.
//!
//! Incomplete integrals go through Carlson's symmetric forms `R_F` and `R_D`
//! (duplication algorithm). The Jacobi functions use the descending AGM /
//! Gauss transformation ladder, which yields the amplitude `am(u)` on its
//! continuous branch: `am(u + 2K) = am(u) + π`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Modulus `k` together with the complementary modulus `k' = sqrt(1 - k²)`.
///
/// Both are stored so that callers who know `k'` more accurately than `k`
/// (the geodesic code, where `k'` can be tiny) do not lose it to cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticModulus {
    k: f64,
    kprime: f64,
}

impl EllipticModulus {
    pub fn new(k: f64) -> Result<Self> {
        if !k.is_finite() || !(0.0..1.0).contains(&k) {
            return Err(Error::domain(format!("modulus k = {k} outside [0, 1)")));
        }
        Ok(Self {
            k,
            kprime: ((1.0 - k) * (1.0 + k)).sqrt(),
        })
    }

    /// Builds the modulus from `k'`, which must lie in `(0, 1]`.
    pub fn from_complement(kprime: f64) -> Result<Self> {
        if !kprime.is_finite() || kprime <= 0.0 || kprime > 1.0 {
            return Err(Error::domain(format!(
                "complementary modulus k' = {kprime} outside (0, 1]"
            )));
        }
        Ok(Self {
            k: ((1.0 - kprime) * (1.0 + kprime)).sqrt(),
            kprime,
        })
    }

    /// Builds the modulus from both values when they are known independently;
    /// `k² + k'²` must equal one to within a few ulps.
    pub fn from_pair(k: f64, kprime: f64) -> Result<Self> {
        let m = Self::from_complement(kprime)?;
        if !k.is_finite() || !(0.0..1.0).contains(&k) || (k * k + kprime * kprime - 1.0).abs() > 1e-15
        {
            return Err(Error::domain(format!(
                "inconsistent modulus pair k = {k}, k' = {kprime}"
            )));
        }
        Ok(Self { k, ..m })
    }

    #[inline]
    pub fn k(&self) -> f64 {
        self.k
    }

    #[inline]
    pub fn kprime(&self) -> f64 {
        self.kprime
    }

    /// The parameter `m = k²`.
    #[inline]
    pub fn m(&self) -> f64 {
        self.k * self.k
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiTriple {
    pub sn: f64,
    pub cn: f64,
    pub dn: f64,
    /// Amplitude on the continuous branch through `am(0) = 0`.
    pub am: f64,
}

const RF_ERRTOL: f64 = 0.0025;
const RD_ERRTOL: f64 = 0.0015;

/// Carlson's `R_F(x, y, z)`; at most one argument may be zero.
pub fn carlson_rf(x: f64, y: f64, z: f64) -> f64 {
    debug_assert!(x >= 0.0 && y >= 0.0 && z >= 0.0);
    let (mut x, mut y, mut z) = (x, y, z);
    loop {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
        let ave = (x + y + z) / 3.0;
        let dx = (ave - x) / ave;
        let dy = (ave - y) / ave;
        let dz = (ave - z) / ave;
        if dx.abs().max(dy.abs()).max(dz.abs()) < RF_ERRTOL {
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            return (1.0 + (e2 / 24.0 - 0.1 - 3.0 / 44.0 * e3) * e2 + e3 / 14.0) / ave.sqrt();
        }
    }
}

/// Carlson's `R_D(x, y, z)`; `z > 0` and at most one of `x`, `y` zero.
pub fn carlson_rd(x: f64, y: f64, z: f64) -> f64 {
    const C1: f64 = 3.0 / 14.0;
    const C2: f64 = 1.0 / 6.0;
    const C3: f64 = 9.0 / 22.0;
    const C4: f64 = 3.0 / 26.0;
    const C5: f64 = 0.25 * C3;
    const C6: f64 = 1.5 * C4;
    debug_assert!(x >= 0.0 && y >= 0.0 && z > 0.0);
    let (mut x, mut y, mut z) = (x, y, z);
    let mut sum = 0.0;
    let mut fac = 1.0;
    loop {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        sum += fac / (sz * (z + lambda));
        fac *= 0.25;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
        let ave = 0.2 * (x + y + 3.0 * z);
        let dx = (ave - x) / ave;
        let dy = (ave - y) / ave;
        let dz = (ave - z) / ave;
        if dx.abs().max(dy.abs()).max(dz.abs()) < RD_ERRTOL {
            let ea = dx * dy;
            let eb = dz * dz;
            let ec = ea - eb;
            let ed = ea - 6.0 * eb;
            let ee = ed + ec + ec;
            return 3.0 * sum
                + fac
                    * (1.0
                        + ed * (-C1 + C5 * ed - C6 * dz * ee)
                        + dz * (C2 * ee + dz * (-C3 * ec + dz * C4 * ea)))
                    / (ave * ave.sqrt());
        }
    }
}

/// Complete integral of the first kind, `K(k) = F(π/2, k)`.
pub fn complete_k(m: EllipticModulus) -> f64 {
    carlson_rf(0.0, m.kprime * m.kprime, 1.0)
}

/// Complete integral of the second kind, `E(k) = E(π/2, k)`.
pub fn complete_e(m: EllipticModulus) -> f64 {
    let kp2 = m.kprime * m.kprime;
    carlson_rf(0.0, kp2, 1.0) - m.m() / 3.0 * carlson_rd(0.0, kp2, 1.0)
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} = {v} is not finite")))
    }
}

/// Splits `phi = n·π + r` with `r ∈ [-π/2, π/2]`.
fn reduce_amplitude(phi: f64) -> (f64, f64) {
    let n = (phi / PI).round();
    (n, phi - n * PI)
}

/// Incomplete integral of the first kind `F(φ, k) = ∫₀^φ dα / sqrt(1 - k² sin²α)`
/// for any real `φ` (quasi-periodic continuation).
pub fn incomplete_f(phi: f64, m: EllipticModulus) -> Result<f64> {
    check_finite("phi", phi)?;
    let (n, r) = reduce_amplitude(phi);
    let (s, c) = r.sin_cos();
    let delta2 = c * c + m.kprime * m.kprime * s * s;
    let base = s * carlson_rf(c * c, delta2, 1.0);
    Ok(if n == 0.0 {
        base
    } else {
        base + 2.0 * n * complete_k(m)
    })
}

/// Incomplete integral of the second kind `E(φ, k) = ∫₀^φ sqrt(1 - k² sin²α) dα`.
pub fn incomplete_e(phi: f64, m: EllipticModulus) -> Result<f64> {
    check_finite("phi", phi)?;
    let (n, r) = reduce_amplitude(phi);
    let (s, c) = r.sin_cos();
    let c2 = c * c;
    let delta2 = c2 + m.kprime * m.kprime * s * s;
    let base = s * carlson_rf(c2, delta2, 1.0) - m.m() / 3.0 * s * s * s * carlson_rd(c2, delta2, 1.0);
    Ok(if n == 0.0 {
        base
    } else {
        base + 2.0 * n * complete_e(m)
    })
}

/// Below this modulus the amplitude is taken from its first-order expansion
/// in `k²`; the neglected term is `O(k⁴ u)`.
const SMALL_K: f64 = 1e-8;
const AGM_MAX_STEPS: usize = 16;

/// Jacobi amplitude `am(u, k)` on the continuous branch.
pub fn amplitude(u: f64, m: EllipticModulus) -> Result<f64> {
    check_finite("u", u)?;
    if m.k < SMALL_K {
        let (s, c) = u.sin_cos();
        return Ok(u - 0.25 * m.m() * (u - s * c));
    }

    // Descending AGM ladder starting from (1, k', k).
    let mut a = [0.0; AGM_MAX_STEPS + 1];
    let mut c = [0.0; AGM_MAX_STEPS + 1];
    a[0] = 1.0;
    c[0] = m.k;
    let mut b = m.kprime;
    let mut n = 0;
    while c[n] > f64::EPSILON * a[n] && n < AGM_MAX_STEPS {
        let an = a[n];
        a[n + 1] = 0.5 * (an + b);
        c[n + 1] = 0.25 * c[n] * c[n] / a[n + 1];
        b = (an * b).sqrt();
        n += 1;
    }

    let mut phi = (1u64 << n) as f64 * a[n] * u;
    for j in (1..=n).rev() {
        phi = 0.5 * (phi + (c[j] / a[j] * phi.sin()).asin());
    }
    Ok(phi)
}

/// `(sn u, cn u, dn u, am u)` for modulus `k`.
pub fn jacobi(u: f64, m: EllipticModulus) -> Result<JacobiTriple> {
    let am = amplitude(u, m)?;
    let (sn, cn) = am.sin_cos();
    // dn² = k'² + k² cn² stays accurate when dn is near k'.
    let dn = (m.kprime * m.kprime + m.m() * cn * cn).sqrt();
    Ok(JacobiTriple { sn, cn, dn, am })
}

/// Smallest `v >= 0` with `dn(v, k) = w`, i.e. the inversion of
/// `v = ∫_w^1 dx / sqrt((1 - x²)(x² - k'²))`. The result lies in `[0, K(k)]`.
pub fn inverse_dn(w: f64, m: EllipticModulus) -> Result<f64> {
    check_finite("w", w)?;
    let slack = 4.0 * f64::EPSILON;
    if w > 1.0 + slack || w < m.kprime - slack {
        return Err(Error::domain(format!(
            "dn value {w} outside [k', 1] = [{}, 1]",
            m.kprime
        )));
    }
    let w = w.clamp(m.kprime, 1.0);
    if m.k == 0.0 {
        return Ok(0.0);
    }
    // sin φ = sqrt(1 - w²)/k, cos φ = sqrt(w² - k'²)/k.
    let s = ((1.0 - w) * (1.0 + w)).sqrt();
    let c = ((w - m.kprime) * (w + m.kprime)).max(0.0).sqrt();
    incomplete_f(s.atan2(c), m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn modulus(k: f64) -> EllipticModulus {
        EllipticModulus::new(k).unwrap()
    }

    fn k_a03() -> EllipticModulus {
        // k² = 80/81, k' = 1/9
        EllipticModulus::from_complement(1.0 / 9.0).unwrap()
    }

    #[test]
    fn modulus_validation() {
        assert!(EllipticModulus::new(1.0).is_err());
        assert!(EllipticModulus::new(-0.1).is_err());
        assert!(EllipticModulus::new(f64::NAN).is_err());
        assert!(EllipticModulus::from_complement(0.0).is_err());
        let m = modulus(0.6);
        assert!((m.kprime() - 0.8).abs() < 1e-15);
        assert!(EllipticModulus::from_pair(0.6, 0.8).is_ok());
        assert!(EllipticModulus::from_pair(0.6, 0.7).is_err());
    }

    #[test]
    fn jacobi_at_zero() {
        for k in [0.0, 0.3, 0.99, 0.999999] {
            let j = jacobi(0.0, modulus(k)).unwrap();
            assert_eq!((j.sn, j.cn, j.dn, j.am), (0.0, 1.0, 1.0, 0.0));
        }
    }

    #[test]
    fn jacobi_trig_limit() {
        let j = jacobi(0.5, modulus(0.0)).unwrap();
        assert_eq!(j.sn, 0.5f64.sin());
        assert_eq!(j.cn, 0.5f64.cos());
        assert_eq!(j.dn, 1.0);
        assert_eq!(j.am, 0.5);
    }

    #[test]
    fn jacobi_reference_value() {
        // Inversion of the first-kind quadrature at 40 digits.
        let j = jacobi(1.0, k_a03()).unwrap();
        assert!((j.am - 0.867_396_901_105_962_5).abs() < 1e-14);
        assert!((j.sn - 0.762_647_802_056_903_8).abs() < 1e-14);
        assert!((j.cn - 0.646_813_984_092_624_4).abs() < 1e-14);
        assert!((j.dn - 0.652_341_143_818_776).abs() < 1e-14);
        assert!((k_a03().k() - 0.993_807_990_0).abs() < 1e-10);
    }

    #[test]
    fn non_finite_argument_rejected() {
        assert!(jacobi(f64::NAN, modulus(0.5)).is_err());
        assert!(jacobi(f64::INFINITY, modulus(0.5)).is_err());
        assert!(incomplete_f(f64::NAN, modulus(0.5)).is_err());
        assert!(incomplete_e(f64::INFINITY, modulus(0.5)).is_err());
    }

    #[test]
    fn first_kind_values() {
        assert_eq!(incomplete_f(0.0, modulus(0.7)).unwrap(), 0.0);
        assert!((incomplete_f(0.7, modulus(0.0)).unwrap() - 0.7).abs() < 1e-15);
        let k = incomplete_f(FRAC_PI_2, modulus(0.8)).unwrap();
        assert!((k - 1.995_302_777_664_729_4).abs() < 1e-14);
        assert!((complete_k(modulus(0.8)) - k).abs() < 1e-15);
    }

    #[test]
    fn second_kind_values() {
        assert_eq!(incomplete_e(0.0, modulus(0.7)).unwrap(), 0.0);
        assert!((incomplete_e(1.1, modulus(0.0)).unwrap() - 1.1).abs() < 1e-15);
        let e = incomplete_e(PI / 3.0, modulus(0.5)).unwrap();
        assert!((e - 1.007_555_555_144_472).abs() < 1e-14);
    }

    #[test]
    fn integrals_are_odd_and_quasi_periodic() {
        let m = modulus(0.9);
        let (kk, ee) = (complete_k(m), complete_e(m));
        for phi in [0.3, 1.2, 2.9, 7.5] {
            let f = incomplete_f(phi, m).unwrap();
            let e = incomplete_e(phi, m).unwrap();
            assert!((incomplete_f(-phi, m).unwrap() + f).abs() < 1e-14);
            assert!((incomplete_e(-phi, m).unwrap() + e).abs() < 1e-14);
            assert!((incomplete_f(phi + PI, m).unwrap() - f - 2.0 * kk).abs() < 1e-13);
            assert!((incomplete_e(phi + PI, m).unwrap() - e - 2.0 * ee).abs() < 1e-13);
            assert!(e <= phi);
        }
    }

    #[test]
    fn inverse_dn_cases() {
        let m = k_a03();
        assert_eq!(inverse_dn(1.0, m).unwrap(), 0.0);
        let kk = incomplete_f(FRAC_PI_2, m).unwrap();
        assert!((inverse_dn(m.kprime(), m).unwrap() - kk).abs() < 1e-14);
        // dn(K/2) = sqrt(k') = 1/3 here; value from quadrature of the dn-inversion integral.
        let v = inverse_dn(1.0 / 3.0, m).unwrap();
        assert!((v - 1.795_772_499_898_256_4).abs() < 1e-13);
        assert!((jacobi(v, m).unwrap().dn - 1.0 / 3.0).abs() < 1e-14);
        assert!(inverse_dn(1.2, m).is_err());
        assert!(inverse_dn(0.05, m).is_err());
    }

    #[test]
    fn amplitude_continuous_branch() {
        let m = modulus(0.95);
        let kk = complete_k(m);
        for u in [-3.0, 0.4, 5.0, 23.0] {
            let a0 = amplitude(u, m).unwrap();
            let a1 = amplitude(u + 2.0 * kk, m).unwrap();
            assert!((a1 - a0 - PI).abs() < 1e-12, "u = {u}");
        }
    }

    #[test]
    fn near_unit_modulus() {
        let m = EllipticModulus::from_complement(1e-12).unwrap();
        let kk = complete_k(m);
        let j = jacobi(kk, m).unwrap();
        assert!((j.dn - 1e-12).abs() < 1e-15);
        assert!((j.sn - 1.0).abs() < 1e-15);
        // Hyperbolic limit well before the quarter period.
        let j = jacobi(1.5, m).unwrap();
        assert!((j.sn - 1.5f64.tanh()).abs() < 1e-12);
        assert!((j.dn - 1.0 / 1.5f64.cosh()).abs() < 1e-12);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(512))]

        #[test]
        fn pythagorean_identities(u in -50.0..50.0f64, k in 0.0..(1.0 - 1e-10)) {
            let m = modulus(k);
            let j = jacobi(u, m).unwrap();
            proptest::prop_assert!((j.sn * j.sn + j.cn * j.cn - 1.0).abs() <= 1e-12);
            proptest::prop_assert!((j.dn * j.dn + m.m() * j.sn * j.sn - 1.0).abs() <= 1e-12);
            proptest::prop_assert!((j.am.sin() - j.sn).abs() <= 1e-12);
        }

        #[test]
        fn derivatives(u in -10.0..10.0f64, k in 0.0..0.999f64) {
            let m = modulus(k);
            let h = 1e-6;
            let (p, q, j) = (jacobi(u + h, m).unwrap(), jacobi(u - h, m).unwrap(), jacobi(u, m).unwrap());
            let close = |fd: f64, exact: f64| (fd - exact).abs() <= 1e-6 * exact.abs().max(1.0);
            proptest::prop_assert!(close((p.sn - q.sn) / (2.0 * h), j.cn * j.dn));
            proptest::prop_assert!(close((p.cn - q.cn) / (2.0 * h), -j.sn * j.dn));
            proptest::prop_assert!(close((p.dn - q.dn) / (2.0 * h), -m.m() * j.sn * j.cn));
        }

        #[test]
        fn amplitude_round_trip(t in 0.0..1.0f64, k in 0.0..0.999f64) {
            let m = modulus(k);
            let u = t * complete_k(m);
            let phi = amplitude(u, m).unwrap();
            proptest::prop_assert!((incomplete_f(phi, m).unwrap() - u).abs() <= 1e-10);
        }

        #[test]
        fn periodicity(u in -10.0..10.0f64, k in 0.0..0.999f64) {
            let m = modulus(k);
            let kk = complete_k(m);
            let j = jacobi(u, m).unwrap();
            proptest::prop_assert!((jacobi(u + 4.0 * kk, m).unwrap().sn - j.sn).abs() <= 1e-10);
            proptest::prop_assert!((jacobi(u + 2.0 * kk, m).unwrap().dn - j.dn).abs() <= 1e-10);
            proptest::prop_assert!((jacobi(u + 2.0 * kk, m).unwrap().am - j.am - std::f64::consts::PI).abs() <= 1e-10);
        }

        #[test]
        fn agrees_with_quadrature(phi in -10.0..10.0f64, k in 0.0..0.999f64) {
            let m = modulus(k);
            proptest::prop_assert!((incomplete_f(phi, m).unwrap() - crate::quad::legendre_f(phi, k)).abs() <= 1e-10);
            proptest::prop_assert!((incomplete_e(phi, m).unwrap() - crate::quad::legendre_e(phi, k)).abs() <= 1e-10);
        }

        #[test]
        fn inverse_dn_agrees_with_quadrature(t in 0.0..1.0f64, k in 0.01..0.999f64) {
            let m = modulus(k);
            let w = m.kprime() + t * (1.0 - m.kprime());
            let v = inverse_dn(w, m).unwrap();
            proptest::prop_assert!((jacobi(v, m).unwrap().dn - w).abs() <= 1e-12);
            proptest::prop_assert!((v - crate::quad::inverse_dn(w, k)).abs() <= 1e-9);
        }
    }
}
