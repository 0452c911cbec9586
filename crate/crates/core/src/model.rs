//! The group SOLV⁻ in global coordinates `(x, y, z)`, its left-invariant
//! sub-Riemannian structure `Δ = span{a₁, a₃}` and the normal Hamiltonian
//!
//! ```text
//! H = ¼ e^{-2z} p_x² + ½ p_x p_y + ¼ e^{2z} p_y² + ½ p_z².
//! ```
//!
//! With `a = p_x/√2`, `b = p_y/√2` this is `H = ½ (a e^{-z} + b e^{z})² + ½ p_z²`.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl GroupPoint {
    pub const IDENTITY: GroupPoint = GroupPoint {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Group product `self · other` of the matrices
    /// `[[e^{-z}, 0, x], [0, e^{z}, y], [0, 0, 1]]`.
    pub fn compose(&self, other: &GroupPoint) -> GroupPoint {
        GroupPoint {
            x: self.x + (-self.z).exp() * other.x,
            y: self.y + self.z.exp() * other.y,
            z: self.z + other.z,
        }
    }

    pub fn inverse(&self) -> GroupPoint {
        GroupPoint {
            x: -self.z.exp() * self.x,
            y: -(-self.z).exp() * self.y,
            z: -self.z,
        }
    }

    /// The involution `(x, y, z) -> (y, x, -z)`.
    pub fn swap_reflect(&self) -> GroupPoint {
        GroupPoint {
            x: self.y,
            y: self.x,
            z: -self.z,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn max_abs_diff(&self, other: &GroupPoint) -> f64 {
        nan_max(
            nan_max((self.x - other.x).abs(), (self.y - other.y).abs()),
            (self.z - other.z).abs(),
        )
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// A point of the cotangent bundle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseState {
    pub point: GroupPoint,
    pub px: f64,
    pub py: f64,
    pub pz: f64,
}

impl PhaseState {
    pub fn new(x: f64, y: f64, z: f64, px: f64, py: f64, pz: f64) -> Self {
        Self {
            point: GroupPoint { x, y, z },
            px,
            py,
            pz,
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.point.x,
            self.point.y,
            self.point.z,
            self.px,
            self.py,
            self.pz,
        ]
    }

    pub fn from_array(s: [f64; 6]) -> Self {
        Self::new(s[0], s[1], s[2], s[3], s[4], s[5])
    }

    /// Cotangent lift of the swap-reflection: `(x, y, z, p_x, p_y, p_z) ->
    /// (y, x, -z, p_y, p_x, -p_z)`. It maps solutions of the Hamiltonian
    /// system to solutions.
    pub fn swap_reflect(&self) -> PhaseState {
        PhaseState {
            point: self.point.swap_reflect(),
            px: self.py,
            py: self.px,
            pz: -self.pz,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Componentwise max-norm distance over all six coordinates.
    pub fn max_abs_diff(&self, other: &PhaseState) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, nan_max)
    }
}

/// `max` that propagates NaN, for worst-case reductions.
pub fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Velocity {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Velocity {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }
}

/// Initial covector of an arc-length parameterized geodesic from the identity.
///
/// `a = p_x/√2`, `b = p_y/√2`, `pz0 = p_z(0)`, and `(a + b)² + pz0² = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedCovector {
    pub a: f64,
    pub b: f64,
    pub pz0: f64,
}

const LEVEL_SET_TOL: f64 = 1e-12;

impl NormalizedCovector {
    /// Checked constructor; the triple must already lie on `H = ½`.
    pub fn new(a: f64, b: f64, pz0: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && pz0.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite covector ({a}, {b}, {pz0})"
            )));
        }
        let s = a + b;
        let residual = s * s + pz0 * pz0 - 1.0;
        if residual.abs() > LEVEL_SET_TOL {
            return Err(Error::domain(format!(
                "covector ({a}, {b}, {pz0}) is off the level set H = 1/2: (a+b)² + pz0² - 1 = {residual:e}"
            )));
        }
        Ok(Self { a, b, pz0 })
    }

    /// Completes `(a, b)` with `pz0 = ±sqrt(1 - (a+b)²)`; requires `|a + b| <= 1`.
    pub fn from_ab(a: f64, b: f64, pz_positive: bool) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::domain(format!("non-finite covector ({a}, {b})")));
        }
        let s = a + b;
        if s.abs() > 1.0 {
            return Err(Error::domain(format!(
                "inadmissible covector: |a + b| = {} exceeds 1",
                s.abs()
            )));
        }
        let pz = ((1.0 - s) * (1.0 + s)).sqrt();
        Ok(Self {
            a,
            b,
            pz0: if pz_positive { pz } else { -pz },
        })
    }

    pub fn px(&self) -> f64 {
        SQRT_2 * self.a
    }

    pub fn py(&self) -> f64 {
        SQRT_2 * self.b
    }

    /// Phase state at `t = 0`: the identity with this covector.
    pub fn initial_state(&self) -> PhaseState {
        PhaseState {
            point: GroupPoint::IDENTITY,
            px: self.px(),
            py: self.py(),
            pz: self.pz0,
        }
    }

    /// `(a, b, pz0) -> (b, a, -pz0)`, the covector of the swap-reflected geodesic.
    pub fn swap_reflect(&self) -> NormalizedCovector {
        NormalizedCovector {
            a: self.b,
            b: self.a,
            pz0: -self.pz0,
        }
    }
}

pub fn hamiltonian(s: &PhaseState) -> f64 {
    let z = s.point.z;
    // Grouped so the swap-reflection leaves the rounding unchanged.
    let outer = 0.25 * (-2.0 * z).exp() * s.px * s.px + 0.25 * (2.0 * z).exp() * s.py * s.py;
    outer + 0.5 * (s.px * s.py) + 0.5 * s.pz * s.pz
}

/// Length of `v` in the left-invariant metric `g = diag(e^{2z}, e^{-2z}, 1)`.
pub fn sub_riemannian_speed(s: &PhaseState, v: &Velocity) -> f64 {
    let z = s.point.z;
    let ex = z.exp() * v.x;
    let ey = (-z).exp() * v.y;
    (ex * ex + ey * ey + v.z * v.z).sqrt()
}

/// `ẏ - e^{2z} ẋ`; zero exactly when `v ∈ span{e^{-z}∂x + e^{z}∂y, ∂z}`.
pub fn admissibility_residual(s: &PhaseState, v: &Velocity) -> f64 {
    v.y - (2.0 * s.point.z).exp() * v.x
}

/// Rescales `(p_x, p_y, p_z)` at the identity onto `H = ½`.
pub fn normalize_covector(px: f64, py: f64, pz: f64) -> Result<NormalizedCovector> {
    // At z = 0 the Hamiltonian is ¼(p_x + p_y)² + ½p_z²; the factored form
    // avoids cancellation when p_x ≈ -p_y.
    let h = 0.25 * (px + py).powi(2) + 0.5 * pz * pz;
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::domain(format!(
            "covector ({px}, {py}, {pz}) has H = {h}; cannot normalize"
        )));
    }
    let scale = (0.5 / h).sqrt();
    Ok(NormalizedCovector {
        a: scale * px / SQRT_2,
        b: scale * py / SQRT_2,
        pz0: scale * pz,
    })
}
