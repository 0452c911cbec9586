//! Sub-Riemannian geodesics on the solvable Lie group SOLV⁻.
//!
//! The distribution is spanned by the left-invariant fields `a₁ = e₁ + e₂`
//! and `a₃ = e₃`; geodesics from the identity are computed in closed form
//! with Jacobi elliptic functions ([`closedform`]) and checked against a
//! numerical integration of the Hamiltonian flow ([`flow`]).

pub mod closedform;
pub mod elliptic;
pub mod error;
pub mod export;
pub mod flow;
pub mod model;
pub mod quad;
pub mod sphere;
pub mod verify;

pub use error::{Error, Result};
