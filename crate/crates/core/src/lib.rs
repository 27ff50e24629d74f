//! Numerical laboratory for small-noise gradient SDEs at a Peano point.
//!
//! The drift `b = ∇U` comes from a homogeneous potential
//! `U(x) = θ(x/|x|) |x|^{1+γ}` with `γ ∈ (0,1)`, so the unperturbed flow
//! `ẋ = b(x)` has infinitely many solutions leaving the origin. The crate
//! provides the pieces needed to study which of them survive the small-noise
//! limit:
//!
//! * [`potential`] — the potential family, its drift, the Schrödinger
//!   potential `V = ½(|b|² + div b)` and the `V = V₁ − V₂` splitting;
//! * [`spectral`] — finite-difference bottom eigenpairs of `−½Δ + V`,
//!   a 1D shooting oracle and ground-state decay checks;
//! * [`characteristics`] — extremal solutions of `ẋ = b(x)` and the
//!   transport-equation ingredient `g` with `⟨∇U, ∇g⟩ = −λ₁`;
//! * [`sde`] — reproducible Euler–Maruyama ensembles of
//!   `dX = b(X) dt + ε dW`;
//! * [`density`] — kernel density estimates of `p^ε(t,x)`, Feynman–Kac
//!   bridge and Mercer-series evaluations of the same kernel, and the
//!   `ε_γ log p^ε` rate extraction;
//! * [`rates`] — the two rate functionals `I₁`, `I₂` on discrete paths and
//!   endpoint classification against the extremal flows.
//!
//! All numerics are generic over the floating-point scalar via [`Scalar`];
//! concrete `f64` aliases are exported at the crate root.

pub mod characteristics;
pub mod density;
pub mod error;
pub mod linalg;
pub mod ode;
pub mod potential;
pub mod rates;
pub mod scalar;
pub mod sde;
pub mod spectral;
pub mod sphere;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` aliases for the main domain types.
pub type Profile64 = potential::AngularProfile<f64>;
pub type Potential64 = potential::HomogeneousPotential<f64>;
pub type Decomposition64 = potential::PotentialDecomposition<f64>;
pub type Grid64 = spectral::GridSpec<f64>;
pub type Spectrum64 = spectral::SpectralResult<f64>;
pub type Flow64 = characteristics::ExtremalFlow<f64>;
pub type GFunction64 = characteristics::GFunction<f64>;
pub type SdeConfig64 = sde::SdeConfig<f64>;
pub type Ensemble64 = sde::PathEnsemble<f64>;
