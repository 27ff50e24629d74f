//! Truncated Mercer expansion of the Feynman–Kac kernel:
//! `a_t(x,y) ≈ Σ_{j<k} e^{-λ_j t} ψ_j(x) ψ_j(y)`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::SpectralResult;

#[derive(Debug, Clone, Copy)]
pub struct MercerSum<F> {
    pub value: F,
    /// `e^{-(λ_{k+1}-λ₁)t}` when `λ_{k+1}` is known: the relative scale of
    /// the first dropped term.
    pub truncation_indicator: Option<F>,
}

/// Evaluate the truncated sum with multilinear interpolation of the `ψ_j`.
pub fn mercer_sum<F: Scalar>(
    spec: &SpectralResult<F>,
    t: F,
    x: &[F],
    y: &[F],
    k: usize,
) -> Result<MercerSum<F>> {
    if k == 0 || k > spec.k() {
        return Err(Error::InvalidConfig(format!(
            "k = {k} not in 1..={} available eigenpairs",
            spec.k()
        )));
    }
    let mut value = F::zero();
    for j in 0..k {
        // ψ(x)·ψ(y) first: the product commutes exactly, so the kernel is
        // bit-symmetric in (x, y)
        let pair = spec.psi_at(j, x)? * spec.psi_at(j, y)?;
        value += (-spec.eigenvalues[j] * t).exp() * pair;
    }
    let truncation_indicator = if k < spec.k() {
        Some((-(spec.eigenvalues[k] - spec.eigenvalues[0]) * t).exp())
    } else {
        None
    };
    Ok(MercerSum { value, truncation_indicator })
}
