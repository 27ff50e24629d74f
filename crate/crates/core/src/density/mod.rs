//! Pointwise density estimation for `X^ε_t` and the cross-checks between
//! its three representations: kernel density estimates from simulated
//! ensembles, the Feynman–Kac bridge kernel, and the Mercer eigenexpansion
//! `a_t(x,y) = Σ e^{-λ_j t} ψ_j(x) ψ_j(y)` of the same kernel, tied together
//! by
//!
//! ```text
//! p^ε(t,x) = ε^{-d} ε_γ^{-d/2} e^{U(y)} a_{t/ε_γ}(0, y),   y = x/(ε √ε_γ)
//! ```

mod bridge;
mod mercer;
mod rate_fit;

pub use bridge::fk_bridge;
pub use mercer::{mercer_sum, MercerSum};
pub use rate_fit::{rate_extract, rate_extract_many, LadderRow, RateClass, RateFit, SimTemplate};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::det_sum_by;
use crate::potential::GradientSystem;
use crate::scalar::Scalar;
use crate::sde::{eps_gamma, PathEnsemble};
use crate::spectral::SpectralResult;

/// Minimum ensemble size for a density estimate.
pub const MIN_PATHS: usize = 256;
/// Batch count for batch-means standard errors.
const N_BATCHES: usize = 16;

#[derive(Debug, Clone)]
pub struct DensityEstimate<F> {
    pub t: F,
    pub x: Vec<F>,
    pub p_hat: F,
    pub stderr: F,
    pub bandwidth: Vec<F>,
    pub n_paths: usize,
}

/// Gaussian-product KDE of `p^ε(t, x)` over the recorded ensemble.
///
/// `bandwidth = None` applies Silverman's rule per dimension,
/// `h_i = (4/(d+2))^{1/(d+4)} n^{-1/(d+4)} min(σ_i, IQR_i/1.34)`.
/// The standard error comes from batch means over 16 path batches.
pub fn estimate_density<F: Scalar>(
    ens: &PathEnsemble<F>,
    t: F,
    x: &[F],
    bandwidth: Option<&[F]>,
) -> Result<DensityEstimate<F>> {
    let d = ens.dim;
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    let slice = ens.endpoint_slice(t)?;
    let excluded: std::collections::HashSet<usize> = ens.excluded().iter().cloned().collect();
    let points: Vec<&[F]> = (0..ens.config.n_paths)
        .filter(|p| !excluded.contains(p))
        .map(|p| &slice[p * d..(p + 1) * d])
        .collect();
    if points.len() < MIN_PATHS {
        return Err(Error::InsufficientSample { got: points.len(), need: MIN_PATHS });
    }
    let bw = match bandwidth {
        Some(b) => {
            if b.len() != d || b.iter().any(|&h| !(h > F::zero())) {
                return Err(Error::InvalidConfig("bandwidth must be positive per dimension".into()));
            }
            b.to_vec()
        }
        None => silverman(&points, d)?,
    };

    let m = points.len() / N_BATCHES;
    let used = m * N_BATCHES;
    let norm_const = {
        let two_pi = F::of(std::f64::consts::TAU);
        let mut c = F::one();
        for h in &bw {
            c = c / (two_pi.sqrt() * *h);
        }
        c
    };
    let batch_means: Vec<F> = (0..N_BATCHES)
        .into_par_iter()
        .map(|b| {
            let mut acc = F::zero();
            for p in (b * m)..((b + 1) * m) {
                let mut e = F::zero();
                for i in 0..d {
                    let u = (x[i] - points[p][i]) / bw[i];
                    e += u * u;
                }
                acc += (-e / F::of(2.0)).exp();
            }
            acc * norm_const / F::of(m as f64)
        })
        .collect();
    let p_hat = batch_means.iter().cloned().fold(F::zero(), |a, v| a + v) / F::of(N_BATCHES as f64);
    let var = batch_means
        .iter()
        .map(|&v| (v - p_hat) * (v - p_hat))
        .fold(F::zero(), |a, v| a + v)
        / F::of((N_BATCHES - 1) as f64);
    let stderr = (var / F::of(N_BATCHES as f64)).sqrt();
    Ok(DensityEstimate { t, x: x.to_vec(), p_hat, stderr, bandwidth: bw, n_paths: used })
}

fn silverman<F: Scalar>(points: &[&[F]], d: usize) -> Result<Vec<F>> {
    let n = points.len();
    let nf = F::of(n as f64);
    let exponent = -F::one() / (F::of(d as f64) + F::of(4.0));
    let prefac = (F::of(4.0) / (F::of(d as f64) + F::of(2.0))).powf(-exponent) * nf.powf(exponent);
    let mut bw = Vec::with_capacity(d);
    for i in 0..d {
        let mean = det_sum_by(points, |p| p[i]) / nf;
        let var = det_sum_by(points, |p| (p[i] - mean) * (p[i] - mean)) / (nf - F::one());
        let sigma = var.sqrt();
        let mut col: Vec<F> = points.iter().map(|p| p[i]).collect();
        col.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |f: f64| col[((n - 1) as f64 * f) as usize];
        let iqr = (q(0.75) - q(0.25)) / F::of(1.34);
        let spread = if iqr > F::zero() { sigma.min(iqr) } else { sigma };
        let h = prefac * spread;
        if !(h > F::zero()) {
            return Err(Error::InvalidConfig(
                "degenerate sample: Silverman bandwidth is zero".into(),
            ));
        }
        bw.push(h);
    }
    Ok(bw)
}

/// Report of the `p̂ ≈ ε^{-d} ε_γ^{-d/2} e^{U(y)} a_{t/ε_γ}(0,y)` check.
#[derive(Debug, Clone)]
pub struct RepresentationReport<F> {
    pub epsilon: F,
    pub t: F,
    pub x: Vec<F>,
    pub p_kde: F,
    pub kde_stderr: F,
    pub rhs: F,
    pub rel_deviation: F,
    pub combined_error: F,
    pub pass: bool,
    /// `e^{-(λ_{k+1}-λ₁) t/ε_γ}`; near 1 means the Mercer sum is unreliable.
    pub truncation_indicator: Option<F>,
    /// `t/ε_γ < 0.1`: too little diffusion time for the truncated sum.
    pub warn_small_tau: bool,
    /// Floating-point check of `U(x/(ε √ε_γ)) = U(x)/ε²`.
    pub scaling_identity_rel_err: F,
}

/// Compare the KDE of `p^ε(t,x)` against the spectral representation.
pub fn representation_check<F: Scalar>(
    sys: &(impl GradientSystem<F> + ?Sized),
    gamma: F,
    spec: &SpectralResult<F>,
    ens: &PathEnsemble<F>,
    t: F,
    x: &[F],
    k: usize,
) -> Result<RepresentationReport<F>> {
    let d = ens.dim;
    let eps = ens.config.epsilon;
    let eg = eps_gamma(eps, gamma);
    let scale = eps * eg.sqrt();
    let y: Vec<F> = x.iter().map(|&c| c / scale).collect();
    let tau = t / eg;

    let u_y = sys.u(&y);
    let u_scaled = sys.u(x) / (eps * eps);
    let scaling_err = (u_y - u_scaled).abs() / u_scaled.abs().max(F::of(1e-300));

    let origin = vec![F::zero(); d];
    let a = mercer_sum(spec, tau, &origin, &y, k)?; // OutOfGrid if y escapes the box
    let prefac = eps.powi(-(d as i32)) * eg.powf(-F::of(d as f64) / F::of(2.0));
    let rhs = prefac * u_y.exp() * a.value;

    let est = estimate_density(ens, t, x, None)?;
    let rel = (est.p_hat - rhs).abs() / rhs.abs().max(F::of(1e-300));
    let trunc_err = a.truncation_indicator.map(|ti| ti * rhs.abs()).unwrap_or(F::zero());
    let combined = F::of(3.0) * (est.stderr + trunc_err);
    Ok(RepresentationReport {
        epsilon: eps,
        t,
        x: x.to_vec(),
        p_kde: est.p_hat,
        kde_stderr: est.stderr,
        rhs,
        rel_deviation: rel,
        combined_error: combined,
        pass: (est.p_hat - rhs).abs() <= combined,
        truncation_indicator: a.truncation_indicator,
        warn_small_tau: tau < F::of(0.1),
        scaling_identity_rel_err: scaling_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::hooks::ZeroDrift;
    use crate::sde::{simulate, SdeConfig};

    fn brownian_ensemble(n_paths: usize, seed: u64) -> PathEnsemble<f64> {
        let cfg = SdeConfig {
            epsilon: 1.0,
            t_max: 1.0,
            dt: 1e-3,
            n_paths,
            master_seed: seed,
            record_stride: 1000,
        };
        simulate(&ZeroDrift { dim: 1 }, &cfg).unwrap()
    }

    #[test]
    fn standard_gaussian_density_at_zero() {
        // b ≡ 0, ε = 1, t = 1: p(1, 0) = (2π)^{-1/2}
        let ens = brownian_ensemble(40_000, 21);
        let est = estimate_density(&ens, 1.0, &[0.0], None).unwrap();
        let exact = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!(
            (est.p_hat - exact).abs() < 3.0 * est.stderr + 0.004,
            "p = {} ± {}, exact {exact}",
            est.p_hat,
            est.stderr
        );
    }

    #[test]
    fn symmetric_law_symmetric_density() {
        let ens = brownian_ensemble(30_000, 22);
        let a = estimate_density(&ens, 1.0, &[0.7], None).unwrap();
        let b = estimate_density(&ens, 1.0, &[-0.7], None).unwrap();
        let combined = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
        assert!((a.p_hat - b.p_hat).abs() < 3.0 * combined + 1e-3);
    }

    #[test]
    fn insufficient_sample_rejected() {
        let ens = brownian_ensemble(300, 23);
        // excluded-path filtering aside, 300 paths pass; 200 would not
        assert!(estimate_density(&ens, 1.0, &[0.0], None).is_ok());
        let small = brownian_ensemble(200, 24);
        assert!(matches!(
            estimate_density(&small, 1.0, &[0.0], None),
            Err(Error::InsufficientSample { .. })
        ));
    }

    #[test]
    fn explicit_bandwidth_respected() {
        let ens = brownian_ensemble(5_000, 25);
        let est = estimate_density(&ens, 1.0, &[0.0], Some(&[0.05])).unwrap();
        assert_eq!(est.bandwidth, vec![0.05]);
        assert!(matches!(
            estimate_density(&ens, 1.0, &[0.0], Some(&[-0.1])),
            Err(Error::InvalidConfig(_))
        ));
    }
}
