//! Euler–Maruyama simulation of `X_t = ∫ b(X_s) ds + ε W_t` with
//! worker-count-independent randomness.
//!
//! Each path owns a counter-based stream (`ChaCha8`, stream id = path index)
//! derived from the master seed, so the ensemble is bit-identical however
//! the paths are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potential::DriftField;
use crate::scalar::Scalar;

/// `ε_γ = ε^{2(1-γ)/(1+γ)}`, the second-order LDP speed.
pub fn eps_gamma<F: Scalar>(eps: F, gamma: F) -> F {
    eps.powf(F::of(2.0) * (F::one() - gamma) / (F::one() + gamma))
}

/// Time-step rule `dt = min(cap, ε_γ/50)`: the scheme must resolve dynamics
/// below the second-order scale.
pub fn suggested_dt<F: Scalar>(eps: F, gamma: F, cap: F) -> F {
    cap.min(eps_gamma(eps, gamma) / F::of(50.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdeConfig<F> {
    pub epsilon: F,
    pub t_max: F,
    pub dt: F,
    pub n_paths: usize,
    pub master_seed: u64,
    /// Record every k-th step (step 0 and the final step are always kept).
    pub record_stride: usize,
}

impl<F: Scalar> SdeConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > F::zero()) || self.dt > self.t_max {
            return Err(Error::InvalidConfig(format!(
                "dt = {} must satisfy 0 < dt <= T = {}",
                self.dt, self.t_max
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidConfig("n_paths must be >= 1".into()));
        }
        if self.epsilon < F::zero() {
            return Err(Error::InvalidConfig("epsilon must be nonnegative".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidConfig("record_stride must be >= 1".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round().to_usize().unwrap_or(0).max(1)
    }

    /// Recorded step indices: `0, s, 2s, …` plus the final step.
    pub fn recorded_steps(&self) -> Vec<usize> {
        let n = self.n_steps();
        let mut steps: Vec<usize> = (0..=n).step_by(self.record_stride).collect();
        if *steps.last().unwrap() != n {
            steps.push(n);
        }
        steps
    }
}

/// Per-path scalar summary carried alongside the recorded states.
#[derive(Debug, Clone, Copy)]
pub struct PathSummary<F> {
    /// `sup_k |X_k|` over all steps (not just recorded ones).
    pub sup_x: F,
    /// `sup_k |W_k|` of the driving Brownian path, same increments.
    pub sup_w: F,
    pub finite: bool,
}

/// Simulated ensemble; states are stored path-major:
/// `states[((p * n_rec) + r) * d + i]`.
#[derive(Debug, Clone)]
pub struct PathEnsemble<F> {
    pub config: SdeConfig<F>,
    pub dim: usize,
    times: Vec<F>,
    states: Vec<F>,
    summaries: Vec<PathSummary<F>>,
    excluded: Vec<usize>,
}

impl<F: Scalar> PathEnsemble<F> {
    pub fn times(&self) -> &[F] {
        &self.times
    }

    pub fn n_recorded(&self) -> usize {
        self.times.len()
    }

    pub fn summaries(&self) -> &[PathSummary<F>] {
        &self.summaries
    }

    /// Paths flagged non-finite (overflow) and excluded from estimates.
    pub fn excluded(&self) -> &[usize] {
        &self.excluded
    }

    pub fn state(&self, path: usize, rec: usize) -> &[F] {
        let d = self.dim;
        let base = (path * self.n_recorded() + rec) * d;
        &self.states[base..base + d]
    }

    pub fn raw_states(&self) -> &[F] {
        &self.states
    }

    /// `X_t` across the ensemble as an `n_paths × d` row-major array.
    /// `t` must sit on the recorded mesh (nearest-step lookup within dt/2).
    pub fn endpoint_slice(&self, t: F) -> Result<Vec<F>> {
        let cfg = &self.config;
        if t < F::zero() || t > cfg.t_max * (F::one() + F::of(1e-12)) {
            return Err(Error::TimeOutOfRange { t: t.f64(), t_max: cfg.t_max.f64() });
        }
        let mut best = 0usize;
        let mut best_err = F::infinity();
        for (r, &tr) in self.times.iter().enumerate() {
            let e = (tr - t).abs();
            if e < best_err {
                best_err = e;
                best = r;
            }
        }
        if best_err > cfg.dt / F::of(2.0) * (F::one() + F::of(1e-9)) {
            return Err(Error::OffMesh { t: t.f64(), nearest: self.times[best].f64() });
        }
        let d = self.dim;
        let nr = self.n_recorded();
        let mut out = vec![F::zero(); cfg.n_paths * d];
        for p in 0..cfg.n_paths {
            let base = (p * nr + best) * d;
            out[p * d..(p + 1) * d].copy_from_slice(&self.states[base..base + d]);
        }
        Ok(out)
    }
}

/// Run Euler–Maruyama over the ensemble. Paths start at the origin (the
/// Peano point); for `ε = 0` the scheme never leaves it since `b(0) = 0`.
pub fn simulate<F: Scalar>(
    drift: &(impl DriftField<F> + ?Sized),
    cfg: &SdeConfig<F>,
) -> Result<PathEnsemble<F>> {
    cfg.validate()?;
    let d = drift.dim();
    let n_steps = cfg.n_steps();
    let rec_steps = cfg.recorded_steps();
    let n_rec = rec_steps.len();
    let times: Vec<F> = rec_steps.iter().map(|&s| F::of(s as f64) * cfg.dt).collect();
    let mut states = vec![F::zero(); cfg.n_paths * n_rec * d];
    let mut summaries = vec![PathSummary { sup_x: F::zero(), sup_w: F::zero(), finite: true };
        cfg.n_paths];

    let sqrt_dt = cfg.dt.sqrt();
    states
        .par_chunks_mut(n_rec * d)
        .zip(summaries.par_iter_mut())
        .enumerate()
        .for_each(|(p, (slots, summary))| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
            rng.set_stream(p as u64);
            let mut x = vec![F::zero(); d];
            let mut w = vec![F::zero(); d];
            let mut b = vec![F::zero(); d];
            let mut rec_idx = 0usize;
            let mut sup_x = F::zero();
            let mut sup_w = F::zero();
            let mut finite = true;
            for step in 0..=n_steps {
                if rec_idx < rec_steps.len() && rec_steps[rec_idx] == step {
                    slots[rec_idx * d..(rec_idx + 1) * d].copy_from_slice(&x);
                    rec_idx += 1;
                }
                if step == n_steps {
                    break;
                }
                drift.drift_into(&x, &mut b);
                for i in 0..d {
                    let xi: f64 = StandardNormal.sample(&mut rng);
                    let dw = sqrt_dt * F::of(xi);
                    x[i] = x[i] + b[i] * cfg.dt + cfg.epsilon * dw;
                    w[i] = w[i] + dw;
                }
                let xn = crate::linalg::norm(&x);
                let wn = crate::linalg::norm(&w);
                sup_x = sup_x.max(xn);
                sup_w = sup_w.max(wn);
                if !xn.is_finite() {
                    finite = false;
                    break;
                }
            }
            *summary = PathSummary { sup_x, sup_w, finite };
        });

    let excluded: Vec<usize> =
        summaries.iter().enumerate().filter(|(_, s)| !s.finite).map(|(p, _)| p).collect();
    Ok(PathEnsemble { config: cfg.clone(), dim: d, times, states, summaries, excluded })
}
