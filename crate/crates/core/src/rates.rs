//! The two LDP rate functionals on discretized paths:
//! `I₁(φ) = ½∫|φ̇ - b(φ)|² dt` at speed `ε⁻²`, and
//! `I₂(φ) = λ₁T + g(φ(T))` at speed `ε_γ⁻¹` on ODE solutions (`+∞` off
//! them), plus endpoint classification against the extremal flows.

use crate::characteristics::{ExtremalFlow, GFunction};
use crate::error::{Error, Result};
use crate::linalg::{dist, norm};
use crate::potential::{DriftField, HomogeneousPotential};
use crate::scalar::Scalar;
use crate::sde::PathEnsemble;
use crate::sphere;

/// A path sampled on a uniform mesh on `[0, T]`, starting at the origin.
#[derive(Debug, Clone)]
pub struct DiscretePath<F> {
    times: Vec<F>,
    states: Vec<Vec<F>>,
    dim: usize,
}

impl<F: Scalar> DiscretePath<F> {
    pub fn new(times: Vec<F>, states: Vec<Vec<F>>) -> Result<Self> {
        if times.len() < 2 || times.len() != states.len() {
            return Err(Error::InvalidPath("need matching times/states with >= 2 samples".into()));
        }
        let dim = states[0].len();
        if states.iter().any(|s| s.len() != dim) {
            return Err(Error::InvalidPath("inconsistent state dimensions".into()));
        }
        let dt = times[1] - times[0];
        if !(dt > F::zero()) {
            return Err(Error::InvalidPath("times must be strictly increasing".into()));
        }
        for w in times.windows(2) {
            let step = w[1] - w[0];
            if ((step - dt) / dt).abs() > F::of(1e-9) {
                return Err(Error::InvalidPath(format!(
                    "non-uniform mesh: step {step} vs {dt}"
                )));
            }
        }
        if norm(&states[0]) > F::of(1e-12) {
            return Err(Error::InvalidPath("path must start at the origin".into()));
        }
        Ok(Self { times, states, dim })
    }

    /// Build from a flow delayed by `t0` on a uniform mesh with `n` steps.
    pub fn from_flow(flow: &ExtremalFlow<F>, t0: F, t_max: F, n: usize) -> Result<Self> {
        let times: Vec<F> =
            (0..=n).map(|k| t_max * F::of(k as f64) / F::of(n as f64)).collect();
        let states: Vec<Vec<F>> = times.iter().map(|&t| flow.position_at(t - t0)).collect();
        Self::new(times, states)
    }

    pub fn dt(&self) -> F {
        self.times[1] - self.times[0]
    }

    pub fn t_max(&self) -> F {
        *self.times.last().unwrap()
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn state(&self, k: usize) -> &[F] {
        &self.states[k]
    }

    /// `φ̇(t_k)` by central differences (second-order one-sided at the ends).
    pub fn velocity(&self, k: usize) -> Vec<F> {
        let dt = self.dt();
        let n = self.states.len();
        let two = F::of(2.0);
        if k == 0 {
            (0..self.dim)
                .map(|i| {
                    (-F::of(3.0) * self.states[0][i] + F::of(4.0) * self.states[1][i]
                        - self.states[2][i])
                        / (two * dt)
                })
                .collect()
        } else if k == n - 1 {
            (0..self.dim)
                .map(|i| {
                    (F::of(3.0) * self.states[n - 1][i] - F::of(4.0) * self.states[n - 2][i]
                        + self.states[n - 3][i])
                        / (two * dt)
                })
                .collect()
        } else {
            (0..self.dim)
                .map(|i| (self.states[k + 1][i] - self.states[k - 1][i]) / (two * dt))
                .collect()
        }
    }
}

/// `I` value that may be the `+∞` marker (never a float sentinel).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateValue<F> {
    Finite(F),
    Infinite,
}

impl<F: Scalar> RateValue<F> {
    pub fn finite(&self) -> Option<F> {
        match self {
            RateValue::Finite(v) => Some(*v),
            RateValue::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, RateValue::Infinite)
    }
}

/// First-order rate `I₁(φ) = ½ ∫₀ᵀ |φ̇ - b(φ)|² ds` by composite trapezoid.
/// Paths with a step increment above `dt^{1/4}` are reported as `+∞`
/// (mesh-scale proxy for failing absolute continuity).
pub fn i1<F: Scalar>(
    path: &DiscretePath<F>,
    drift: &(impl DriftField<F> + ?Sized),
) -> Result<RateValue<F>> {
    if path.n_steps() < 64 {
        return Err(Error::InvalidPath(format!(
            "I1 needs a mesh with >= 64 steps, got {}",
            path.n_steps()
        )));
    }
    let dt = path.dt();
    let bound = dt.powf(F::of(0.25));
    for k in 0..path.n_steps() {
        if dist(&path.states[k + 1], &path.states[k]) > bound {
            return Ok(RateValue::Infinite);
        }
    }
    let n = path.states.len();
    let mut b = vec![F::zero(); path.dim];
    let mut acc = F::zero();
    for k in 0..n {
        let v = path.velocity(k);
        drift.drift_into(&path.states[k], &mut b);
        let mut err2 = F::zero();
        for i in 0..path.dim {
            let e = v[i] - b[i];
            err2 += e * e;
        }
        let w = if k == 0 || k == n - 1 { F::of(0.5) } else { F::one() };
        acc += w * err2;
    }
    Ok(RateValue::Finite(acc * dt / F::of(2.0)))
}

#[derive(Debug, Clone)]
pub struct SolutionCheck<F> {
    pub is_solution: bool,
    /// `max_k |φ̇(t_k) - b(φ(t_k))|` over interior mesh points.
    pub residual: F,
    /// First mesh time with `|φ|` above the departure threshold, else `T`.
    pub t0: F,
}

/// Departure threshold: the radius an isotropic extremal reaches in one mesh
/// step, `((1-γ)(1+γ) θ̄ dt)^{1/(1-γ)}` with `θ̄` the sphere-mesh mean of θ.
pub fn departure_threshold<F: Scalar>(pot: &HomogeneousPotential<F>, dt: F) -> F {
    let mesh = sphere::default_mesh::<F>(pot.dim());
    let mean_theta = mesh.iter().map(|y| pot.profile().eval(y)).fold(F::zero(), |a, v| a + v)
        / F::of(mesh.len() as f64);
    let g = pot.gamma();
    ((F::one() - g) * (F::one() + g) * mean_theta * dt).powf(F::one() / (F::one() - g))
}

/// Classify a path as an ODE solution by its drift residual.
pub fn is_ode_solution<F: Scalar>(
    path: &DiscretePath<F>,
    drift: &(impl DriftField<F> + ?Sized),
    tol: F,
    t0_threshold: F,
) -> SolutionCheck<F> {
    let n = path.states.len();
    let mut residual = F::zero();
    let mut max_b = F::zero();
    let mut b = vec![F::zero(); path.dim];
    for k in 1..n - 1 {
        let v = path.velocity(k);
        drift.drift_into(&path.states[k], &mut b);
        let mut e2 = F::zero();
        for i in 0..path.dim {
            let e = v[i] - b[i];
            e2 += e * e;
        }
        residual = residual.max(e2.sqrt());
        max_b = max_b.max(norm(&b));
    }
    let mut t0 = path.t_max();
    for k in 0..n {
        if norm(&path.states[k]) > t0_threshold {
            t0 = path.times[k];
            break;
        }
    }
    SolutionCheck { is_solution: residual <= tol * (F::one() + max_b), residual, t0 }
}

/// Default relative residual tolerance separating integrator-accurate
/// solutions (~1e-8) from noisy sample paths (~ε/√dt).
pub const DEFAULT_SOLUTION_TOL: f64 = 1e-3;

/// Second-order rate `I₂ = λ₁T + g(φ(T))` on ODE solutions, `+∞` otherwise.
pub fn i2<F: Scalar>(
    path: &DiscretePath<F>,
    gf: &GFunction<F>,
    tol: F,
) -> Result<RateValue<F>> {
    let pot = gf.pot();
    let check = is_ode_solution(path, pot, tol, departure_threshold(pot, path.dt()));
    if !check.is_solution {
        return Ok(RateValue::Infinite);
    }
    let end = path.state(path.states.len() - 1);
    let g_end = if norm(end) == F::zero() { F::zero() } else { gf.eval_g(end)? };
    Ok(RateValue::Finite(gf.lambda1() * path.t_max() + g_end))
}

/// Per-flow endpoint weights: fraction of paths within `delta` of each
/// extremal position at time `t`, plus the unclassified remainder.
#[derive(Debug, Clone)]
pub struct AlphaReport<F> {
    pub weights: Vec<F>,
    pub counts: Vec<usize>,
    pub unclassified: F,
    pub n_paths: usize,
    /// Binomial standard error of each weight.
    pub weight_se: Vec<F>,
}

pub fn estimate_alpha<F: Scalar>(
    ens: &PathEnsemble<F>,
    flows: &[ExtremalFlow<F>],
    t: F,
    delta: F,
) -> Result<AlphaReport<F>> {
    if flows.is_empty() {
        return Err(Error::InvalidConfig("need at least one extremal flow".into()));
    }
    let centers: Vec<Vec<F>> = flows.iter().map(|f| f.position_at(t)).collect();
    for i in 0..centers.len() {
        for j in (i + 1)..centers.len() {
            let d = dist(&centers[i], &centers[j]);
            if d <= F::of(2.0) * delta {
                return Err(Error::OverlappingNeighborhoods(format!(
                    "flows {i} and {j} are {d:.4e} apart at t = {t}; need > 2 delta = {:.4e}",
                    (F::of(2.0) * delta)
                )));
            }
        }
    }
    let slice = ens.endpoint_slice(t)?;
    let d = ens.dim;
    let n = ens.config.n_paths;
    let mut counts = vec![0usize; flows.len()];
    let mut classified = 0usize;
    for p in 0..n {
        let x = &slice[p * d..(p + 1) * d];
        for (i, c) in centers.iter().enumerate() {
            if dist(x, c) <= delta {
                counts[i] += 1;
                classified += 1;
                break; // disjoint neighborhoods: at most one match
            }
        }
    }
    let nf = F::of(n as f64);
    let weights: Vec<F> = counts.iter().map(|&c| F::of(c as f64) / nf).collect();
    let weight_se: Vec<F> =
        weights.iter().map(|&w| (w * (F::one() - w) / nf).sqrt()).collect();
    Ok(AlphaReport {
        weights,
        counts,
        unclassified: F::of((n - classified) as f64) / nf,
        n_paths: n,
        weight_se,
    })
}
