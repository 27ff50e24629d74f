//! Extremal solutions of `ẋ = b(x)` leaving the origin, and the function `g`
//! with `⟨∇U, ∇g⟩ = -λ₁`, `g(0) = 0`, defined along characteristics by
//! `g(φ(t)) = -λ₁ (t - t₀)⁺`.
//!
//! In radial/angular coordinates `φ = r ω` the flow is
//!
//! ```text
//! dr/dt = r^γ (1+γ) θ(ω)
//! dω/dt = r^{γ-1} (∇θ(ω) - ⟨∇θ(ω), ω⟩ ω)
//! ```
//!
//! The ODE is non-Lipschitz at the origin, so the extremal branch through a
//! departure angle `ω₀` is selected by seeding at a small radius `r0` with
//! the analytic time shift `t_seed = r0^{1-γ} / ((1-γ)(1+γ)θ(ω₀))`, which
//! extrapolates the curve back to the origin at `t = 0`.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::ode::{hermite, integrate, OdeNode, OdeOptions};
use crate::potential::{DriftField, HomogeneousPotential};
use crate::scalar::Scalar;
use crate::sphere;

/// Default seed radius for branch selection at the Peano point.
pub const DEFAULT_SEED_RADIUS: f64 = 1e-6;

/// A characteristic curve leaving the origin at angle `omega0` at time 0.
#[derive(Debug, Clone)]
pub struct ExtremalFlow<F> {
    pub omega0: Vec<F>,
    pub gamma: F,
    /// Time at which the seed radius is reached.
    pub t_seed: F,
    /// Accepted integrator nodes with state `[r, ω…]`.
    nodes: Vec<OdeNode<F>>,
}

impl<F: Scalar> ExtremalFlow<F> {
    pub fn dim(&self) -> usize {
        self.omega0.len()
    }

    pub fn t_end(&self) -> F {
        self.nodes.last().map(|n| n.t).unwrap_or(self.t_seed)
    }

    /// Sample times of the stored nodes.
    pub fn times(&self) -> Vec<F> {
        self.nodes.iter().map(|n| n.t).collect()
    }

    /// Stored positions `φ₀(t)` at the node times.
    pub fn points(&self) -> Vec<Vec<F>> {
        self.nodes.iter().map(|n| Self::state_to_point(&n.y)).collect()
    }

    fn state_to_point(y: &[F]) -> Vec<F> {
        let r = y[0];
        let omega = &y[1..];
        let n = norm(omega);
        omega.iter().map(|&w| r * w / n).collect()
    }

    /// `φ₀(t)` anywhere: Hermite interpolation on the covered window and the
    /// exact degree-`1/(1-γ)` homogeneity `φ₀(λt) = λ^{1/(1-γ)} φ₀(t)`
    /// outside it; `φ₀(t) = 0` for `t ≤ 0`.
    pub fn position_at(&self, t: F) -> Vec<F> {
        let d = self.dim();
        if t <= F::zero() {
            return vec![F::zero(); d];
        }
        let t_lo = self.nodes.first().map(|n| n.t).unwrap_or(self.t_seed);
        let t_hi = self.t_end();
        let power = F::one() / (F::one() - self.gamma);
        if t < t_lo {
            let lam = (t / t_lo).powf(power);
            return Self::state_to_point(&self.nodes[0].y).iter().map(|&c| lam * c).collect();
        }
        if t > t_hi {
            let lam = (t / t_hi).powf(power);
            let last = self.nodes.last().unwrap();
            return Self::state_to_point(&last.y).iter().map(|&c| lam * c).collect();
        }
        let idx = self.nodes.partition_point(|n| n.t <= t).min(self.nodes.len() - 1).max(1);
        let y = hermite(&self.nodes[idx - 1], &self.nodes[idx], t);
        Self::state_to_point(&y)
    }

    pub fn radius_at(&self, t: F) -> F {
        norm(&self.position_at(t))
    }

    /// Direction `φ₀(t)/|φ₀(t)|` at a covered time.
    pub fn angle_at(&self, t: F) -> Vec<F> {
        let p = self.position_at(t.max(self.t_seed));
        let r = norm(&p);
        p.iter().map(|&c| c / r).collect()
    }
}

fn radial_angular_rhs<F: Scalar>(pot: &HomogeneousPotential<F>, y: &[F], dy: &mut [F]) {
    let gamma = pot.gamma();
    let r = y[0];
    let omega = &y[1..];
    let n = norm(omega);
    let unit: Vec<F> = omega.iter().map(|&w| w / n).collect();
    let theta = pot.profile().eval(&unit);
    let grad = pot.profile().grad(&unit);
    let radial_part = dot(&grad, &unit);
    dy[0] = r.powf(gamma) * (F::one() + gamma) * theta;
    let scale = r.powf(gamma - F::one());
    for i in 0..unit.len() {
        dy[1 + i] = scale * (grad[i] - radial_part * unit[i]);
    }
}

fn seed_time<F: Scalar>(pot: &HomogeneousPotential<F>, omega: &[F], r0: F) -> F {
    let gamma = pot.gamma();
    let theta = pot.profile().eval(omega);
    r0.powf(F::one() - gamma) / ((F::one() - gamma) * (F::one() + gamma) * theta)
}

/// Integrate the extremal solution leaving the origin at angle `omega0`,
/// up to time `t_end`, seeded at radius `r0`.
pub fn integrate_extremal<F: Scalar>(
    pot: &HomogeneousPotential<F>,
    omega0: &[F],
    t_end: F,
    r0: F,
    opts: &OdeOptions<F>,
) -> Result<ExtremalFlow<F>> {
    if omega0.len() != pot.dim() {
        return Err(Error::DimensionMismatch { expected: pot.dim(), got: omega0.len() });
    }
    let n0 = norm(omega0);
    if (n0 - F::one()).abs() > F::of(1e-12) {
        return Err(Error::NotUnitVector(n0.f64()));
    }
    if !(r0 > F::zero()) {
        return Err(Error::InvalidConfig("seed radius must be positive".into()));
    }
    let t_seed = seed_time(pot, omega0, r0);
    if t_end <= t_seed {
        return Err(Error::InvalidConfig(format!(
            "t_end = {t_end} must exceed the seed time {t_seed}"
        )));
    }
    let mut y0 = Vec::with_capacity(1 + omega0.len());
    y0.push(r0);
    y0.extend_from_slice(omega0);
    let mut nodes = Vec::new();
    integrate(
        |_t, y: &[F], dy: &mut [F]| radial_angular_rhs(pot, y, dy),
        t_seed,
        &y0,
        t_end,
        opts,
        |node| nodes.push(node.clone()),
    )?;
    Ok(ExtremalFlow { omega0: omega0.to_vec(), gamma: pot.gamma(), t_seed, nodes })
}

/// Where the `g` queries are allowed to leave the integrated angle mesh.
#[derive(Debug, Clone)]
pub enum Coverage<F> {
    /// Departure-angle mesh covers the whole sphere.
    Full,
    /// Restricted mesh: queries whose backward departure angle is farther
    /// than `tol` (Euclidean on the sphere) from every mesh angle error out.
    Partial { tol: F },
}

/// `g` with `⟨∇U, ∇g⟩ = -λ₁`, evaluated by tracing the characteristic
/// through `x` back to the origin: `g(x) = -λ₁ t_x`.
#[derive(Debug, Clone)]
pub struct GFunction<F: Scalar> {
    lambda1: F,
    pot: HomogeneousPotential<F>,
    flows: Vec<ExtremalFlow<F>>,
    r0: F,
    coverage: Coverage<F>,
    opts: OdeOptions<F>,
}

impl<F: Scalar> GFunction<F> {
    /// Build with a full departure-angle mesh (`n_angles` ignored in d = 1,
    /// where the mesh is `{-1, +1}`).
    pub fn build(
        pot: &HomogeneousPotential<F>,
        lambda1: F,
        n_angles: usize,
        t_end: F,
        r0: F,
    ) -> Result<Self> {
        let angles = sphere::mesh::<F>(pot.dim(), n_angles);
        Self::build_with_angles(pot, lambda1, &angles, t_end, r0, Coverage::Full)
    }

    pub fn build_with_angles(
        pot: &HomogeneousPotential<F>,
        lambda1: F,
        omegas: &[Vec<F>],
        t_end: F,
        r0: F,
        coverage: Coverage<F>,
    ) -> Result<Self> {
        if !(lambda1 > F::zero()) {
            return Err(Error::InvalidConfig(format!("lambda1 = {lambda1} must be positive")));
        }
        let opts = OdeOptions { rtol: F::of(1e-10), atol: F::of(1e-12), ..Default::default() };
        let mut flows = Vec::with_capacity(omegas.len());
        for omega in omegas {
            flows.push(integrate_extremal(pot, omega, t_end, r0, &opts)?);
        }
        Ok(Self { lambda1, pot: pot.clone(), flows, r0, coverage, opts })
    }

    pub fn lambda1(&self) -> F {
        self.lambda1
    }

    pub fn flows(&self) -> &[ExtremalFlow<F>] {
        &self.flows
    }

    pub fn pot(&self) -> &HomogeneousPotential<F> {
        &self.pot
    }

    /// Departure time and departure angle of the characteristic through `x`,
    /// found by integrating backward in `σ = ln r` from `|x|` to the seed
    /// radius (the angular equation is not stiff in that variable).
    pub fn departure_time(&self, x: &[F]) -> Result<(F, Vec<F>)> {
        let d = self.pot.dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
        let r = norm(x);
        if r == F::zero() {
            return Err(Error::InvalidConfig("departure time undefined at the origin".into()));
        }
        let omega: Vec<F> = x.iter().map(|&c| c / r).collect();
        if r <= self.r0 {
            return Ok((seed_time(&self.pot, &omega, r), omega));
        }
        let gamma = self.pot.gamma();
        // state = [t accumulated, ω…]; σ = ln r
        let mut y0 = vec![F::zero(); 1 + d];
        y0[1..].copy_from_slice(&omega);
        let sigma0 = r.ln();
        let sigma1 = self.r0.ln();
        let pot = &self.pot;
        let end = integrate(
            |sigma, y: &[F], dy: &mut [F]| {
                let w = &y[1..];
                let n = norm(w);
                let unit: Vec<F> = w.iter().map(|&c| c / n).collect();
                let theta = pot.profile().eval(&unit);
                let grad = pot.profile().grad(&unit);
                let radial = dot(&grad, &unit);
                let denom = (F::one() + gamma) * theta;
                dy[0] = ((F::one() - gamma) * sigma).exp() / denom;
                for i in 0..unit.len() {
                    dy[1 + i] = (grad[i] - radial * unit[i]) / denom;
                }
            },
            sigma0,
            &y0,
            sigma1,
            &self.opts,
            |_| {},
        )?;
        let elapsed = -end.y[0]; // time from r0 up to |x|
        let mut omega0: Vec<F> = end.y[1..].to_vec();
        let n = norm(&omega0);
        for c in omega0.iter_mut() {
            *c = *c / n;
        }
        if let Coverage::Partial { tol } = self.coverage {
            let min_dist = self
                .flows
                .iter()
                .map(|f| crate::linalg::dist(&f.omega0, &omega0))
                .fold(F::infinity(), F::min);
            if min_dist > tol {
                return Err(Error::UnreachableDirection(format!(
                    "departure angle is {min_dist:.3e} from the nearest integrated flow (tol {tol:.3e})"
                )));
            }
        }
        let t_x = seed_time(&self.pot, &omega0, self.r0) + elapsed;
        Ok((t_x, omega0))
    }

    /// `g(x) = -λ₁ t_x`; `g(0) = 0`.
    pub fn eval_g(&self, x: &[F]) -> Result<F> {
        if norm(x) == F::zero() {
            return Ok(F::zero());
        }
        let (t_x, _) = self.departure_time(x)?;
        Ok(-self.lambda1 * t_x)
    }

    /// Large-`|x|` closed form `-λ₁ |x|^{1-γ} / ((1+γ) θ(ω∞))`, with `ω∞`
    /// the limiting angle of the flow through `x`. Diagnostic only; in the
    /// isotropic case it differs from `eval_g` by the factor `(1-γ)`.
    pub fn asymptotic_g(&self, x: &[F]) -> Result<F> {
        let r = norm(x);
        if r == F::zero() {
            return Err(Error::InvalidConfig("asymptotic form undefined at the origin".into()));
        }
        let omega: Vec<F> = x.iter().map(|&c| c / r).collect();
        let limit = self.limiting_angle(&omega)?;
        let gamma = self.pot.gamma();
        let theta = self.pot.profile().eval(&limit);
        Ok(-self.lambda1 * r.powf(F::one() - gamma) / ((F::one() + gamma) * theta))
    }

    /// Forward limit of the angle dynamics `dω/dσ = ∇_S θ / ((1+γ)θ)`.
    fn limiting_angle(&self, omega: &[F]) -> Result<Vec<F>> {
        if self.pot.dim() == 1 {
            return Ok(omega.to_vec());
        }
        let gamma = self.pot.gamma();
        let pot = &self.pot;
        let end = integrate(
            |_s, y: &[F], dy: &mut [F]| {
                let n = norm(y);
                let unit: Vec<F> = y.iter().map(|&c| c / n).collect();
                let theta = pot.profile().eval(&unit);
                let grad = pot.profile().grad(&unit);
                let radial = dot(&grad, &unit);
                for i in 0..unit.len() {
                    dy[i] = (grad[i] - radial * unit[i]) / ((F::one() + gamma) * theta);
                }
            },
            F::zero(),
            omega,
            F::of(80.0),
            &self.opts,
            |_| {},
        )?;
        let n = norm(&end.y);
        Ok(end.y.iter().map(|&c| c / n).collect())
    }

    /// Max/mean relative residual of `⟨∇U, ∇g⟩ + λ₁` over sample points,
    /// with `∇g` by central differences of `eval_g`.
    pub fn verify_pde(&self, points: &[Vec<F>]) -> Result<PdeReport<F>> {
        let mut max_rel = F::zero();
        let mut sum = F::zero();
        for x in points {
            let r = norm(x);
            let h = F::of(1e-5) * r.max(F::one());
            let b = self.pot.drift(x);
            let mut inner = F::zero();
            let mut xp = x.clone();
            for i in 0..x.len() {
                xp[i] = x[i] + h;
                let gp = self.eval_g(&xp)?;
                xp[i] = x[i] - h;
                let gm = self.eval_g(&xp)?;
                xp[i] = x[i];
                inner += b[i] * (gp - gm) / (F::of(2.0) * h);
            }
            let rel = (inner + self.lambda1).abs() / self.lambda1;
            max_rel = max_rel.max(rel);
            sum += rel;
        }
        Ok(PdeReport {
            n_points: points.len(),
            max_rel_residual: max_rel,
            mean_rel_residual: sum / F::of(points.len().max(1) as f64),
        })
    }
}

#[derive(Debug, Clone)]
pub struct PdeReport<F> {
    pub n_points: usize,
    pub max_rel_residual: F,
    pub mean_rel_residual: F,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::AngularProfile;

    fn herrmann() -> HomogeneousPotential<f64> {
        HomogeneousPotential::new(AngularProfile::isotropic(1, 2.0 / 3.0).unwrap(), 0.5).unwrap()
    }

    fn flow_1d() -> ExtremalFlow<f64> {
        integrate_extremal(&herrmann(), &[1.0], 2.5, 1e-6, &OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn closed_form_parabola() {
        // φ(t) = ((1-γ)t)^{1/(1-γ)} = (t/2)² for γ = 1/2, θ₁ = 1
        let flow = flow_1d();
        for &t in &[0.01, 0.05, 0.1, 0.5, 1.0, 2.0] {
            let p = flow.position_at(t)[0];
            let exact = (t / 2.0) * (t / 2.0);
            assert!(
                (p - exact).abs() <= 1e-6 * exact,
                "t={t}: {p} vs {exact}"
            );
        }
        assert!((flow.position_at(1.0)[0] - 0.25).abs() < 1e-6 * 0.25);
    }

    #[test]
    fn radius_strictly_increasing() {
        let flow = flow_1d();
        let times = flow.times();
        let mut prev = 0.0;
        for &t in &times {
            let r = flow.radius_at(t);
            assert!(r > prev);
            prev = r;
        }
    }

    #[test]
    fn homogeneity_scaling() {
        let flow = flow_1d();
        // |φ(2t)| / |φ(t)| = 2^{1/(1-γ)} = 4
        for &t in &[0.2, 0.5, 1.0] {
            let ratio = flow.radius_at(2.0 * t) / flow.radius_at(t);
            assert!((ratio - 4.0).abs() < 1e-6, "ratio {ratio}");
        }
    }

    #[test]
    fn ode_residual_small() {
        let pot = herrmann();
        let flow = flow_1d();
        for &t in &[0.05f64, 0.3, 0.9, 1.7] {
            let h = 1e-6 * t.max(1.0);
            let fd = (flow.position_at(t + h)[0] - flow.position_at(t - h)[0]) / (2.0 * h);
            let b = pot.drift(&flow.position_at(t))[0];
            assert!((fd - b).abs() <= 1e-5 * b.abs().max(1e-12), "t={t}: {fd} vs {b}");
        }
    }

    #[test]
    fn isotropic_2d_keeps_its_angle() {
        // θ ≡ 1/(1+γ): angular velocity vanishes, radius follows the 1D law
        let gamma = 0.5f64;
        let pot = HomogeneousPotential::new(
            AngularProfile::isotropic(2, 1.0 / (1.0 + gamma)).unwrap(),
            gamma,
        )
        .unwrap();
        let w0 = [0.6, 0.8];
        let flow = integrate_extremal(&pot, &w0, 2.0, 1e-6, &OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            ..Default::default()
        })
        .unwrap();
        for &t in &[0.3, 1.0, 2.0] {
            let p = flow.position_at(t);
            let r = norm(&p);
            let exact = ((1.0 - gamma) * t).powf(1.0 / (1.0 - gamma));
            assert!((r - exact).abs() < 1e-7 * exact.max(1e-12));
            let ang = flow.angle_at(t);
            assert!((ang[0] - w0[0]).abs() < 1e-9 && (ang[1] - w0[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn anisotropic_angle_settles() {
        // angular velocity → 0 as r grows; late-time angle approaches a
        // critical point of θ
        let pot = HomogeneousPotential::new(
            AngularProfile::cosine(0.8f64, 0.2, 3).unwrap(),
            0.5,
        )
        .unwrap();
        let phi0 = 0.31f64;
        let w0 = [phi0.cos(), phi0.sin()];
        let flow = integrate_extremal(&pot, &w0, 40.0, 1e-6, &OdeOptions::default()).unwrap();
        let a1 = flow.angle_at(10.0);
        let a2 = flow.angle_at(40.0);
        let drift_late = dist_angle(&a1, &a2);
        assert!(drift_late < 2e-2, "late angle still moving by {drift_late}");
        // gradient ascent on θ: late angle has larger θ than the departure one
        assert!(pot.profile().eval(&a2) >= pot.profile().eval(&w0));
    }

    fn dist_angle(a: &[f64], b: &[f64]) -> f64 {
        crate::linalg::dist(a, b)
    }

    #[test]
    fn flows_do_not_cross() {
        // pairwise minimum distance over a flow bundle stays positive
        let pot = HomogeneousPotential::new(
            AngularProfile::cosine(0.8f64, 0.2, 3).unwrap(),
            0.5,
        )
        .unwrap();
        let n = 16;
        let flows: Vec<_> = (0..n)
            .map(|i| {
                let phi = std::f64::consts::TAU * i as f64 / n as f64;
                integrate_extremal(&pot, &[phi.cos(), phi.sin()], 3.0, 1e-6, &OdeOptions::default())
                    .unwrap()
            })
            .collect();
        let times: Vec<f64> = (1..40).map(|k| 0.05 + k as f64 * 0.07).collect();
        for i in 0..n {
            for j in (i + 1)..n {
                for &t in &times {
                    let d = crate::linalg::dist(&flows[i].position_at(t), &flows[j].position_at(t));
                    assert!(d > 0.0, "flows {i} and {j} crossed at t={t}");
                }
            }
        }
    }

    fn g_1d(lambda1: f64) -> GFunction<f64> {
        GFunction::build(&herrmann(), lambda1, 2, 2.5, 1e-6).unwrap()
    }

    #[test]
    fn g_zero_at_origin() {
        assert_eq!(g_1d(1.0).eval_g(&[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn g_isotropic_closed_form() {
        // g(x) = -λ₁ |x|^{1-γ}/((1-γ)θ₁) = -2 λ₁ sqrt(|x|) here
        let lam = 0.9468959502f64;
        let gf = g_1d(lam);
        for &x in &[0.05, 0.25, 1.0, 2.0] {
            let g = gf.eval_g(&[x]).unwrap();
            let exact = -2.0 * lam * x.sqrt();
            assert!((g - exact).abs() <= 1e-6 * exact.abs(), "x={x}: {g} vs {exact}");
            let gm = gf.eval_g(&[-x]).unwrap();
            assert!((gm - exact).abs() <= 1e-6 * exact.abs());
        }
        assert!((gf.eval_g(&[1.0]).unwrap() + 2.0 * lam).abs() < 1e-6 * 2.0 * lam);
    }

    #[test]
    fn g_homogeneity() {
        let gf = g_1d(1.3);
        let g1 = gf.eval_g(&[0.4]).unwrap();
        let g4 = gf.eval_g(&[1.6]).unwrap();
        // g(4x)/g(x) = 4^{1-γ} = 2
        assert!((g4 / g1 - 2.0).abs() < 1e-8);
    }

    #[test]
    fn g_along_flow_is_linear_in_time() {
        let lam = 1.1f64;
        let gf = g_1d(lam);
        let flow = flow_1d();
        for &t in &[0.1, 0.6, 1.4, 2.2] {
            let x = flow.position_at(t);
            let g = gf.eval_g(&x).unwrap();
            assert!((g + lam * t).abs() < 1e-7 * lam * t.max(1.0), "t={t}: g={g}");
        }
    }

    #[test]
    fn asymptotic_ratio_documents_missing_factor() {
        // isotropic d=1: asymptotic_g / eval_g = (1-γ) = 0.5
        let gf = g_1d(1.0);
        for &x in &[0.5, 1.0, 3.0] {
            let a = gf.asymptotic_g(&[x]).unwrap();
            let e = gf.eval_g(&[x]).unwrap();
            assert!(a < 0.0);
            assert!((a / e - 0.5).abs() < 1e-9, "ratio {}", a / e);
        }
    }

    #[test]
    fn asymptotic_homogeneity_exact() {
        let gf = g_1d(1.0);
        let a1 = gf.asymptotic_g(&[0.7]).unwrap();
        let a2 = gf.asymptotic_g(&[1.4]).unwrap();
        assert!((a2 / a1 - 2.0f64.powf(0.5)).abs() < 1e-12);
    }

    #[test]
    fn pde_residual_isotropic() {
        let gf = g_1d(0.9468959502);
        let pts: Vec<Vec<f64>> = (1..40).map(|i| vec![0.05 + 0.05 * i as f64]).collect();
        let rep = gf.verify_pde(&pts).unwrap();
        assert!(rep.max_rel_residual < 1e-6, "residual {}", rep.max_rel_residual);
    }

    #[test]
    fn pde_residual_scale_invariant() {
        let gf = g_1d(1.0);
        let pts: Vec<Vec<f64>> = vec![vec![0.3], vec![0.9], vec![1.8]];
        let scaled: Vec<Vec<f64>> = pts.iter().map(|p| vec![p[0] * 7.3]).collect();
        let r1 = gf.verify_pde(&pts).unwrap();
        let r2 = gf.verify_pde(&scaled).unwrap();
        assert!(r1.max_rel_residual < 1e-6 && r2.max_rel_residual < 1e-6);
    }

    #[test]
    fn unreachable_direction_with_partial_coverage() {
        let pot = herrmann();
        let gf = GFunction::build_with_angles(
            &pot,
            1.0,
            &[vec![1.0]],
            2.5,
            1e-6,
            Coverage::Partial { tol: 0.1 },
        )
        .unwrap();
        assert!(gf.eval_g(&[0.5]).is_ok());
        assert!(matches!(
            gf.eval_g(&[-0.5]),
            Err(Error::UnreachableDirection(_))
        ));
    }

    #[test]
    fn seed_time_matches_parabola() {
        let pot = herrmann();
        let flow = flow_1d();
        // at t_seed the radius is r0
        assert!((flow.radius_at(flow.t_seed) - 1e-6).abs() < 1e-12);
        assert!((flow.t_seed - 2.0 * 1e-3).abs() < 1e-12);
        let _ = pot;
    }
}
