//! Homogeneous potentials `U(x) = θ(x/|x|) |x|^{1+γ}` and derived objects.
//!
//! The drift is `b = ∇U`, homogeneous of degree `γ`, and the Schrödinger
//! potential is `V = ½(|b|² + div b)`. Writing `ω = x/|x|`,
//!
//! ```text
//! b(x) = |x|^γ  θ₁(ω),      θ₁(ω) = (1+γ)θ(ω) ω + ∇θ(ω) − ⟨∇θ(ω), ω⟩ ω
//! ΔU(x) = |x|^{γ-1} θ₂(ω),  θ₂(ω) = Δ_S θ(ω) + (1+γ)(d+γ-1) θ(ω)
//! ```
//!
//! where `∇θ` is the ambient gradient of the degree-0 homogeneous extension
//! of `θ` (purely tangential) and `Δ_S` the sphere Laplacian.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::scalar::Scalar;
use crate::sphere;

/// Below this radius `V` (and `ΔU`) are treated as singular and refused.
pub const MIN_RADIUS: f64 = 1e-8;

/// Finite-difference step rule `h = 1e-5 · max(|x|, 1)`.
fn fd_step<F: Scalar>(r: F) -> F {
    F::of(1e-5) * r.max(F::one())
}

// ---------------------------------------------------------------------------
// Angular profiles
// ---------------------------------------------------------------------------

/// Periodic cubic spline on `[0, 2π)`, used by tabulated `d = 2` profiles.
#[derive(Debug, Clone)]
pub struct PeriodicSpline<F> {
    knots: Vec<F>,  // strictly increasing in [0, 2π)
    values: Vec<F>,
    second: Vec<F>, // spline second derivatives at the knots
}

impl<F: Scalar> PeriodicSpline<F> {
    pub fn new(knots: Vec<F>, values: Vec<F>) -> Result<Self> {
        let n = knots.len();
        if n < 4 || values.len() != n {
            return Err(Error::InvalidProfile(format!(
                "tabulated profile needs >= 4 (angle, value) rows, got {n}"
            )));
        }
        let two_pi = F::of(std::f64::consts::TAU);
        for w in knots.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidProfile("angles must be strictly increasing".into()));
            }
        }
        if knots[0] < F::zero() || knots[n - 1] >= two_pi {
            return Err(Error::InvalidProfile("angles must lie in [0, 2*pi)".into()));
        }
        let second = solve_periodic_second_derivatives(&knots, &values)?;
        Ok(Self { knots, values, second })
    }

    fn locate(&self, phi: F) -> (usize, usize, F) {
        let two_pi = F::of(std::f64::consts::TAU);
        let n = self.knots.len();
        let mut p = phi % two_pi;
        if p < F::zero() {
            p += two_pi;
        }
        // interval [knots[i], knots[i+1]) with cyclic wrap on the last one
        let i = match self.knots.binary_search_by(|k| k.partial_cmp(&p).unwrap()) {
            Ok(i) => i,
            Err(0) => n - 1, // below first knot: wrapped last interval
            Err(i) => i - 1,
        };
        let j = (i + 1) % n;
        let mut h = self.knots[j] - self.knots[i];
        if h <= F::zero() {
            h += two_pi;
        }
        let mut t = p - self.knots[i];
        if t < F::zero() {
            t += two_pi;
        }
        (i, j, t / h)
    }

    fn interval_width(&self, i: usize) -> F {
        let two_pi = F::of(std::f64::consts::TAU);
        let n = self.knots.len();
        let j = (i + 1) % n;
        let mut h = self.knots[j] - self.knots[i];
        if h <= F::zero() {
            h += two_pi;
        }
        h
    }

    pub fn eval(&self, phi: F) -> F {
        let (i, j, s) = self.locate(phi);
        let h = self.interval_width(i);
        let a = F::one() - s;
        let six = F::of(6.0);
        a * self.values[i]
            + s * self.values[j]
            + h * h / six * ((a * a * a - a) * self.second[i] + (s * s * s - s) * self.second[j])
    }

    pub fn deriv(&self, phi: F) -> F {
        let (i, j, s) = self.locate(phi);
        let h = self.interval_width(i);
        let a = F::one() - s;
        let six = F::of(6.0);
        let three = F::of(3.0);
        (self.values[j] - self.values[i]) / h
            + h / six
                * (-(three * a * a - F::one()) * self.second[i]
                    + (three * s * s - F::one()) * self.second[j])
    }

    pub fn second_deriv(&self, phi: F) -> F {
        let (i, j, s) = self.locate(phi);
        let a = F::one() - s;
        a * self.second[i] + s * self.second[j]
    }
}

/// Second derivatives of the periodic cubic spline: a cyclic tridiagonal
/// system solved by Sherman–Morrison on top of two Thomas solves.
fn solve_periodic_second_derivatives<F: Scalar>(knots: &[F], values: &[F]) -> Result<Vec<F>> {
    let n = knots.len();
    let two_pi = F::of(std::f64::consts::TAU);
    let six = F::of(6.0);
    let h: Vec<F> = (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            let mut d = knots[j] - knots[i];
            if d <= F::zero() {
                d += two_pi;
            }
            d
        })
        .collect();
    // row i couples M_{i-1}, M_i, M_{i+1}
    let sub: Vec<F> = (0..n).map(|i| h[(i + n - 1) % n] / six).collect();
    let diag: Vec<F> = (0..n).map(|i| (h[(i + n - 1) % n] + h[i]) / F::of(3.0)).collect();
    let sup: Vec<F> = (0..n).map(|i| h[i] / six).collect();
    let rhs: Vec<F> = (0..n)
        .map(|i| {
            let im = (i + n - 1) % n;
            let ip = (i + 1) % n;
            (values[ip] - values[i]) / h[i] - (values[i] - values[im]) / h[im]
        })
        .collect();

    let thomas = |d: &[F], rhs: &[F]| -> Vec<F> {
        let m = d.len();
        let mut c = vec![F::zero(); m];
        let mut x = vec![F::zero(); m];
        let mut beta = d[0];
        x[0] = rhs[0] / beta;
        for i in 1..m {
            c[i] = sup[i - 1] / beta;
            beta = d[i] - sub[i] * c[i];
            x[i] = (rhs[i] - sub[i] * x[i - 1]) / beta;
        }
        for i in (0..m - 1).rev() {
            let xn = x[i + 1];
            x[i] = x[i] - c[i + 1] * xn;
        }
        x
    };

    // Sherman–Morrison: fold the two corner entries into a rank-one update.
    let alpha = sub[0]; // coupling M_0 <- M_{n-1}
    let beta_c = sup[n - 1]; // coupling M_{n-1} <- M_0
    let gamma = -diag[0];
    let mut dmod = diag.to_vec();
    dmod[0] = diag[0] - gamma;
    dmod[n - 1] = diag[n - 1] - alpha * beta_c / gamma;
    let y = thomas(&dmod, &rhs);
    let mut u = vec![F::zero(); n];
    u[0] = gamma;
    u[n - 1] = beta_c;
    let zv = thomas(&dmod, &u);
    let fact = (y[0] + alpha * y[n - 1] / gamma) / (F::one() + zv[0] + alpha * zv[n - 1] / gamma);
    let out: Vec<F> = (0..n).map(|i| y[i] - fact * zv[i]).collect();
    if out.iter().any(|m| !m.is_finite()) {
        return Err(Error::InvalidProfile("spline system is singular".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum ProfileKind<F> {
    /// `θ ≡ c` in any supported dimension.
    Isotropic { d: usize, value: F },
    /// `θ(cos φ, sin φ) = c₀ + c₁ cos(k φ)` in `d = 2`, with `c₀ > |c₁| ≥ 0`.
    Cosine { c0: F, c1: F, k: u32 },
    /// Tabulated `(angle, value)` samples in `d = 2`, spline-interpolated.
    Tabulated(PeriodicSpline<F>),
}

/// The anisotropy function `θ` on the unit sphere.
#[derive(Debug, Clone)]
pub struct AngularProfile<F> {
    kind: ProfileKind<F>,
    analytic_hessian: bool,
}

impl<F: Scalar> AngularProfile<F> {
    pub fn isotropic(d: usize, value: F) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidConfig(format!("dimension {d} not in 1..=3")));
        }
        if !(value > F::zero()) {
            return Err(Error::InvalidProfile("isotropic value must be positive".into()));
        }
        Ok(Self { kind: ProfileKind::Isotropic { d, value }, analytic_hessian: true })
    }

    pub fn cosine(c0: F, c1: F, k: u32) -> Result<Self> {
        if !(c0 > c1.abs() && c1.abs() >= F::zero()) {
            return Err(Error::InvalidProfile("cosine profile needs c0 > |c1| >= 0".into()));
        }
        Ok(Self { kind: ProfileKind::Cosine { c0, c1, k }, analytic_hessian: true })
    }

    /// Tabulated profile for `d = 2` from `(angle, value)` rows.
    pub fn tabulated(angles: Vec<F>, values: Vec<F>) -> Result<Self> {
        if values.iter().any(|v| !(*v > F::zero())) {
            return Err(Error::InvalidProfile("tabulated values must be positive".into()));
        }
        let spline = PeriodicSpline::new(angles, values)?;
        let profile = Self { kind: ProfileKind::Tabulated(spline), analytic_hessian: true };
        // splines can undershoot between positive knots
        for y in sphere::mesh::<F>(2, sphere::DEFAULT_MESH_2D) {
            if !(profile.eval(&y) > F::zero()) {
                return Err(Error::InvalidProfile(
                    "interpolated profile is not positive everywhere".into(),
                ));
            }
        }
        Ok(profile)
    }

    /// Test hook: forget the analytic second derivatives so that callers fall
    /// back to finite differences of the drift.
    pub fn without_analytic_hessian(mut self) -> Self {
        self.analytic_hessian = false;
        self
    }

    pub fn has_analytic_hessian(&self) -> bool {
        self.analytic_hessian
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            ProfileKind::Isotropic { d, .. } => *d,
            ProfileKind::Cosine { .. } | ProfileKind::Tabulated(_) => 2,
        }
    }

    fn phi(y: &[F]) -> F {
        y[1].atan2(y[0])
    }

    /// `θ(y)` for unit `y` (evaluates the degree-0 extension, so any nonzero
    /// `y` gives the value at `y/|y|`).
    pub fn eval(&self, y: &[F]) -> F {
        match &self.kind {
            ProfileKind::Isotropic { value, .. } => *value,
            ProfileKind::Cosine { c0, c1, k } => {
                *c0 + *c1 * (F::of(*k as f64) * Self::phi(y)).cos()
            }
            ProfileKind::Tabulated(sp) => sp.eval(Self::phi(y)),
        }
    }

    /// Ambient gradient of the degree-0 homogeneous extension at unit `y`
    /// (purely tangential: `⟨∇θ(y), y⟩ = 0`).
    pub fn grad(&self, y: &[F]) -> Vec<F> {
        match &self.kind {
            ProfileKind::Isotropic { d, .. } => vec![F::zero(); *d],
            ProfileKind::Cosine { c1, k, .. } => {
                let kk = F::of(*k as f64);
                let dtheta = -*c1 * kk * (kk * Self::phi(y)).sin();
                vec![-dtheta * y[1], dtheta * y[0]]
            }
            ProfileKind::Tabulated(sp) => {
                let dtheta = sp.deriv(Self::phi(y));
                vec![-dtheta * y[1], dtheta * y[0]]
            }
        }
    }

    /// Sphere Laplacian `Δ_S θ` at unit `y`, when analytic second derivatives
    /// are available.
    pub fn sphere_laplacian(&self, y: &[F]) -> Option<F> {
        if !self.analytic_hessian {
            return None;
        }
        match &self.kind {
            ProfileKind::Isotropic { .. } => Some(F::zero()),
            ProfileKind::Cosine { c1, k, .. } => {
                let kk = F::of(*k as f64);
                Some(-*c1 * kk * kk * (kk * Self::phi(y)).cos())
            }
            ProfileKind::Tabulated(sp) => Some(sp.second_deriv(Self::phi(y))),
        }
    }
}

// ---------------------------------------------------------------------------
// Traits for the objects the solvers consume
// ---------------------------------------------------------------------------

/// A potential that can sit on the diagonal of the Schrödinger operator.
pub trait PotentialV<F: Scalar>: Sync {
    fn dim(&self) -> usize;

    /// `V(x)`; singular points are refused.
    fn v(&self, x: &[F]) -> Result<F>;

    /// Average of `V` over the grid cell centered at `center` with width `h`.
    ///
    /// The default is the point value, which is the right quadrature for
    /// smooth potentials; singular potentials override this.
    fn v_cell_avg(&self, center: &[F], _h: F) -> Result<F> {
        self.v(center)
    }

    /// `(coefficient, γ)` of the `ψ'(0⁺) ≈ ψ(0)·coefficient·δ^γ` cusp that an
    /// integrable `|x|^{γ-1}` singularity imprints on even eigenfunctions.
    /// `None` for potentials regular at the origin.
    fn origin_cusp(&self) -> Option<(F, F)> {
        None
    }
}

/// A drift field `b(x)`.
pub trait DriftField<F: Scalar>: Sync {
    fn dim(&self) -> usize;
    fn drift_into(&self, x: &[F], out: &mut [F]);
    fn drift(&self, x: &[F]) -> Vec<F> {
        let mut out = vec![F::zero(); self.dim()];
        self.drift_into(x, &mut out);
        out
    }
}

/// A gradient system: drift `b = ∇U` together with `U` and `V`.
pub trait GradientSystem<F: Scalar>: PotentialV<F> + DriftField<F> {
    fn u(&self, x: &[F]) -> F;
}

// ---------------------------------------------------------------------------
// The homogeneous potential
// ---------------------------------------------------------------------------

/// `U(x) = θ(x/|x|) |x|^{1+γ}`, `U(0) = 0`, with `γ ∈ (0, 1)`.
#[derive(Debug, Clone)]
pub struct HomogeneousPotential<F: Scalar> {
    profile: AngularProfile<F>,
    gamma: F,
}

impl<F: Scalar> HomogeneousPotential<F> {
    /// Ambient dimension (inherent so that calls do not need to pick between
    /// the `DriftField` and `PotentialV` supertraits).
    pub fn dim(&self) -> usize {
        self.profile.dim()
    }

    pub fn new(profile: AngularProfile<F>, gamma: F) -> Result<Self> {
        if !(gamma > F::zero() && gamma < F::one()) {
            return Err(Error::InvalidConfig(format!(
                "gamma = {gamma} outside the open interval (0, 1)"
            )));
        }
        // positivity and bounded derivatives on the sphere mesh
        for y in sphere::default_mesh::<F>(profile.dim()) {
            let t = profile.eval(&y);
            if !(t > F::zero()) || !t.is_finite() {
                return Err(Error::InvalidProfile(format!(
                    "theta must be positive and finite on the sphere (theta = {t})"
                )));
            }
            if profile.grad(&y).iter().any(|g| !g.is_finite()) {
                return Err(Error::InvalidProfile("unbounded profile gradient".into()));
            }
            if let Some(l) = profile.sphere_laplacian(&y) {
                if !l.is_finite() {
                    return Err(Error::InvalidProfile("unbounded profile Hessian".into()));
                }
            }
        }
        Ok(Self { profile, gamma })
    }

    pub fn profile(&self) -> &AngularProfile<F> {
        &self.profile
    }

    pub fn gamma(&self) -> F {
        self.gamma
    }

    /// `θ₁(y)` with `b(x) = θ₁(x/|x|) |x|^γ`. Rejects non-unit input.
    pub fn theta1(&self, y: &[F]) -> Result<Vec<F>> {
        let r = norm(y);
        if (r - F::one()).abs() > F::of(1e-12) {
            return Err(Error::NotUnitVector(r.f64()));
        }
        Ok(self.theta1_unchecked(y))
    }

    fn theta1_unchecked(&self, y: &[F]) -> Vec<F> {
        let theta = self.profile.eval(y);
        let grad = self.profile.grad(y);
        let radial = (F::one() + self.gamma) * theta - dot(&grad, y);
        grad.iter().zip(y).map(|(&g, &yi)| g + radial * yi).collect()
    }

    /// Angular factor of `ΔU`: `ΔU(x) = θ₂(x/|x|) |x|^{γ-1}`.
    pub fn theta2(&self, y: &[F]) -> F {
        let d = F::of(self.dim() as f64);
        match self.profile.sphere_laplacian(y) {
            Some(lap) => {
                lap + (F::one() + self.gamma) * (d + self.gamma - F::one()) * self.profile.eval(y)
            }
            None => {
                // divergence of the drift at the unit vector by central
                // differences; degree γ-1 homogeneity makes this θ₂(y).
                self.fd_div_drift(y, fd_step(F::one()))
            }
        }
    }

    fn fd_div_drift(&self, x: &[F], h: F) -> F {
        let d = self.dim();
        let mut xp = x.to_vec();
        let mut acc = F::zero();
        let mut bp = vec![F::zero(); d];
        let mut bm = vec![F::zero(); d];
        for i in 0..d {
            xp[i] = x[i] + h;
            self.drift_into(&xp, &mut bp);
            xp[i] = x[i] - h;
            self.drift_into(&xp, &mut bm);
            xp[i] = x[i];
            acc += (bp[i] - bm[i]) / (F::of(2.0) * h);
        }
        acc
    }

    /// `ΔU(x)`; refuses the singular origin.
    pub fn laplacian_u(&self, x: &[F]) -> Result<F> {
        let r = norm(x);
        if r.f64() < MIN_RADIUS {
            return Err(Error::SingularPoint { radius: r.f64(), min_radius: MIN_RADIUS });
        }
        let omega: Vec<F> = x.iter().map(|&c| c / r).collect();
        Ok(self.theta2(&omega) * r.powf(self.gamma - F::one()))
    }

    /// Linear-growth constant: `|b(x)| ≤ a_∞ (|x| + 1)` with
    /// `a_∞ = sup |θ₁|` over the sphere mesh.
    pub fn a_inf(&self) -> F {
        sphere::default_mesh::<F>(self.dim())
            .iter()
            .map(|y| norm(&self.theta1_unchecked(y)))
            .fold(F::zero(), F::max)
    }

    /// Splits `V = V₁ − V₂` with `V₁ ≥ 0` and `V₂ ≥ 0` supported in the ball
    /// of radius `z`.
    pub fn decompose(&self) -> Result<PotentialDecomposition<F>> {
        self.decompose_on_mesh(&sphere::default_mesh::<F>(self.dim()))
    }

    pub fn decompose_on_mesh(&self, mesh: &[Vec<F>]) -> Result<PotentialDecomposition<F>> {
        let mut sup_theta2_minus = F::zero();
        let mut inf_theta1_sq = F::infinity();
        for y in mesh {
            let t2 = self.theta2(y);
            sup_theta2_minus = sup_theta2_minus.max((-t2).max(F::zero()));
            let t1 = self.theta1_unchecked(y);
            inf_theta1_sq = inf_theta1_sq.min(dot(&t1, &t1));
        }
        if !(inf_theta1_sq > F::zero()) {
            return Err(Error::InvalidProfile(format!(
                "inf |theta1|^2 = {inf_theta1_sq} on the mesh; profile violates |theta1| > 0"
            )));
        }
        let one = F::one();
        let z = if sup_theta2_minus == F::zero() {
            F::zero()
        } else {
            (sup_theta2_minus / inf_theta1_sq).powf(one / (one + self.gamma))
        };
        let d = F::of(self.dim() as f64);
        let p = (d / F::of(2.0) + d / (one - self.gamma)) / F::of(2.0);
        Ok(PotentialDecomposition {
            pot: self.clone(),
            z,
            p,
            sup_theta2_minus,
            inf_theta1_sq,
        })
    }
}

impl<F: Scalar> DriftField<F> for HomogeneousPotential<F> {
    fn dim(&self) -> usize {
        self.profile.dim()
    }

    fn drift_into(&self, x: &[F], out: &mut [F]) {
        let r = norm(x);
        if r == F::zero() {
            out.fill(F::zero());
            return;
        }
        let omega: Vec<F> = x.iter().map(|&c| c / r).collect();
        let t1 = self.theta1_unchecked(&omega);
        let scale = r.powf(self.gamma);
        for (o, t) in out.iter_mut().zip(t1) {
            *o = scale * t;
        }
    }
}

impl<F: Scalar> PotentialV<F> for HomogeneousPotential<F> {
    fn dim(&self) -> usize {
        self.profile.dim()
    }

    /// `V(x) = ½(|b(x)|² + div b(x))`, with `div b` from the profile's second
    /// derivatives when available and from central differences of the drift
    /// otherwise.
    fn v(&self, x: &[F]) -> Result<F> {
        let r = norm(x);
        if r.f64() < MIN_RADIUS {
            return Err(Error::SingularPoint { radius: r.f64(), min_radius: MIN_RADIUS });
        }
        let b = self.drift(x);
        let b2 = dot(&b, &b);
        let div = if self.profile.has_analytic_hessian() {
            let omega: Vec<F> = x.iter().map(|&c| c / r).collect();
            self.theta2(&omega) * r.powf(self.gamma - F::one())
        } else {
            self.fd_div_drift(x, fd_step(r))
        };
        Ok((b2 + div) / F::of(2.0))
    }

    /// Exact-in-radius cell average; the `|x|^{γ-1}` singularity makes the
    /// point value first-order wrong near the origin.
    fn v_cell_avg(&self, center: &[F], h: F) -> Result<F> {
        let half = h / F::of(2.0);
        let r = norm(center);
        match self.dim() {
            1 => {
                // cells never straddle the origin (even n, cell-centered)
                let lo = center[0] - half;
                let hi = center[0] + half;
                let side = [if center[0] >= F::zero() { F::one() } else { -F::one() }];
                let t1 = self.theta1_unchecked(&side);
                let t1sq = t1[0] * t1[0];
                let t2 = self.theta2(&side);
                let two_g = F::of(2.0) * self.gamma;
                let avg = (t1sq * power_integral(two_g, lo, hi)
                    + t2 * power_integral(self.gamma - F::one(), lo, hi))
                    / (F::of(2.0) * h);
                Ok(avg)
            }
            d => {
                let corner = center.iter().all(|&c| c.abs() <= half * F::of(1.0 + 1e-9));
                if corner {
                    Ok(self.corner_cell_avg(center, h))
                } else if r <= F::of(8.0) * h {
                    self.subsampled_cell_avg(center, h, if d == 2 { 16 } else { 8 })
                } else {
                    self.v(center)
                }
            }
        }
    }

    fn origin_cusp(&self) -> Option<(F, F)> {
        if self.dim() != 1 {
            return None;
        }
        // singular part of 2(V - λ) is θ₂ |x|^{γ-1}; ∫₀^δ = θ₂ δ^γ / γ and
        // θ₂ = γ(1+γ)θ in d = 1, so the coefficient is (1+γ)θ.
        let theta = self.profile.eval(&[F::one()]);
        Some(((F::one() + self.gamma) * theta, self.gamma))
    }
}

impl<F: Scalar> GradientSystem<F> for HomogeneousPotential<F> {
    fn u(&self, x: &[F]) -> F {
        let r = norm(x);
        if r == F::zero() {
            return F::zero();
        }
        let omega: Vec<F> = x.iter().map(|&c| c / r).collect();
        self.profile.eval(&omega) * r.powf(F::one() + self.gamma)
    }
}

impl<F: Scalar> HomogeneousPotential<F> {
    /// Average of `V` over a cell touching the origin: exact radial power-law
    /// integrals with a midpoint angular rule over the cell's orthant.
    fn corner_cell_avg(&self, center: &[F], h: F) -> F {
        let d = self.dim();
        let g = self.gamma;
        let two = F::of(2.0);
        let dd = F::of(d as f64);
        let p_sq = two * g + dd; // exponent+d of the |b|² term after r^{d-1} dr
        let p_sing = g - F::one() + dd;
        let signs: Vec<F> = center.iter().map(|&c| if c >= F::zero() { F::one() } else { -F::one() }).collect();
        let mut acc = F::zero();
        let mut add = |u: &[F], w: F| {
            // exit radius of the ray from the origin through the cell [0,h]^d (orthant-reflected)
            let umax = u.iter().fold(F::zero(), |m: F, &c| m.max(c.abs()));
            let rmax = h / umax;
            let t1 = self.theta1_unchecked(u);
            let t1sq = dot(&t1, &t1);
            let t2 = self.theta2(u);
            acc += w * (t1sq * rmax.powf(p_sq) / p_sq + t2 * rmax.powf(p_sing) / p_sing);
        };
        match d {
            2 => {
                let m = 64;
                let quarter = F::of(std::f64::consts::FRAC_PI_2);
                for j in 0..m {
                    let phi = quarter * (F::of(j as f64) + F::of(0.5)) / F::of(m as f64);
                    let u = [signs[0] * phi.cos(), signs[1] * phi.sin()];
                    add(&u, quarter / F::of(m as f64));
                }
            }
            _ => {
                let m = 24;
                let quarter = F::of(std::f64::consts::FRAC_PI_2);
                for a in 0..m {
                    // z = cos(polar angle) uniform on (0,1): dΩ = dz dφ
                    let z = (F::of(a as f64) + F::of(0.5)) / F::of(m as f64);
                    let rho = (F::one() - z * z).sqrt();
                    for b in 0..m {
                        let phi = quarter * (F::of(b as f64) + F::of(0.5)) / F::of(m as f64);
                        let u = [signs[0] * rho * phi.cos(), signs[1] * rho * phi.sin(), signs[2] * z];
                        add(&u, quarter / F::of((m * m) as f64));
                    }
                }
            }
        }
        // (1/h^d) ∫ V r^{d-1} dr dΩ with V = ½(θ₁² r^{2γ} + θ₂ r^{γ-1})
        acc / (two * h.powi(d as i32))
    }

    fn subsampled_cell_avg(&self, center: &[F], h: F, m: usize) -> Result<F> {
        let d = self.dim();
        let mf = F::of(m as f64);
        let mut acc = F::zero();
        let mut idx = vec![0usize; d];
        let total = m.pow(d as u32);
        let mut x = vec![F::zero(); d];
        for flat in 0..total {
            let mut rem = flat;
            for i in 0..d {
                idx[i] = rem % m;
                rem /= m;
            }
            for i in 0..d {
                let off = (F::of(idx[i] as f64) + F::of(0.5)) / mf - F::of(0.5);
                x[i] = center[i] + off * h;
            }
            acc += self.v(&x)?;
        }
        Ok(acc / F::of(total as f64))
    }
}

/// `∫ |t|^p dt` over `[a, b]`, valid across 0 for `p > -1`.
fn power_integral<F: Scalar>(p: F, a: F, b: F) -> F {
    let anti = |u: F| -> F {
        if u == F::zero() {
            F::zero()
        } else {
            u.signum() * u.abs().powf(p + F::one()) / (p + F::one())
        }
    };
    anti(b) - anti(a)
}

// ---------------------------------------------------------------------------
// V = V1 - V2 decomposition
// ---------------------------------------------------------------------------

/// The Carmona–Simon-style splitting `V = V₁ − V₂`:
/// `V₂(x) = ½ θ₂₋(x/|x|) |x|^{γ-1} 1{|x| ≤ z}` and `V₁ = V + V₂ ≥ 0`,
/// with `z = (sup θ₂₋ / inf |θ₁|²)^{1/(1+γ)}`.
#[derive(Debug, Clone)]
pub struct PotentialDecomposition<F: Scalar> {
    pot: HomogeneousPotential<F>,
    /// Cutoff radius of the negative-part support.
    pub z: F,
    /// Integrability exponent, midpoint of `(d/2, d/(1-γ))`.
    pub p: F,
    pub sup_theta2_minus: F,
    pub inf_theta1_sq: F,
}

impl<F: Scalar> PotentialDecomposition<F> {
    pub fn v2(&self, x: &[F]) -> Result<F> {
        let r = norm(x);
        if r > self.z {
            return Ok(F::zero());
        }
        if r.f64() < MIN_RADIUS {
            return Err(Error::SingularPoint { radius: r.f64(), min_radius: MIN_RADIUS });
        }
        let omega: Vec<F> = x.iter().map(|&c| c / r).collect();
        let t2m = (-self.pot.theta2(&omega)).max(F::zero());
        Ok(t2m * r.powf(self.pot.gamma() - F::one()) / F::of(2.0))
    }

    pub fn v1(&self, x: &[F]) -> Result<F> {
        Ok(self.pot.v(x)? + self.v2(x)?)
    }
}

// ---------------------------------------------------------------------------
// Simple fields used as test hooks and oracles
// ---------------------------------------------------------------------------

pub mod hooks {
    use super::*;

    /// `b ≡ 0`: pure Brownian scaling tests.
    pub struct ZeroDrift {
        pub dim: usize,
    }

    impl<F: Scalar> DriftField<F> for ZeroDrift {
        fn dim(&self) -> usize {
            self.dim
        }
        fn drift_into(&self, _x: &[F], out: &mut [F]) {
            out.fill(F::zero());
        }
    }

    /// `V ≡ 0`: bare Laplacian / Gaussian-kernel tests.
    pub struct ZeroPotential {
        pub dim: usize,
    }

    impl<F: Scalar> PotentialV<F> for ZeroPotential {
        fn dim(&self) -> usize {
            self.dim
        }
        fn v(&self, _x: &[F]) -> Result<F> {
            Ok(F::zero())
        }
    }

    /// `V(x) = |x|²/2`: harmonic oscillator with known spectrum `j + d/2 - 1/2`.
    pub struct HarmonicV {
        pub dim: usize,
    }

    impl<F: Scalar> PotentialV<F> for HarmonicV {
        fn dim(&self) -> usize {
            self.dim
        }
        fn v(&self, x: &[F]) -> Result<F> {
            Ok(dot(x, x) / F::of(2.0))
        }
    }

    /// Constant potential `V ≡ c`.
    pub struct ConstantV<F> {
        pub dim: usize,
        pub c: F,
    }

    impl<F: Scalar> PotentialV<F> for ConstantV<F> {
        fn dim(&self) -> usize {
            self.dim
        }
        fn v(&self, _x: &[F]) -> Result<F> {
            Ok(self.c)
        }
    }

    /// The gradient system of `U(x) = x²/2` in `d = 1`: `b(x) = x` and
    /// `V = ½(x² + 1)`, whose ground state is exactly `e^{-x²/2}` with
    /// `λ₁ = 1`, so `e^U ψ₁` is constant.
    pub struct WittenHarmonic;

    impl<F: Scalar> DriftField<F> for WittenHarmonic {
        fn dim(&self) -> usize {
            1
        }
        fn drift_into(&self, x: &[F], out: &mut [F]) {
            out[0] = x[0];
        }
    }

    impl<F: Scalar> PotentialV<F> for WittenHarmonic {
        fn dim(&self) -> usize {
            1
        }
        fn v(&self, x: &[F]) -> Result<F> {
            Ok((x[0] * x[0] + F::one()) / F::of(2.0))
        }
    }

    impl<F: Scalar> GradientSystem<F> for WittenHarmonic {
        fn u(&self, x: &[F]) -> F {
            x[0] * x[0] / F::of(2.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn herrmann() -> HomogeneousPotential<f64> {
        // d=1, θ ≡ 2/3, γ = 1/2: b(x) = sgn(x) |x|^{1/2}
        HomogeneousPotential::new(AngularProfile::isotropic(1, 2.0 / 3.0).unwrap(), 0.5).unwrap()
    }

    fn cosine_pot(c0: f64, c1: f64, k: u32, gamma: f64) -> HomogeneousPotential<f64> {
        HomogeneousPotential::new(AngularProfile::cosine(c0, c1, k).unwrap(), gamma).unwrap()
    }

    #[test]
    fn u_at_origin_is_zero() {
        assert_eq!(herrmann().u(&[0.0]), 0.0);
        assert_eq!(cosine_pot(0.8, 0.2, 3, 0.5).u(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn u_direct_value() {
        assert!((herrmann().u(&[1.0]) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn u_homogeneity() {
        let pot = cosine_pot(0.8, 0.2, 3, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let lam: f64 = rng.gen_range(0.1..5.0);
            let lhs = pot.u(&[lam * x[0], lam * x[1]]);
            let rhs = lam.powf(1.5) * pot.u(&x);
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1e-30), "{lhs} vs {rhs}");
        }
        // the spec's spot value: U(2x)/U(x) = 2^{3/2}
        let pot = herrmann();
        let ratio = pot.u(&[2.0]) / pot.u(&[1.0]);
        assert!((ratio - 2.0f64.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn drift_at_peano_point_is_zero() {
        assert_eq!(herrmann().drift(&[0.0]), vec![0.0]);
        assert_eq!(cosine_pot(0.8, 0.2, 3, 0.5).drift(&[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn drift_matches_herrmann_form() {
        // b(x) = sgn(x)|x|^{1/2}: b(4) = 2
        let b = herrmann().drift(&[4.0]);
        assert!((b[0] - 2.0).abs() < 1e-14);
        let b = herrmann().drift(&[-4.0]);
        assert!((b[0] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn drift_homogeneity_degree_gamma() {
        let pot = cosine_pot(0.8, 0.2, 4, 0.35);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let b1 = pot.drift(&x);
            let b2 = pot.drift(&[2.0 * x[0], 2.0 * x[1]]);
            for i in 0..2 {
                assert!((b2[i] - 2.0f64.powf(0.35) * b1[i]).abs() < 1e-10 * b1[i].abs().max(1e-12));
            }
        }
    }

    #[test]
    fn drift_is_fd_gradient_of_u() {
        let pot = cosine_pot(0.8, 0.2, 3, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let x = [rng.gen_range(0.3..2.0), rng.gen_range(0.3..2.0)];
            let b = pot.drift(&x);
            let h = 1e-5;
            for i in 0..2 {
                let mut xp = x;
                xp[i] += h;
                let mut xm = x;
                xm[i] -= h;
                let fd = (pot.u(&xp) - pot.u(&xm)) / (2.0 * h);
                assert!((b[i] - fd).abs() < 1e-7, "component {i}: {} vs {}", b[i], fd);
            }
        }
    }

    #[test]
    fn theta1_on_the_line() {
        // (1+γ)θ = 1, ∇θ = 0 ⇒ θ₁(1) = 1
        let t1 = herrmann().theta1(&[1.0]).unwrap();
        assert!((t1[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn theta1_rejects_non_unit() {
        assert!(matches!(
            herrmann().theta1(&[1.1]),
            Err(Error::NotUnitVector(_))
        ));
    }

    #[test]
    fn theta1_norm_bounds() {
        // |θ₁|² = (1+γ)²θ² + |∇θ|² sin²α ≥ (1+γ)²θ² > θ²
        let pot = cosine_pot(0.8, 0.3, 5, 0.4);
        for y in sphere::mesh::<f64>(2, 257) {
            let t1 = pot.theta1(&y).unwrap();
            let t1sq = dot(&t1, &t1);
            let th = pot.profile().eval(&y);
            assert!(t1sq >= (1.4f64 * th).powi(2) - 1e-12);
            assert!(t1sq > th * th);
        }
    }

    #[test]
    fn theta1_factorizes_drift() {
        let pot = cosine_pot(0.8, 0.2, 3, 0.5);
        let y = [0.6, 0.8];
        let t1 = pot.theta1(&y).unwrap();
        let r: f64 = 2.7;
        let b = pot.drift(&[r * y[0], r * y[1]]);
        for i in 0..2 {
            assert!((b[i] - t1[i] * r.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn v_herrmann_value() {
        // V(x) = ½(|x| + ½ |x|^{-1/2}): V(1) = 0.75
        assert!((herrmann().v(&[1.0]).unwrap() - 0.75).abs() < 1e-14);
    }

    #[test]
    fn v_rejects_origin() {
        assert!(matches!(
            herrmann().v(&[0.0]),
            Err(Error::SingularPoint { .. })
        ));
        assert!(matches!(
            herrmann().v(&[1e-9]),
            Err(Error::SingularPoint { .. })
        ));
    }

    #[test]
    fn v_termwise_homogeneity() {
        let pot = cosine_pot(0.8, 0.2, 3, 0.5);
        let x = [0.7, -0.4];
        let lam = 3.0f64;
        let xl = [lam * x[0], lam * x[1]];
        let b = pot.drift(&x);
        let bl = pot.drift(&xl);
        let b2 = dot(&b, &b);
        let bl2 = dot(&bl, &bl);
        assert!((bl2 - lam.powf(1.0) * b2).abs() < 1e-10 * bl2); // 2γ = 1
        let du = pot.laplacian_u(&x).unwrap();
        let dul = pot.laplacian_u(&xl).unwrap();
        assert!((dul - lam.powf(-0.5) * du).abs() < 1e-10 * dul.abs());
    }

    #[test]
    fn v_matches_fd_assembly_from_u() {
        // d=2, θ ≡ const: V = ½(|∇U|² + ΔU) by finite differences of U
        let pot = HomogeneousPotential::new(
            AngularProfile::isotropic(2, 2.0 / 3.0).unwrap(),
            0.5,
        )
        .unwrap();
        for &r in &[0.5, 1.0, 2.5, 5.0] {
            let x = [r / 2.0f64.sqrt(), r / 2.0f64.sqrt()];
            let h = 1e-4 * r.max(1.0);
            let mut grad2 = 0.0;
            let mut lap = 0.0;
            for i in 0..2 {
                let mut xp = x;
                xp[i] += h;
                let mut xm = x;
                xm[i] -= h;
                let up = pot.u(&xp);
                let um = pot.u(&xm);
                let u0 = pot.u(&x);
                grad2 += ((up - um) / (2.0 * h)).powi(2);
                lap += (up - 2.0 * u0 + um) / (h * h);
            }
            let v_fd = 0.5 * (grad2 + lap);
            let v = pot.v(&x).unwrap();
            assert!(
                (v - v_fd).abs() <= 1e-6 * v.abs(),
                "r={r}: {v} vs {v_fd}"
            );
        }
    }

    #[test]
    fn fd_divergence_path_agrees_with_analytic() {
        let analytic = cosine_pot(0.8, 0.2, 3, 0.5);
        let fd = HomogeneousPotential::new(
            AngularProfile::cosine(0.8, 0.2, 3).unwrap().without_analytic_hessian(),
            0.5,
        )
        .unwrap();
        for y in sphere::mesh::<f64>(2, 17) {
            let x = [1.3 * y[0], 1.3 * y[1]];
            let va = analytic.v(&x).unwrap();
            let vf = fd.v(&x).unwrap();
            assert!((va - vf).abs() < 1e-6 * va.abs().max(1.0), "{va} vs {vf}");
        }
    }

    #[test]
    fn decompose_isotropic_1d_has_no_negative_part() {
        let dec = herrmann().decompose().unwrap();
        assert_eq!(dec.z, 0.0);
        assert_eq!(dec.v2(&[0.5]).unwrap(), 0.0);
        let v = herrmann().v(&[0.5]).unwrap();
        assert!((dec.v1(&[0.5]).unwrap() - v).abs() < 1e-15);
        // p = midpoint of (1/2, 2)
        assert!((dec.p - 1.25).abs() < 1e-15);
    }

    #[test]
    fn decompose_identity_and_support() {
        // k=4 cosine profile has a genuinely sign-changing θ₂
        let pot = cosine_pot(0.8, 0.2, 4, 0.5);
        let dec = pot.decompose().unwrap();
        assert!(dec.z > 0.0, "expected nonzero cutoff, θ₂ should change sign");
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            if norm(&x) < 1e-3 {
                continue;
            }
            let v = pot.v(&x).unwrap();
            let v1 = dec.v1(&x).unwrap();
            let v2 = dec.v2(&x).unwrap();
            assert!(v1 >= 0.0, "V1 must be nonnegative, got {v1} at {x:?}");
            assert!(v2 >= 0.0);
            if norm(&x) > dec.z {
                assert_eq!(v2, 0.0);
            }
            assert!((v1 - v2 - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }

    #[test]
    fn decompose_v2_quadrature_converges() {
        // ∫ |V₂|^p over R² is finite: polar quadrature stabilizes under refinement
        let pot = cosine_pot(0.8, 0.2, 4, 0.5);
        let dec = pot.decompose().unwrap();
        let quad = |n_r: usize, n_phi: usize| -> f64 {
            let mut acc = 0.0;
            for i in 0..n_r {
                let r = dec.z * (i as f64 + 0.5) / n_r as f64;
                for j in 0..n_phi {
                    let phi = std::f64::consts::TAU * (j as f64 + 0.5) / n_phi as f64;
                    let x = [r * phi.cos(), r * phi.sin()];
                    let v2 = dec.v2(&x).unwrap();
                    acc += v2.powf(dec.p) * r;
                }
            }
            acc * dec.z / n_r as f64 * std::f64::consts::TAU / n_phi as f64
        };
        let q1 = quad(200, 64);
        let q2 = quad(400, 128);
        let q3 = quad(800, 256);
        assert!(q3.is_finite() && q3 > 0.0);
        // refinement ratio tends to 1
        assert!(((q2 - q3) / q3).abs() < ((q1 - q3) / q3).abs());
        assert!(((q2 - q3) / q3).abs() < 0.05, "q1={q1} q2={q2} q3={q3}");
    }

    #[test]
    fn linear_growth_bound() {
        let pot = cosine_pot(0.8, 0.3, 4, 0.6);
        let a = pot.a_inf();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let x = [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)];
            let b = pot.drift(&x);
            assert!(norm(&b) <= a * (norm(&x) + 1.0) + 1e-12);
        }
    }

    #[test]
    fn gamma_out_of_range_rejected() {
        let prof = AngularProfile::isotropic(1, 1.0).unwrap();
        assert!(matches!(
            HomogeneousPotential::new(prof.clone(), 1.2),
            Err(Error::InvalidConfig(_))
        ));
        assert!(HomogeneousPotential::new(prof, 0.0).is_err());
    }

    #[test]
    fn profile_grad_consistent_with_eval() {
        // central differences of the degree-0 extension vs analytic gradient
        let prof = AngularProfile::cosine(0.8f64, 0.2, 3).unwrap();
        for y in sphere::mesh::<f64>(2, 13) {
            let g = prof.grad(&y);
            let h = 1e-6;
            for i in 0..2 {
                let mut yp = y.clone();
                yp[i] += h;
                let np = norm(&yp);
                let yp: Vec<f64> = yp.iter().map(|c| c / np).collect();
                let mut ym = y.clone();
                ym[i] -= h;
                let nm = norm(&ym);
                let ym: Vec<f64> = ym.iter().map(|c| c / nm).collect();
                let fd = (prof.eval(&yp) - prof.eval(&ym)) / (2.0 * h);
                assert!((g[i] - fd).abs() < 1e-6, "{} vs {}", g[i], fd);
            }
        }
    }

    #[test]
    fn one_dimensional_profile_grad_is_zero() {
        let prof = AngularProfile::isotropic(1, 0.5f64).unwrap();
        assert_eq!(prof.grad(&[1.0]), vec![0.0]);
        assert_eq!(prof.grad(&[-1.0]), vec![0.0]);
    }

    #[test]
    fn tabulated_profile_tracks_cosine() {
        let n = 64;
        let angles: Vec<f64> = (0..n).map(|i| std::f64::consts::TAU * i as f64 / n as f64).collect();
        let values: Vec<f64> = angles.iter().map(|p| 0.8 + 0.2 * (3.0 * p).cos()).collect();
        let tab = AngularProfile::tabulated(angles, values).unwrap();
        let exact = AngularProfile::cosine(0.8, 0.2, 3).unwrap();
        for y in sphere::mesh::<f64>(2, 31) {
            assert!((tab.eval(&y) - exact.eval(&y)).abs() < 1e-4);
            let gt = tab.grad(&y);
            let ge = exact.grad(&y);
            for i in 0..2 {
                assert!((gt[i] - ge[i]).abs() < 1e-2);
            }
        }
    }

    #[test]
    fn cell_average_matches_quadrature_near_origin() {
        let pot = cosine_pot(0.8, 0.2, 3, 0.5);
        let h = 0.1f64;
        let center = [h / 2.0, h / 2.0]; // corner cell
        let avg = pot.v_cell_avg(&center, h).unwrap();
        // brute-force graded quadrature oracle in polar coordinates
        let mut acc = 0.0;
        let n_r = 4000;
        let n_phi = 256;
        for j in 0..n_phi {
            let phi = std::f64::consts::FRAC_PI_2 * (j as f64 + 0.5) / n_phi as f64;
            let rmax = h / phi.cos().max(phi.sin());
            for i in 0..n_r {
                // graded toward 0 to handle the r^{γ-1} singularity
                let s = (i as f64 + 0.5) / n_r as f64;
                let r = rmax * s * s;
                let dr = rmax * 2.0 * s / n_r as f64;
                let x = [r * phi.cos(), r * phi.sin()];
                if r < 1e-7 {
                    continue;
                }
                acc += pot.v(&x).unwrap() * r * dr;
            }
        }
        acc *= std::f64::consts::FRAC_PI_2 / n_phi as f64;
        let oracle = acc / (h * h);
        assert!(
            (avg - oracle).abs() < 2e-3 * oracle.abs(),
            "{avg} vs {oracle}"
        );
    }
}
