//! Radial-reduction oracle for isotropic potentials in d ≥ 2.
//!
//! For `θ ≡ c` the ground state lives in the zero-angular-momentum sector,
//! so `λ₁` solves the radial problem
//! `-½ r^{1-d} (r^{d-1} u')' + V(r) u = λ u` on `(0, L]` with a natural
//! condition at 0 and Dirichlet at `L`. A finite-volume discretization is
//! symmetrized with `D = diag(r_i^{(d-1)/2})` and handed to the tridiagonal
//! solver — an independent code path from the full-grid operator.

use crate::error::{Error, Result};
use crate::potential::HomogeneousPotential;
use crate::scalar::Scalar;

use super::tridiag::SymTridiag;

/// `λ₁` of the isotropic radial problem; `n` cells on `(0, L]`.
pub fn radial_lambda1<F: Scalar>(
    pot: &HomogeneousPotential<F>,
    l: F,
    n: usize,
) -> Result<F> {
    let d = pot.dim();
    if d < 2 {
        return Err(Error::InvalidConfig("radial reduction needs d >= 2".into()));
    }
    let theta = pot.profile().eval(&unit_vec::<F>(d));
    // isotropy check: θ constant and its gradient zero over a sample mesh
    for y in crate::sphere::mesh::<F>(d, 64) {
        if (pot.profile().eval(&y) - theta).abs() > F::of(1e-13)
            || pot.profile().grad(&y).iter().any(|g| g.abs() > F::of(1e-13))
        {
            return Err(Error::InvalidConfig("radial reduction needs an isotropic profile".into()));
        }
    }
    let gamma = pot.gamma();
    let one = F::one();
    let dd = F::of(d as f64);
    let t1_sq = ((one + gamma) * theta) * ((one + gamma) * theta);
    let t2 = (one + gamma) * (dd + gamma - one) * theta;

    let h = l / F::of(n as f64);
    let rc = |i: usize| (F::of(i as f64) + F::of(0.5)) * h;
    let rface = |i: usize| F::of(i as f64) * h; // face below cell i
    let w = |r: F| r.powf(dd - one);

    // cell average of V = ½(θ₁² r^{2γ} + θ₂ r^{γ-1}) with weight r^{d-1} dr
    let pow_int = |p: F, a: F, b: F| -> F {
        (b.powf(p + one) - a.powf(p + one)) / (p + one)
    };
    let vbar = |i: usize| -> F {
        let a = rface(i);
        let b = rface(i + 1);
        let wint = pow_int(dd - one, a, b);
        (t1_sq * pow_int(F::of(2.0) * gamma + dd - one, a, b)
            + t2 * pow_int(gamma - one + dd - one, a, b))
            / (F::of(2.0) * wint)
    };

    let half = F::of(0.5);
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n - 1);
    for i in 0..n {
        let wi = w(rc(i));
        let c_lo = if i == 0 { F::zero() } else { w(rface(i)) };
        // Dirichlet at the outer face: ghost reflection doubles the flux
        let c_hi = if i == n - 1 { F::of(2.0) * w(rface(i + 1)) } else { w(rface(i + 1)) };
        diag.push(half * (c_lo + c_hi) / (wi * h * h) + vbar(i));
        if i + 1 < n {
            off.push(-half * w(rface(i + 1)) / (h * h * (w(rc(i)) * w(rc(i + 1))).sqrt()));
        }
    }
    let tri = SymTridiag { diag, off };
    let (vals, _, _) = tri.smallest_k(1, F::of(1e-9))?;
    Ok(vals[0])
}

fn unit_vec<F: Scalar>(d: usize) -> Vec<F> {
    let mut v = vec![F::zero(); d];
    v[0] = F::one();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::AngularProfile;

    #[test]
    fn radial_matches_grid_refinement() {
        // self-consistency under refinement
        let pot = HomogeneousPotential::new(
            AngularProfile::isotropic(2, 2.0 / 3.0).unwrap(),
            0.5f64,
        )
        .unwrap();
        let a = radial_lambda1(&pot, 14.0, 2000).unwrap();
        let b = radial_lambda1(&pot, 14.0, 4000).unwrap();
        assert!((a - b).abs() < 2e-5 * b, "{a} vs {b}");
    }

    #[test]
    fn rejects_anisotropic() {
        let pot = HomogeneousPotential::new(
            AngularProfile::cosine(0.8f64, 0.2, 3).unwrap(),
            0.5,
        )
        .unwrap();
        assert!(radial_lambda1(&pot, 10.0, 512).is_err());
    }
}
