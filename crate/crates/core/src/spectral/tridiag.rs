//! Symmetric tridiagonal eigenpairs: Sturm-count bisection for the smallest
//! eigenvalues plus inverse iteration for the vectors.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, normalize};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct SymTridiag<F> {
    pub diag: Vec<F>,
    pub off: Vec<F>, // length n - 1
}

impl<F: Scalar> SymTridiag<F> {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly below `lambda` (Sturm sequence).
    pub fn count_below(&self, lambda: F) -> usize {
        let tiny = F::of(1e-300);
        let mut q = self.diag[0] - lambda;
        let mut count = if q < F::zero() { 1 } else { 0 };
        for i in 1..self.n() {
            if q.abs() < tiny {
                q = tiny;
            }
            q = self.diag[i] - lambda - self.off[i - 1] * self.off[i - 1] / q;
            if q < F::zero() {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (F, F) {
        let n = self.n();
        let mut lo = F::infinity();
        let mut hi = F::neg_infinity();
        for i in 0..n {
            let mut r = F::zero();
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// `idx`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, idx: usize) -> F {
        let (mut lo, mut hi) = self.gershgorin();
        for _ in 0..200 {
            let mid = (lo + hi) / F::of(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > idx {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (lo + hi) / F::of(2.0)
    }

    /// Solve `(T - λ) x = rhs` in place: tridiagonal LU with partial
    /// pivoting, tiny-pivot substitution for the near-singular shifts used
    /// by inverse iteration.
    fn solve_shifted(&self, lambda: F, x: &mut [F]) {
        let n = self.n();
        let tiny = F::of(1e-280);
        let mut d: Vec<F> = self.diag.iter().map(|&v| v - lambda).collect();
        let mut dl: Vec<F> = self.off.clone();
        let mut du: Vec<F> = self.off.clone();
        let mut du2 = vec![F::zero(); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];

        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i].abs() < tiny {
                    d[i] = if d[i] >= F::zero() { tiny } else { -tiny };
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] = d[i + 1] - fact * du[i];
            } else {
                swapped[i] = true;
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
            }
        }
        if d[n - 1].abs() < tiny {
            d[n - 1] = if d[n - 1] >= F::zero() { tiny } else { -tiny };
        }

        for i in 0..n - 1 {
            if !swapped[i] {
                x[i + 1] = x[i + 1] - dl[i] * x[i];
            } else {
                let temp = x[i];
                x[i] = x[i + 1];
                x[i + 1] = temp - dl[i] * x[i];
            }
        }
        x[n - 1] = x[n - 1] / d[n - 1];
        if n >= 2 {
            x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
        }
    }

    /// Solve `(T - σ) x = b` by plain Thomas elimination. For `σ` strictly
    /// below the spectrum `T - σ` is an SPD M-matrix: the elimination needs
    /// no pivoting and, for `b > 0`, every operation adds quantities of one
    /// sign, so the computed solution is elementwise positive in floating
    /// point.
    fn solve_positive(&self, sigma: F, b: &[F]) -> Vec<F> {
        let n = self.n();
        let mut d: Vec<F> = self.diag.iter().map(|&v| v - sigma).collect();
        let mut x = b.to_vec();
        for i in 1..n {
            let m = self.off[i - 1] / d[i - 1];
            d[i] = d[i] - m * self.off[i - 1];
            x[i] = x[i] - m * x[i - 1];
        }
        x[n - 1] = x[n - 1] / d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = (x[i] - self.off[i] * x[i + 1]) / d[i];
        }
        x
    }

    /// Residual `‖T x - λ x‖ / ‖x‖`.
    pub fn residual(&self, lambda: F, x: &[F]) -> F {
        let n = self.n();
        let mut r = F::zero();
        for i in 0..n {
            let mut v = (self.diag[i] - lambda) * x[i];
            if i > 0 {
                v += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.off[i] * x[i + 1];
            }
            r += v * v;
        }
        r.sqrt() / norm(x)
    }

    /// Smallest `k` eigenpairs; coefficient vectors are unit-norm.
    pub fn smallest_k(&self, k: usize, tol: F) -> Result<(Vec<F>, Vec<Vec<F>>, Vec<F>)> {
        let n = self.n();
        if k == 0 || k >= n {
            return Err(Error::InvalidConfig(format!("k = {k} out of range for n = {n}")));
        }
        let mut values = Vec::with_capacity(k);
        let mut vectors: Vec<Vec<F>> = Vec::with_capacity(k);
        let mut residuals = Vec::with_capacity(k);
        for idx in 0..k {
            let lam = self.eigenvalue(idx);
            // inverse iteration from a deterministic pseudo-random seed
            let mut x: Vec<F> = (0..n)
                .map(|i| F::of(((i * 2654435761 + idx * 40503) % 104729) as f64 / 104729.0 - 0.5))
                .collect();
            normalize(&mut x);
            let mut res = F::infinity();
            for _ in 0..8 {
                self.solve_shifted(lam, &mut x);
                // orthogonalize against converged vectors (twice, for clusters)
                for _ in 0..2 {
                    for v in &vectors {
                        let c = dot(&x, v);
                        for (xi, &vi) in x.iter_mut().zip(v) {
                            *xi = *xi - c * vi;
                        }
                    }
                }
                normalize(&mut x);
                res = self.residual(lam, &x);
                if res <= tol {
                    break;
                }
            }
            if !(res <= tol * F::of(100.0)) {
                return Err(Error::NoConvergence { iterations: 8, residual: res.f64() });
            }
            if idx == 0 {
                // tail sign noise removal: one inverse-power step with a
                // shift strictly below λ₁ makes T - σ an M-matrix and the
                // no-pivot solve of |x| elementwise positive
                let delta = (lam.abs() * F::of(1e-9)).max(res * F::of(2.0)).max(F::of(1e-12));
                let b: Vec<F> = x.iter().map(|&v| v.abs().max(F::of(1e-300))).collect();
                let mut pos = self.solve_positive(lam - delta, &b);
                normalize(&mut pos);
                let res_pos = self.residual(lam, &pos);
                if res_pos <= res.max(tol) && pos.iter().all(|&v| v > F::zero()) {
                    x = pos;
                    res = res_pos;
                }
            }
            values.push(lam);
            vectors.push(x);
            residuals.push(res);
        }
        Ok((values, vectors, residuals))
    }
}
