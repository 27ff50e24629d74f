//! Cyclic Jacobi eigensolver for the small dense symmetric matrices that
//! show up in Rayleigh–Ritz steps (m ≤ ~50).

use crate::scalar::Scalar;

/// Eigen-decomposition of a symmetric `m × m` matrix (row-major), sorted
/// ascending. Returns `(eigenvalues, eigenvectors)` with eigenvectors as
/// row-major columns: `vecs[i * m + j]` is component `i` of eigenvector `j`.
pub fn jacobi_eigh<F: Scalar>(m: usize, a_in: &[F]) -> (Vec<F>, Vec<F>) {
    assert_eq!(a_in.len(), m * m);
    let mut a = a_in.to_vec();
    let mut v = vec![F::zero(); m * m];
    for i in 0..m {
        v[i * m + i] = F::one();
    }
    let eps = F::of(1e-30);
    for _sweep in 0..60 {
        let mut off = F::zero();
        for p in 0..m {
            for q in (p + 1)..m {
                off += a[p * m + q] * a[p * m + q];
            }
        }
        let scale: F = (0..m).map(|i| a[i * m + i] * a[i * m + i]).sum();
        if off <= eps * scale.max(F::of(1e-300)) {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = a[p * m + q];
                if apq == F::zero() {
                    continue;
                }
                let app = a[p * m + p];
                let aqq = a[q * m + q];
                let theta = (aqq - app) / (F::of(2.0) * apq);
                let t = {
                    let s = if theta >= F::zero() { F::one() } else { -F::one() };
                    s / (theta.abs() + (F::one() + theta * theta).sqrt())
                };
                let c = F::one() / (F::one() + t * t).sqrt();
                let s = t * c;
                // rotate rows/columns p and q of A
                for i in 0..m {
                    let aip = a[i * m + p];
                    let aiq = a[i * m + q];
                    a[i * m + p] = c * aip - s * aiq;
                    a[i * m + q] = s * aip + c * aiq;
                }
                for j in 0..m {
                    let apj = a[p * m + j];
                    let aqj = a[q * m + j];
                    a[p * m + j] = c * apj - s * aqj;
                    a[q * m + j] = s * apj + c * aqj;
                }
                for i in 0..m {
                    let vip = v[i * m + p];
                    let viq = v[i * m + q];
                    v[i * m + p] = c * vip - s * viq;
                    v[i * m + q] = s * vip + c * viq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| a[i * m + i].partial_cmp(&a[j * m + j]).unwrap());
    let evals: Vec<F> = order.iter().map(|&i| a[i * m + i]).collect();
    let mut evecs = vec![F::zero(); m * m];
    for (newj, &oldj) in order.iter().enumerate() {
        for i in 0..m {
            evecs[i * m + newj] = v[i * m + oldj];
        }
    }
    (evals, evecs)
}
