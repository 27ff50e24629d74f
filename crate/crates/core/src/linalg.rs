//! Small dense vector helpers and deterministic reductions.
//!
//! Reductions that feed persisted outputs must not depend on the number of
//! worker threads, so parallel sums are always chunked at a fixed size and
//! the partials folded sequentially.

use rayon::prelude::*;

use crate::scalar::Scalar;

pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).fold(F::zero(), |s, v| s + v)
}

pub fn norm<F: Scalar>(a: &[F]) -> F {
    dot(a, a).sqrt()
}

pub fn dist<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .fold(F::zero(), |s, v| s + v)
        .sqrt()
}

/// Normalize in place; returns the original norm.
pub fn normalize<F: Scalar>(a: &mut [F]) -> F {
    let n = norm(a);
    if n > F::zero() {
        for v in a.iter_mut() {
            *v = *v / n;
        }
    }
    n
}

pub fn axpy<F: Scalar>(alpha: F, x: &[F], y: &mut [F]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

const CHUNK: usize = 8192;

/// Worker-count-independent parallel dot product: fixed-size chunk partials
/// folded in order.
pub fn det_dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= CHUNK {
        return dot(a, b);
    }
    let partials: Vec<F> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(ca, cb)| dot(ca, cb))
        .collect();
    partials.into_iter().fold(F::zero(), |s, v| s + v)
}

/// Worker-count-independent parallel sum of a mapped slice.
pub fn det_sum_by<T: Sync, F: Scalar>(items: &[T], f: impl Fn(&T) -> F + Sync) -> F {
    if items.len() <= CHUNK {
        return items.iter().map(&f).fold(F::zero(), |s, v| s + v);
    }
    let partials: Vec<F> = items
        .par_chunks(CHUNK)
        .map(|c| c.iter().map(&f).fold(F::zero(), |s, v| s + v))
        .collect();
    partials.into_iter().fold(F::zero(), |s, v| s + v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_dot_matches_sequential() {
        let a: Vec<f64> = (0..50_000).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..50_000).map(|i| (i as f64 * 0.11).cos()).collect();
        let s = dot(&a, &b);
        let d = det_dot(&a, &b);
        assert!((s - d).abs() <= 1e-12 * s.abs().max(1.0) + 1e-12);
    }
}
