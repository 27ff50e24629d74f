//! Unit-sphere sample meshes used for sup/inf estimates over directions.

use crate::scalar::Scalar;

/// Default mesh size for `d = 2` (uniformly spaced angles).
pub const DEFAULT_MESH_2D: usize = 4096;
/// Default mesh size for `d ≥ 3` (Fibonacci sphere).
pub const DEFAULT_MESH_3D: usize = 8192;

/// Sample mesh on `S^{d-1}`.
///
/// * `d = 1`: the two-point sphere `{-1, +1}` regardless of `n`.
/// * `d = 2`: `n` uniformly spaced angles.
/// * `d = 3`: `n` Fibonacci-sphere points.
pub fn mesh<F: Scalar>(d: usize, n: usize) -> Vec<Vec<F>> {
    match d {
        1 => vec![vec![F::one()], vec![-F::one()]],
        2 => uniform_circle(n.max(4)),
        3 => fibonacci_sphere(n.max(16)),
        _ => panic!("sphere mesh only supports d in 1..=3"),
    }
}

/// Mesh with the per-dimension default size.
pub fn default_mesh<F: Scalar>(d: usize) -> Vec<Vec<F>> {
    let n = match d {
        1 => 2,
        2 => DEFAULT_MESH_2D,
        _ => DEFAULT_MESH_3D,
    };
    mesh(d, n)
}

fn uniform_circle<F: Scalar>(n: usize) -> Vec<Vec<F>> {
    let two_pi = F::of(std::f64::consts::TAU);
    (0..n)
        .map(|i| {
            let phi = two_pi * F::of(i as f64) / F::of(n as f64);
            vec![phi.cos(), phi.sin()]
        })
        .collect()
}

fn fibonacci_sphere<F: Scalar>(n: usize) -> Vec<Vec<F>> {
    let golden = F::of(std::f64::consts::PI * (3.0 - 5.0f64.sqrt()));
    (0..n)
        .map(|i| {
            // z stratified over (-1, 1), azimuth by the golden angle
            let z = F::one() - (F::of(2.0) * F::of(i as f64) + F::one()) / F::of(n as f64);
            let r = (F::one() - z * z).max(F::zero()).sqrt();
            let phi = golden * F::of(i as f64);
            vec![r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}
