use peano_ldp::potential::hooks::HarmonicV;
use peano_ldp::spectral::*;
fn main() {
    for &(n, l) in &[(72usize, 9.0f64), (128, 9.0), (192, 9.0)] {
        let grid = GridSpec::<f64>::new(2, l, n).unwrap();
        let op = assemble(&HarmonicV { dim: 2 }, &grid, DEFAULT_MEMORY_CAP).unwrap();
        let t0 = std::time::Instant::now();
        let res = bottom_spectrum(&op, 4, &SolverOptions { tol: 1e-9, max_iter: 2000 }).unwrap();
        println!("n={n}: {:?} residuals {:?} in {:?}", res.eigenvalues, res.residuals, t0.elapsed());
    }
}
