//! Inspect the parallel-beam ray transform: geometry bookkeeping, the
//! sparse system matrix, adjoint consistency, and the operator norm.
//!
//! Rays are traced with exact pixel-intersection lengths, so the
//! forward map is a sparse matrix and the adjoint is its stored
//! transpose. The inner-product identity below therefore holds to
//! floating-point accuracy, not just approximately.

use glrecon::model::{Image, Sinogram};
use glrecon::operators::{build_radon, matrix_norm_estimate, radon_adjoint, radon_forward, RadonGeometry};
use glrecon::phantom::phantom_shepp_logan;
use glrecon::vecmath;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let n = 64;
    let geo = RadonGeometry::new(n, 60);
    println!(
        "geometry: {n}x{n} image, {} angles over [0, pi), {} detectors, pixel size {}, detector spacing {}",
        geo.n_angles,
        geo.n_detectors,
        geo.pixel_size(),
        geo.det_spacing()
    );

    let op = build_radon(&geo).unwrap();
    let nnz = op.matrix.vals.len();
    println!(
        "system matrix: {} x {} with {} nonzeros ({:.2} per ray)",
        geo.n_rays(),
        geo.n_pixels(),
        nnz,
        nnz as f64 / geo.n_rays() as f64
    );

    let phantom = phantom_shepp_logan(n).unwrap();
    let sino = radon_forward(&op, &phantom).unwrap();
    println!("sinogram of the head phantom: norm {:.3}, max {:.3}", sino.norm(),
        sino.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max));

    // <A u, w> = <u, A^T w> for random pairs.
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let u = Image::new(n, n, (0..n * n).map(|_| rng.gen::<f64>() - 0.5).collect()).unwrap();
        let w = Sinogram::new(
            geo.n_angles,
            geo.n_detectors,
            (0..geo.n_rays()).map(|_| rng.gen::<f64>() - 0.5).collect(),
        )
        .unwrap();
        let au = radon_forward(&op, &u).unwrap();
        let atw = radon_adjoint(&op, &w).unwrap();
        let lhs = vecmath::dot(&au.values, &w.values);
        let rhs = vecmath::dot(&u.values, &atw.values);
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
    }
    println!("adjoint identity over 20 random pairs: worst relative error {worst:.2e}");

    let norm = matrix_norm_estimate(&op.matrix, &op.matrix_t, 50);
    println!("operator 2-norm (power iteration): {norm:.2} (stored scale {:.2})", op.norm_scale);
    println!("unit-norm working view rescales data by 1/{:.2}", op.norm_scale);
}
