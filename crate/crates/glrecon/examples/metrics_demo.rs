//! The three reconstruction-quality metrics and how they disagree.
//!
//! RRE is a global relative norm; PSNR is the same information on a
//! log scale (peak-1 RMSE convention); SSIM compares local mean,
//! variance, and covariance inside an 11 x 11 Gaussian window and so
//! reacts to structure rather than raw energy. The corruptions below
//! are matched in RRE, yet SSIM separates them sharply: uniform bias
//! barely disturbs local structure while speckle destroys it.

use glrecon::metrics;
use glrecon::model::Image;
use glrecon::phantom::phantom_shepp_logan;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn perturbed(truth: &Image, delta: &[f64]) -> Image {
    Image::new(
        truth.width,
        truth.height,
        truth.values.iter().zip(delta).map(|(a, b)| a + b).collect(),
    )
    .unwrap()
}

fn main() {
    let n = 128;
    let truth = phantom_shepp_logan(n).unwrap();
    let len = truth.len();

    // Equal-energy corruptions: constant offset, smooth gradient,
    // independent speckle.
    let energy = 0.05 * truth.norm();
    let bias: Vec<f64> = vec![energy / (len as f64).sqrt(); len];
    let ramp_raw: Vec<f64> = (0..len).map(|i| (i % n) as f64 / n as f64 - 0.5).collect();
    let ramp_norm = ramp_raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ramp: Vec<f64> = ramp_raw.iter().map(|v| v * energy / ramp_norm).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let spk_raw: Vec<f64> = (0..len).map(|_| rng.gen::<f64>() - 0.5).collect();
    let spk_norm = spk_raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    let speckle: Vec<f64> = spk_raw.iter().map(|v| v * energy / spk_norm).collect();

    println!("{:<16} {:>8} {:>8} {:>8}", "corruption", "rre", "psnr", "ssim");
    for (name, delta) in [("constant bias", &bias), ("smooth ramp", &ramp), ("speckle", &speckle)] {
        let img = perturbed(&truth, delta);
        let r = metrics::report(&img, &truth).unwrap();
        println!("{name:<16} {:>8.4} {:>8.2} {:>8.4}", r.rre, r.psnr_rmse, r.ssim);
    }

    // Identical images score perfectly; swapping arguments leaves the
    // symmetric metrics unchanged.
    let r = metrics::report(&truth, &truth).unwrap();
    println!();
    println!("self comparison: rre {:.1}  psnr {}  ssim {:.3}", r.rre, r.psnr_rmse, r.ssim);
    let a = perturbed(&truth, &speckle);
    println!(
        "argument order: ssim(a, b) = {:.6}, ssim(b, a) = {:.6}",
        metrics::ssim(&a, &truth).unwrap(),
        metrics::ssim(&truth, &a).unwrap()
    );
}
