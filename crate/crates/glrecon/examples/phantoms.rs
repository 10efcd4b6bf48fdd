//! Render the two benchmark phantoms and write them as PGM files.
//!
//! The head phantom is a fixed set of ten intensity-summed ellipses
//! rasterized with 4x4 area-averaged supersampling, so edges carry
//! fractional coverage instead of hard jagged steps. The blob phantom
//! is a seeded binary texture with roughly the requested foreground
//! fraction. Output lands in `out/examples/phantoms/`.

use glrecon::io::write_image_pgm;
use glrecon::phantom::{mirror_ellipses, phantom_binary_blobs, phantom_shepp_logan, rasterize_ellipses, shepp_logan_ellipses};
use std::path::Path;

fn stats(name: &str, img: &glrecon::model::Image) {
    let lo = img.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = img.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = img.values.iter().sum::<f64>() / img.len() as f64;
    let frac = img.values.iter().filter(|&&v| v > 0.0).count() as f64 / img.len() as f64;
    println!("{name}: {}x{}  range [{lo:.3}, {hi:.3}]  mean {mean:.4}  nonzero {:.1}%", img.width, img.height, 100.0 * frac);
}

fn main() {
    let out = Path::new("out/examples/phantoms");
    std::fs::create_dir_all(out).unwrap();

    for n in [64usize, 128, 256] {
        let head = phantom_shepp_logan(n).unwrap();
        stats(&format!("head phantom {n}"), &head);
        write_image_pgm(&out.join(format!("head_{n}.pgm")), &head).unwrap();
    }

    // The ellipse list is mirror symmetric about the vertical axis, so
    // flipping the geometry reproduces the same image.
    let n = 128;
    let img = phantom_shepp_logan(n).unwrap();
    let mirrored = rasterize_ellipses(&mirror_ellipses(&shepp_logan_ellipses()), n).unwrap();
    let max_dev = (0..n)
        .flat_map(|r| (0..n).map(move |c| (r, c)))
        .map(|(r, c)| (mirrored.at(r, c) - img.at(r, n - 1 - c)).abs())
        .fold(0.0f64, f64::max);
    println!("mirror symmetry: max deviation {max_dev:.2e}");

    let blobs = phantom_binary_blobs(128, 0.5, 7).unwrap();
    stats("binary blobs", &blobs);
    write_image_pgm(&out.join("blobs_128.pgm"), &blobs).unwrap();
    println!("wrote PGMs to {}", out.display());
}
