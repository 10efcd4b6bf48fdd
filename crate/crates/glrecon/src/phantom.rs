//! Test images: the ten-ellipse head phantom with softened contrasts
//! and a seeded binary-blob texture, rasterized on the unit square
//! with area-averaged supersampling.

use crate::error::{Error, Result};
use crate::model::{stream_rng, Image};
use rand::Rng;

/// Smallest supported phantom side length; the graph radius and the
/// SSIM window both need some room.
pub const MIN_PHANTOM_SIZE: usize = 16;

/// One ellipse of an analytic phantom, in the coordinates of the unit
/// square `[-1, 1]^2`. `phi_deg` rotates counterclockwise; overlapping
/// ellipses add their intensities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub a: f64,
    pub b: f64,
    pub x0: f64,
    pub y0: f64,
    pub phi_deg: f64,
    pub intensity: f64,
}

impl Ellipse {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (st, ct) = self.phi_deg.to_radians().sin_cos();
        let dx = x - self.x0;
        let dy = y - self.y0;
        let xr = dx * ct + dy * st;
        let yr = -dx * st + dy * ct;
        (xr / self.a).powi(2) + (yr / self.b).powi(2) <= 1.0
    }
}

/// The standard head phantom with contrasts softened for display
/// (interior features at 0.1..0.3 instead of near-zero contrast).
pub fn shepp_logan_ellipses() -> Vec<Ellipse> {
    let rows: [(f64, f64, f64, f64, f64, f64); 10] = [
        (0.69, 0.92, 0.0, 0.0, 0.0, 1.0),
        (0.6624, 0.8740, 0.0, -0.0184, 0.0, -0.8),
        (0.11, 0.31, 0.22, 0.0, -18.0, -0.2),
        (0.16, 0.41, -0.22, 0.0, 18.0, -0.2),
        (0.21, 0.25, 0.0, 0.35, 0.0, 0.1),
        (0.046, 0.046, 0.0, 0.1, 0.0, 0.1),
        (0.046, 0.046, 0.0, -0.1, 0.0, 0.1),
        (0.046, 0.023, -0.08, -0.605, 0.0, 0.1),
        (0.023, 0.023, 0.0, -0.606, 0.0, 0.1),
        (0.023, 0.046, 0.06, -0.605, 0.0, 0.1),
    ];
    rows.iter()
        .map(|&(a, b, x0, y0, phi_deg, intensity)| Ellipse { a, b, x0, y0, phi_deg, intensity })
        .collect()
}

/// Reflect an ellipse set across the vertical axis. Rasterizing the
/// reflected set equals flipping the rasterized original left-right,
/// exactly, because pixel centers are symmetric about zero.
pub fn mirror_ellipses(ellipses: &[Ellipse]) -> Vec<Ellipse> {
    ellipses
        .iter()
        .map(|e| Ellipse { x0: -e.x0, phi_deg: -e.phi_deg, ..*e })
        .collect()
}

fn check_size(n: usize) -> Result<()> {
    if n < MIN_PHANTOM_SIZE {
        return Err(Error::config(format!(
            "phantom size {n} below minimum {MIN_PHANTOM_SIZE}"
        )));
    }
    Ok(())
}

/// Supersampling factor for area-averaged rasterization: each pixel
/// averages `OVERSAMPLE^2` interior sample points, so an ellipse
/// boundary crossing a pixel produces its covered-area fraction
/// instead of an aliased all-or-nothing value.
pub const OVERSAMPLE: usize = 4;

/// Rasterize an ellipse set onto an `n x n` grid over `[-1, 1]^2` by
/// area-averaged supersampling, clamping the summed intensities to
/// `[0, 1]`. Row 0 is the top of the image (`y` close to 1).
pub fn rasterize_ellipses(ellipses: &[Ellipse], n: usize) -> Result<Image> {
    check_size(n)?;
    let mut img = Image::zeros(n, n);
    // Sample coordinates in the form (2g + 1 - ns)/ns over the global
    // supersample index g negate exactly under index reflection, so a
    // mirrored ellipse set rasterizes to the exact flipped image.
    let ns = (n * OVERSAMPLE) as f64;
    let coord = |g: usize| (2.0 * g as f64 + 1.0 - ns) / ns;
    let inv_count = 1.0 / (OVERSAMPLE * OVERSAMPLE) as f64;
    for i in 0..n {
        for j in 0..n {
            let mut v = 0.0;
            for sy in 0..OVERSAMPLE {
                let y = -coord(i * OVERSAMPLE + sy);
                for sx in 0..OVERSAMPLE {
                    let x = coord(j * OVERSAMPLE + sx);
                    for e in ellipses {
                        if e.contains(x, y) {
                            v += e.intensity;
                        }
                    }
                }
            }
            img.values[i * n + j] = (v * inv_count).clamp(0.0, 1.0);
        }
    }
    Ok(img)
}

/// The softened head phantom at side length `n`.
pub fn phantom_shepp_logan(n: usize) -> Result<Image> {
    rasterize_ellipses(&shepp_logan_ellipses(), n)
}

/// Seeded binary texture: scatter points on the grid, blur with a
/// Gaussian whose width scales with the image, then threshold at the
/// percentile that leaves roughly `density` of the pixels at one.
pub fn phantom_binary_blobs(n: usize, density: f64, seed: u64) -> Result<Image> {
    check_size(n)?;
    if !(density > 0.0 && density < 1.0) {
        return Err(Error::config(format!(
            "blob density must lie strictly between 0 and 1, got {density}"
        )));
    }
    const BLOB_SIZE_FRACTION: f64 = 0.1;
    // High stream index, clear of the per-sample streams used by the
    // measurement generator on the same seed.
    const BLOB_STREAM: u64 = 0xB10B_0000_0000;
    let n_pts = ((1.0 / BLOB_SIZE_FRACTION) as usize).pow(2).max(1);
    let mut rng = stream_rng(seed, BLOB_STREAM);
    let draw_axis = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<usize> {
        (0..n_pts).map(|_| ((n as f64) * rng.gen::<f64>()) as usize).collect()
    };
    let rows = draw_axis(&mut rng);
    let cols = draw_axis(&mut rng);

    let mut mask = vec![0.0f64; n * n];
    for (&r, &c) in rows.iter().zip(&cols) {
        mask[r.min(n - 1) * n + c.min(n - 1)] = 1.0;
    }

    let sigma = 0.25 * n as f64 * BLOB_SIZE_FRACTION;
    let blurred = gaussian_blur(&mask, n, n, sigma);

    let threshold = percentile_linear(&blurred, 100.0 * (1.0 - density));
    let values = blurred
        .iter()
        .map(|&v| if v < threshold { 0.0 } else { 1.0 })
        .collect();
    Image::new(n, n, values)
}

/// Separable Gaussian blur with clamp-to-edge boundary and kernel
/// radius of four standard deviations.
fn gaussian_blur(values: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).round().max(1.0) as usize;
    let mut kernel: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = kernel.iter().sum();
    for k in kernel.iter_mut() {
        *k /= sum;
    }

    let clamp = |i: isize, n: usize| -> usize { i.clamp(0, n as isize - 1) as usize };
    let mut horiz = vec![0.0f64; values.len()];
    for r in 0..height {
        for c in 0..width {
            let mut acc = 0.0;
            for (t, k) in kernel.iter().enumerate() {
                let cc = clamp(c as isize + t as isize - radius as isize, width);
                acc += k * values[r * width + cc];
            }
            horiz[r * width + c] = acc;
        }
    }
    let mut out = vec![0.0f64; values.len()];
    for r in 0..height {
        for c in 0..width {
            let mut acc = 0.0;
            for (t, k) in kernel.iter().enumerate() {
                let rr = clamp(r as isize + t as isize - radius as isize, height);
                acc += k * horiz[rr * width + c];
            }
            out[r * width + c] = acc;
        }
    }
    out
}

/// Percentile with linear interpolation between order statistics, the
/// common numerical-library default.
fn percentile_linear(values: &[f64], q: f64) -> f64 {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = (sorted.len() - 1) as f64 * q / 100.0;
    let lo = rank.floor() as usize;
    let frac = rank - lo as f64;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}
