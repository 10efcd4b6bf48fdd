//! Image quality metrics: relative reconstruction error, two PSNR
//! conventions, and SSIM.
//!
//! `psnr` uses the full-vector-norm convention
//! `20 log10(1 / ||estimate - truth||)`, which is comparable across
//! runs at a fixed resolution but not across resolutions. `psnr_rmse`
//! is the standard definition `20 log10(sqrt(n) / ||diff||)` (peak 1.0
//! over root-mean-square error); benchmark acceptance bands use it.
//! Both are reported side by side everywhere.

use crate::error::{Error, Result};
use crate::model::Image;
use crate::vecmath;

/// Bundle of all metrics for one reconstruction versus ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    /// Relative reconstruction error `||est - truth|| / ||truth||`.
    pub rre: f64,
    /// `20 log10(1 / ||est - truth||)`, `+inf` for an exact match.
    pub psnr: f64,
    /// `20 log10(sqrt(n) / ||est - truth||)`, `+inf` for an exact match.
    pub psnr_rmse: f64,
    /// Mean local structural similarity over the valid window region.
    pub ssim: f64,
}

/// Relative reconstruction error `||estimate - truth|| / ||truth||`.
pub fn rre(estimate: &Image, truth: &Image) -> Result<f64> {
    check_shapes(estimate, truth)?;
    let tn = truth.norm();
    if tn == 0.0 {
        return Err(Error::UndefinedMetric("relative error against an all-zero reference".into()));
    }
    Ok(vecmath::norm(&vecmath::sub(&estimate.values, &truth.values)) / tn)
}

/// Full-vector-norm PSNR `20 log10(1 / ||estimate - truth||)`.
pub fn psnr(estimate: &Image, truth: &Image) -> Result<f64> {
    check_shapes(estimate, truth)?;
    let d = vecmath::norm(&vecmath::sub(&estimate.values, &truth.values));
    if d == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (1.0 / d).log10())
}

/// Standard RMSE-based PSNR with peak value 1.0:
/// `20 log10(sqrt(n) / ||estimate - truth||)`.
pub fn psnr_rmse(estimate: &Image, truth: &Image) -> Result<f64> {
    check_shapes(estimate, truth)?;
    let d = vecmath::norm(&vecmath::sub(&estimate.values, &truth.values));
    if d == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * ((estimate.len() as f64).sqrt() / d).log10())
}

/// Window side of the SSIM Gaussian.
pub const SSIM_WINDOW: usize = 11;
/// Standard deviation of the SSIM window.
pub const SSIM_SIGMA: f64 = 1.5;
/// Stabilization constants for dynamic range 1.0.
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Mean local SSIM over all positions where the full 11x11 Gaussian
/// window (sigma 1.5) fits, on dynamic range 1.0.
pub fn ssim(estimate: &Image, truth: &Image) -> Result<f64> {
    check_shapes(estimate, truth)?;
    if estimate.width < SSIM_WINDOW || estimate.height < SSIM_WINDOW {
        return Err(Error::UndefinedMetric(format!(
            "ssim needs at least {}x{} images, got {}x{}",
            SSIM_WINDOW, SSIM_WINDOW, estimate.width, estimate.height
        )));
    }
    let w = gaussian_window();
    let (x, y) = (&estimate.values, &truth.values);
    let (iw, ih) = (estimate.width, estimate.height);

    let xx: Vec<f64> = x.iter().map(|a| a * a).collect();
    let yy: Vec<f64> = y.iter().map(|a| a * a).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();

    let mu_x = conv_valid(x, iw, ih, &w);
    let mu_y = conv_valid(y, iw, ih, &w);
    let m_xx = conv_valid(&xx, iw, ih, &w);
    let m_yy = conv_valid(&yy, iw, ih, &w);
    let m_xy = conv_valid(&xy, iw, ih, &w);

    let c1 = (SSIM_K1 * 1.0_f64).powi(2);
    let c2 = (SSIM_K2 * 1.0_f64).powi(2);
    let mut acc = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let sx = m_xx[i] - mx * mx;
        let sy = m_yy[i] - my * my;
        let sxy = m_xy[i] - mx * my;
        let num = (2.0 * mx * my + c1) * (2.0 * sxy + c2);
        let den = (mx * mx + my * my + c1) * (sx + sy + c2);
        acc += num / den;
    }
    Ok(acc / mu_x.len() as f64)
}

/// All four metrics at once.
pub fn report(estimate: &Image, truth: &Image) -> Result<MetricReport> {
    Ok(MetricReport {
        rre: rre(estimate, truth)?,
        psnr: psnr(estimate, truth)?,
        psnr_rmse: psnr_rmse(estimate, truth)?,
        ssim: ssim(estimate, truth)?,
    })
}

fn check_shapes(a: &Image, b: &Image) -> Result<()> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::dimension(format!(
            "metric inputs {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(())
}

/// Normalized 1-D Gaussian window; the separable product reproduces
/// the standard normalized 11x11 SSIM kernel.
fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in w.iter_mut() {
        *v /= sum;
    }
    w
}

/// Separable valid-region convolution with a symmetric window.
fn conv_valid(img: &[f64], w: usize, h: usize, win: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    // Horizontal pass.
    let mut tmp = vec![0.0; ow * h];
    for i in 0..h {
        for j in 0..ow {
            let mut acc = 0.0;
            for (k, &wk) in win.iter().enumerate() {
                acc += wk * img[i * w + j + k];
            }
            tmp[i * ow + j] = acc;
        }
    }
    // Vertical pass.
    let mut out = vec![0.0; ow * oh];
    for i in 0..oh {
        for j in 0..ow {
            let mut acc = 0.0;
            for (k, &wk) in win.iter().enumerate() {
                acc += wk * tmp[(i + k) * ow + j];
            }
            out[i * ow + j] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(w: usize, h: usize, values: Vec<f64>) -> Image {
        Image::new(w, h, values).unwrap()
    }

    fn fixture(n: usize, seed: u64) -> Image {
        let mut state = seed;
        img(
            n,
            n,
            (0..n * n)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    (state >> 11) as f64 / (1u64 << 53) as f64
                })
                .collect(),
        )
    }

    #[test]
    fn rre_basic_cases() {
        let truth = fixture(8, 1);
        assert_eq!(rre(&truth, &truth).unwrap(), 0.0);
        let zero = Image::zeros(8, 8);
        assert!((rre(&zero, &truth).unwrap() - 1.0).abs() < 1e-15);
        let double = img(8, 8, truth.values.iter().map(|v| 2.0 * v).collect());
        assert!((rre(&double, &truth).unwrap() - 1.0).abs() < 1e-12);
        assert!(rre(&truth, &zero).is_err());
    }

    #[test]
    fn psnr_hand_values() {
        // ||diff|| = 0.1 -> 20 dB; ||diff|| = 1 -> 0 dB.
        let truth = Image::zeros(4, 4);
        let mut e = Image::zeros(4, 4);
        e.values[0] = 0.1;
        assert!((psnr(&e, &truth).unwrap() - 20.0).abs() < 1e-12);
        e.values[0] = 1.0;
        assert!(psnr(&e, &truth).unwrap().abs() < 1e-12);
        assert!(psnr(&truth, &truth).unwrap().is_infinite());
    }

    #[test]
    fn psnr_conventions_related_through_pixel_count() {
        let truth = fixture(12, 3);
        let est = img(12, 12, truth.values.iter().map(|v| v + 0.01).collect());
        let a = psnr(&est, &truth).unwrap();
        let b = psnr_rmse(&est, &truth).unwrap();
        let n = truth.len() as f64;
        assert!((b - (a + 10.0 * n.log10())).abs() < 1e-10);
    }

    #[test]
    fn psnr_equals_minus_log_of_rre_times_truth_norm() {
        let truth = fixture(10, 7);
        let est = fixture(10, 8);
        let p = psnr(&est, &truth).unwrap();
        let r = rre(&est, &truth).unwrap();
        let via_rre = -20.0 * (r * truth.norm()).log10();
        assert!((p - via_rre).abs() < 1e-10);
    }

    #[test]
    fn ssim_identical_is_one() {
        let a = fixture(16, 5);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ssim_inverted_binary_tile_is_low() {
        // An 11x11 checker tile against its inversion: structure is
        // anti-correlated, so SSIM falls below 0.5.
        let vals: Vec<f64> = (0..121).map(|i| ((i / 11 + i % 11) % 2) as f64).collect();
        let truth = img(11, 11, vals.clone());
        let inv = img(11, 11, vals.iter().map(|v| 1.0 - v).collect());
        let s = ssim(&inv, &truth).unwrap();
        assert!(s < 0.5, "ssim {s}");
    }

    #[test]
    fn ssim_rejects_small_images() {
        let a = fixture(8, 1);
        assert!(ssim(&a, &a).is_err());
    }

    #[test]
    fn metrics_invariant_under_shared_permutation() {
        let truth = fixture(13, 21);
        let est = fixture(13, 22);
        let n = truth.len();
        // Deterministic permutation: index map i -> (i * 89) mod n with
        // gcd(89, n) = 1 for n = 169.
        let perm: Vec<usize> = (0..n).map(|i| (i * 89) % n).collect();
        let pt = img(13, 13, perm.iter().map(|&p| truth.values[p]).collect());
        let pe = img(13, 13, perm.iter().map(|&p| est.values[p]).collect());
        assert!((rre(&est, &truth).unwrap() - rre(&pe, &pt).unwrap()).abs() < 1e-12);
        assert!((psnr(&est, &truth).unwrap() - psnr(&pe, &pt).unwrap()).abs() < 1e-10);
        assert!((psnr_rmse(&est, &truth).unwrap() - psnr_rmse(&pe, &pt).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn ssim_decreases_with_noise_level() {
        use rand::Rng;
        // Mean SSIM over seeded trials at a higher noise level is lower.
        let truth = fixture(24, 9);
        let mut mean = [0.0; 2];
        for (li, level) in [0.05, 0.25].iter().enumerate() {
            for trial in 0..100u64 {
                let mut rng = crate::model::stream_rng(5000 + trial, li as u64);
                let noisy = img(
                    24,
                    24,
                    truth.values.iter().map(|v| v + level * (rng.gen::<f64>() - 0.5)).collect(),
                );
                mean[li] += ssim(&noisy, &truth).unwrap();
            }
            mean[li] /= 100.0;
        }
        assert!(mean[1] < mean[0], "ssim means {mean:?}");
    }
}
