//! Forward operators: discrete parallel-beam Radon transform (linear)
//! and the phase-retrieval operator built on it (nonlinear).
//!
//! The Radon transform is precomputed as a sparse system matrix whose
//! row for ray (angle, detector) holds the exact intersection lengths
//! of that ray with each pixel (Siddon-style traversal). Forward and
//! adjoint share the one stored matrix, so the pair is matched to
//! machine precision, which gradient-type iterations assume.
//!
//! Phase retrieval measures element-wise squared ray sums,
//! `F_p(u) = (F_c u)^2`, with derivative `F_p'(u)[h] = 2 (F_c u) . (F_c h)`
//! and adjoint `F_p'(u)*[w] = 2 F_c^T ((F_c u) . w)`.

use crate::error::{Error, Result};
use crate::model::{Image, Sinogram};
use crate::sparse::Csr;
use crate::vecmath;

// ===================================================================
// Geometry
// ===================================================================

/// Parallel-beam acquisition geometry on the square domain
/// `[-extent/2, extent/2]^2` with one grid pixel covering
/// `extent / image_size` units per side.
#[derive(Debug, Clone, PartialEq)]
pub struct RadonGeometry {
    /// Image side length N in pixels.
    pub image_size: usize,
    /// Number of projection angles, uniform over `[0, pi)`.
    pub n_angles: usize,
    /// Number of detector elements per angle.
    pub n_detectors: usize,
    /// The projection angles, strictly increasing.
    pub angles: Vec<f64>,
    /// Physical side length of the image domain.
    pub domain_extent: f64,
}

impl RadonGeometry {
    /// Standard geometry: domain `[-N, N]^2` (pixel side 2 units),
    /// detector line of length `sqrt(2) * extent` covering the full
    /// domain shadow, detector count `ceil(sqrt(2) * extent)` so one
    /// detector cell spans about one physical unit (363 elements at
    /// N = 128).
    pub fn new(image_size: usize, n_angles: usize) -> Self {
        let extent = 2.0 * image_size as f64;
        let n_detectors = (std::f64::consts::SQRT_2 * extent).ceil() as usize;
        Self::with_detectors(image_size, n_angles, n_detectors)
    }

    pub fn with_detectors(image_size: usize, n_angles: usize, n_detectors: usize) -> Self {
        let extent = 2.0 * image_size as f64;
        // Parallel-beam data repeats after a half turn (opposite
        // angles scan the same lines with the detector reversed), so
        // the angle budget buys distinct directions only on [0, pi).
        let angles = (0..n_angles)
            .map(|t| std::f64::consts::PI * t as f64 / n_angles as f64)
            .collect();
        RadonGeometry { image_size, n_angles, n_detectors, angles, domain_extent: extent }
    }

    /// Physical pixel side length.
    pub fn pixel_size(&self) -> f64 {
        self.domain_extent / self.image_size as f64
    }

    /// Physical detector cell length.
    pub fn det_spacing(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.domain_extent / self.n_detectors as f64
    }

    /// Signed offset of detector cell center `k` from the rotation
    /// center, along the detector axis.
    pub fn det_offset(&self, k: usize) -> f64 {
        let len = std::f64::consts::SQRT_2 * self.domain_extent;
        -0.5 * len + (k as f64 + 0.5) * self.det_spacing()
    }

    pub fn n_rays(&self) -> usize {
        self.n_angles * self.n_detectors
    }

    pub fn n_pixels(&self) -> usize {
        self.image_size * self.image_size
    }
}

// ===================================================================
// Radon operator
// ===================================================================

/// Precomputed sparse Radon transform with its transpose and an
/// operator-norm estimate. `matrix` entries are physical intersection
/// lengths; `norm_scale` is the estimated 2-norm, used to form the
/// unit-norm working operator the solver and the variational
/// initializers run on.
#[derive(Debug, Clone)]
pub struct RadonOperator {
    pub geometry: RadonGeometry,
    pub matrix: Csr,
    pub matrix_t: Csr,
    /// Power-iteration estimate of the matrix 2-norm.
    pub norm_scale: f64,
}

/// Largest image the precomputed-matrix approach accepts; beyond this
/// the matrix build is no longer a desk-scale operation.
pub const MAX_IMAGE_SIZE: usize = 512;

/// Build the sparse system matrix by exact ray-grid traversal.
/// Deterministic: rays are processed in (angle, detector) order and
/// each row's columns are sorted.
pub fn build_radon(geometry: &RadonGeometry) -> Result<RadonOperator> {
    if geometry.image_size > MAX_IMAGE_SIZE {
        return Err(Error::config(format!(
            "image size {} exceeds the {} limit of the precomputed system matrix",
            geometry.image_size, MAX_IMAGE_SIZE
        )));
    }
    if geometry.image_size == 0 || geometry.n_angles == 0 || geometry.n_detectors == 0 {
        return Err(Error::config("geometry must have positive size, angles and detectors"));
    }
    if !geometry.angles.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::config("angles must be strictly increasing"));
    }

    let n = geometry.image_size;
    let half = 0.5 * geometry.domain_extent;
    let delta = geometry.pixel_size();
    let mut rows: Vec<Vec<(u32, f64)>> = Vec::with_capacity(geometry.n_rays());
    let mut crossings: Vec<f64> = Vec::new();
    let mut hits: Vec<(u32, f64)> = Vec::new();

    for &theta in &geometry.angles {
        let (sin_t, cos_t) = theta.sin_cos();
        // Detector axis omega = (cos, sin); ray direction d = (-sin, cos).
        let (dx, dy) = (-sin_t, cos_t);
        for k in 0..geometry.n_detectors {
            let s = geometry.det_offset(k);
            let (px, py) = (s * cos_t, s * sin_t);
            rows.push(trace_ray(px, py, dx, dy, n, half, delta, &mut crossings, &mut hits));
        }
    }

    let matrix = Csr::from_rows(geometry.n_rays(), geometry.n_pixels(), rows);
    let matrix_t = matrix.transpose();
    let norm_scale = matrix_norm_estimate(&matrix, &matrix_t, 60);
    Ok(RadonOperator { geometry: geometry.clone(), matrix, matrix_t, norm_scale })
}

/// Intersection lengths of the line `(px, py) + t (dx, dy)` (unit
/// direction) with every cell of the N x N grid over
/// `[-half, half]^2`. Crossing parameters with all grid lines are
/// collected, sorted, and each segment is attributed to the cell
/// containing its midpoint.
#[allow(clippy::too_many_arguments)]
fn trace_ray(
    px: f64,
    py: f64,
    dx: f64,
    dy: f64,
    n: usize,
    half: f64,
    delta: f64,
    crossings: &mut Vec<f64>,
    hits: &mut Vec<(u32, f64)>,
) -> Vec<(u32, f64)> {
    const PAR_EPS: f64 = 1e-12;

    // Clip against the domain square.
    let mut t_lo = f64::NEG_INFINITY;
    let mut t_hi = f64::INFINITY;
    for (p, d) in [(px, dx), (py, dy)] {
        if d.abs() < PAR_EPS {
            if p < -half || p > half {
                return Vec::new();
            }
        } else {
            let t1 = (-half - p) / d;
            let t2 = (half - p) / d;
            t_lo = t_lo.max(t1.min(t2));
            t_hi = t_hi.min(t1.max(t2));
        }
    }
    if t_hi - t_lo <= PAR_EPS {
        return Vec::new();
    }

    crossings.clear();
    crossings.push(t_lo);
    crossings.push(t_hi);
    for (p, d) in [(px, dx), (py, dy)] {
        if d.abs() >= PAR_EPS {
            for g in 1..n {
                let coord = -half + g as f64 * delta;
                let t = (coord - p) / d;
                if t > t_lo + PAR_EPS && t < t_hi - PAR_EPS {
                    crossings.push(t);
                }
            }
        }
    }
    crossings.sort_by(|a, b| a.partial_cmp(b).unwrap());

    hits.clear();
    for w in crossings.windows(2) {
        let len = w[1] - w[0];
        if len <= PAR_EPS {
            continue;
        }
        let tm = 0.5 * (w[0] + w[1]);
        let xm = px + dx * tm;
        let ym = py + dy * tm;
        let col = (((xm + half) / delta).floor() as isize).clamp(0, n as isize - 1) as usize;
        let row = (((half - ym) / delta).floor() as isize).clamp(0, n as isize - 1) as usize;
        hits.push(((row * n + col) as u32, len));
    }
    // Merge duplicate cells from degenerate crossings.
    hits.sort_by_key(|(c, _)| *c);
    let mut out: Vec<(u32, f64)> = Vec::with_capacity(hits.len());
    for &(c, l) in hits.iter() {
        match out.last_mut() {
            Some((lc, ll)) if *lc == c => *ll += l,
            _ => out.push((c, l)),
        }
    }
    out
}

/// Power-iteration estimate of the 2-norm of `A`, deterministic from a
/// fixed all-ones start vector.
pub fn matrix_norm_estimate(a: &Csr, at: &Csr, iters: usize) -> f64 {
    let mut x = vec![1.0 / (a.ncols as f64).sqrt(); a.ncols];
    let mut sigma = 0.0;
    for _ in 0..iters {
        let ax = a.matvec(&x);
        sigma = vecmath::norm(&ax);
        if sigma == 0.0 {
            return 0.0;
        }
        let mut y = at.matvec(&ax);
        let ny = vecmath::norm(&y);
        if ny == 0.0 {
            return 0.0;
        }
        vecmath::scale_inplace(&mut y, 1.0 / ny);
        x = y;
    }
    sigma
}

/// Forward projection `F_c u` in physical units.
pub fn radon_forward(op: &RadonOperator, u: &Image) -> Result<Sinogram> {
    if u.len() != op.geometry.n_pixels() {
        return Err(Error::dimension(format!(
            "image has {} pixels, operator expects {}",
            u.len(),
            op.geometry.n_pixels()
        )));
    }
    Sinogram::new(op.geometry.n_angles, op.geometry.n_detectors, op.matrix.matvec(&u.values))
}

/// Adjoint (unfiltered backprojection) `F_c^T w`.
pub fn radon_adjoint(op: &RadonOperator, w: &Sinogram) -> Result<Image> {
    if w.len() != op.geometry.n_rays() {
        return Err(Error::dimension(format!(
            "sinogram has {} values, operator expects {}",
            w.len(),
            op.geometry.n_rays()
        )));
    }
    Image::new(op.geometry.image_size, op.geometry.image_size, op.matrix_t.matvec(&w.values))
}

// ===================================================================
// Phase retrieval
// ===================================================================

/// Squared-magnitude measurements of ray sums: `F_p(u) = (F_c u)^2`.
/// Borrows the ray transform it squares.
#[derive(Debug, Clone, Copy)]
pub struct PhaseRetrievalOperator<'a> {
    pub inner: &'a RadonOperator,
}

impl<'a> PhaseRetrievalOperator<'a> {
    pub fn new(inner: &'a RadonOperator) -> Self {
        PhaseRetrievalOperator { inner }
    }
}

/// `F_p(u) = (F_c u)^2` element-wise; nonnegative.
pub fn pr_forward(op: &PhaseRetrievalOperator, u: &Image) -> Result<Sinogram> {
    let mut y = radon_forward(op.inner, u)?;
    for v in y.values.iter_mut() {
        *v = *v * *v;
    }
    Ok(y)
}

/// `F_p'(u)*[w] = 2 F_c^T ((F_c u) . w)`.
pub fn pr_derivative_adjoint_apply(op: &PhaseRetrievalOperator, u: &Image, w: &Sinogram) -> Result<Image> {
    if w.len() != op.inner.geometry.n_rays() {
        return Err(Error::dimension(format!(
            "sinogram has {} values, operator expects {}",
            w.len(),
            op.inner.geometry.n_rays()
        )));
    }
    let y = radon_forward(op.inner, u)?;
    let prod: Vec<f64> = y.values.iter().zip(&w.values).map(|(a, b)| 2.0 * a * b).collect();
    Image::new(
        op.inner.geometry.image_size,
        op.inner.geometry.image_size,
        op.inner.matrix_t.matvec(&prod),
    )
}

/// Directional derivative `F_p'(u)[h] = 2 (F_c u) . (F_c h)`, exposed
/// for derivative checks.
pub fn pr_derivative_apply(op: &PhaseRetrievalOperator, u: &Image, h: &Image) -> Result<Sinogram> {
    let yu = radon_forward(op.inner, u)?;
    let yh = radon_forward(op.inner, h)?;
    let vals: Vec<f64> = yu.values.iter().zip(&yh.values).map(|(a, b)| 2.0 * a * b).collect();
    Sinogram::new(yu.n_rows, yu.n_cols, vals)
}

// ===================================================================
// Uniform operator interface for the solver and initializers
// ===================================================================

/// A forward operator with the derivative-adjoint application the
/// iteration needs. For linear operators the derivative is the
/// operator itself.
pub trait ForwardOp {
    fn in_len(&self) -> usize;
    fn out_shape(&self) -> (usize, usize);
    fn forward(&self, u: &[f64]) -> Vec<f64>;
    /// `F'(u)* w`.
    fn derivative_adjoint(&self, u: &[f64], w: &[f64]) -> Vec<f64>;

    fn out_len(&self) -> usize {
        let (r, c) = self.out_shape();
        r * c
    }

    /// Factor converting this operator's output scale back to the
    /// physical measurement scale. Unscaled operators return 1; the
    /// unit-norm working views return their normalization constant, so
    /// residual norms can be reported and thresholded in physical
    /// units while the gradient runs on the well-conditioned scale.
    fn data_scale(&self) -> f64 {
        1.0
    }
}

/// Linear operators additionally expose the plain adjoint, which the
/// conjugate-gradient and FBP initializers use.
pub trait LinearOp: ForwardOp {
    fn adjoint(&self, w: &[f64]) -> Vec<f64>;
}

impl ForwardOp for RadonOperator {
    fn in_len(&self) -> usize {
        self.geometry.n_pixels()
    }

    fn out_shape(&self) -> (usize, usize) {
        (self.geometry.n_angles, self.geometry.n_detectors)
    }

    fn forward(&self, u: &[f64]) -> Vec<f64> {
        self.matrix.matvec(u)
    }

    fn derivative_adjoint(&self, _u: &[f64], w: &[f64]) -> Vec<f64> {
        self.matrix_t.matvec(w)
    }
}

impl LinearOp for RadonOperator {
    fn adjoint(&self, w: &[f64]) -> Vec<f64> {
        self.matrix_t.matvec(w)
    }
}

/// The Radon operator divided by a fixed scale (normally its estimated
/// 2-norm, giving a unit-norm working operator).
pub struct ScaledRadon<'a> {
    pub op: &'a RadonOperator,
    pub factor: f64,
}

impl RadonOperator {
    /// Working-scale view `F = F_c / norm_scale` with `||F|| ~ 1`.
    pub fn unit_norm(&self) -> ScaledRadon<'_> {
        self.scaled_to_norm(1.0)
    }

    /// Working-scale view with `||F|| ~ target`.
    pub fn scaled_to_norm(&self, target: f64) -> ScaledRadon<'_> {
        ScaledRadon { op: self, factor: target / self.norm_scale }
    }
}

impl ForwardOp for ScaledRadon<'_> {
    fn in_len(&self) -> usize {
        self.op.in_len()
    }

    fn out_shape(&self) -> (usize, usize) {
        self.op.out_shape()
    }

    fn forward(&self, u: &[f64]) -> Vec<f64> {
        let mut y = self.op.forward(u);
        vecmath::scale_inplace(&mut y, self.factor);
        y
    }

    fn derivative_adjoint(&self, _u: &[f64], w: &[f64]) -> Vec<f64> {
        let mut x = self.op.matrix_t.matvec(w);
        vecmath::scale_inplace(&mut x, self.factor);
        x
    }

    fn data_scale(&self) -> f64 {
        1.0 / self.factor
    }
}

impl LinearOp for ScaledRadon<'_> {
    fn adjoint(&self, w: &[f64]) -> Vec<f64> {
        let mut x = self.op.matrix_t.matvec(w);
        vecmath::scale_inplace(&mut x, self.factor);
        x
    }
}

/// The physical phase-retrieval operator as a [`ForwardOp`], for code
/// that is generic over the problem.
impl ForwardOp for PhaseRetrievalOperator<'_> {
    fn in_len(&self) -> usize {
        self.inner.in_len()
    }

    fn out_shape(&self) -> (usize, usize) {
        self.inner.out_shape()
    }

    fn forward(&self, u: &[f64]) -> Vec<f64> {
        let mut y = self.inner.matrix.matvec(u);
        for v in y.iter_mut() {
            *v = *v * *v;
        }
        y
    }

    fn derivative_adjoint(&self, u: &[f64], w: &[f64]) -> Vec<f64> {
        let y = self.inner.matrix.matvec(u);
        let prod: Vec<f64> = y.iter().zip(w).map(|(a, b)| 2.0 * a * b).collect();
        self.inner.matrix_t.matvec(&prod)
    }
}

/// Phase retrieval on the scaled ray transform:
/// `F(u) = ((F_c / c) u)^2`. With `c` the inner norm estimate the
/// linearization around typical iterates has norm of order 1.
pub struct ScaledPhaseRetrieval<'a> {
    pub op: PhaseRetrievalOperator<'a>,
    pub factor: f64,
}

impl<'a> PhaseRetrievalOperator<'a> {
    /// Working-scale view squaring the unit-norm ray transform;
    /// measurements scale by `1 / norm_scale^2`.
    pub fn unit_norm(&self) -> ScaledPhaseRetrieval<'a> {
        self.scaled_to_norm(1.0)
    }

    /// Working-scale view squaring the ray transform scaled to norm
    /// `target`; measurements scale by `(target / norm_scale)^2`.
    pub fn scaled_to_norm(&self, target: f64) -> ScaledPhaseRetrieval<'a> {
        ScaledPhaseRetrieval { op: *self, factor: target / self.inner.norm_scale }
    }
}

impl ForwardOp for ScaledPhaseRetrieval<'_> {
    fn in_len(&self) -> usize {
        self.op.inner.in_len()
    }

    fn out_shape(&self) -> (usize, usize) {
        self.op.inner.out_shape()
    }

    fn forward(&self, u: &[f64]) -> Vec<f64> {
        let mut y = self.op.inner.matrix.matvec(u);
        for v in y.iter_mut() {
            let s = *v * self.factor;
            *v = s * s;
        }
        y
    }

    fn derivative_adjoint(&self, u: &[f64], w: &[f64]) -> Vec<f64> {
        let y = self.op.inner.matrix.matvec(u);
        let f2 = self.factor * self.factor;
        let prod: Vec<f64> = y.iter().zip(w).map(|(a, b)| 2.0 * f2 * a * b).collect();
        self.op.inner.matrix_t.matvec(&prod)
    }

    fn data_scale(&self) -> f64 {
        1.0 / (self.factor * self.factor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rand_values(n: usize, mut state: u64) -> Vec<f64> {
        // Small deterministic LCG for test fixtures.
        (0..n)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect()
    }

    fn small_op(n: usize, angles: usize) -> RadonOperator {
        build_radon(&RadonGeometry::new(n, angles)).unwrap()
    }

    #[test]
    fn geometry_detector_count_at_benchmark_size() {
        let g = RadonGeometry::new(128, 60);
        assert_eq!(g.n_detectors, 363);
        assert_eq!(g.n_rays(), 21780);
        let g = RadonGeometry::new(64, 60);
        assert_eq!(g.n_detectors, 182);
    }

    #[test]
    fn size_guard() {
        let g = RadonGeometry::new(600, 10);
        assert!(build_radon(&g).is_err());
    }

    #[test]
    fn zero_image_projects_to_zero() {
        let op = small_op(16, 8);
        let u = Image::zeros(16, 16);
        let v = radon_forward(&op, &u).unwrap();
        assert!(v.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn forward_is_linear() {
        let op = small_op(12, 7);
        let u = Image::new(12, 12, rand_values(144, 5)).unwrap();
        let w = Image::new(12, 12, rand_values(144, 9)).unwrap();
        let (a, b) = (0.3, -1.7);
        let combo = Image::new(
            12,
            12,
            u.values.iter().zip(&w.values).map(|(x, y)| a * x + b * y).collect(),
        )
        .unwrap();
        let fu = radon_forward(&op, &u).unwrap();
        let fw = radon_forward(&op, &w).unwrap();
        let fc = radon_forward(&op, &combo).unwrap();
        for i in 0..fc.len() {
            let expect = a * fu.values[i] + b * fw.values[i];
            assert!((fc.values[i] - expect).abs() <= 1e-10 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn adjoint_identity_machine_precision() {
        let op = small_op(16, 9);
        for trial in 0..20 {
            let u = Image::new(16, 16, rand_values(256, 100 + trial)).unwrap();
            let w = Sinogram::new(9, op.geometry.n_detectors, rand_values(op.geometry.n_rays(), 200 + trial)).unwrap();
            let fu = radon_forward(&op, &u).unwrap();
            let ftw = radon_adjoint(&op, &w).unwrap();
            let lhs = vecmath::dot(&fu.values, &w.values);
            let rhs = vecmath::dot(&u.values, &ftw.values);
            let scale = lhs.abs().max(rhs.abs()).max(1e-300);
            assert!((lhs - rhs).abs() / scale <= 1e-12, "trial {trial}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn row_entries_bounded_by_pixel_diagonal() {
        let op = small_op(16, 8);
        let diag = op.geometry.pixel_size() * std::f64::consts::SQRT_2;
        for &v in &op.matrix.vals {
            assert!(v > 0.0);
            assert!(v <= diag + 1e-9, "intersection {v} exceeds pixel diagonal {diag}");
        }
    }

    #[test]
    fn matrix_matches_brute_force_clipping() {
        // Independent oracle: clip each ray against each pixel box
        // directly and compare intersection lengths entry by entry.
        let n = 16;
        let op = small_op(n, 12);
        let g = &op.geometry;
        let half = 0.5 * g.domain_extent;
        let delta = g.pixel_size();
        for (t, &theta) in g.angles.iter().enumerate() {
            let (sin_t, cos_t) = theta.sin_cos();
            let (dx, dy) = (-sin_t, cos_t);
            for k in 0..g.n_detectors {
                let s = g.det_offset(k);
                let (px, py) = (s * cos_t, s * sin_t);
                let row = t * g.n_detectors + k;
                for i in 0..n {
                    for j in 0..n {
                        let x_lo = -half + j as f64 * delta;
                        let y_hi = half - i as f64 * delta;
                        let len = clip_length(px, py, dx, dy, x_lo, x_lo + delta, y_hi - delta, y_hi);
                        let entry = op.matrix.get(row, i * n + j);
                        assert!(
                            (entry - len).abs() < 1e-9,
                            "ray {row} pixel ({i},{j}): {entry} vs oracle {len}"
                        );
                    }
                }
            }
        }
    }

    fn clip_length(px: f64, py: f64, dx: f64, dy: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
        let mut t_lo = f64::NEG_INFINITY;
        let mut t_hi = f64::INFINITY;
        for (p, d, lo, hi) in [(px, dx, x0, x1), (py, dy, y0, y1)] {
            if d.abs() < 1e-12 {
                if p < lo || p > hi {
                    return 0.0;
                }
            } else {
                let t1 = (lo - p) / d;
                let t2 = (hi - p) / d;
                t_lo = t_lo.max(t1.min(t2));
                t_hi = t_hi.min(t1.max(t2));
            }
        }
        (t_hi - t_lo).max(0.0)
    }

    #[test]
    fn mass_conservation_per_angle() {
        // For each angle, sum_s F(u)[theta, s] * ds is a Riemann sum
        // of the projection integral, which equals the image integral
        // sum(u) * pixel_area. The sampled sum carries a discretization
        // error of order ds at pixel boundaries, so agreement is at the
        // percent level; a wrong length or spacing convention would be
        // off by a factor.
        let n = 32;
        let op = small_op(n, 10);
        let u = Image::new(n, n, rand_values(n * n, 77)).unwrap();
        let v = radon_forward(&op, &u).unwrap();
        let ds = op.geometry.det_spacing();
        let mass: f64 = u.values.iter().sum::<f64>() * op.geometry.pixel_size().powi(2);
        for t in 0..op.geometry.n_angles {
            let row_sum: f64 =
                v.values[t * op.geometry.n_detectors..(t + 1) * op.geometry.n_detectors].iter().sum::<f64>() * ds;
            assert!(
                (row_sum - mass).abs() <= 0.03 * mass,
                "angle {t}: projected mass {row_sum} vs {mass}"
            );
        }
    }

    #[test]
    fn backprojection_of_ones_positive_everywhere() {
        let op = small_op(16, 8);
        let ones = Sinogram::new(8, op.geometry.n_detectors, vec![1.0; op.geometry.n_rays()]).unwrap();
        let b = radon_adjoint(&op, &ones).unwrap();
        // Every pixel is crossed by at least one ray of the full fan.
        for (i, &v) in b.values.iter().enumerate() {
            assert!(v > 0.0, "pixel {i} never hit");
        }
    }

    #[test]
    fn norm_estimate_close_to_true_norm_small_case() {
        let op = small_op(8, 6);
        // Rayleigh quotient from many random vectors never exceeds the
        // estimated norm by more than a hair.
        for trial in 0..30 {
            let x = rand_values(64, 300 + trial);
            let ax = op.matrix.matvec(&x);
            let q = vecmath::norm(&ax) / vecmath::norm(&x);
            assert!(q <= op.norm_scale * (1.0 + 1e-6), "quotient {q} vs {}", op.norm_scale);
        }
        let scaled = op.unit_norm();
        let x = rand_values(64, 999);
        let y = scaled.forward(&x);
        assert!(vecmath::norm(&y) <= 1.0001 * vecmath::norm(&x));
    }

    #[test]
    fn pr_forward_squares_ray_sums() {
        let radon = small_op(12, 6);
        let op = PhaseRetrievalOperator::new(&radon);
        let u = Image::new(12, 12, rand_values(144, 11)).unwrap();
        let y = radon_forward(op.inner, &u).unwrap();
        let p = pr_forward(&op, &u).unwrap();
        for i in 0..p.len() {
            assert!((p.values[i] - y.values[i] * y.values[i]).abs() < 1e-12 * (1.0 + y.values[i].abs()).powi(2));
            assert!(p.values[i] >= 0.0);
        }
    }

    #[test]
    fn pr_sign_symmetry() {
        let radon = small_op(12, 6);
        let op = PhaseRetrievalOperator::new(&radon);
        let u = Image::new(12, 12, rand_values(144, 21)).unwrap();
        let neg = Image::new(12, 12, u.values.iter().map(|v| -v).collect()).unwrap();
        let a = pr_forward(&op, &u).unwrap();
        let b = pr_forward(&op, &neg).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn pr_derivative_zero_cases() {
        let radon = small_op(8, 5);
        let op = PhaseRetrievalOperator::new(&radon);
        let u = Image::new(8, 8, rand_values(64, 31)).unwrap();
        let zero_w = Sinogram::zeros(5, op.inner.geometry.n_detectors);
        let g = pr_derivative_adjoint_apply(&op, &u, &zero_w).unwrap();
        assert!(g.values.iter().all(|&v| v == 0.0));
        let w = Sinogram::new(5, op.inner.geometry.n_detectors, rand_values(op.inner.geometry.n_rays(), 41)).unwrap();
        let g0 = pr_derivative_adjoint_apply(&op, &Image::zeros(8, 8), &w).unwrap();
        assert!(g0.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pr_derivative_matches_finite_difference() {
        let radon = small_op(8, 5);
        let op = PhaseRetrievalOperator::new(&radon);
        let u = Image::new(8, 8, rand_values(64, 51)).unwrap();
        let h = Image::new(8, 8, rand_values(64, 61).iter().map(|v| v - 0.5).collect()).unwrap();
        let t = 1e-5;
        let up = Image::new(8, 8, u.values.iter().zip(&h.values).map(|(a, b)| a + t * b).collect()).unwrap();
        let um = Image::new(8, 8, u.values.iter().zip(&h.values).map(|(a, b)| a - t * b).collect()).unwrap();
        let fp = pr_forward(&op, &up).unwrap();
        let fm = pr_forward(&op, &um).unwrap();
        let deriv = pr_derivative_apply(&op, &u, &h).unwrap();
        for i in 0..deriv.len() {
            let fd = (fp.values[i] - fm.values[i]) / (2.0 * t);
            let scale = deriv.values[i].abs().max(1.0);
            assert!((fd - deriv.values[i]).abs() / scale < 1e-5, "entry {i}: {fd} vs {}", deriv.values[i]);
        }
    }
}
