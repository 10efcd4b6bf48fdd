//! Core value types and the repeated-measurement noise model.
//!
//! A reconstruction problem here always involves an unknown [`Image`] `u`,
//! a forward operator mapping images to [`Sinogram`]s, and an ensemble of
//! `m` independently perturbed copies of the exact measurement. Averaging
//! the copies shrinks the effective noise by `1/sqrt(m)`, and the sample
//! spread `z_m` estimates the per-measurement noise scale without the
//! true noise level ever being observed. Both quantities are cached in
//! [`MeasurementEnsemble`] and drive the statistical stopping rule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::vecmath;

// ===================================================================
// Value types
// ===================================================================

/// A 2-D grayscale image stored flat in row-major (lexicographic) pixel
/// order. Phantoms and final reconstructions live in `[0, 1]`;
/// intermediate iterates are unconstrained.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::dimension(format!(
                "image {}x{} needs {} values, got {}",
                width,
                height,
                width * height,
                values.len()
            )));
        }
        Ok(Image { width, height, values })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Image { width, height, values: vec![0.0; width * height] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at (row, col).
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Copy with every value clamped to `[0, 1]`, the convention for
    /// reported reconstructions and image files.
    pub fn clamped_unit(&self) -> Image {
        Image {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        vecmath::norm(&self.values)
    }
}

/// A measurement-space vector: one row per projection angle, one column
/// per detector element (CT projections or squared-magnitude
/// intensities), stored flat in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    pub n_rows: usize,
    pub n_cols: usize,
    pub values: Vec<f64>,
}

impl Sinogram {
    pub fn new(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::dimension(format!(
                "sinogram {}x{} needs {} values, got {}",
                n_rows,
                n_cols,
                n_rows * n_cols,
                values.len()
            )));
        }
        Ok(Sinogram { n_rows, n_cols, values })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Sinogram { n_rows, n_cols, values: vec![0.0; n_rows * n_cols] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_shape(&self, other: &Sinogram) -> bool {
        self.n_rows == other.n_rows && self.n_cols == other.n_cols
    }

    pub fn norm(&self) -> f64 {
        vecmath::norm(&self.values)
    }

    /// Copy with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Sinogram {
        Sinogram {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// `m` i.i.d. noisy sinograms with their cached empirical mean and
/// spread `z_m`.
#[derive(Debug, Clone)]
pub struct MeasurementEnsemble {
    pub samples: Vec<Sinogram>,
    pub mean: Sinogram,
    pub z_m: f64,
}

impl MeasurementEnsemble {
    /// Build from raw samples, computing mean and spread.
    pub fn from_samples(samples: Vec<Sinogram>) -> Result<Self> {
        let mean = empirical_mean(&samples)?;
        let z_m = empirical_spread(&samples, &mean)?;
        Ok(MeasurementEnsemble { samples, mean, z_m })
    }

    pub fn m(&self) -> usize {
        self.samples.len()
    }

    /// Ensemble with every sample (hence mean and spread) multiplied by
    /// `factor`. Used to move measurements between the physical scale
    /// and the unit-operator-norm working scale; both sides of the
    /// statistical stopping inequality scale identically, so the rule
    /// is unaffected.
    pub fn scaled(&self, factor: f64) -> MeasurementEnsemble {
        MeasurementEnsemble {
            samples: self.samples.iter().map(|s| s.scaled(factor)).collect(),
            mean: self.mean.scaled(factor),
            z_m: self.z_m * factor.abs(),
        }
    }
}

/// Parameters of the additive noise model: each sample is
/// `v_i = v + eps_i * xi / ||xi||` with `eps_i ~ N(0, epsilon^2)` and
/// `xi` a fresh standard-normal direction, so `||v_i - v| = |eps_i|`
/// exactly.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseSpec {
    pub epsilon: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) {
            return Err(Error::config(format!("noise epsilon must be >= 0, got {}", self.epsilon)));
        }
        Ok(())
    }
}

// ===================================================================
// Operations
// ===================================================================

/// Component-wise arithmetic mean of the samples.
pub fn empirical_mean(samples: &[Sinogram]) -> Result<Sinogram> {
    let first = samples.first().ok_or_else(|| Error::dimension("empirical mean of empty sample list"))?;
    let mut acc = vec![0.0; first.len()];
    for s in samples {
        if !s.same_shape(first) {
            return Err(Error::dimension(format!(
                "sample shape {}x{} differs from {}x{}",
                s.n_rows, s.n_cols, first.n_rows, first.n_cols
            )));
        }
        for (a, v) in acc.iter_mut().zip(&s.values) {
            *a += v;
        }
    }
    let inv_m = 1.0 / samples.len() as f64;
    for a in acc.iter_mut() {
        *a *= inv_m;
    }
    Sinogram::new(first.n_rows, first.n_cols, acc)
}

/// Sample spread `z_m = sqrt( (1/(m-1)) sum ||v_i - mean||^2 )`, the
/// unbiased estimate (in the squared sense) of the per-measurement
/// noise scale. Defined as 0 for a single sample, where the formula
/// would divide by zero; the statistical stopping rule therefore
/// refuses to run with m = 1.
pub fn empirical_spread(samples: &[Sinogram], mean: &Sinogram) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::dimension("empirical spread of empty sample list"));
    }
    for s in samples {
        if !s.same_shape(mean) {
            return Err(Error::dimension(format!(
                "sample shape {}x{} differs from mean {}x{}",
                s.n_rows, s.n_cols, mean.n_rows, mean.n_cols
            )));
        }
    }
    let m = samples.len();
    if m == 1 {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for s in samples {
        let mut d = 0.0;
        for (a, b) in s.values.iter().zip(&mean.values) {
            let t = a - b;
            d += t * t;
        }
        acc += d;
    }
    Ok((acc / (m - 1) as f64).sqrt())
}

/// Deterministic RNG for a given base seed and stream index. Every
/// randomized quantity in the crate draws from its own stream, so
/// ensembles are reproducible and independent of generation order.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generate the measurement ensemble: `m` samples
/// `v_i = v + eps_i * xi_i / ||xi_i||`, each drawn from its own RNG
/// stream indexed by `i`, with mean and spread cached.
pub fn generate_measurements(v: &Sinogram, m: usize, noise: &NoiseSpec) -> Result<MeasurementEnsemble> {
    if m < 1 {
        return Err(Error::config("ensemble size m must be >= 1"));
    }
    noise.validate()?;
    let mut samples = Vec::with_capacity(m);
    for i in 0..m {
        let mut rng = stream_rng(noise.seed, i as u64);
        let eps_i: f64 = noise.epsilon * rng.sample::<f64, _>(StandardNormal);
        // A fresh standard-normal direction, normalized to unit length so
        // that ||v_i - v|| = |eps_i| exactly. Zero-norm draws have
        // probability zero but are retried for totality.
        let mut xi = vec![0.0; v.len()];
        loop {
            for x in xi.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
            let n = vecmath::norm(&xi);
            if n > 0.0 {
                vecmath::scale_inplace(&mut xi, 1.0 / n);
                break;
            }
        }
        let mut values = v.values.clone();
        vecmath::axpy(eps_i, &xi, &mut values);
        samples.push(Sinogram::new(v.n_rows, v.n_cols, values)?);
    }
    MeasurementEnsemble::from_samples(samples)
}
