//! Pixel graph construction and the graph Laplacian.
//!
//! Each pixel is a node; pixels within Chebyshev distance `R` of each
//! other are joined by an edge weighted by intensity similarity,
//! `W_ab = exp(-(u(a) - u(b))^2 / lambda)`. The Laplacian is
//! `L = D - W` with `D` the diagonal degree matrix. The solver rebuilds
//! the graph from the current iterate every iteration, so the
//! regularizer adapts to the evolving edge structure of the image.
//!
//! Chebyshev distance makes the neighborhood the full `(2R+1)^2` window
//! minus the center, so the maximum degree is `D_N = (2R+1)^2 - 1`.

use crate::error::{Error, Result};
use crate::model::Image;
use crate::sparse::Csr;

/// Neighborhood radius and Gaussian kernel width.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GraphParams {
    /// Chebyshev neighborhood radius in pixels, at least 1.
    pub radius: usize,
    /// Width of the intensity kernel `exp(-s^2 / lambda)`, positive.
    pub lambda: f64,
}

impl GraphParams {
    pub fn validate(&self) -> Result<()> {
        if self.radius < 1 {
            return Err(Error::config("graph radius must be >= 1"));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::config(format!("graph lambda must be > 0, got {}", self.lambda)));
        }
        Ok(())
    }

    /// Maximum node degree `(2R+1)^2 - 1`.
    pub fn max_degree(&self) -> usize {
        let w = 2 * self.radius + 1;
        w * w - 1
    }
}

/// Sparse symmetric nonnegative edge weights with zero diagonal, plus
/// per-node degree sums. Immutable once built.
#[derive(Debug, Clone)]
pub struct WeightGraph {
    /// Node count, equal to the pixel count of the source image.
    pub n: usize,
    /// Symmetric weight matrix with sorted columns per row.
    pub weights: Csr,
    /// Row sums of the weight matrix.
    pub degrees: Vec<f64>,
}

/// Build the weight graph of an image. Kernel values are evaluated on
/// raw (unclamped) intensities. Symmetry is exact: the squared
/// difference is identical for both edge directions.
pub fn build_graph(u: &Image, params: &GraphParams) -> WeightGraph {
    let (w, h) = (u.width, u.height);
    let n = w * h;
    let r = params.radius as isize;
    let inv_lambda = 1.0 / params.lambda;

    let nnz_upper = n * params.max_degree();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols: Vec<u32> = Vec::with_capacity(nnz_upper);
    let mut vals: Vec<f64> = Vec::with_capacity(nnz_upper);
    let mut degrees = vec![0.0; n];
    row_ptr.push(0);

    for i in 0..h as isize {
        for j in 0..w as isize {
            let a = (i as usize) * w + j as usize;
            let ua = u.values[a];
            let mut deg = 0.0;
            // Window iteration in row-major order yields strictly
            // increasing column indices, keeping the CSR row sorted.
            for di in -r..=r {
                let ii = i + di;
                if ii < 0 || ii >= h as isize {
                    continue;
                }
                for dj in -r..=r {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let jj = j + dj;
                    if jj < 0 || jj >= w as isize {
                        continue;
                    }
                    let b = (ii as usize) * w + jj as usize;
                    let d = ua - u.values[b];
                    let wval = (-d * d * inv_lambda).exp();
                    cols.push(b as u32);
                    vals.push(wval);
                    deg += wval;
                }
            }
            degrees[a] = deg;
            row_ptr.push(cols.len());
        }
    }

    WeightGraph { n, weights: Csr { nrows: n, ncols: n, row_ptr, cols, vals }, degrees }
}

/// Apply the graph Laplacian:
/// `(L x)(a) = sum_b W_ab (x(a) - x(b)) = deg(a) x(a) - (W x)(a)`.
pub fn laplacian_apply(graph: &WeightGraph, x: &Image) -> Result<Image> {
    if x.len() != graph.n {
        return Err(Error::dimension(format!(
            "laplacian input has {} values, graph has {} nodes",
            x.len(),
            graph.n
        )));
    }
    let mut out = vec![0.0; graph.n];
    let w = &graph.weights;
    for a in 0..graph.n {
        let mut acc = graph.degrees[a] * x.values[a];
        for k in w.row_ptr[a]..w.row_ptr[a + 1] {
            acc -= w.vals[k] * x.values[w.cols[k] as usize];
        }
        out[a] = acc;
    }
    Image::new(x.width, x.height, out)
}

/// Lipschitz constant of `s -> exp(-s^2 / lambda)`, attained at
/// `s = sqrt(lambda / 2)`: `L_h = sqrt(2 / (lambda * e))`.
pub fn kernel_lipschitz(lambda: f64) -> f64 {
    (2.0 / (lambda * std::f64::consts::E)).sqrt()
}

/// Bound on `||L_w x - L_u x||` per unit `||x|| * ||w - u||` for graphs
/// built from two images with the same parameters:
/// `H_0 = 2 L_h (sqrt(D_N) + 1)`, with the indicator part of the weight
/// at most 1.
pub fn laplacian_perturbation_constant(params: &GraphParams) -> f64 {
    let lh = kernel_lipschitz(params.lambda);
    2.0 * lh * ((params.max_degree() as f64).sqrt() + 1.0)
}
