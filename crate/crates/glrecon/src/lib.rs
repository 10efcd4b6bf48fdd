//! Iterative reconstruction for linear and nonlinear ill-posed inverse
//! problems with an adaptive graph-Laplacian regularizer.
//!
//! The central iteration combines a gradient step on the data-fidelity
//! term with a graph-Laplacian smoothing term whose pixel graph is
//! rebuilt from the current iterate:
//!
//! ```text
//! u_{k+1} = u_k - alpha_k F'(u_k)* (F(u_k) - v_mean) - beta_k L_{u_k} u_k
//! ```
//!
//! Measurements arrive as an ensemble of `m` repeated noisy copies;
//! their mean drives the iteration and their sample spread `z_m` feeds
//! a statistical discrepancy stopping rule. A heuristic alternative
//! selects the iterate minimizing `(k + varrho) * residual^2`. Neither
//! rule needs the true noise level.
//!
//! Modules:
//! - [`model`]: images, sinograms, the repeated-measurement noise model.
//! - [`graph`]: pixel-graph construction and the Laplacian.
//! - [`operators`]: parallel-beam Radon transform and phase retrieval.
//! - [`init`]: FBP, Tikhonov and TV initial reconstructors.
//! - [`solver`]: the iteration with adaptive step sizes and tracing.
//! - [`stopping`]: the two stopping policies.
//! - [`metrics`]: RRE, PSNR and SSIM.
//! - [`phantom`]: test images.
//! - [`config`] / [`experiment`]: declarative experiment sweeps.
//! - [`io`]: PGM images and CSV traces.

pub mod config;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod init;
pub mod io;
pub mod metrics;
pub mod model;
pub mod operators;
pub mod phantom;
pub mod solver;
pub mod sparse;
pub mod stopping;
pub mod vecmath;

pub use error::{Error, Result};
pub use model::{Image, MeasurementEnsemble, NoiseSpec, Sinogram};
