//! Compare SSIM window conventions on representative trajectory
//! states, and sweep the initializer margin and smoothing calibration
//! for quality at the statistical crossing and the heuristic argmin.

use glrecon::metrics;
use glrecon::model::{generate_measurements, Image, NoiseSpec};
use glrecon::operators::{build_radon, radon_forward, RadonGeometry};
use glrecon::phantom::phantom_shepp_logan;
use glrecon::solver::{run_dual, SolverParams};
use glrecon::stopping::StoppingPolicy;
use glrecon::{graph::GraphParams, init};

/// Mean SSIM with a uniform square window, the convention of common
/// image-processing toolkits (7x7 uniform instead of 11x11 Gaussian).
fn ssim_uniform(a: &Image, b: &Image, win: usize, data_range: f64) -> f64 {
    let n = a.height;
    let c1 = (0.01 * data_range).powi(2);
    let c2 = (0.03 * data_range).powi(2);
    let half = win / 2;
    let mut total = 0.0;
    let mut count = 0usize;
    for i in half..n - half {
        for j in half..n - half {
            let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for di in 0..win {
                for dj in 0..win {
                    let x = a.at(i + di - half, j + dj - half);
                    let y = b.at(i + di - half, j + dj - half);
                    sx += x;
                    sy += y;
                    sxx += x * x;
                    syy += y * y;
                    sxy += x * y;
                }
            }
            let m = (win * win) as f64;
            let mx = sx / m;
            let my = sy / m;
            let vx = (sxx / m - mx * mx).max(0.0) * m / (m - 1.0);
            let vy = (syy / m - my * my).max(0.0) * m / (m - 1.0);
            let cxy = (sxy / m - mx * my) * m / (m - 1.0);
            let s = ((2.0 * mx * my + c1) * (2.0 * cxy + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            total += s;
            count += 1;
        }
    }
    total / count as f64
}

fn report(tag: &str, u: &Image, truth: &Image) {
    let uc = u.clamped_unit();
    println!(
        "{tag}: rre {:.4} ssim11g {:.4} | clamped: ssim11g {:.4} ssim7u(dr1) {:.4} ssim7u(dr2) {:.4}",
        metrics::rre(u, truth).unwrap(),
        metrics::ssim(u, truth).unwrap(),
        metrics::ssim(&uc, truth).unwrap(),
        ssim_uniform(&uc, truth, 7, 1.0),
        ssim_uniform(&uc, truth, 7, 2.0),
    );
}

fn main() {
    let n = 128;
    let m = 10usize;
    let truth = phantom_shepp_logan(n).unwrap();
    let geometry = RadonGeometry::new(n, 60);
    let op = build_radon(&geometry).unwrap();
    let clean = radon_forward(&op, &truth).unwrap();
    let l = op.norm_scale;
    let ensemble = generate_measurements(&clean, m, &NoiseSpec { epsilon: 10.0, seed: 7 }).unwrap();
    let z = ensemble.z_m;
    let threshold = 2.0 / (m as f64).sqrt() * z;
    let unit = op.unit_norm();
    let work = ensemble.mean.scaled(1.0 / l);
    let grid: Vec<f64> = (0..64)
        .map(|i| 8e-5 * (4e-3f64 / 8e-5).powf(i as f64 / 63.0))
        .collect();
    let grad_op = op.scaled_to_norm(2.0);

    for margin in [1.5, 2.0, 2.5] {
        let floor_work = margin * threshold / l;
        let (u0, theta) = init::tikhonov(&unit, &work, &grid, 300, Some(floor_work)).unwrap();
        let r0 = {
            let f = radon_forward(&op, &u0).unwrap();
            let mut s = 0.0f64;
            for (a, b) in f.values.iter().zip(ensemble.mean.values.iter()) {
                s += (a - b) * (a - b);
            }
            s.sqrt()
        };
        println!("== margin {margin}  theta {theta:.3e}  res0 {r0:.3}");
        report("  start", &u0, &truth);
        for c in [2.0, 2.5, 3.0] {
            let params = SolverParams {
                zeta0: 0.2,
                zeta1: 0.5,
                nu0: 0.05,
                nu1: 0.05,
                nu2: 10.0,
                max_iters: 200,
                graph: GraphParams { radius: 6, lambda: 0.05 },
                graph_rebuild_every: 1,
                residual_scale: 1.0 / (c * z),
            };
            let stat = StoppingPolicy::statistical(2.0, 0.0);
            let heur = StoppingPolicy::heuristic(100.0);
            let (stat_trace, heur_trace) =
                run_dual(&u0, &ensemble, &grad_op, &params, &stat, &heur, Some(&truth)).unwrap();
            let sk = stat_trace.stop_index;
            let hk = heur_trace.stop_index;
            println!(
                "  c {c}: stat k {sk} ({:?})  heur k {hk}  res(stat) {:.3}",
                stat_trace.stop_reason,
                stat_trace.records[sk].residual_norm
            );
            report(&format!("    stat@{sk}"), &stat_trace.reconstruction, &truth);
            report(&format!("    heur@{hk}"), &heur_trace.reconstruction, &truth);
        }
    }
}
