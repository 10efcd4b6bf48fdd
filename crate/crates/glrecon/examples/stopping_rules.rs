//! Both noise-level-free stopping rules on one shared iterate sweep.
//!
//! The statistical rule stops at the first residual crossing of a
//! threshold built from the ensemble spread; the heuristic rule runs
//! the whole budget and returns the iterate minimizing
//! Omega(k) = (k + varrho) * residual^2, trading iteration count
//! against data fit with no noise information at all. Both are
//! evaluated on the same sweep, so this prints one residual path and
//! marks where each rule lands.

use glrecon::experiment::{INIT_RESIDUAL_MARGIN, SMOOTHING_THRESHOLD_UNITS};
use glrecon::graph::GraphParams;
use glrecon::init::{self, default_theta_grid, InitKind};
use glrecon::model::{generate_measurements, NoiseSpec};
use glrecon::operators::{build_radon, radon_forward, RadonGeometry};
use glrecon::phantom::phantom_shepp_logan;
use glrecon::solver::{gradient_norm_target, run_dual, SolverParams};
use glrecon::stopping::{statistical_threshold, StoppingPolicy};

fn main() {
    let n = 64;
    let m = 10;
    let truth = phantom_shepp_logan(n).unwrap();
    let op = build_radon(&RadonGeometry::new(n, 30)).unwrap();
    let clean = radon_forward(&op, &truth).unwrap();
    let ens = generate_measurements(&clean, m, &NoiseSpec { epsilon: 10.0, seed: 7 }).unwrap();

    let stat = StoppingPolicy::statistical(2.0, 0.0);
    let heur = StoppingPolicy::heuristic(100.0);
    let threshold = statistical_threshold(&stat, m, ens.z_m).unwrap();

    let (u0, _) = init::tikhonov(
        &op.unit_norm(),
        &ens.mean.scaled(1.0 / op.norm_scale),
        &default_theta_grid(InitKind::Tikhonov),
        300,
        Some(INIT_RESIDUAL_MARGIN * threshold / op.norm_scale),
    )
    .unwrap();

    let params = SolverParams {
        zeta0: 0.2,
        zeta1: 0.5,
        nu0: 0.05,
        nu1: 0.05,
        nu2: 10.0,
        max_iters: 250,
        graph: GraphParams { radius: 6, lambda: 0.05 },
        graph_rebuild_every: 1,
        residual_scale: 1.0 / (SMOOTHING_THRESHOLD_UNITS * threshold),
    };
    let scaled = op.scaled_to_norm(gradient_norm_target(params.zeta1));
    let (stat_trace, heur_trace) =
        run_dual(&u0, &ens, &scaled, &params, &stat, &heur, Some(&truth)).unwrap();

    println!("threshold {threshold:.3} (z_m {:.3}, m {m})", ens.z_m);
    println!();
    println!("{:>5} {:>10} {:>12} {:>8}", "k", "residual", "Omega", "rre");
    let every = 20;
    for rec in heur_trace.records.iter() {
        let near_stat = rec.k.abs_diff(stat_trace.stop_index) <= 2;
        let near_heur = rec.k.abs_diff(heur_trace.stop_index) <= 2;
        if rec.k % every != 0 && !near_stat && !near_heur {
            continue;
        }
        let mut marks = String::new();
        if rec.k == stat_trace.stop_index {
            marks.push_str("  <- statistical stop");
        }
        if rec.k == heur_trace.stop_index {
            marks.push_str("  <- heuristic argmin");
        }
        println!(
            "{:>5} {:>10.3} {:>12.1} {:>8.4}{marks}",
            rec.k,
            rec.residual_norm,
            rec.omega.unwrap_or(f64::NAN),
            rec.rre.unwrap_or(f64::NAN)
        );
    }
    println!();
    println!(
        "statistical: stopped at k = {} ({}), residual {:.3}",
        stat_trace.stop_index,
        stat_trace.stop_reason,
        stat_trace.records[stat_trace.stop_index].residual_norm
    );
    println!(
        "heuristic:   picked  k = {} after sweeping {} iterations",
        heur_trace.stop_index,
        heur_trace.records.len() - 1
    );
}
