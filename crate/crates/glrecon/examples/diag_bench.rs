//! Dry run of the benchmark bands through the experiment pipeline:
//! CT ensembles m in {5, 10} with the Tikhonov start under both rules,
//! one m = 50 run for the ensemble-growth trend, and the
//! phase-retrieval m = 10 run, all timed.

use glrecon::config::load_config;
use glrecon::experiment::{initialize, prepare_problem, run_rules, simulate_ensemble, summarize};
use glrecon::init::{InitKind, InitializerSpec};
use glrecon::metrics;
use glrecon::model::Image;
use glrecon::stopping::StoppingPolicy;
use std::path::Path;
use std::time::Instant;

fn negated_clamped(u: &Image) -> Image {
    let vals: Vec<f64> = u.values.iter().map(|&v| (-v).clamp(0.0, 1.0)).collect();
    Image { width: u.width, height: u.height, values: vals }
}

fn main() {
    let mut config = load_config(Path::new("configs/table1_ct.toml")).unwrap();
    config.initializer.kinds = vec![InitKind::Tikhonov];
    let spec = InitializerSpec {
        kind: InitKind::Tikhonov,
        theta_grid: None,
        inner_iters: config.initializer.inner_iters,
    };
    let policies: Vec<StoppingPolicy> = config.stopping_policies();

    let t0 = Instant::now();
    let prepared = prepare_problem(&config).unwrap();
    println!("[{:6.1}s] CT problem prepared", t0.elapsed().as_secs_f64());

    for (m, max_iters) in [(5usize, 300usize), (10, 300), (50, 500)] {
        let mut cfg = config.clone();
        cfg.solver.max_iters = max_iters;
        let ti = Instant::now();
        let ensemble = simulate_ensemble(&prepared, m, cfg.noise.epsilon, cfg.experiment.seed).unwrap();
        let u0 = initialize(&prepared, &spec, &ensemble, &cfg.stopping).unwrap();
        let t_init = ti.elapsed().as_secs_f64();
        let results = run_rules(&prepared, &ensemble, &u0, &cfg.solver, &policies, true).unwrap();
        let t_all = ti.elapsed().as_secs_f64();
        println!(
            "m {m}: z {:.4}  init {t_init:.1}s  total {t_all:.1}s  start rre {:.4}",
            ensemble.z_m,
            metrics::rre(&u0, &prepared.truth).unwrap()
        );
        for (rule, trace) in &results {
            let row = summarize(m, spec.kind, *rule, trace, &prepared.truth);
            println!(
                "  {rule}: k {} ({})  res {:.3}  rre {:.4}  psnr {:.2}  ssim {:.4}",
                row.stop_iter,
                row.stop_reason,
                trace.records[trace.stop_index].residual_norm,
                row.rre.unwrap(),
                row.psnr.unwrap(),
                row.ssim.unwrap()
            );
        }
    }

    let mut pr = load_config(Path::new("configs/table2_pr.toml")).unwrap();
    pr.initializer.kinds = vec![InitKind::Tikhonov];
    let pr_policies: Vec<StoppingPolicy> = pr.stopping_policies();
    let tp = Instant::now();
    let prepared_pr = prepare_problem(&pr).unwrap();
    println!("[{:6.1}s] PR problem prepared", tp.elapsed().as_secs_f64());
    let ensemble = simulate_ensemble(&prepared_pr, 10, pr.noise.epsilon, pr.experiment.seed).unwrap();
    let u0 = initialize(&prepared_pr, &spec, &ensemble, &pr.stopping).unwrap();
    println!(
        "[{:6.1}s] PR init done, start rre {:.4}",
        tp.elapsed().as_secs_f64(),
        metrics::rre(&u0, &prepared_pr.truth).unwrap()
    );
    let results = run_rules(&prepared_pr, &ensemble, &u0, &pr.solver, &pr_policies, true).unwrap();
    println!("[{:6.1}s] PR runs done (z {:.4})", tp.elapsed().as_secs_f64(), ensemble.z_m);
    for (rule, trace) in &results {
        let row = summarize(10, spec.kind, *rule, trace, &prepared_pr.truth);
        let neg = negated_clamped(&trace.reconstruction);
        let psnr_neg = metrics::psnr(&neg, &prepared_pr.truth).unwrap();
        let rre_neg = metrics::rre(&neg, &prepared_pr.truth).unwrap();
        println!(
            "  {rule}: k {} ({})  res {:.3}  rre {:.4}/{:.4}  psnr {:.2}/{:.2}  ssim {:.4}",
            row.stop_iter,
            row.stop_reason,
            trace.records[trace.stop_index].residual_norm,
            row.rre.unwrap(),
            rre_neg,
            row.psnr.unwrap(),
            psnr_neg,
            row.ssim.unwrap()
        );
    }
}
