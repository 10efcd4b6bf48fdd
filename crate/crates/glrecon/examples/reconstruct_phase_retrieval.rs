//! Phase retrieval: reconstruction from squared transform magnitudes.
//!
//! The forward map squares every entry of the ray transform, so the
//! data loses all sign information and the problem becomes nonlinear
//! with a global sign ambiguity: u and -u produce identical data. The
//! pipeline handles this with the derivative-adjoint of the squared
//! map inside the same iteration, and scoring takes the better of the
//! two signs. This runs a reduced-size instance (64 x 64, m = 5) in
//! about a minute; the shipped `table2_pr.toml` holds the full-size
//! benchmark. Output lands in `out/examples/phase_retrieval/`.

use glrecon::config::load_config;
use glrecon::experiment::{initialize, prepare_problem, run_rules, simulate_ensemble, summarize};
use glrecon::init::InitKind;
use glrecon::io::write_image_pgm;
use glrecon::metrics;
use glrecon::model::Image;
use std::path::Path;

fn main() {
    let mut config = load_config(Path::new("configs/table2_pr.toml")).unwrap();
    config.experiment.image_size = 64;
    config.experiment.n_angles = 30;
    config.solver.max_iters = 150;
    config.initializer.kinds = vec![InitKind::Tikhonov];

    let out = Path::new("out/examples/phase_retrieval");
    std::fs::create_dir_all(out).unwrap();

    let prepared = prepare_problem(&config).unwrap();
    write_image_pgm(&out.join("truth.pgm"), &prepared.truth).unwrap();

    let m = 5;
    let ensemble = simulate_ensemble(&prepared, m, config.noise.epsilon, config.experiment.seed).unwrap();
    let spec = &config.initializer_specs()[0];
    let u0 = initialize(&prepared, spec, &ensemble, &config.stopping).unwrap();
    println!("start: rre {:.4}", metrics::rre(&u0, &prepared.truth).unwrap());

    let results = run_rules(&prepared, &ensemble, &u0, &config.solver, &config.stopping_policies(), true).unwrap();
    for (rule, trace) in &results {
        let row = summarize(m, spec.kind, *rule, trace, &prepared.truth);
        // Score the better of the two signs: the data cannot tell
        // them apart.
        let neg = Image {
            width: trace.reconstruction.width,
            height: trace.reconstruction.height,
            values: trace.reconstruction.values.iter().map(|v| -v).collect(),
        };
        let psnr_neg = metrics::psnr_rmse(&neg.clamped_unit(), &prepared.truth).unwrap_or(f64::NAN);
        let psnr = row.psnr_rmse.unwrap_or(f64::NAN).max(psnr_neg);
        println!(
            "{rule}: k {} ({})  rre {:.4}  psnr {:.2} dB  ssim {:.4}",
            row.stop_iter,
            row.stop_reason,
            row.rre.unwrap_or(f64::NAN),
            psnr,
            row.ssim.unwrap_or(f64::NAN)
        );
        write_image_pgm(&out.join(format!("recon_{rule}.pgm")), &trace.reconstruction.clamped_unit()).unwrap();
    }
    println!("artifacts in {}", out.display());
}
