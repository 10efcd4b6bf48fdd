//! Command-line harness over the library: phantom rendering,
//! measurement simulation, single reconstructions, full experiment
//! sweeps, and image comparison.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 when a
//! reconstruction diverged.

use clap::{Args, Parser, Subcommand};
use glrecon::config::{load_config, ExperimentConfig, ProblemKind, Scale};
use glrecon::experiment::{
    initialize, prepare_problem, run_experiment, run_rules, simulate_ensemble, summarize,
};
use glrecon::io::{self, SUMMARY_HEADER};
use glrecon::metrics;
use glrecon::phantom::{phantom_binary_blobs, phantom_shepp_logan};
use glrecon::solver::StopReason;
use glrecon::stopping::{RuleKind, StoppingPolicy};
use glrecon::Error;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "glrecon", version, about = "Iterative reconstruction with adaptive graph smoothing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Experiment configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Problem-size preset: `paper` keeps configured sizes, `ci`
    /// shrinks them for smoke runs.
    #[arg(long, default_value = "paper")]
    scale: Scale,
}

#[derive(Subcommand)]
enum Command {
    /// Render the configured ground-truth phantom to a PGM image.
    Phantom {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Simulate the noisy measurement ensembles and store their means
    /// and spreads.
    Simulate {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run one reconstruction: the first configured ensemble size and
    /// initializer, under a single stopping rule.
    Reconstruct {
        #[command(flatten)]
        common: CommonOpts,
        /// Stopping rule (`statistical` or `heuristic`); defaults to
        /// the first configured rule.
        #[arg(long)]
        rule: Option<RuleKind>,
    },
    /// Run the full configured sweep and write traces,
    /// reconstructions, and the summary table.
    Experiment {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Compare two PGM images and print reconstruction metrics.
    Metrics {
        /// Ground-truth image.
        reference: PathBuf,
        /// Image under evaluation.
        candidate: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &Error) -> ExitCode {
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::Policy(_) | Error::Dimension(_) => {
            ExitCode::from(2)
        }
        Error::Diverged(_) => ExitCode::from(3),
        _ => ExitCode::FAILURE,
    }
}

fn load(common: &CommonOpts) -> Result<(ExperimentConfig, PathBuf), Error> {
    let mut config = load_config(&common.config)?;
    if let Some(seed) = common.seed {
        config.experiment.seed = seed;
    }
    config.apply_scale(common.scale);
    config.validate()?;
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.experiment.output_dir));
    Ok((config, out))
}

fn dispatch(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Phantom { common } => {
            let (config, out) = load(&common)?;
            let e = &config.experiment;
            let truth = match e.problem {
                ProblemKind::Ct => phantom_shepp_logan(e.image_size)?,
                ProblemKind::PhaseRetrieval => {
                    phantom_binary_blobs(e.image_size, e.blob_density, e.seed)?
                }
            };
            io::ensure_dir(&out)?;
            let path = out.join("phantom.pgm");
            io::write_image_pgm(&path, &truth)?;
            println!("wrote {} ({}x{} {})", path.display(), e.image_size, e.image_size, e.problem);
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { common } => {
            let (config, out) = load(&common)?;
            io::ensure_dir(&out)?;
            let prepared = prepare_problem(&config)?;
            io::write_sinogram_csv(&out.join("sinogram_clean.csv"), &prepared.clean)?;
            for &m in &config.experiment.m_values {
                let ens =
                    simulate_ensemble(&prepared, m, config.noise.epsilon, config.experiment.seed)?;
                io::write_sinogram_csv(&out.join(format!("sinogram_mean_m{m}.csv")), &ens.mean)?;
                io::write_text(&out.join(format!("spread_m{m}.txt")), &format!("{}\n", ens.z_m))?;
                println!("m = {m}: ensemble spread z_m = {}", ens.z_m);
            }
            println!("wrote measurement files to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Reconstruct { common, rule } => {
            let (config, out) = load(&common)?;
            io::ensure_dir(&out)?;
            let kind = rule.unwrap_or(config.stopping.rules[0]);
            let s = &config.stopping;
            let policy = match kind {
                RuleKind::Statistical => StoppingPolicy::statistical(s.tau_coeff, s.tau_exponent),
                RuleKind::Heuristic => StoppingPolicy::heuristic(s.varrho),
            };
            let m = config.experiment.m_values[0];
            let spec = &config.initializer_specs()[0];
            policy.validate(m)?;

            let start = Instant::now();
            let prepared = prepare_problem(&config)?;
            let ensemble =
                simulate_ensemble(&prepared, m, config.noise.epsilon, config.experiment.seed)?;
            let u0 = initialize(&prepared, spec, &ensemble, &config.stopping)?;
            let results =
                run_rules(&prepared, &ensemble, &u0, &config.solver, &[policy], true)?;
            let (rule_kind, trace) = &results[0];
            let stem = format!("m{m}_{}_{}", spec.kind, rule_kind);
            io::write_trace_csv(&out.join(format!("trace_{stem}.csv")), trace)?;
            io::write_image_pgm(
                &out.join(format!("recon_{stem}.pgm")),
                &trace.reconstruction.clamped_unit(),
            )?;
            let row = summarize(m, spec.kind, *rule_kind, trace, &prepared.truth);
            println!("{SUMMARY_HEADER}");
            println!("{}", row.to_csv_line());
            println!("runtime: {:.1}s", start.elapsed().as_secs_f64());
            if trace.stop_reason == StopReason::Diverged {
                eprintln!("warning: iteration diverged; trace ends at the last finite iterate");
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiment { common } => {
            let (config, out) = load(&common)?;
            let start = Instant::now();
            let report = run_experiment(&config, Some(&out))?;
            println!("{SUMMARY_HEADER}");
            for row in &report.rows {
                println!("{}", row.to_csv_line());
            }
            println!(
                "wrote {} runs to {} in {:.1}s",
                report.rows.len(),
                report.output_dir.display(),
                start.elapsed().as_secs_f64()
            );
            if report.any_diverged {
                eprintln!("warning: at least one run diverged");
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Metrics { reference, candidate } => {
            let truth = io::read_image_pgm(&reference)?;
            let estimate = io::read_image_pgm(&candidate)?;
            let report = metrics::report(&estimate, &truth)?;
            println!("rre: {}", report.rre);
            println!("psnr: {}", report.psnr);
            println!("psnr_rmse: {}", report.psnr_rmse);
            println!("ssim: {}", report.ssim);
            Ok(ExitCode::SUCCESS)
        }
    }
}
