use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lqproj_cli::{
    power_type_probe, run_example1, run_example2, run_experiment, run_regularity, CliError, CliResult, ExampleReport,
    ExperimentConfig,
};
use lqproj_core::{estimate_linear_rate, Sampler};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "lqproj",
    version,
    about = "Bregman and metric projection experiments in l_q spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerArg {
    Sphere,
    Ball,
    /// Multiscale offsets from unit vectors of the intersection.
    Near,
}

#[derive(Subcommand)]
enum Command {
    /// Coordinate-plane pair: closed-form projections, distances and the ratio bound 2.
    Example1 {
        #[arg(long, default_value_t = 3.0)]
        q: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report to <OUT>_example1.json.
        #[arg(long)]
        out: Option<String>,
    },
    /// Near-parallel plane pair: closed forms and growth of the regularity ratio.
    Example2 {
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.01, 0.001])]
        lambda_grid: Vec<f64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Run the algorithm described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output prefix, overriding the config.
        #[arg(long)]
        out: Option<String>,
    },
    /// Run a config and print the fitted linear rate.
    Rate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Sample the regularity constant of the first two subspaces of a config.
    Regularity {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = SamplerArg::Sphere)]
        sampler: SamplerArg,
        #[arg(long)]
        out: Option<String>,
    },
    /// Fit the power-type exponent of D_p on pairs in a ball of radius R.
    Probe {
        #[arg(long, default_value_t = 3.0)]
        q: f64,
        /// Defaults to q.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 2.0)]
        radius: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<String>,
    },
}

fn load(path: &Path, seed: Option<u64>, out: Option<String>) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output = o;
    }
    Ok(cfg)
}

fn emit<T: Serialize>(out: Option<&str>, suffix: &str, value: &T) -> CliResult<()> {
    if let Some(prefix) = out {
        let path = PathBuf::from(format!("{prefix}{suffix}"));
        let text = serde_json::to_string_pretty(value).expect("serializable report") + "\n";
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
                path: dir.display().to_string(),
                source: e,
            })?;
        }
        std::fs::write(&path, text).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
    }
    Ok(())
}

fn report_status(report: &ExampleReport) -> bool {
    print!("{}", report.render());
    report.overall_pass
}

fn execute(command: Command) -> CliResult<bool> {
    match command {
        Command::Example1 { q, samples, seed, out } => {
            let report = run_example1(q, samples, seed)?;
            emit(out.as_deref(), "_example1.json", &report)?;
            Ok(report_status(&report))
        }
        Command::Example2 { lambda_grid, out } => {
            let report = run_example2(&lambda_grid)?;
            emit(out.as_deref(), "_example2.json", &report)?;
            Ok(report_status(&report))
        }
        Command::Run { config, seed, out } => {
            let cfg = load(&config, seed, out)?;
            let outcome = run_experiment(&cfg)?;
            println!(
                "{} after {} iterations; wrote {} and {}",
                outcome.summary.stop_reason.as_str(),
                outcome.summary.iterations,
                outcome.trace_path.display(),
                outcome.summary_path.display()
            );
            Ok(outcome.converged())
        }
        Command::Rate { config, seed, out } => {
            let cfg = load(&config, seed, out)?;
            let outcome = run_experiment(&cfg)?;
            match estimate_linear_rate(&outcome.trace) {
                Ok(r) => {
                    println!(
                        "q_hat {:.16e} C_hat {:.16e} r_squared {:.16e} window {}..{}",
                        r.q_hat, r.c_hat, r.r_squared, r.window.0, r.window.1
                    );
                    if let Some(k) = outcome.summary.kappa_hat {
                        println!("kappa_hat {k:.16e} bound 1 - 1/kappa_hat = {:.16e}", 1.0 - 1.0 / k);
                    }
                    Ok(outcome.converged())
                }
                Err(e) => {
                    eprintln!("no rate: {e}");
                    Ok(false)
                }
            }
        }
        Command::Regularity {
            config,
            samples,
            seed,
            sampler,
            out,
        } => {
            let cfg = load(&config, seed, out)?;
            let sampler = match sampler {
                SamplerArg::Sphere => Sampler::SphereUniform,
                SamplerArg::Ball => Sampler::BregmanBall,
                SamplerArg::Near => Sampler::NearIntersection,
            };
            let (report, path) = run_regularity(&cfg, &sampler, samples, cfg.seed)?;
            println!(
                "kappa_hat {:.16e} over {} samples; diverging (heuristic): {}; wrote {}",
                report.kappa_hat,
                report.samples,
                report.diverging,
                path.display()
            );
            Ok(true)
        }
        Command::Probe {
            q,
            p,
            radius,
            samples,
            seed,
            out,
        } => {
            let report = power_type_probe(q, p.unwrap_or(q), radius, samples, seed)?;
            println!(
                "{} slope {:.6} in [{:.2}, {:.2}]",
                if report.slope_pass { "PASS" } else { "FAIL" },
                report.slope,
                report.slope_low,
                report.slope_high
            );
            if let (Some(err), Some(ok)) = (report.hilbert_identity_err, report.hilbert_identity_pass) {
                println!(
                    "{} Hilbert identity max error {err:.3e}",
                    if ok { "PASS" } else { "FAIL" }
                );
            }
            emit(out.as_deref(), "_probe.json", &report)?;
            Ok(report.pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
