//! Config-driven runs of the iteration drivers.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use lqproj_core::{
    alternate_bregman, alternate_residual_cyclic, alternate_residual_metric, annihilator, estimate_kappa,
    estimate_linear_rate, Error, IterationTrace, RateEstimate, RegularityReport, Sampler, SolverOptions, StopReason,
};
use serde::Serialize;

use crate::config::{Algorithm, ExperimentConfig, Prepared};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSummary {
    pub q_hat: f64,
    #[serde(rename = "C_hat")]
    pub c_hat: f64,
    pub r_squared: f64,
}

impl From<RateEstimate> for RateSummary {
    fn from(r: RateEstimate) -> Self {
        Self {
            q_hat: r.q_hat,
            c_hat: r.c_hat,
            r_squared: r.r_squared,
        }
    }
}

/// Contents of `<prefix>_summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub limit: Vec<f64>,
    /// Absent when the trace is too short for a fit.
    pub rate: Option<RateSummary>,
    /// Sampled regularity constant of the iterated pair: `(M, N)` for Bregman
    /// runs, `(M^⊥, N^⊥)` in the dual space for residual runs.
    pub kappa_hat: Option<f64>,
    pub iterations: usize,
    pub stop_reason: StopReason,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: IterationTrace,
    pub summary: RunSummary,
    pub trace_path: PathBuf,
    pub summary_path: PathBuf,
}

impl RunOutcome {
    pub fn converged(&self) -> bool {
        self.summary.stop_reason == StopReason::TolReached
    }
}

pub(crate) fn output_path(prefix: &str, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}{suffix}"))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path.display().to_string(), e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut out = create(path)?;
    let io = |e: std::io::Error| CliError::io(path.display().to_string(), e);
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| io(e.into()))?;
    writeln!(out).map_err(io)?;
    out.flush().map_err(io)
}

fn trace_for(config: &ExperimentConfig, prep: &Prepared, opts: &SolverOptions) -> CliResult<IterationTrace> {
    let s = &prep.subspaces;
    let trace = match config.algorithm {
        Algorithm::AlternateBregman => alternate_bregman(&prep.x0, &s[0], &s[1], &prep.space, &prep.stop, opts)?,
        Algorithm::AlternateResidual => {
            alternate_residual_metric(&prep.x0, &s[0], &s[1], &prep.space, &prep.stop, config.engine, opts)?
        }
        Algorithm::CyclicResidual => alternate_residual_cyclic(&prep.x0, s, &prep.space, &prep.stop, opts)?,
    };
    Ok(trace)
}

fn kappa_for(config: &ExperimentConfig, prep: &Prepared) -> CliResult<Option<f64>> {
    if config.kappa_samples == 0 {
        return Ok(None);
    }
    let s = &prep.subspaces;
    let report = match config.algorithm {
        Algorithm::AlternateBregman => estimate_kappa(
            &s[0],
            &s[1],
            &prep.space,
            &Sampler::SphereUniform,
            config.kappa_samples,
            config.seed,
        )?,
        Algorithm::AlternateResidual => estimate_kappa(
            &annihilator(&s[0]),
            &annihilator(&s[1]),
            &prep.space.dual(),
            &Sampler::SphereUniform,
            config.kappa_samples,
            config.seed,
        )?,
        Algorithm::CyclicResidual => return Ok(None),
    };
    Ok(Some(report.kappa_hat))
}

/// Runs the configured algorithm and writes `<output>_trace.csv` and
/// `<output>_summary.json`.
pub fn run_experiment(config: &ExperimentConfig) -> CliResult<RunOutcome> {
    let prep = config.prepare()?;
    let opts = SolverOptions::default();
    let trace = trace_for(config, &prep, &opts)?;
    let rate = match estimate_linear_rate(&trace) {
        Ok(r) => Some(RateSummary::from(r)),
        Err(Error::InsufficientDecay(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let summary = RunSummary {
        limit: trace.limit.as_slice().to_vec(),
        rate,
        kappa_hat: kappa_for(config, &prep)?,
        iterations: trace.iterations(),
        stop_reason: trace.stop_reason,
    };

    let trace_path = output_path(&config.output, "_trace.csv");
    let mut out = create(&trace_path)?;
    let io = |e: std::io::Error| CliError::io(trace_path.display().to_string(), e);
    trace.write_csv(&mut out).map_err(io)?;
    out.flush().map_err(io)?;
    let summary_path = output_path(&config.output, "_summary.json");
    write_json(&summary_path, &summary)?;

    Ok(RunOutcome {
        trace,
        summary,
        trace_path,
        summary_path,
    })
}

/// Estimates the regularity constant of the first two iterated subspaces
/// and writes `<output>_regularity.json`.
pub fn run_regularity(
    config: &ExperimentConfig,
    sampler: &Sampler,
    samples: usize,
    seed: u64,
) -> CliResult<(RegularityReport, PathBuf)> {
    let prep = config.prepare()?;
    let s = &prep.subspaces;
    let report = estimate_kappa(&s[0], &s[1], &prep.space, sampler, samples, seed)?;
    let path = output_path(&config.output, "_regularity.json");
    write_json(&path, &report)?;
    Ok((report, path))
}
