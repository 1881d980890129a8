//! Config-driven batch runs: fixed-ensemble thresholds, coefficient
//! optimization, joint structure search and cost surfaces, with CSV output.

mod config;
mod import;
mod output;

pub use config::{DecoderSettings, EnsembleSource, ExperimentConfig, FixedStructure, Kind};
pub use import::{import_ensemble, import_file, ImportedEnsemble, WARN_TOL};
pub use output::{summarize, write_outputs, SummaryRow, TrialRow};

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::ensemble::{Embedding, Ensemble, Parameterization};
use crate::optimizer::{self, OptimizationTrace, TraceRow};
use crate::structure::{self, export_cost_surface, CostSurface, OuterObjective, StructureCandidate};
use crate::threshold::{ensemble_threshold, CandidateEvaluator, EvalConfig, SearchMetrics};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("infeasible problem: {0}")]
    Infeasible(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl ExperimentError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        ExperimentError::Io { path: path.to_path_buf(), source }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::Infeasible(_) => 3,
            ExperimentError::Io { .. } => 4,
        }
    }
}

/// Outcome of one trial.
#[derive(Clone, Debug)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub threshold: f64,
    pub metrics: SearchMetrics,
    pub ensemble: Option<Ensemble>,
    pub rate: f64,
    pub structure: Option<StructureCandidate>,
    pub trace: OptimizationTrace,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub trials: Vec<TrialResult>,
    pub surface: Option<CostSurface>,
    pub warnings: Vec<String>,
}

/// Execute `cfg` on a pool of `jobs` workers. Trial `t` uses seed
/// `cfg.seed + t`; results do not depend on `jobs`.
pub fn run(cfg: &ExperimentConfig, jobs: usize) -> Result<RunOutput, ExperimentError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ExperimentError::Config(format!("cannot start {jobs} workers: {e}")))?;
    pool.install(|| match cfg.kind {
        Kind::Threshold => run_threshold(cfg),
        Kind::Optimize => run_optimize(cfg),
        Kind::Joint => run_joint(cfg),
        Kind::Surface => run_surface(cfg),
    })
}

/// [`run`] followed by writing every result file into `out`.
pub fn run_to_dir(cfg: &ExperimentConfig, jobs: usize, out: &Path) -> Result<RunOutput, ExperimentError> {
    let result = run(cfg, jobs)?;
    write_outputs(&result, out)?;
    Ok(result)
}

fn eval_config(cfg: &ExperimentConfig) -> EvalConfig {
    cfg.decoder.apply(EvalConfig::for_channel(cfg.channel))
}

fn single_trial(threshold: f64, ensemble: Ensemble, rate: f64, elapsed: f64) -> TrialResult {
    let metrics = SearchMetrics { nog: 1, ntt: 1, nfe: u64::from(threshold > 0.0), cpu_seconds: elapsed };
    let trace = OptimizationTrace {
        rows: vec![TraceRow {
            generation: 1,
            best_threshold: threshold,
            sr: None,
            ntt_cum: 1,
            nfe_cum: metrics.nfe,
            elapsed_s: elapsed,
        }],
    };
    TrialResult { trial: 0, seed: 0, threshold, metrics, ensemble: Some(ensemble), rate, structure: None, trace }
}

fn run_threshold(cfg: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    let start = Instant::now();
    let imported = cfg.load_ensemble()?.ok_or_else(|| ExperimentError::Config("threshold needs an ensemble".into()))?;
    let mut warnings = imported.warnings.clone();
    let mut ensemble = imported.ensemble.clone();
    if cfg.project && !warnings.is_empty() {
        let param = parameterization_of(&ensemble, imported.rate)?;
        match param.project(&ensemble).map_err(|e| ExperimentError::Infeasible(e.to_string()))? {
            Embedding::Feasible(p) => {
                warnings.push("rounded coefficients re-solved onto the constraint surface".into());
                ensemble = p;
            }
            Embedding::Infeasible => {
                return Err(ExperimentError::Infeasible("projection leaves the feasible region".into()));
            }
        }
    }
    let threshold = ensemble_threshold(&ensemble, &eval_config(cfg)).map_err(|e| ExperimentError::Infeasible(e.to_string()))?;
    let mut trial = single_trial(threshold, ensemble, imported.rate, start.elapsed().as_secs_f64());
    trial.seed = cfg.seed;
    Ok(RunOutput { trials: vec![trial], surface: None, warnings })
}

fn parameterization_of(e: &Ensemble, rate: f64) -> Result<Parameterization, ExperimentError> {
    StructureCandidate::of(e).parameterize(rate).map_err(|err| ExperimentError::Infeasible(err.to_string()))
}

fn fixed_parameterization(cfg: &ExperimentConfig) -> Result<(Parameterization, Vec<String>), ExperimentError> {
    if let Some(s) = &cfg.structure {
        let (cand, rate) = s.candidate()?;
        let p = cand.parameterize(rate).map_err(|e| ExperimentError::Infeasible(e.to_string()))?;
        return Ok((p, Vec::new()));
    }
    let imported = cfg
        .load_ensemble()?
        .ok_or_else(|| ExperimentError::Config("optimize needs a structure or an ensemble".into()))?;
    Ok((parameterization_of(&imported.ensemble, imported.rate)?, imported.warnings))
}

fn run_optimize(cfg: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    let (param, warnings) = fixed_parameterization(cfg)?;
    let evaluator = CandidateEvaluator::new(param, eval_config(cfg));
    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let seed = cfg.seed.wrapping_add(t as u64);
            let oc = optimizer::OptimizerConfig { seed, ..cfg.optimizer_config()? };
            let (ensemble, res) =
                optimizer::optimize_ensemble(cfg.method, &evaluator, &oc).map_err(|e| ExperimentError::Config(e.to_string()))?;
            Ok(TrialResult {
                trial: t,
                seed,
                threshold: res.best_fitness.max(0.0),
                metrics: res.metrics,
                ensemble,
                rate: evaluator.param.rate(),
                structure: None,
                trace: res.trace,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    Ok(RunOutput { trials, surface: None, warnings })
}

fn run_joint(cfg: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    let spec = cfg.spec.as_ref().ok_or_else(|| ExperimentError::Config("joint needs a spec".into()))?;
    let inner = cfg.optimizer_config()?;
    let eval = eval_config(cfg);
    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let seed = cfg.seed.wrapping_add(t as u64);
            let outer = optimizer::OptimizerConfig { seed, ..cfg.outer_config()? };
            let r = structure::outer_optimize(cfg.outer_method, spec, &outer, &inner, &eval)
                .map_err(|e| ExperimentError::Config(e.to_string()))?;
            Ok(TrialResult {
                trial: t,
                seed,
                threshold: r.threshold,
                metrics: r.search.metrics,
                ensemble: r.ensemble,
                rate: spec.rate(),
                structure: Some(r.structure),
                trace: r.search.trace,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    Ok(RunOutput { trials, surface: None, warnings: Vec::new() })
}

fn run_surface(cfg: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    let sc = cfg.surface.as_ref().ok_or_else(|| ExperimentError::Config("surface needs a surface block".into()))?;
    let surface = if let Some(spec) = &cfg.spec {
        let objective = OuterObjective::new(spec.clone(), cfg.optimizer_config()?, eval_config(cfg), cfg.seed);
        export_cost_surface(&objective, sc)
    } else {
        let (param, _) = fixed_parameterization(cfg)?;
        export_cost_surface(&CandidateEvaluator::new(param, eval_config(cfg)), sc)
    }
    .map_err(|e| ExperimentError::Config(e.to_string()))?;
    Ok(RunOutput { trials: Vec::new(), surface: Some(surface), warnings: Vec::new() })
}

impl StructureCandidate {
    /// The structure an ensemble lives on.
    pub fn of(e: &Ensemble) -> Self {
        match e {
            Ensemble::Standard(dd) => StructureCandidate::standard(&dd.lambda_degrees(), &dd.rho_degrees()),
            Ensemble::Met(m) => StructureCandidate::Met(crate::ensemble::MetStructure::of(m)),
        }
    }
}
