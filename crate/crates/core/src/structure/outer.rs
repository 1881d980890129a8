use std::collections::HashMap;
use std::sync::Mutex;

use super::{StructureCandidate, StructureSpec};
use crate::ensemble::Ensemble;
use crate::optimizer::{self, ConfigError, Method, Objective, OptimizationResult, OptimizerConfig, Space};
use crate::threshold::{CandidateEvaluator, EvalConfig};

/// Inner AR result for one structure.
#[derive(Clone, Debug, PartialEq)]
pub struct InnerOutcome {
    pub threshold: f64,
    pub ensemble: Option<Ensemble>,
}

/// Structure score: best threshold from an inner AR run, memoized by
/// canonical structure. Inner seeds derive from the outer seed and the
/// structure, so the cache only saves time and never changes a score.
pub struct OuterObjective {
    spec: StructureSpec,
    space: Space,
    inner: OptimizerConfig,
    eval: EvalConfig,
    seed: u64,
    cache: Mutex<HashMap<StructureCandidate, InnerOutcome>>,
}

impl OuterObjective {
    pub fn new(spec: StructureSpec, inner: OptimizerConfig, eval: EvalConfig, seed: u64) -> Self {
        let space = spec.space();
        Self { spec, space, inner, eval, seed, cache: Mutex::new(HashMap::new()) }
    }

    pub fn spec(&self) -> &StructureSpec {
        &self.spec
    }

    /// Score a structure that passes the degree-budget gate.
    pub fn outer_objective(&self, s: &StructureCandidate) -> InnerOutcome {
        assert!(self.spec.admits(s).is_ok(), "structure {s} violates the degree budget");
        if let Some(hit) = self.cache.lock().expect("cache poisoned").get(s) {
            return hit.clone();
        }
        let out = self.solve(s);
        self.cache.lock().expect("cache poisoned").entry(s.clone()).or_insert(out).clone()
    }

    fn solve(&self, s: &StructureCandidate) -> InnerOutcome {
        let Ok(param) = s.parameterize(self.spec.rate()) else {
            return InnerOutcome { threshold: 0.0, ensemble: None };
        };
        let evaluator = CandidateEvaluator::new(param, self.eval.clone());
        let cfg = OptimizerConfig { seed: s.seed(self.seed), ..self.inner.clone() };
        match optimizer::optimize_ensemble(Method::Ar, &evaluator, &cfg) {
            Ok((ensemble, res)) if ensemble.is_some() => InnerOutcome { threshold: res.best_fitness.max(0.0), ensemble },
            _ => InnerOutcome { threshold: 0.0, ensemble: None },
        }
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().expect("cache poisoned").len()
    }
}

impl Objective for OuterObjective {
    fn space(&self) -> &Space {
        &self.space
    }

    fn evaluate(&self, v: &[f64]) -> f64 {
        self.outer_objective(&self.spec.decode(v)).threshold
    }
}

#[derive(Clone, Debug)]
pub struct OuterResult {
    pub structure: StructureCandidate,
    pub ensemble: Option<Ensemble>,
    pub threshold: f64,
    pub search: OptimizationResult,
}

/// Outer search with any optimizer; inner coefficients always use AR.
pub fn outer_optimize(
    method: Method,
    spec: &StructureSpec,
    outer: &OptimizerConfig,
    inner: &OptimizerConfig,
    eval: &EvalConfig,
) -> Result<OuterResult, ConfigError> {
    let objective = OuterObjective::new(spec.clone(), inner.clone(), eval.clone(), outer.seed);
    let search = optimizer::optimize(method, &objective, outer)?;
    let structure = spec.decode(&search.best);
    let best = objective.outer_objective(&structure);
    Ok(OuterResult { structure, ensemble: best.ensemble, threshold: best.threshold, search })
}

/// Integer AR with `rm = 1` and `sr_init = 15` by default.
pub fn outer_ar(spec: &StructureSpec, outer: &OptimizerConfig, inner: &OptimizerConfig, eval: &EvalConfig) -> Result<OuterResult, ConfigError> {
    outer_optimize(Method::Ar, spec, outer, inner, eval)
}

/// Dif.E on integer coordinates; mutants round to the nearest legal degree.
pub fn outer_dife(spec: &StructureSpec, outer: &OptimizerConfig, inner: &OptimizerConfig, eval: &EvalConfig) -> Result<OuterResult, ConfigError> {
    outer_optimize(Method::Dife, spec, outer, inner, eval)
}

/// Uniform stratified structures each generation, keeping the incumbent.
pub fn outer_random(spec: &StructureSpec, outer: &OptimizerConfig, inner: &OptimizerConfig, eval: &EvalConfig) -> Result<OuterResult, ConfigError> {
    outer_optimize(Method::Random, spec, outer, inner, eval)
}

impl OptimizerConfig {
    /// Outer integer search defaults.
    pub fn outer() -> Self {
        Self { np: 20, rm: 1.0, sr_init: 15.0, ..Self::default() }
    }
}
