//! Population-based maximizers over a box-bounded search space: the
//! Adaptive Range (AR) local search, differential evolution (Dif.E), its
//! discrete-recombination variant (Dif.E.R) and plain random search.
//!
//! Candidate `i` of generation `g` draws from its own RNG stream, so a run
//! is bit-identical for any number of worker threads.

mod init;
mod space;
mod trace;

pub use init::{feasible_init, queens_move_init};
pub use space::Space;
pub use trace::{OptimizationTrace, TraceRow};

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensemble::{Ensemble, Parameterization};
use crate::rng;
use crate::threshold::{CandidateEvaluator, SearchMetrics};

/// Floor applied to every coordinate gap when the search range is recomputed.
pub const SR_FLOOR: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("population size {np} is too small, need at least {min}")]
    Population { np: usize, min: usize },
    #[error("invalid optimizer setting {name} = {value}")]
    Setting { name: &'static str, value: f64 },
}

/// Something to maximize over a [`Space`].
pub trait Objective: Sync {
    fn space(&self) -> &Space;
    fn evaluate(&self, v: &[f64]) -> f64;
    /// Cheap pre-check used when seeding the first population.
    fn admissible(&self, _v: &[f64]) -> bool {
        true
    }

    /// A known admissible point, if any, used when sampling alone cannot
    /// fill the first population.
    fn anchor(&self) -> Option<Vec<f64>> {
        None
    }
}

impl Objective for (CandidateEvaluator, Space) {
    fn space(&self) -> &Space {
        &self.1
    }

    fn evaluate(&self, v: &[f64]) -> f64 {
        self.0.threshold(v)
    }

    fn admissible(&self, v: &[f64]) -> bool {
        self.0.param.embed(v).map(|e| e.is_feasible()).unwrap_or(false)
    }

    fn anchor(&self) -> Option<Vec<f64>> {
        self.0.param.interior_point().filter(|v| self.admissible(v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ar,
    Dife,
    Difer,
    Random,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Ar => "ar",
            Method::Dife => "dife",
            Method::Difer => "difer",
            Method::Random => "random",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub np: usize,
    pub rm: f64,
    pub delta: f64,
    pub sr_init: f64,
    pub seed: u64,
    pub stall_limit: usize,
    pub max_generations: usize,
    /// Stop once this many candidates have been scored.
    pub max_evaluations: Option<u64>,
    /// Differential weight.
    pub f: f64,
    /// Binomial crossover rate.
    pub cr: f64,
    /// Chance that a Dif.E.R trial coordinate comes from the mutant.
    pub mutant_prob: f64,
    /// Rejection-sampling rounds allowed when seeding with admissible vectors.
    pub init_batches: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            np: 50,
            rm: 0.5,
            delta: 1e-5,
            sr_init: 0.1,
            seed: 0,
            stall_limit: 3,
            max_generations: 500,
            max_evaluations: None,
            f: 0.5,
            cr: 0.9,
            mutant_prob: 0.5,
            init_batches: 2000,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self, method: Method) -> Result<(), ConfigError> {
        let min = if matches!(method, Method::Dife | Method::Difer) { 4 } else { 2 };
        if self.np < min {
            return Err(ConfigError::Population { np: self.np, min });
        }
        let checks = [
            ("rm", self.rm, self.rm > 0.0),
            ("delta", self.delta, self.delta > 0.0),
            ("sr_init", self.sr_init, self.sr_init > 0.0),
            ("stall_limit", self.stall_limit as f64, self.stall_limit >= 1),
            ("max_generations", self.max_generations as f64, self.max_generations >= 1),
            ("f", self.f, self.f.is_finite() && self.f >= 0.0),
            ("cr", self.cr, (0.0..=1.0).contains(&self.cr)),
            ("mutant_prob", self.mutant_prob, (0.0..=1.0).contains(&self.mutant_prob)),
        ];
        match checks.iter().find(|c| !c.2) {
            Some(&(name, value, _)) => Err(ConfigError::Setting { name, value }),
            None => Ok(()),
        }
    }
}

/// One generation: the vectors and their scores.
#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    pub generation: usize,
    pub vectors: Vec<Vec<f64>>,
    pub fitness: Vec<f64>,
}

impl Population {
    /// Index of the fittest vector; the lowest index wins ties.
    pub fn best(&self) -> usize {
        let mut b = 0;
        for (i, &f) in self.fitness.iter().enumerate() {
            if f > self.fitness[b] {
                b = i;
            }
        }
        b
    }

    /// Index of the fittest vector other than [`Population::best`].
    pub fn next_best(&self) -> Option<usize> {
        let b = self.best();
        let mut nb: Option<usize> = None;
        for (i, &f) in self.fitness.iter().enumerate() {
            if i != b && nb.map_or(true, |n| f > self.fitness[n]) {
                nb = Some(i);
            }
        }
        nb
    }

    pub fn best_fitness(&self) -> f64 {
        self.fitness[self.best()]
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationResult {
    pub best: Vec<f64>,
    pub best_fitness: f64,
    pub trace: OptimizationTrace,
    pub metrics: SearchMetrics,
}

/// `SR = RM * max_j max(|best_j - next_j|, 1e-4)`.
pub fn ar_recalculate_sr(best: &[f64], next_best: &[f64], rm: f64) -> f64 {
    assert_eq!(best.len(), next_best.len(), "vectors differ in length");
    rm * best.iter().zip(next_best).map(|(a, b)| (a - b).abs().max(SR_FLOOR)).fold(SR_FLOOR, f64::max)
}

/// Next AR population: slot 0 keeps the best vector, every other slot draws
/// each coordinate uniformly from the window of half-width `sr` around it.
pub fn ar_generation<O: Objective>(pop: &Population, sr: f64, seed: u64, objective: &O) -> Population {
    let best = pop.best();
    let centre = &pop.vectors[best];
    let g = pop.generation + 1;
    let space = objective.space();
    let mut vectors = Vec::with_capacity(pop.len());
    vectors.push(centre.clone());
    for i in 1..pop.len() {
        let mut rng = rng::stream(seed, g as u64, i as u64);
        vectors.push(space.sample_window(centre, sr, &mut rng));
    }
    let mut fitness = vec![pop.fitness[best]];
    fitness.extend(score(objective, &vectors[1..]));
    Population { generation: g, vectors, fitness }
}

fn score<O: Objective>(objective: &O, vectors: &[Vec<f64>]) -> Vec<f64> {
    vectors.par_iter().map(|v| objective.evaluate(v)).collect()
}

struct Run<'a, O: Objective> {
    objective: &'a O,
    cfg: &'a OptimizerConfig,
    start: Instant,
    metrics: SearchMetrics,
    best: Vec<f64>,
    best_fitness: f64,
    trace: OptimizationTrace,
    stall: usize,
}

impl<'a, O: Objective> Run<'a, O> {
    fn new(objective: &'a O, cfg: &'a OptimizerConfig) -> Self {
        Self {
            objective,
            cfg,
            start: Instant::now(),
            metrics: SearchMetrics::default(),
            best: Vec::new(),
            best_fitness: f64::NEG_INFINITY,
            trace: OptimizationTrace::default(),
            stall: 0,
        }
    }

    /// Account one generation's scores in index order.
    fn absorb(&mut self, vectors: &[Vec<f64>], fitness: &[f64], sr: Option<f64>) {
        let before = self.best_fitness;
        let mut running = before.max(0.0);
        for (v, &f) in vectors.iter().zip(fitness) {
            self.metrics.ntt += 1;
            if f > running {
                running = f;
                self.metrics.nfe += 1;
            }
            if f > self.best_fitness {
                self.best_fitness = f;
                self.best = v.clone();
            }
        }
        if self.best_fitness > before {
            self.stall = 0;
        } else {
            self.stall += 1;
        }
        self.metrics.nog += 1;
        self.metrics.set_elapsed(self.start.elapsed());
        self.trace.rows.push(TraceRow {
            generation: self.metrics.nog as usize,
            best_threshold: self.best_fitness,
            sr,
            ntt_cum: self.metrics.ntt,
            nfe_cum: self.metrics.nfe,
            elapsed_s: self.metrics.cpu_seconds,
        });
    }

    fn done(&self) -> bool {
        self.stall >= self.cfg.stall_limit
            || self.metrics.nog as usize >= self.cfg.max_generations
            || self.cfg.max_evaluations.map_or(false, |m| self.metrics.ntt >= m)
    }

    fn finish(self) -> OptimizationResult {
        OptimizationResult {
            best: self.best,
            best_fitness: self.best_fitness,
            trace: self.trace,
            metrics: self.metrics,
        }
    }

    /// A space with no free coordinates has exactly one point.
    fn trivial(mut self) -> OptimizationResult {
        let v = vec![Vec::new()];
        let f = vec![self.objective.evaluate(&[])];
        self.absorb(&v, &f, None);
        self.finish()
    }

    fn first_population(&mut self, sr: Option<f64>) -> Population {
        let vectors = feasible_init(self.cfg.np, self.objective, self.cfg.seed, self.cfg.init_batches);
        let fitness = score(self.objective, &vectors);
        self.absorb(&vectors, &fitness, sr);
        Population { generation: 0, vectors, fitness }
    }
}

/// Adaptive Range method.
pub fn ar_optimize<O: Objective>(objective: &O, cfg: &OptimizerConfig) -> Result<OptimizationResult, ConfigError> {
    cfg.validate(Method::Ar)?;
    let mut run = Run::new(objective, cfg);
    if objective.space().dim() == 0 {
        return Ok(run.trivial());
    }
    let mut sr = cfg.sr_init;
    let mut pop = run.first_population(Some(sr));
    while !run.done() {
        let prev = pop.best_fitness();
        pop = ar_generation(&pop, sr, cfg.seed, objective);
        if pop.best_fitness() - prev < cfg.delta {
            let b = pop.best();
            let nb = pop.next_best().unwrap_or(b);
            sr = ar_recalculate_sr(&pop.vectors[b], &pop.vectors[nb], cfg.rm);
            if objective.space().is_integer() {
                sr = sr.max(1.0);
            }
        }
        run.absorb(&pop.vectors[1..], &pop.fitness[1..], Some(sr));
        fix_elite_count(&mut run);
    }
    Ok(run.finish())
}

/// The carried-over elite still counts as one of the generation's NP trials.
fn fix_elite_count<O: Objective>(run: &mut Run<'_, O>) {
    run.metrics.ntt += 1;
    if let Some(row) = run.trace.rows.last_mut() {
        row.ntt_cum = run.metrics.ntt;
    }
}

/// Classic rand/1/bin differential evolution.
pub fn dife_optimize<O: Objective>(objective: &O, cfg: &OptimizerConfig) -> Result<OptimizationResult, ConfigError> {
    cfg.validate(Method::Dife)?;
    de_loop(objective, cfg, Crossover::Binomial)
}

/// Differential evolution with discrete recombination against a second parent.
pub fn difer_optimize<O: Objective>(objective: &O, cfg: &OptimizerConfig) -> Result<OptimizationResult, ConfigError> {
    cfg.validate(Method::Difer)?;
    de_loop(objective, cfg, Crossover::Discrete)
}

#[derive(Clone, Copy)]
enum Crossover {
    Binomial,
    Discrete,
}

/// Three distinct indices, all different from `target`.
fn donors<R: Rng>(np: usize, target: usize, rng: &mut R) -> [usize; 3] {
    let mut picked = [usize::MAX; 3];
    for k in 0..3 {
        loop {
            let c = rng.gen_range(0..np);
            if c != target && !picked[..k].contains(&c) {
                picked[k] = c;
                break;
            }
        }
    }
    picked
}

/// `a + F (b - c)`, coordinatewise.
pub fn de_mutant(a: &[f64], b: &[f64], c: &[f64], f: f64) -> Vec<f64> {
    a.iter().zip(b).zip(c).map(|((a, b), c)| a + f * (b - c)).collect()
}

/// Binomial crossover; coordinate `forced` always comes from the mutant.
pub fn binomial_crossover<R: Rng>(target: &[f64], mutant: &[f64], cr: f64, forced: usize, rng: &mut R) -> Vec<f64> {
    (0..target.len())
        .map(|j| if j == forced || rng.gen::<f64>() < cr { mutant[j] } else { target[j] })
        .collect()
}

/// Each coordinate from `mutant` with probability `p`, else from `other`.
pub fn discrete_recombination<R: Rng>(mutant: &[f64], other: &[f64], p: f64, rng: &mut R) -> Vec<f64> {
    mutant.iter().zip(other).map(|(&m, &o)| if rng.gen::<f64>() < p { m } else { o }).collect()
}

fn de_trial<O: Objective>(pop: &Population, i: usize, cfg: &OptimizerConfig, kind: Crossover, objective: &O) -> Vec<f64> {
    let mut rng = rng::stream(cfg.seed, (pop.generation + 1) as u64, i as u64);
    let np = pop.len();
    let [a, b, c] = donors(np, i, &mut rng);
    let mutant = de_mutant(&pop.vectors[a], &pop.vectors[b], &pop.vectors[c], cfg.f);
    let trial = match kind {
        Crossover::Binomial => {
            let forced = rng.gen_range(0..mutant.len());
            binomial_crossover(&pop.vectors[i], &mutant, cfg.cr, forced, &mut rng)
        }
        Crossover::Discrete => {
            let other = loop {
                let o = rng.gen_range(0..np);
                if o != i {
                    break o;
                }
            };
            discrete_recombination(&mutant, &pop.vectors[other], cfg.mutant_prob, &mut rng)
        }
    };
    objective.space().repair(&trial)
}

fn de_loop<O: Objective>(objective: &O, cfg: &OptimizerConfig, kind: Crossover) -> Result<OptimizationResult, ConfigError> {
    let mut run = Run::new(objective, cfg);
    if objective.space().dim() == 0 {
        return Ok(run.trivial());
    }
    let mut pop = run.first_population(None);
    while !run.done() {
        let trials: Vec<Vec<f64>> = (0..pop.len()).map(|i| de_trial(&pop, i, cfg, kind, objective)).collect();
        let scores = score(objective, &trials);
        run.absorb(&trials, &scores, None);
        for (i, (t, s)) in trials.into_iter().zip(scores).enumerate() {
            if s >= pop.fitness[i] {
                pop.vectors[i] = t;
                pop.fitness[i] = s;
            }
        }
        pop.generation += 1;
    }
    Ok(run.finish())
}

/// Fresh stratified population every generation, keeping the incumbent.
pub fn random_search<O: Objective>(objective: &O, cfg: &OptimizerConfig) -> Result<OptimizationResult, ConfigError> {
    cfg.validate(Method::Random)?;
    let mut run = Run::new(objective, cfg);
    if objective.space().dim() == 0 {
        return Ok(run.trivial());
    }
    let mut g = 0u64;
    while g == 0 || !run.done() {
        let seed = rng::derive(cfg.seed, g);
        let vectors = feasible_init(cfg.np, objective, seed, cfg.init_batches);
        let fitness = score(objective, &vectors);
        run.absorb(&vectors, &fitness, None);
        g += 1;
    }
    Ok(run.finish())
}

pub fn optimize<O: Objective>(method: Method, objective: &O, cfg: &OptimizerConfig) -> Result<OptimizationResult, ConfigError> {
    match method {
        Method::Ar => ar_optimize(objective, cfg),
        Method::Dife => dife_optimize(objective, cfg),
        Method::Difer => difer_optimize(objective, cfg),
        Method::Random => random_search(objective, cfg),
    }
}

/// Optimize the free coefficients of a fixed structure and return the best
/// ensemble found, or `None` if nothing feasible was ever scored.
pub fn optimize_ensemble(
    method: Method,
    evaluator: &CandidateEvaluator,
    cfg: &OptimizerConfig,
) -> Result<(Option<Ensemble>, OptimizationResult), ConfigError> {
    let objective = (evaluator.clone(), Space::unit(evaluator.param.dim()));
    let res = optimize(method, &objective, cfg)?;
    let ens = best_ensemble(&evaluator.param, &res.best);
    Ok((ens, res))
}

pub fn best_ensemble(param: &Parameterization, v: &[f64]) -> Option<Ensemble> {
    param.embed(v).ok()?.feasible()
}
