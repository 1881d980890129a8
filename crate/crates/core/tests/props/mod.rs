//! Randomized invariants shared by the `invariants` and `acceptance` test
//! targets: elitism, search-window bounds, embedding round trips,
//! validation gates and monotonicity of convergence in the channel
//! parameter.

#![allow(dead_code)]

use std::collections::BTreeMap;

use forge_core::awgn::{AwgnConfig, Evolver};
use forge_core::bec::{bec_converges, met_bec_converges, BecConfig};
use forge_core::ensemble::{DegreeDistribution, Embedding, Ensemble, MetEnsemble, Parameterization, TOL_SUM};
use forge_core::optimizer::{self, ar_generation, Method, Objective, OptimizerConfig, Population, Space};
use forge_core::rng;
use forge_core::structure::{StandardSpec, StructureCandidate, StructureSpec};
use forge_core::threshold::threshold;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRng, TestRunner};

pub const CASES: u32 = 1000;

/// A named property, run for the given number of cases.
pub type Suite = (&'static str, fn(u32) -> Result<(), String>);

pub const SUITES: &[Suite] = &[
    ("ar_generation_keeps_the_elite", ar_generation_keeps_the_elite),
    ("ar_window_stays_inside_range_and_box", ar_window_stays_inside_range_and_box),
    ("integer_window_draws_sorted_lattice_points", integer_window_draws_sorted_lattice_points),
    ("best_so_far_never_decreases", best_so_far_never_decreases),
    ("embedding_round_trips", embedding_round_trips),
    ("validation_rejects_perturbed_ensembles", validation_rejects_perturbed_ensembles),
    ("bec_convergence_is_monotone_in_erasure", bec_convergence_is_monotone_in_erasure),
    ("awgn_convergence_is_monotone_in_noise", awgn_convergence_is_monotone_in_noise),
    ("bisection_brackets_a_step", bisection_brackets_a_step),
    ("degree_budget_gate_matches_the_space", degree_budget_gate_matches_the_space),
    ("mirror_matches_standard_evolution", mirror_matches_standard_evolution),
];

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    let rng = TestRng::deterministic_rng(config.rng_algorithm);
    TestRunner::new_with_rng(config, rng).run(&strategy, test).map_err(|e| e.to_string())
}

/// Smooth synthetic objective with a single peak inside the unit box.
struct Bowl {
    space: Space,
    peak: Vec<f64>,
}

impl Bowl {
    fn new(peak: Vec<f64>) -> Self {
        Self { space: Space::unit(peak.len()), peak }
    }
}

impl Objective for Bowl {
    fn space(&self) -> &Space {
        &self.space
    }

    fn evaluate(&self, v: &[f64]) -> f64 {
        1.0 - v.iter().zip(&self.peak).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
    }
}

fn unit_vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, dim)
}

fn table_structure() -> Parameterization {
    Parameterization::standard(&[2, 3, 6, 20], &[7, 8], 0.5).unwrap()
}

/// Normalize positive weights into a degree distribution side.
fn normalized(terms: BTreeMap<u32, f64>) -> Vec<(u32, f64)> {
    let total: f64 = terms.values().sum();
    terms.into_iter().map(|(d, c)| (d, c / total)).collect()
}

/// A valid standard ensemble with random degrees and coefficients.
pub fn random_ensemble() -> impl Strategy<Value = DegreeDistribution> {
    let lambda = prop::collection::btree_map(2u32..16, 0.05f64..1.0, 1..5);
    let rho = prop::collection::btree_map(4u32..20, 0.05f64..1.0, 1..4);
    (lambda, rho).prop_filter_map("needs a positive rate", |(l, r)| {
        let dd = DegreeDistribution::new(normalized(l), normalized(r)).ok()?;
        (dd.rate().ok()? > 0.05).then_some(dd)
    })
}

pub fn ar_generation_keeps_the_elite(cases: u32) -> Result<(), String> {
    let strategy = (prop::collection::vec(unit_vector(3), 8), unit_vector(3), 1e-4f64..0.5, any::<u64>());
    run(cases, strategy, |(vectors, peak, sr, seed)| {
        let bowl = Bowl::new(peak);
        let fitness: Vec<f64> = vectors.iter().map(|v| bowl.evaluate(v)).collect();
        let pop = Population { generation: 0, vectors, fitness };
        let next = ar_generation(&pop, sr, seed, &bowl);
        prop_assert_eq!(&next.vectors[0], &pop.vectors[pop.best()]);
        prop_assert!(next.best_fitness() >= pop.best_fitness());
        prop_assert_eq!(next.len(), pop.len());
        Ok(())
    })
}

pub fn ar_window_stays_inside_range_and_box(cases: u32) -> Result<(), String> {
    run(cases, (unit_vector(4), 1e-4f64..1.0, any::<u64>()), |(centre, sr, seed)| {
        let space = Space::unit(4);
        let v = space.sample_window(&centre, sr, &mut rng::stream(seed, 1, 1));
        for (x, c) in v.iter().zip(&centre) {
            prop_assert!((x - c).abs() <= sr + 1e-12);
            prop_assert!((0.0..=1.0).contains(x));
        }
        Ok(())
    })
}

pub fn integer_window_draws_sorted_lattice_points(cases: u32) -> Result<(), String> {
    let strategy = (prop::collection::vec(2i64..=30, 4), 1.0f64..15.0, any::<u64>());
    run(cases, strategy, |(centre, sr, seed)| {
        let space = Space::integer(vec![2; 4], vec![30; 4]).with_exchangeable(vec![0..4]);
        let c = space.canonical(centre.iter().map(|&x| x as f64).collect());
        let v = space.sample_window(&c, sr, &mut rng::stream(seed, 2, 0));
        prop_assert!(space.contains(&v));
        prop_assert!(v.windows(2).all(|w| w[0] <= w[1]), "{:?}", v);
        let spread = c.iter().fold(0.0f64, |m, x| m.max(*x)) + sr;
        prop_assert!(v.iter().all(|x| *x <= spread.min(30.0)));
        Ok(())
    })
}

pub fn best_so_far_never_decreases(cases: u32) -> Result<(), String> {
    run(cases, (unit_vector(2), 0u64..1000), |(peak, seed)| {
        let bowl = Bowl::new(peak);
        let cfg = OptimizerConfig { np: 6, seed, max_generations: 25, ..OptimizerConfig::default() };
        for method in [Method::Ar, Method::Dife, Method::Difer, Method::Random] {
            let res = optimizer::optimize(method, &bowl, &cfg).unwrap();
            let best: Vec<f64> = res.trace.best_thresholds().collect();
            prop_assert!(best.windows(2).all(|w| w[1] >= w[0]), "{}: {:?}", method, best);
            prop_assert_eq!(res.metrics.nog as usize, res.trace.rows.len());
            prop_assert_eq!(best.last().copied(), Some(res.best_fitness));
        }
        Ok(())
    })
}

pub fn embedding_round_trips(cases: u32) -> Result<(), String> {
    let p = table_structure();
    run(cases, unit_vector(p.dim()), |v| {
        if let Embedding::Feasible(e) = p.embed(&v).unwrap() {
            let back = p.extract(&e).unwrap();
            for (a, b) in back.iter().zip(&v) {
                let b = if *b < 1e-8 { 0.0 } else { *b };
                prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
            }
            prop_assert!(e.validate(0.5, TOL_SUM).passed());
        }
        Ok(())
    })
}

pub fn validation_rejects_perturbed_ensembles(cases: u32) -> Result<(), String> {
    let p = table_structure();
    run(cases, (unit_vector(p.dim()), 1e-6f64..0.1), |(v, bump)| {
        let Embedding::Feasible(Ensemble::Standard(dd)) = p.embed(&v).unwrap() else { return Ok(()) };
        let mut lambda = dd.lambda().clone();
        *lambda.values_mut().next().unwrap() += bump;
        let bad = DegreeDistribution::new(lambda, dd.rho().clone()).unwrap();
        prop_assert!(!bad.validate(0.5, TOL_SUM).passed());
        Ok(())
    })
}

pub fn bec_convergence_is_monotone_in_erasure(cases: u32) -> Result<(), String> {
    run(cases, (random_ensemble(), 0.0f64..1.0, 0.0f64..1.0), |(dd, a, b)| {
        let cfg = BecConfig { max_iterations: 2000, conv_tol: 1e-8 };
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if bec_converges(&dd, hi, &cfg).converged {
            prop_assert!(bec_converges(&dd, lo, &cfg).converged, "{} fails while {} decodes", lo, hi);
        }
        Ok(())
    })
}

pub fn awgn_convergence_is_monotone_in_noise(cases: u32) -> Result<(), String> {
    let cfg = AwgnConfig { bound: 25.0, resolution: 7, max_iterations: 200, err_tol: 1e-5 };
    let evolver = Evolver::new(&Ensemble::Standard(DegreeDistribution::regular(3, 6).unwrap()), &cfg).unwrap();
    run(cases, (0.5f64..1.2, 0.5f64..1.2), |(a, b)| {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if evolver.converges(hi).converged {
            prop_assert!(evolver.converges(lo).converged, "{} fails while {} decodes", lo, hi);
        }
        Ok(())
    })
}

pub fn bisection_brackets_a_step(cases: u32) -> Result<(), String> {
    run(cases, (0.002f64..0.999, 1e-7f64..1e-3), |(t, tol)| {
        let x = threshold(|e| e < t, 0.0, 1.0, tol);
        prop_assert!((x - t).abs() <= 0.5 * tol + 1e-15, "{} vs {}", x, t);
        Ok(())
    })
}

pub fn degree_budget_gate_matches_the_space(cases: u32) -> Result<(), String> {
    let spec = StructureSpec::Standard(StandardSpec {
        rate: 0.5,
        lambda_max: 4,
        gamma_max: 2,
        dv_max: 30,
        dc_max: 20,
        dv_min: 2,
        dc_min: 2,
    });
    let wide = StructureCandidate::standard(&[2, 3, 4, 5, 6], &[8]);
    let tall = StructureCandidate::standard(&[2, 31], &[8]);
    run(cases, prop::collection::vec(2i64..=30, 6), |v| {
        let coords = spec.space().repair(&v.iter().map(|&x| x as f64).collect::<Vec<_>>());
        prop_assert!(spec.space().contains(&coords));
        let s = spec.decode(&coords);
        prop_assert!(spec.admits(&s).is_ok(), "{}", s);
        prop_assert!(spec.admits(&wide).is_err());
        prop_assert!(spec.admits(&tall).is_err());
        Ok(())
    })
}

pub fn mirror_matches_standard_evolution(cases: u32) -> Result<(), String> {
    run(cases, (random_ensemble(), 0.05f64..0.7), |(dd, eps)| {
        let cfg = BecConfig { max_iterations: 500, conv_tol: 1e-8 };
        let met = MetEnsemble::mirror_of(&dd).unwrap();
        let s = bec_converges(&dd, eps, &cfg);
        let m = met_bec_converges(&met, eps, &cfg).unwrap();
        prop_assert_eq!(s.converged, m.converged, "{:?} vs {:?}", s, m);
        Ok(())
    })
}
