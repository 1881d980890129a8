//! Exact density evolution on the binary erasure channel.
//!
//! The standard recursion tracks the erasure probability of a
//! variable-to-check message, `eps <- eps* lambda(1 - rho(1 - eps))`; the MET
//! recursion tracks one such probability per edge class.

use crate::ensemble::{DegreeDistribution, EnsembleError, MetEnsemble};
use crate::poly::powu;

/// Decoder limits for erasure-channel density evolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BecConfig {
    /// Maximum number of decoding iterations `l`.
    pub max_iterations: usize,
    /// Messages count as recovered once every erasure probability drops below this.
    pub conv_tol: f64,
}

impl Default for BecConfig {
    fn default() -> Self {
        Self { max_iterations: 20_000, conv_tol: 1e-8 }
    }
}

/// Absolute per-iteration change under which a non-converged run is declared stuck.
pub const STAGNATION_EPS: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BecOutcome {
    pub converged: bool,
    pub final_eps: f64,
    pub iterations: usize,
}

/// One round of the standard recursion.
#[inline]
pub fn bec_step(dd: &DegreeDistribution, eps_star: f64, eps: f64) -> f64 {
    (eps_star * dd.eval_lambda(1.0 - dd.eval_rho(1.0 - eps))).clamp(0.0, 1.0)
}

/// Iterate from `eps(0) = eps*` until recovery, stagnation or the iteration cap.
pub fn bec_converges(dd: &DegreeDistribution, eps_star: f64, cfg: &BecConfig) -> BecOutcome {
    let mut eps = eps_star;
    for it in 1..=cfg.max_iterations.max(1) {
        let next = bec_step(dd, eps_star, eps);
        if next < cfg.conv_tol {
            return BecOutcome { converged: true, final_eps: next, iterations: it };
        }
        if (eps - next).abs() < STAGNATION_EPS {
            return BecOutcome { converged: false, final_eps: next, iterations: it };
        }
        eps = next;
    }
    BecOutcome { converged: false, final_eps: eps, iterations: cfg.max_iterations.max(1) }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetBecOutcome {
    pub converged: bool,
    pub final_eps: Vec<f64>,
    pub iterations: usize,
}

/// Edge-perspective weights of a MET ensemble, precomputed once per run.
#[derive(Clone, Debug)]
pub struct MetBecKernel {
    classes: usize,
    /// Per output class: `(weight, punctured, degree vector)` of variable types.
    var_terms: Vec<Vec<(f64, bool, Vec<u32>)>>,
    /// Per output class: `(weight, degree vector)` of check types.
    chk_terms: Vec<Vec<(f64, Vec<u32>)>>,
    /// Classes whose messages are tested for convergence.
    informative: Vec<usize>,
}

impl MetBecKernel {
    pub fn new(met: &MetEnsemble) -> Result<Self, EnsembleError> {
        let w = met.edge_weights()?;
        Ok(Self {
            classes: met.edge_classes(),
            var_terms: w.var_terms,
            chk_terms: w.chk_terms,
            informative: w.informative,
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Classes that carry more than raw channel information; degree-1
    /// variable classes always repeat the channel erasure rate and are
    /// excluded from the stopping test.
    pub fn informative_classes(&self) -> &[usize] {
        &self.informative
    }

    /// Check-to-variable erasure probability per class.
    pub fn check_erasures(&self, eps: &[f64]) -> Vec<f64> {
        let y: Vec<f64> = eps.iter().map(|e| 1.0 - e).collect();
        (0..self.classes)
            .map(|j| {
                let rho: f64 = self.chk_terms[j]
                    .iter()
                    .map(|(w, d)| w * monomial_except(&y, d, j))
                    .sum();
                (1.0 - rho).clamp(0.0, 1.0)
            })
            .collect()
    }

    pub fn step(&self, eps_star: f64, eps: &[f64]) -> Vec<f64> {
        let q = self.check_erasures(eps);
        (0..self.classes)
            .map(|i| {
                let s: f64 = self.var_terms[i]
                    .iter()
                    .map(|(w, punct, d)| {
                        let chan = if *punct { 1.0 } else { eps_star };
                        w * chan * monomial_except(&q, d, i)
                    })
                    .sum();
                s.clamp(0.0, 1.0)
            })
            .collect()
    }

    pub fn converges(&self, eps_star: f64, cfg: &BecConfig) -> MetBecOutcome {
        let mut eps = vec![eps_star; self.classes];
        let max_norm = |e: &[f64]| self.informative.iter().map(|&i| e[i]).fold(0.0, f64::max);
        let limit = cfg.max_iterations.max(1);
        for it in 1..=limit {
            let next = self.step(eps_star, &eps);
            if max_norm(&next) < cfg.conv_tol {
                return MetBecOutcome { converged: true, final_eps: next, iterations: it };
            }
            let delta = eps.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            eps = next;
            if delta < STAGNATION_EPS {
                return MetBecOutcome { converged: false, final_eps: eps, iterations: it };
            }
        }
        MetBecOutcome { converged: false, final_eps: eps, iterations: limit }
    }
}

/// `prod_m x_m^(d_m - [m == skip])`.
#[inline]
fn monomial_except(x: &[f64], d: &[u32], skip: usize) -> f64 {
    let mut p = 1.0;
    for (m, (&xm, &dm)) in x.iter().zip(d).enumerate() {
        let e = if m == skip { dm - 1 } else { dm };
        if e > 0 {
            p *= powu(xm, e);
        }
    }
    p
}

/// One round of the MET recursion.
pub fn met_bec_step(met: &MetEnsemble, eps_star: f64, eps: &[f64]) -> Result<Vec<f64>, EnsembleError> {
    if eps.len() != met.edge_classes() {
        return Err(EnsembleError::ClassCount { expected: met.edge_classes(), got: eps.len() });
    }
    Ok(MetBecKernel::new(met)?.step(eps_star, eps))
}

/// Iterate the MET recursion from `eps_i(0) = eps*` for every class.
pub fn met_bec_converges(met: &MetEnsemble, eps_star: f64, cfg: &BecConfig) -> Result<MetBecOutcome, EnsembleError> {
    Ok(MetBecKernel::new(met)?.converges(eps_star, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{ChkType, VarType};

    fn reg36() -> DegreeDistribution {
        DegreeDistribution::regular(3, 6).unwrap()
    }

    #[test]
    fn step_matches_hand_arithmetic() {
        let v = bec_step(&reg36(), 0.4, 0.4);
        let expected = 0.4 * (1.0 - 0.6f64.powi(5)).powi(2);
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.340211).abs() < 1e-6);
    }

    #[test]
    fn step_fixed_points() {
        let dd = DegreeDistribution::new([(2, 0.3), (3, 0.3), (10, 0.4)], [(6, 0.5), (7, 0.5)]).unwrap();
        assert_eq!(bec_step(&dd, 0.7, 0.0), 0.0);
        assert!((bec_step(&dd, 1.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn regular_convergence_on_either_side_of_threshold() {
        let cfg = BecConfig { max_iterations: 2000, conv_tol: 1e-8 };
        assert!(bec_converges(&reg36(), 0.42, &cfg).converged);
        assert!(!bec_converges(&reg36(), 0.44, &cfg).converged);
        let zero = bec_converges(&reg36(), 0.0, &cfg);
        assert!(zero.converged);
        assert_eq!(zero.iterations, 1);
    }

    #[test]
    fn met_mirror_step_matches_standard() {
        let m = MetEnsemble::mirror_of(&reg36()).unwrap();
        let out = met_bec_step(&m, 0.4, &[0.4]).unwrap();
        assert!((out[0] - bec_step(&reg36(), 0.4, 0.4)).abs() < 1e-15);
        assert_eq!(met_bec_step(&m, 0.4, &[0.0]).unwrap(), vec![0.0]);
    }

    fn fig3_like() -> MetEnsemble {
        MetEnsemble::new(
            4,
            vec![
                VarType { punctured: false, degrees: vec![2, 0, 0, 0], coeff: 0.5 },
                VarType { punctured: false, degrees: vec![3, 0, 0, 0], coeff: 0.3 },
                VarType { punctured: true, degrees: vec![0, 3, 3, 0], coeff: 0.2 },
                VarType { punctured: false, degrees: vec![0, 0, 0, 1], coeff: 0.2 },
            ],
            vec![
                ChkType { degrees: vec![4, 1, 0, 0], coeff: 0.4 },
                ChkType { degrees: vec![3, 2, 0, 0], coeff: 0.1 },
                ChkType { degrees: vec![0, 0, 3, 1], coeff: 0.2 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn punctured_class_keeps_messages_without_channel() {
        let m = fig3_like();
        let out = met_bec_step(&m, 0.0, &[0.3, 0.3, 0.3, 0.3]).unwrap();
        // transmitted-only classes are silenced by eps* = 0
        assert_eq!(out[0], 0.0);
        assert_eq!(out[3], 0.0);
        // punctured variables still forward erasures
        assert!(out[1] > 0.0);
        assert!(out[2] > 0.0);
    }

    #[test]
    fn degree_one_class_is_not_a_stopping_class() {
        let k = MetBecKernel::new(&fig3_like()).unwrap();
        assert_eq!(k.informative_classes(), &[0, 1, 2]);
        assert!(k.converges(0.0, &BecConfig::default()).converged);
        assert!(k.converges(0.3, &BecConfig::default()).converged);
        assert!(!k.converges(1.0, &BecConfig::default()).converged);
    }

    #[test]
    fn one_sided_class_is_invalid() {
        let m = MetEnsemble::new(
            2,
            vec![VarType { punctured: false, degrees: vec![3, 1], coeff: 1.0 }],
            vec![ChkType { degrees: vec![6, 0], coeff: 0.5 }],
        )
        .unwrap();
        assert!(met_bec_step(&m, 0.3, &[0.3, 0.3]).is_err());
    }
}
