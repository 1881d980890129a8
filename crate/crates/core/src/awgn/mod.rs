//! Discretized density evolution on the binary-input AWGN channel.
//!
//! Messages are LLR densities on a uniform symmetric lattice. Variable
//! nodes add LLRs (FFT convolution), check nodes combine them with the
//! quantized box-plus table. Punctured variable nodes see an LLR-0 channel.

mod boxplus;
mod conv;
mod density;

pub use boxplus::{boxplus_pair, chk_update};
pub use density::{channel_density, Grid, QuantizedDensity};

use thiserror::Error;

use crate::ensemble::{Ensemble, EnsembleError};
use conv::Convolver;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AwgnError {
    #[error("densities live on different grids")]
    GridMismatch,
    #[error("noise standard deviation must be positive, got {0}")]
    BadSigma(f64),
    #[error("no densities to combine")]
    Empty,
}

impl From<AwgnError> for EnsembleError {
    fn from(e: AwgnError) -> Self {
        EnsembleError::Invalid(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AwgnConfig {
    /// LLR magnitude `B` covered by the finite bins.
    pub bound: f64,
    /// `2^resolution + 1` bins in total.
    pub resolution: u32,
    pub max_iterations: usize,
    /// Decoding counts as successful once the message error probability
    /// drops below this.
    pub err_tol: f64,
}

impl Default for AwgnConfig {
    fn default() -> Self {
        Self { bound: 30.0, resolution: 12, max_iterations: 1000, err_tol: 1e-6 }
    }
}

impl AwgnConfig {
    pub fn grid(&self) -> Grid {
        Grid::with_resolution(self.bound, self.resolution)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AwgnOutcome {
    pub converged: bool,
    pub final_error: f64,
    pub iterations: usize,
}

/// Density of `channel + incoming_1 + ... + incoming_k`.
pub fn var_update(incoming: &[&QuantizedDensity], channel: &QuantizedDensity) -> Result<QuantizedDensity, AwgnError> {
    for d in incoming {
        channel.check_grid(d)?;
    }
    if incoming.is_empty() {
        return Ok(channel.clone());
    }
    let conv = Convolver::new(channel.grid, incoming.len() + 1);
    let specs: Vec<_> = std::iter::once(channel).chain(incoming.iter().copied()).map(|d| conv.spectrum(d)).collect();
    let factors = specs.iter().map(|s| (s, 1)).collect();
    Ok(conv.mix_of_sums(&[(1.0, factors)]))
}

const STAGNATION_EPS: f64 = 1e-13;

enum Shape {
    Standard { lambda: Vec<(u32, f64)>, rho: Vec<(u32, f64)> },
    Met { classes: usize, weights: crate::ensemble::EdgeWeights },
}

/// Prepared density-evolution run for one ensemble; reusable across noise levels.
pub struct Evolver {
    cfg: AwgnConfig,
    grid: Grid,
    shape: Shape,
    conv: Convolver,
}

impl Evolver {
    pub fn new(e: &Ensemble, cfg: &AwgnConfig) -> Result<Self, EnsembleError> {
        let grid = cfg.grid();
        let (shape, max_factors) = match e {
            Ensemble::Standard(dd) => {
                let lambda: Vec<_> = dd.lambda().iter().map(|(&d, &c)| (d, c)).collect();
                let rho: Vec<_> = dd.rho().iter().map(|(&d, &c)| (d, c)).collect();
                (Shape::Standard { lambda, rho }, dd.max_var_degree() as usize)
            }
            Ensemble::Met(met) => {
                let weights = met.edge_weights()?;
                let maxdeg = met.var_types().iter().map(|v| v.total_degree() as usize).max().unwrap_or(1);
                (Shape::Met { classes: met.edge_classes(), weights }, maxdeg)
            }
        };
        let conv = Convolver::new(grid, max_factors);
        Ok(Self { cfg: *cfg, grid, shape, conv })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Run until the error probability falls below `err_tol`, stalls, or the
    /// iteration cap is hit.
    pub fn converges(&self, sigma: f64) -> AwgnOutcome {
        let mut last = f64::INFINITY;
        let mut out = AwgnOutcome { converged: false, final_error: 1.0, iterations: 0 };
        let stopped = self.run(sigma, self.cfg.max_iterations, |it, pe| {
            out = AwgnOutcome { converged: pe < self.cfg.err_tol, final_error: pe, iterations: it };
            let stop = out.converged || (last - pe).abs() < STAGNATION_EPS;
            last = pe;
            stop
        });
        if stopped.is_err() {
            out.converged = false;
        }
        out
    }

    /// Error probability after each of the first `iterations` rounds.
    pub fn error_trace(&self, sigma: f64, iterations: usize) -> Result<Vec<f64>, AwgnError> {
        let mut trace = Vec::with_capacity(iterations);
        self.run(sigma, iterations, |_, pe| {
            trace.push(pe);
            false
        })?;
        Ok(trace)
    }

    fn run(&self, sigma: f64, iterations: usize, mut observe: impl FnMut(usize, f64) -> bool) -> Result<(), AwgnError> {
        let channel = channel_density(sigma, self.grid)?;
        match &self.shape {
            Shape::Standard { lambda, rho } => {
                let mut v = channel.clone();
                let ch_spec = self.conv.spectrum(&channel);
                for it in 1..=iterations {
                    let c = self.check_mix_standard(&v, rho)?;
                    let c_spec = self.conv.spectrum(&c);
                    let terms: Vec<_> = lambda.iter().map(|&(d, w)| (w, vec![(&ch_spec, 1), (&c_spec, d - 1)])).collect();
                    v = self.conv.mix_of_sums(&terms);
                    if observe(it, v.error_probability()) {
                        break;
                    }
                }
            }
            Shape::Met { classes, weights } => {
                let erasure = QuantizedDensity::erasure(self.grid);
                let ch_spec = self.conv.spectrum(&channel);
                let er_spec = self.conv.spectrum(&erasure);
                let mut v: Vec<QuantizedDensity> = (0..*classes).map(|_| channel.clone()).collect();
                for it in 1..=iterations {
                    let c = self.check_mix_met(&v, weights)?;
                    let specs: Vec<_> = c.iter().map(|d| self.conv.spectrum(d)).collect();
                    for i in 0..*classes {
                        if weights.var_terms[i].is_empty() {
                            continue;
                        }
                        let terms: Vec<_> = weights.var_terms[i]
                            .iter()
                            .map(|(w, punct, d)| {
                                let mut f = vec![(if *punct { &er_spec } else { &ch_spec }, 1)];
                                for (m, &dm) in d.iter().enumerate() {
                                    let e = if m == i { dm - 1 } else { dm };
                                    if e > 0 {
                                        f.push((&specs[m], e));
                                    }
                                }
                                (*w, f)
                            })
                            .collect();
                        v[i] = self.conv.mix_of_sums(&terms);
                    }
                    let pe = weights.informative.iter().map(|&i| v[i].error_probability()).fold(0.0, f64::max);
                    if observe(it, pe) {
                        break;
                    }
                }
            }
        }
        Ok(())
    }

    fn check_mix_standard(&self, v: &QuantizedDensity, rho: &[(u32, f64)]) -> Result<QuantizedDensity, AwgnError> {
        let max = rho.iter().map(|&(d, _)| d).max().unwrap_or(2);
        // powers[k] = v boxplus-ed with itself k+1 times
        let mut powers = vec![v.clone()];
        for _ in 2..max {
            let next = boxplus_pair(powers.last().expect("non-empty"), v)?;
            powers.push(next);
        }
        let parts: Vec<_> = rho.iter().map(|&(d, w)| (w, &powers[(d - 2) as usize])).collect();
        QuantizedDensity::mixture(&parts)
    }

    fn check_mix_met(
        &self,
        v: &[QuantizedDensity],
        weights: &crate::ensemble::EdgeWeights,
    ) -> Result<Vec<QuantizedDensity>, AwgnError> {
        let classes = v.len();
        // memoized boxplus powers per class: pow[m][k-1] = v_m [+] ... (k copies)
        let mut pow: Vec<Vec<QuantizedDensity>> = v.iter().map(|d| vec![d.clone()]).collect();
        let power = |m: usize, k: u32, pow: &mut Vec<Vec<QuantizedDensity>>| -> Result<(), AwgnError> {
            while pow[m].len() < k as usize {
                let next = boxplus_pair(pow[m].last().expect("non-empty"), &v[m])?;
                pow[m].push(next);
            }
            Ok(())
        };
        let mut out = Vec::with_capacity(classes);
        for j in 0..classes {
            if weights.chk_terms[j].is_empty() {
                out.push(QuantizedDensity::erasure(self.grid));
                continue;
            }
            let mut parts = Vec::with_capacity(weights.chk_terms[j].len());
            for (w, d) in &weights.chk_terms[j] {
                let mut acc: Option<QuantizedDensity> = None;
                for m in 0..classes {
                    let e = if m == j { d[m] - 1 } else { d[m] };
                    if e == 0 {
                        continue;
                    }
                    power(m, e, &mut pow)?;
                    let operand = &pow[m][e as usize - 1];
                    acc = Some(match acc {
                        None => operand.clone(),
                        Some(a) => boxplus_pair(&a, operand)?,
                    });
                }
                // a degree-1 check pins its bit: the message is certain
                parts.push((*w, acc.unwrap_or_else(|| QuantizedDensity::pos_infinity(self.grid))));
            }
            let refs: Vec<_> = parts.iter().map(|(w, d)| (*w, d)).collect();
            out.push(QuantizedDensity::mixture(&refs)?);
        }
        Ok(out)
    }
}

/// Converge test for an ensemble at noise level `sigma`.
pub fn awgn_converges(e: &Ensemble, sigma: f64, cfg: &AwgnConfig) -> Result<AwgnOutcome, EnsembleError> {
    if !(sigma > 0.0) {
        return Err(AwgnError::BadSigma(sigma).into());
    }
    Ok(Evolver::new(e, cfg)?.converges(sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{DegreeDistribution, MetEnsemble};

    fn small() -> AwgnConfig {
        AwgnConfig { resolution: 10, ..AwgnConfig::default() }
    }

    #[test]
    fn var_update_without_incoming_is_channel() {
        let g = small().grid();
        let ch = channel_density(0.8, g).unwrap();
        assert_eq!(var_update(&[], &ch).unwrap(), ch);
    }

    #[test]
    fn var_update_saturates_at_bound() {
        let g = small().grid();
        let top = QuantizedDensity::point(g, g.half_bins as isize);
        let out = var_update(&[&top], &top).unwrap();
        assert!((out.mass[g.bins() - 1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn var_update_adds_means() {
        let g = AwgnConfig::default().grid();
        let ch = channel_density(1.0, g).unwrap();
        let out = var_update(&[&ch], &ch).unwrap();
        let (mean, _) = out.finite_moments();
        assert!((mean - 4.0).abs() < 0.02, "{mean}");
        assert!((out.total_mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn regular_code_decodes_at_high_snr_only() {
        let e = Ensemble::Standard(DegreeDistribution::regular(3, 6).unwrap());
        let cfg = AwgnConfig { max_iterations: 500, ..small() };
        assert!(awgn_converges(&e, 0.01, &cfg).unwrap().converged);
        assert!(awgn_converges(&e, 0.7, &cfg).unwrap().converged);
        assert!(!awgn_converges(&e, 1.0, &cfg).unwrap().converged);
        assert!(awgn_converges(&e, 0.0, &cfg).is_err());
    }

    #[test]
    fn met_mirror_tracks_standard_error_probability() {
        let dd = DegreeDistribution::new([(2, 0.3), (3, 0.3), (8, 0.4)], [(6, 0.4), (7, 0.6)]).unwrap();
        let cfg = small();
        let a = Evolver::new(&Ensemble::Standard(dd.clone()), &cfg).unwrap().error_trace(0.85, 15).unwrap();
        let m = MetEnsemble::mirror_of(&dd).unwrap();
        let b = Evolver::new(&Ensemble::Met(m), &cfg).unwrap().error_trace(0.85, 15).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-6, "{x} vs {y}");
        }
    }
}
