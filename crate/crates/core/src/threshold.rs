//! Threshold search: bisection of a convergence predicate over the channel
//! parameter, and the candidate evaluator that optimizers call.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::awgn::{self, AwgnConfig};
use crate::bec::{self, BecConfig, MetBecKernel};
use crate::ensemble::{Ensemble, EnsembleError, Parameterization};

/// Channel family. The threshold is always the largest channel parameter
/// (erasure probability or noise standard deviation) at which decoding
/// still succeeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Bec,
    Biawgn,
}

/// Everything needed to turn an ensemble into a threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub channel: Channel,
    pub bec: BecConfig,
    pub awgn: AwgnConfig,
    pub bisect_tol: f64,
    /// Bracket for the channel parameter; the lower end must decode.
    pub lo: f64,
    pub hi: f64,
}

impl EvalConfig {
    pub fn bec() -> Self {
        Self {
            channel: Channel::Bec,
            bec: BecConfig::default(),
            awgn: AwgnConfig::default(),
            bisect_tol: 1e-5,
            lo: 0.0,
            hi: 1.0,
        }
    }

    pub fn biawgn() -> Self {
        Self {
            channel: Channel::Biawgn,
            bec: BecConfig::default(),
            awgn: AwgnConfig::default(),
            bisect_tol: 1e-4,
            lo: 0.3,
            hi: 2.0,
        }
    }

    pub fn for_channel(channel: Channel) -> Self {
        match channel {
            Channel::Bec => Self::bec(),
            Channel::Biawgn => Self::biawgn(),
        }
    }
}

/// Largest parameter in `[lo, hi]` at which `converges` holds, to within `tol`.
///
/// Returns `0.0` (the penalty value) when decoding fails already at
/// `lo + tol`, and `hi` when it still succeeds at `hi`. Otherwise the result
/// is the midpoint of a final bracket of width at most `tol` whose lower end
/// converges.
pub fn threshold<F: FnMut(f64) -> bool>(mut converges: F, lo: f64, hi: f64, tol: f64) -> f64 {
    let mut a = lo + tol;
    let mut b = hi;
    if !(b > a) || !converges(a) {
        return 0.0;
    }
    if converges(b) {
        return b;
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        if converges(m) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Decoding threshold of an ensemble under `cfg`.
pub fn ensemble_threshold(e: &Ensemble, cfg: &EvalConfig) -> Result<f64, EnsembleError> {
    match (cfg.channel, e) {
        (Channel::Bec, Ensemble::Standard(dd)) => {
            let hi = cfg.hi.min(dd.stability_bound());
            Ok(threshold(|x| bec::bec_converges(dd, x, &cfg.bec).converged, cfg.lo, hi, cfg.bisect_tol))
        }
        (Channel::Bec, Ensemble::Met(met)) => {
            let kernel = MetBecKernel::new(met)?;
            Ok(threshold(|x| kernel.converges(x, &cfg.bec).converged, cfg.lo, cfg.hi, cfg.bisect_tol))
        }
        (Channel::Biawgn, e) => {
            let evolver = awgn::Evolver::new(e, &cfg.awgn)?;
            Ok(threshold(|s| evolver.converges(s).converged, cfg.lo, cfg.hi, cfg.bisect_tol))
        }
    }
}

/// Round to the 4 decimals used in reports.
pub fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

/// Search-effort counters.
///
/// * `nog`: generations before the optimizer halted
/// * `ntt`: candidates evaluated
/// * `nfe`: candidates that beat every earlier candidate
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchMetrics {
    pub nog: u64,
    pub ntt: u64,
    pub nfe: u64,
    pub cpu_seconds: f64,
}

impl SearchMetrics {
    /// Account for a batch of already computed thresholds in index order.
    pub fn record(&mut self, thresholds: &[f64], best_so_far: &mut f64) {
        for &t in thresholds {
            self.ntt += 1;
            if t > *best_so_far {
                self.nfe += 1;
                *best_so_far = t;
            }
        }
    }

    pub fn merge(&mut self, other: &SearchMetrics) {
        self.nog += other.nog;
        self.ntt += other.ntt;
        self.nfe += other.nfe;
        self.cpu_seconds += other.cpu_seconds;
    }

    pub fn set_elapsed(&mut self, d: Duration) {
        self.cpu_seconds = d.as_secs_f64();
    }
}

/// Free vector -> threshold, the cost function every optimizer maximizes.
#[derive(Clone, Debug)]
pub struct CandidateEvaluator {
    pub param: Parameterization,
    pub cfg: EvalConfig,
}

impl CandidateEvaluator {
    pub fn new(param: Parameterization, cfg: EvalConfig) -> Self {
        Self { param, cfg }
    }

    /// Threshold of the embedded ensemble, or `None` when the vector does not
    /// embed into a feasible ensemble.
    pub fn try_threshold(&self, v: &[f64]) -> Option<f64> {
        let e = self.param.embed(v).ok()?.feasible()?;
        ensemble_threshold(&e, &self.cfg).ok()
    }

    /// Threshold with infeasible candidates scored as zero.
    pub fn threshold(&self, v: &[f64]) -> f64 {
        self.try_threshold(v).unwrap_or(0.0)
    }

    /// Evaluate one candidate and update the counters.
    pub fn evaluate_candidate(&self, v: &[f64], metrics: &mut SearchMetrics, best_so_far: &mut f64) -> f64 {
        let t = self.threshold(v);
        metrics.record(&[t], best_so_far);
        t
    }
}
