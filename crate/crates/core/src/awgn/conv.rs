//! Sums of independent LLRs via zero-padded cyclic FFT convolution.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::density::{Grid, QuantizedDensity};

/// Transform of one density's finite part, plus its atoms.
pub(crate) struct Spectrum {
    freq: Vec<Complex64>,
    pos_inf: f64,
    neg_inf: f64,
    total: f64,
}

pub(crate) struct Convolver {
    grid: Grid,
    len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Convolver {
    /// Large enough for sums of up to `max_factors` grid-supported terms
    /// without wrap-around.
    pub(crate) fn new(grid: Grid, max_factors: usize) -> Self {
        let need = 2 * max_factors.max(1) * grid.half_bins + 1;
        let len = need.next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(len);
        let inv = planner.plan_fft_inverse(len);
        Self { grid, len, fwd, inv }
    }

    pub(crate) fn spectrum(&self, d: &QuantizedDensity) -> Spectrum {
        let n = self.grid.half_bins as isize;
        let mut freq = vec![Complex64::new(0.0, 0.0); self.len];
        for (i, &m) in d.mass.iter().enumerate() {
            if m != 0.0 {
                let pos = (i as isize - n).rem_euclid(self.len as isize) as usize;
                freq[pos].re = m;
            }
        }
        self.fwd.process(&mut freq);
        Spectrum { freq, pos_inf: d.pos_inf, neg_inf: d.neg_inf, total: d.total_mass() }
    }

    /// `sum_t w_t * (X_{t,1} + X_{t,2} + ...)` where term `t` is a list of
    /// `(spectrum, multiplicity)` factors over probability densities. The
    /// finite result is clipped into the boundary bins and rescaled so the
    /// output carries total mass `sum_t w_t`.
    pub(crate) fn mix_of_sums(&self, terms: &[(f64, Vec<(&Spectrum, u32)>)]) -> QuantizedDensity {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.len];
        let mut pos_inf = 0.0;
        let mut neg_inf = 0.0;
        let mut zero_extra = 0.0;
        let mut weight = 0.0;
        for (w, factors) in terms {
            let (mut all, mut no_neg, mut no_pos, mut finite) = (1.0, 1.0, 1.0, 1.0);
            for &(s, e) in factors {
                let e = e as i32;
                all *= s.total.powi(e);
                no_neg *= (s.total - s.neg_inf).powi(e);
                no_pos *= (s.total - s.pos_inf).powi(e);
                finite *= (s.total - s.pos_inf - s.neg_inf).powi(e);
            }
            pos_inf += w * (no_neg - finite);
            neg_inf += w * (no_pos - finite);
            zero_extra += w * (all - no_neg - no_pos + finite);
            weight += w;

            let live: Vec<_> = factors.iter().filter(|&&(_, e)| e > 0).collect();
            if live.is_empty() {
                // empty sum: LLR 0 with probability one
                acc[0].re += w * self.len as f64;
                continue;
            }
            for (k, a) in acc.iter_mut().enumerate() {
                let mut p = Complex64::new(1.0, 0.0);
                for &&(s, e) in &live {
                    p *= s.freq[k].powu(e);
                }
                *a += p * w;
            }
        }
        self.inv.process(&mut acc);
        let n = self.grid.half_bins as isize;
        let scale = 1.0 / self.len as f64;
        let mut mass = vec![0.0; self.grid.bins()];
        let half = self.len as isize / 2;
        for (pos, c) in acc.iter().enumerate() {
            let v = c.re * scale;
            if v <= 0.0 {
                continue;
            }
            let pos = pos as isize;
            let s = if pos < half { pos } else { pos - self.len as isize };
            mass[(s.clamp(-n, n) + n) as usize] += v;
        }
        let (pos_inf, neg_inf, zero_extra) = (pos_inf.max(0.0), neg_inf.max(0.0), zero_extra.max(0.0));
        renormalize(&mut mass, weight - pos_inf - neg_inf - zero_extra);
        mass[n as usize] += zero_extra;
        QuantizedDensity { grid: self.grid, mass, pos_inf, neg_inf }
    }
}

/// Rescale `mass` to sum to `target`, absorbing round-off from the
/// transforms and from dropped negative residue.
pub(crate) fn renormalize(mass: &mut [f64], target: f64) {
    let sum: f64 = mass.iter().sum();
    if sum > 0.0 && target > 0.0 {
        let k = target / sum;
        mass.iter_mut().for_each(|m| *m *= k);
    }
}
