use std::f64::consts::SQRT_2;

use statrs::function::erf::erfc;

use super::AwgnError;

/// Symmetric LLR lattice `{k * step : -half_bins <= k <= half_bins}`, with
/// `step = bound / half_bins`. The centre bin is exactly LLR 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub half_bins: usize,
    pub bound: f64,
}

impl Grid {
    /// `2^(k-1)` bins per side (plus the zero bin) over `[-bound, bound]`.
    pub fn with_resolution(bound: f64, k: u32) -> Self {
        Self { half_bins: 1usize << (k - 1), bound }
    }

    pub fn step(&self) -> f64 {
        self.bound / self.half_bins as f64
    }

    pub fn bins(&self) -> usize {
        2 * self.half_bins + 1
    }

    /// LLR value of bin `idx`.
    pub fn value(&self, idx: usize) -> f64 {
        (idx as f64 - self.half_bins as f64) * self.step()
    }
}

/// Probability mass function of an LLR message on a [`Grid`], with atoms at
/// `+inf` (known correct) and `-inf` (known wrong).
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizedDensity {
    pub grid: Grid,
    pub mass: Vec<f64>,
    pub pos_inf: f64,
    pub neg_inf: f64,
}

impl QuantizedDensity {
    pub fn point(grid: Grid, llr_index: isize) -> Self {
        let mut mass = vec![0.0; grid.bins()];
        mass[(grid.half_bins as isize + llr_index) as usize] = 1.0;
        Self { grid, mass, pos_inf: 0.0, neg_inf: 0.0 }
    }

    /// All mass at LLR 0 (an erasure).
    pub fn erasure(grid: Grid) -> Self {
        Self::point(grid, 0)
    }

    pub fn pos_infinity(grid: Grid) -> Self {
        Self { grid, mass: vec![0.0; grid.bins()], pos_inf: 1.0, neg_inf: 0.0 }
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum::<f64>() + self.pos_inf + self.neg_inf
    }

    pub fn zero_mass(&self) -> f64 {
        self.mass[self.grid.half_bins]
    }

    /// Probability of a wrong hard decision: mass below zero, plus half
    /// the mass at zero.
    pub fn error_probability(&self) -> f64 {
        let n = self.grid.half_bins;
        self.neg_inf + self.mass[..n].iter().sum::<f64>() + 0.5 * self.mass[n]
    }

    /// Mean and variance of the finite part, conditioned on being finite.
    pub fn finite_moments(&self) -> (f64, f64) {
        let total: f64 = self.mass.iter().sum();
        if total <= 0.0 {
            return (0.0, 0.0);
        }
        let mean = self.mass.iter().enumerate().map(|(i, m)| m * self.grid.value(i)).sum::<f64>() / total;
        let var = self
            .mass
            .iter()
            .enumerate()
            .map(|(i, m)| m * (self.grid.value(i) - mean).powi(2))
            .sum::<f64>()
            / total;
        (mean, var)
    }

    /// `sum_x |f(x) - e^x f(-x)|` over the finite bins, a measure of how far
    /// the density is from the LLR symmetry condition.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.grid.half_bins;
        (1..=n)
            .map(|k| {
                let x = self.grid.value(n + k);
                // compare in the stable direction: f(-x) vs e^{-x} f(x)
                (self.mass[n - k] - (-x).exp() * self.mass[n + k]).abs()
            })
            .sum()
    }

    pub(crate) fn check_grid(&self, other: &Self) -> Result<(), AwgnError> {
        if self.grid == other.grid && self.mass.len() == other.mass.len() {
            Ok(())
        } else {
            Err(AwgnError::GridMismatch)
        }
    }

    /// The density of `-X`.
    pub fn negated(&self) -> Self {
        let mut mass = self.mass.clone();
        mass.reverse();
        Self { grid: self.grid, mass, pos_inf: self.neg_inf, neg_inf: self.pos_inf }
    }

    /// Mixture `sum_k w_k f_k`.
    pub fn mixture(parts: &[(f64, &QuantizedDensity)]) -> Result<Self, AwgnError> {
        let first = parts.first().ok_or(AwgnError::Empty)?.1;
        let mut out = Self { grid: first.grid, mass: vec![0.0; first.mass.len()], pos_inf: 0.0, neg_inf: 0.0 };
        for &(w, d) in parts {
            first.check_grid(d)?;
            for (o, m) in out.mass.iter_mut().zip(&d.mass) {
                *o += w * m;
            }
            out.pos_inf += w * d.pos_inf;
            out.neg_inf += w * d.neg_inf;
        }
        Ok(out)
    }
}

/// Upper Gaussian tail `P(Z > z)`.
fn q(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// Quantized LLR density of the BI-AWGN channel with noise `sigma`, assuming
/// the all-zero (all `+1`) codeword: `N(2/sigma^2, 4/sigma^2)`. Each bin gets
/// the exact Gaussian mass of its cell; tails beyond the outer cells go to
/// the infinity atoms.
pub fn channel_density(sigma: f64, grid: Grid) -> Result<QuantizedDensity, AwgnError> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(AwgnError::BadSigma(sigma));
    }
    let mean = 2.0 / (sigma * sigma);
    let sd = 2.0 / sigma;
    let h = 0.5 * grid.step();
    // mass of (a, b]: difference of upper tails right of the mean, of lower
    // tails left of it, so the small number is never a cancellation result
    let cell = |a: f64, b: f64| {
        let (za, zb) = ((a - mean) / sd, (b - mean) / sd);
        if za >= 0.0 {
            q(za) - q(zb)
        } else if zb <= 0.0 {
            q(-zb) - q(-za)
        } else {
            1.0 - q(zb) - q(-za)
        }
    };
    let mass: Vec<f64> = (0..grid.bins())
        .map(|i| {
            let x = grid.value(i);
            cell(x - h, x + h).max(0.0)
        })
        .collect();
    let pos_inf = q((grid.bound + h - mean) / sd);
    let neg_inf = q((mean + grid.bound + h) / sd);
    Ok(QuantizedDensity { grid, mass, pos_inf, neg_inf })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::with_resolution(30.0, 12)
    }

    #[test]
    fn channel_moments_at_unit_noise() {
        let d = channel_density(1.0, grid()).unwrap();
        let (mean, var) = d.finite_moments();
        assert!((mean - 2.0).abs() < 0.01, "{mean}");
        assert!((var - 4.0).abs() < 0.05, "{var}");
        assert!((d.total_mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn channel_mass_is_normalized_across_noise_levels() {
        for &s in &[0.05, 0.3, 0.9, 1.7, 10.0, 100.0] {
            let d = channel_density(s, grid()).unwrap();
            assert!((d.total_mass() - 1.0).abs() < 1e-9, "sigma {s}: {}", d.total_mass());
        }
    }

    #[test]
    fn very_noisy_channel_concentrates_near_zero() {
        let d = channel_density(100.0, grid()).unwrap();
        let (mean, _) = d.finite_moments();
        assert!((mean - 0.0002).abs() < 1e-4, "{mean}");
        assert!((d.error_probability() - 0.5).abs() < 0.01);
    }

    #[test]
    fn rejects_nonpositive_sigma() {
        assert!(matches!(channel_density(0.0, grid()), Err(AwgnError::BadSigma(_))));
        assert!(channel_density(-1.0, grid()).is_err());
    }

    #[test]
    fn channel_density_is_symmetric() {
        let d = channel_density(0.9, grid()).unwrap();
        assert!(d.symmetry_defect() < 1e-3, "{}", d.symmetry_defect());
    }
}
