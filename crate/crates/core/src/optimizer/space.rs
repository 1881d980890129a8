use std::ops::Range;

use rand::Rng;

/// Axis-aligned box, optionally restricted to integer points. Coordinates
/// inside an exchangeable block are interchangeable, so every point the
/// space hands out keeps each block sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct Space {
    lo: Vec<f64>,
    hi: Vec<f64>,
    integer: bool,
    blocks: Vec<Range<usize>>,
}

impl Space {
    /// The unit cube `[0,1]^dim`.
    pub fn unit(dim: usize) -> Self {
        Self { lo: vec![0.0; dim], hi: vec![1.0; dim], integer: false, blocks: Vec::new() }
    }

    /// Integer lattice points of `[lo_j, hi_j]`.
    pub fn integer(lo: Vec<i64>, hi: Vec<i64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "bounds differ in length");
        assert!(lo.iter().zip(&hi).all(|(a, b)| a <= b), "empty integer range");
        Self {
            lo: lo.into_iter().map(|x| x as f64).collect(),
            hi: hi.into_iter().map(|x| x as f64).collect(),
            integer: true,
            blocks: Vec::new(),
        }
    }

    /// Declare coordinate ranges whose order carries no meaning. Every axis
    /// in a block must share the same bounds.
    pub fn with_exchangeable(mut self, blocks: Vec<Range<usize>>) -> Self {
        for b in &blocks {
            assert!(b.end <= self.dim(), "block {b:?} exceeds dimension {}", self.dim());
            assert!(
                b.clone().all(|j| self.lo[j] == self.lo[b.start] && self.hi[j] == self.hi[b.start]),
                "block {b:?} mixes bounds"
            );
        }
        self.blocks = blocks;
        self
    }

    /// `v` with each exchangeable block sorted ascending.
    pub fn canonical(&self, mut v: Vec<f64>) -> Vec<f64> {
        for b in &self.blocks {
            v[b.clone()].sort_by(f64::total_cmp);
        }
        v
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_integer(&self) -> bool {
        self.integer
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lo[j], self.hi[j])
    }

    /// Legal interval of half-width `sr` around `c` along axis `j`.
    pub fn window(&self, j: usize, c: f64, sr: f64) -> (f64, f64) {
        let a = (c - sr).max(self.lo[j]);
        let b = (c + sr).min(self.hi[j]);
        if self.integer {
            (a.ceil(), b.floor().max(a.ceil()))
        } else {
            (a, b)
        }
    }

    /// Uniform draw from the window around `centre`.
    pub fn sample_window<R: Rng>(&self, centre: &[f64], sr: f64, rng: &mut R) -> Vec<f64> {
        let v = centre
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                let (a, b) = self.window(j, c, sr);
                if self.integer {
                    rng.gen_range(a as i64..=b as i64) as f64
                } else if b > a {
                    rng.gen_range(a..=b)
                } else {
                    a
                }
            })
            .collect();
        self.canonical(v)
    }

    /// Point in cell `(k + u) / n` of axis `j`, for `u` in `[0,1)`.
    pub fn stratum(&self, j: usize, k: usize, n: usize, u: f64) -> f64 {
        let t = (k as f64 + u) / n as f64;
        if self.integer {
            (self.lo[j] + (t * (self.hi[j] - self.lo[j] + 1.0)).floor()).min(self.hi[j])
        } else {
            self.lo[j] + t * (self.hi[j] - self.lo[j])
        }
    }

    /// Clamp into the box, rounding to the nearest integer when discrete.
    pub fn repair(&self, v: &[f64]) -> Vec<f64> {
        let v = v
            .iter()
            .enumerate()
            .map(|(j, &x)| {
                let x = if x.is_nan() { self.lo[j] } else { x };
                let x = if self.integer { x.round() } else { x };
                x.clamp(self.lo[j], self.hi[j])
            })
            .collect();
        self.canonical(v)
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        v.len() == self.dim()
            && v.iter().enumerate().all(|(j, &x)| {
                x >= self.lo[j] && x <= self.hi[j] && (!self.integer || x.fract() == 0.0)
            })
    }
}
