/// Edge-perspective polynomial `sum_i c_i x^(i-1)` with sparse integer degrees.
///
/// Terms are kept sorted by degree so evaluation order (and therefore
/// rounding) is identical on every platform.
#[derive(Clone, Debug, Default, PartialEq)]
pub(crate) struct EdgePoly {
    terms: Vec<(u32, f64)>,
}

impl EdgePoly {
    pub(crate) fn new(mut terms: Vec<(u32, f64)>) -> Self {
        terms.retain(|&(_, c)| c != 0.0);
        terms.sort_by_key(|&(d, _)| d);
        Self { terms }
    }

    /// Sparse Horner evaluation from the highest degree down.
    pub(crate) fn eval(&self, x: f64) -> f64 {
        let mut it = self.terms.iter().rev();
        let Some(&(top, c)) = it.next() else {
            return 0.0;
        };
        let mut acc = c;
        let mut exp = top - 1;
        for &(d, c) in it {
            let e = d - 1;
            acc = acc * powu(x, exp - e) + c;
            exp = e;
        }
        acc * powu(x, exp)
    }

    /// First derivative, `sum_i c_i (i-1) x^(i-2)`.
    pub(crate) fn derivative(&self, x: f64) -> f64 {
        let mut it = self.terms.iter().rev().filter(|&&(d, _)| d >= 2);
        let Some(&(top, c)) = it.next() else {
            return 0.0;
        };
        let mut acc = c * f64::from(top - 1);
        let mut exp = top - 2;
        for &(d, c) in it {
            let e = d - 2;
            acc = acc * powu(x, exp - e) + c * f64::from(d - 1);
            exp = e;
        }
        acc * powu(x, exp)
    }
}

#[inline]
pub(crate) fn powu(x: f64, e: u32) -> f64 {
    match e {
        0 => 1.0,
        1 => x,
        2 => x * x,
        _ => x.powi(e as i32),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(terms: &[(u32, f64)], x: f64) -> f64 {
        terms.iter().map(|&(d, c)| c * x.powi(d as i32 - 1)).sum()
    }

    #[test]
    fn horner_matches_naive_sum() {
        let terms = vec![(2, 0.2962), (3, 0.1749), (6, 0.2418), (20, 0.2872)];
        let p = EdgePoly::new(terms.clone());
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            assert!((p.eval(x) - naive(&terms, x)).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_of_regular_rho() {
        let p = EdgePoly::new(vec![(6, 1.0)]);
        assert!((p.derivative(1.0) - 5.0).abs() < 1e-15);
        assert_eq!(p.derivative(0.0), 0.0);
        let q = EdgePoly::new(vec![(2, 0.5), (3, 0.5)]);
        assert!((q.derivative(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_is_zero() {
        assert_eq!(EdgePoly::new(vec![]).eval(0.3), 0.0);
    }
}
