use std::collections::BTreeMap;

use super::validate::{Check, ValidationReport};
use super::{check_coeff, EnsembleError};
use crate::poly::EdgePoly;

/// Edge-perspective degree distribution pair `(lambda, rho)`.
///
/// `lambda[i]` is the fraction of edges attached to degree-`i` variable
/// nodes, `rho[i]` likewise for check nodes. Construction checks structure
/// only (degrees >= 2, coefficients in `[0, 1]`); the sum and rate
/// constraints are reported by [`DegreeDistribution::validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct DegreeDistribution {
    lambda: BTreeMap<u32, f64>,
    rho: BTreeMap<u32, f64>,
    lambda_poly: EdgePoly,
    rho_poly: EdgePoly,
}

impl DegreeDistribution {
    pub fn new(
        lambda: impl IntoIterator<Item = (u32, f64)>,
        rho: impl IntoIterator<Item = (u32, f64)>,
    ) -> Result<Self, EnsembleError> {
        let lambda = collect_terms(lambda, "lambda")?;
        let rho = collect_terms(rho, "rho")?;
        if lambda.is_empty() || rho.is_empty() {
            return Err(EnsembleError::Invalid("lambda and rho need at least one term".into()));
        }
        let lambda_poly = EdgePoly::new(lambda.iter().map(|(&d, &c)| (d, c)).collect());
        let rho_poly = EdgePoly::new(rho.iter().map(|(&d, &c)| (d, c)).collect());
        Ok(Self { lambda, rho, lambda_poly, rho_poly })
    }

    /// The `(dv, dc)`-regular ensemble.
    pub fn regular(dv: u32, dc: u32) -> Result<Self, EnsembleError> {
        Self::new([(dv, 1.0)], [(dc, 1.0)])
    }

    pub fn lambda(&self) -> &BTreeMap<u32, f64> {
        &self.lambda
    }

    pub fn rho(&self) -> &BTreeMap<u32, f64> {
        &self.rho
    }

    pub fn lambda_degrees(&self) -> Vec<u32> {
        self.lambda.keys().copied().collect()
    }

    pub fn rho_degrees(&self) -> Vec<u32> {
        self.rho.keys().copied().collect()
    }

    pub fn max_var_degree(&self) -> u32 {
        *self.lambda.keys().next_back().expect("non-empty")
    }

    pub fn max_chk_degree(&self) -> u32 {
        *self.rho.keys().next_back().expect("non-empty")
    }

    #[inline]
    pub fn eval_lambda(&self, x: f64) -> f64 {
        self.lambda_poly.eval(x)
    }

    #[inline]
    pub fn eval_rho(&self, x: f64) -> f64 {
        self.rho_poly.eval(x)
    }

    /// `lambda'(0)`, which is just `lambda_2`.
    pub fn lambda_prime_zero(&self) -> f64 {
        self.lambda_poly.derivative(0.0)
    }

    /// `rho'(1)` by differentiating the polynomial.
    pub fn rho_prime_one(&self) -> f64 {
        self.rho_poly.derivative(1.0)
    }

    /// Design rate `1 - (sum rho_i/i) / (sum lambda_i/i)`.
    pub fn rate(&self) -> Result<f64, EnsembleError> {
        let lam = inverse_moment(&self.lambda);
        if lam <= 0.0 {
            return Err(EnsembleError::Invalid("sum of lambda_i/i is zero".into()));
        }
        Ok(1.0 - inverse_moment(&self.rho) / lam)
    }

    /// Upper bound on the erasure threshold from the stability condition,
    /// `1 / (lambda_2 * rho'(1))`; `+inf` when there are no degree-2 edges.
    pub fn stability_bound(&self) -> f64 {
        let lambda2 = self.lambda.get(&2).copied().unwrap_or(0.0);
        if lambda2 <= 0.0 {
            return f64::INFINITY;
        }
        let rho_prime: f64 = self.rho.iter().map(|(&d, &c)| c * f64::from(d - 1)).sum();
        if rho_prime <= 0.0 {
            return f64::INFINITY;
        }
        1.0 / (lambda2 * rho_prime)
    }

    pub fn validate(&self, rate: f64, tol: f64) -> ValidationReport {
        let mut report = ValidationReport::new(tol);
        report.push(Check::LambdaSum, self.lambda.values().sum::<f64>() - 1.0);
        report.push(Check::RhoSum, self.rho.values().sum::<f64>() - 1.0);
        let lam = inverse_moment(&self.lambda);
        let residual = if lam > 0.0 {
            inverse_moment(&self.rho) / lam - (1.0 - rate)
        } else {
            f64::INFINITY
        };
        report.push(Check::Rate, residual);
        report
    }

    /// Rescale lambda and rho to sum to one.
    pub fn normalized(&self) -> Result<Self, EnsembleError> {
        let ls: f64 = self.lambda.values().sum();
        let rs: f64 = self.rho.values().sum();
        if ls <= 0.0 || rs <= 0.0 {
            return Err(EnsembleError::Invalid("cannot normalize an empty distribution".into()));
        }
        Self::new(
            self.lambda.iter().map(|(&d, &c)| (d, c / ls)),
            self.rho.iter().map(|(&d, &c)| (d, c / rs)),
        )
    }
}

pub(super) fn inverse_moment(terms: &BTreeMap<u32, f64>) -> f64 {
    terms.iter().map(|(&d, &c)| c / f64::from(d)).sum()
}

fn collect_terms(
    terms: impl IntoIterator<Item = (u32, f64)>,
    name: &str,
) -> Result<BTreeMap<u32, f64>, EnsembleError> {
    let mut out = BTreeMap::new();
    for (d, c) in terms {
        if d < 2 {
            return Err(EnsembleError::BadDegree(d));
        }
        check_coeff(|| format!("{name}_{d}"), c)?;
        if c > 0.0 {
            *out.entry(d).or_insert(0.0) += c;
        }
    }
    Ok(out)
}
