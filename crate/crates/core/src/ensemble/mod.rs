//! Standard and multi-edge-type (MET) ensembles, constraint checks, and the
//! mapping between feasible ensembles and the optimizers' free-vector space.

mod json;
mod met;
mod param;
mod standard;
mod validate;

pub use json::{EnsembleFile, MetChkEntry, MetVarEntry};
pub use met::{ChkType, EdgeWeights, MetEnsemble, VarType};
pub use param::{Embedding, MetStructure, Parameterization};
pub use standard::DegreeDistribution;
pub use validate::{Check, Residual, ValidationReport};

use thiserror::Error;

/// Sum tolerance for ensembles this crate generates itself.
pub const TOL_SUM: f64 = 1e-9;
/// Relaxed tolerance used when importing tables printed with 4 decimals.
pub const TOL_IMPORT: f64 = 1e-2;
/// Coefficients below this after embedding are snapped to zero.
pub const SNAP_EPS: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("degree {0} is not allowed (standard ensembles need degrees >= 2)")]
    BadDegree(u32),
    #[error("coefficient {value} for {what} is outside [0, 1] or not finite")]
    BadCoefficient { what: String, value: f64 },
    #[error("edge-degree vector has length {got}, expected {expected}")]
    ClassCount { expected: usize, got: usize },
    #[error("received-degree vector must be [0,1] or [1,0], got {0:?}")]
    BadReceived(Vec<u32>),
    #[error("invalid ensemble: {0}")]
    Invalid(String),
    #[error("infeasible structure: {0}")]
    InfeasibleStructure(String),
    #[error("free vector has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
}

/// Either ensemble family, as consumed by the density-evolution evaluators.
#[derive(Clone, Debug, PartialEq)]
pub enum Ensemble {
    Standard(DegreeDistribution),
    Met(MetEnsemble),
}

impl Ensemble {
    pub fn rate(&self) -> Result<f64, EnsembleError> {
        match self {
            Ensemble::Standard(dd) => dd.rate(),
            Ensemble::Met(met) => Ok(met.rate()),
        }
    }

    pub fn validate(&self, rate: f64, tol: f64) -> ValidationReport {
        match self {
            Ensemble::Standard(dd) => dd.validate(rate, tol),
            Ensemble::Met(met) => met.validate(rate, tol),
        }
    }

    pub fn as_standard(&self) -> Option<&DegreeDistribution> {
        match self {
            Ensemble::Standard(dd) => Some(dd),
            Ensemble::Met(_) => None,
        }
    }

    pub fn as_met(&self) -> Option<&MetEnsemble> {
        match self {
            Ensemble::Met(m) => Some(m),
            Ensemble::Standard(_) => None,
        }
    }
}

impl From<DegreeDistribution> for Ensemble {
    fn from(dd: DegreeDistribution) -> Self {
        Ensemble::Standard(dd)
    }
}

impl From<MetEnsemble> for Ensemble {
    fn from(m: MetEnsemble) -> Self {
        Ensemble::Met(m)
    }
}

pub(crate) fn check_coeff(what: impl FnOnce() -> String, value: f64) -> Result<(), EnsembleError> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(EnsembleError::BadCoefficient { what: what(), value })
    }
}
