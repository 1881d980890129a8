use super::standard::inverse_moment;
use super::validate::{Check, ValidationReport};
use super::{DegreeDistribution, EnsembleError};

/// A variable-node type `(b, d)` with node fraction `L_{b,d}`.
///
/// Only a single physical channel is modelled, so the received degree is
/// either `[0, 1]` (transmitted) or `[1, 0]` (punctured); `punctured`
/// stores which.
#[derive(Clone, Debug, PartialEq)]
pub struct VarType {
    pub punctured: bool,
    pub degrees: Vec<u32>,
    pub coeff: f64,
}

impl VarType {
    pub fn received(&self) -> [u32; 2] {
        if self.punctured {
            [1, 0]
        } else {
            [0, 1]
        }
    }

    pub fn total_degree(&self) -> u32 {
        self.degrees.iter().sum()
    }
}

/// A check-node type `d` with node fraction `R_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChkType {
    pub degrees: Vec<u32>,
    pub coeff: f64,
}

/// Node-perspective multi-edge-type ensemble `(L(r, x), R(x))`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetEnsemble {
    edge_classes: usize,
    var_types: Vec<VarType>,
    chk_types: Vec<ChkType>,
}

impl MetEnsemble {
    pub fn new(
        edge_classes: usize,
        var_types: Vec<VarType>,
        chk_types: Vec<ChkType>,
    ) -> Result<Self, EnsembleError> {
        if edge_classes == 0 {
            return Err(EnsembleError::Invalid("need at least one edge class".into()));
        }
        for (k, v) in var_types.iter().enumerate() {
            if v.degrees.len() != edge_classes {
                return Err(EnsembleError::ClassCount { expected: edge_classes, got: v.degrees.len() });
            }
            if !(v.coeff.is_finite() && v.coeff >= 0.0) {
                return Err(EnsembleError::BadCoefficient { what: format!("L[{k}]"), value: v.coeff });
            }
            if v.total_degree() == 0 {
                return Err(EnsembleError::Invalid(format!("variable type {k} has no edges")));
            }
        }
        for (k, c) in chk_types.iter().enumerate() {
            if c.degrees.len() != edge_classes {
                return Err(EnsembleError::ClassCount { expected: edge_classes, got: c.degrees.len() });
            }
            if !(c.coeff.is_finite() && c.coeff >= 0.0) {
                return Err(EnsembleError::BadCoefficient { what: format!("R[{k}]"), value: c.coeff });
            }
            if c.degrees.iter().sum::<u32>() == 0 {
                return Err(EnsembleError::Invalid(format!("check type {k} has no edges")));
            }
        }
        Ok(Self { edge_classes, var_types, chk_types })
    }

    /// Single-edge-class MET form of a standard ensemble: node fractions are
    /// `(lambda_i / i) / sum_j(lambda_j / j)` and likewise for checks, so
    /// every variable node is transmitted and `L(1,1) = 1`.
    pub fn mirror_of(dd: &DegreeDistribution) -> Result<Self, EnsembleError> {
        let scale = inverse_moment(dd.lambda());
        if scale <= 0.0 {
            return Err(EnsembleError::Invalid("sum of lambda_i/i is zero".into()));
        }
        let var_types = dd
            .lambda()
            .iter()
            .map(|(&d, &c)| VarType { punctured: false, degrees: vec![d], coeff: c / f64::from(d) / scale })
            .collect();
        let chk_types = dd
            .rho()
            .iter()
            .map(|(&d, &c)| ChkType { degrees: vec![d], coeff: c / f64::from(d) / scale })
            .collect();
        Self::new(1, var_types, chk_types)
    }

    pub fn edge_classes(&self) -> usize {
        self.edge_classes
    }

    pub fn var_types(&self) -> &[VarType] {
        &self.var_types
    }

    pub fn chk_types(&self) -> &[ChkType] {
        &self.chk_types
    }

    /// `L(1, 1)`, all variable-node fractions.
    pub fn var_total(&self) -> f64 {
        self.var_types.iter().map(|v| v.coeff).sum()
    }

    /// `L_{b_1}(1, 1)`, the transmitted variable-node fractions.
    pub fn transmitted_total(&self) -> f64 {
        self.var_types.iter().filter(|v| !v.punctured).map(|v| v.coeff).sum()
    }

    /// `R(1)`.
    pub fn chk_total(&self) -> f64 {
        self.chk_types.iter().map(|c| c.coeff).sum()
    }

    /// `L_{x_i}(1, 1)`: variable sockets on edge class `class`.
    pub fn var_edges(&self, class: usize) -> f64 {
        self.var_types.iter().map(|v| v.coeff * f64::from(v.degrees[class])).sum()
    }

    /// `R_{x_i}(1)`: check sockets on edge class `class`.
    pub fn chk_edges(&self, class: usize) -> f64 {
        self.chk_types.iter().map(|c| c.coeff * f64::from(c.degrees[class])).sum()
    }

    /// `L(1,1) - R(1)`.
    pub fn rate(&self) -> f64 {
        self.var_total() - self.chk_total()
    }

    pub fn validate(&self, rate: f64, tol: f64) -> ValidationReport {
        let mut report = ValidationReport::new(tol);
        report.push(Check::TransmittedSum, self.transmitted_total() - 1.0);
        report.push(Check::Rate, self.rate() - rate);
        for class in 0..self.edge_classes {
            report.push(Check::EdgeBalance { class }, self.var_edges(class) - self.chk_edges(class));
        }
        report
    }

    /// Drop types whose coefficient is exactly zero.
    pub fn pruned(&self) -> Self {
        Self {
            edge_classes: self.edge_classes,
            var_types: self.var_types.iter().filter(|v| v.coeff > 0.0).cloned().collect(),
            chk_types: self.chk_types.iter().filter(|c| c.coeff > 0.0).cloned().collect(),
        }
    }
}

/// Edge-perspective view of a MET ensemble, per edge class `i`:
/// variable terms `L_{b,d} d_i / L_{x_i}(1,1)` and check terms
/// `R_d d_i / R_{x_i}(1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeWeights {
    /// `(weight, punctured, degree vector)` per class.
    pub var_terms: Vec<Vec<(f64, bool, Vec<u32>)>>,
    /// `(weight, degree vector)` per class.
    pub chk_terms: Vec<Vec<(f64, Vec<u32>)>>,
    /// Classes whose messages decide convergence. A class served only by
    /// degree-1 variables just repeats the channel and is left out.
    pub informative: Vec<usize>,
}

impl MetEnsemble {
    pub fn edge_weights(&self) -> Result<EdgeWeights, EnsembleError> {
        let me = self.edge_classes;
        let mut var_terms = vec![Vec::new(); me];
        let mut chk_terms = vec![Vec::new(); me];
        let mut informative = Vec::new();
        for i in 0..me {
            let lv = self.var_edges(i);
            let rc = self.chk_edges(i);
            if lv <= 0.0 && rc <= 0.0 {
                continue;
            }
            if lv <= 0.0 || rc <= 0.0 {
                return Err(EnsembleError::Invalid(format!("edge class {} has sockets on only one side", i + 1)));
            }
            let mut channel_only = true;
            for v in self.var_types.iter().filter(|v| v.degrees[i] > 0 && v.coeff > 0.0) {
                var_terms[i].push((v.coeff * f64::from(v.degrees[i]) / lv, v.punctured, v.degrees.clone()));
                channel_only &= v.total_degree() == 1;
            }
            for c in self.chk_types.iter().filter(|c| c.degrees[i] > 0 && c.coeff > 0.0) {
                chk_terms[i].push((c.coeff * f64::from(c.degrees[i]) / rc, c.degrees.clone()));
            }
            if !channel_only {
                informative.push(i);
            }
        }
        if informative.is_empty() {
            informative = (0..me).filter(|&i| !var_terms[i].is_empty()).collect();
        }
        Ok(EdgeWeights { var_terms, chk_terms, informative })
    }
}
