use std::fmt;

/// A single equality constraint an ensemble is checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    /// Variable edge fractions sum to one.
    LambdaSum,
    /// Check edge fractions sum to one.
    RhoSum,
    /// Design rate matches the requested rate.
    Rate,
    /// Transmitted (un-punctured) variable-node fractions sum to one.
    TransmittedSum,
    /// Variable and check sockets agree on edge class `class` (0-based).
    EdgeBalance { class: usize },
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Check::LambdaSum => f.write_str("lambda_sum"),
            Check::RhoSum => f.write_str("rho_sum"),
            Check::Rate => f.write_str("rate"),
            Check::TransmittedSum => f.write_str("transmitted_sum"),
            Check::EdgeBalance { class } => write!(f, "edge_balance:class{}", class + 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Residual {
    pub check: Check,
    /// Signed residual (left side minus right side).
    pub residual: f64,
    pub passed: bool,
}

/// Outcome of checking every constraint; never an error.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub tol: f64,
    pub residuals: Vec<Residual>,
}

impl ValidationReport {
    pub(crate) fn new(tol: f64) -> Self {
        Self { tol, residuals: Vec::new() }
    }

    pub(crate) fn push(&mut self, check: Check, residual: f64) {
        let passed = residual.is_finite() && residual.abs() <= self.tol;
        self.residuals.push(Residual { check, residual, passed });
    }

    pub fn passed(&self) -> bool {
        self.residuals.iter().all(|r| r.passed)
    }

    pub fn violations(&self) -> impl Iterator<Item = &Residual> {
        self.residuals.iter().filter(|r| !r.passed)
    }

    pub fn get(&self, check: Check) -> Option<&Residual> {
        self.residuals.iter().find(|r| r.check == check)
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.residual.abs()).fold(0.0, f64::max)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bad: Vec<String> = self
            .violations()
            .map(|r| format!("{} (residual {:.3e})", r.check, r.residual))
            .collect();
        if bad.is_empty() {
            write!(f, "all constraints hold within {:e}", self.tol)
        } else {
            write!(f, "violated: {}", bad.join(", "))
        }
    }
}
