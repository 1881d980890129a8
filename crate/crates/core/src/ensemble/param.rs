//! Linear-equality elimination between ensemble coefficients and the free
//! vector seen by the optimizers.
//!
//! Every ensemble family here is linear in its coefficients: the sum, rate
//! and edge-balance constraints form `A z = b`. A deterministic column
//! preference picks which coefficients are solved for (the dependents);
//! the rest are free and are exactly the optimizer's coordinates.

use std::cmp::Ordering;

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use super::met::{ChkType, MetEnsemble, VarType};
use super::{DegreeDistribution, Ensemble, EnsembleError, SNAP_EPS};

const PIVOT_EPS: f64 = 1e-10;
const CONSISTENCY_EPS: f64 = 1e-9;
const RANGE_EPS: f64 = 1e-12;

/// Node-type skeleton of a MET ensemble (degrees and puncturing, no
/// coefficients).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MetStructure {
    pub edge_classes: usize,
    /// `(punctured, edge-degree vector)` per variable-node type.
    pub var_types: Vec<(bool, Vec<u32>)>,
    pub chk_types: Vec<Vec<u32>>,
}

impl MetStructure {
    pub fn of(met: &MetEnsemble) -> Self {
        Self {
            edge_classes: met.edge_classes(),
            var_types: met.var_types().iter().map(|v| (v.punctured, v.degrees.clone())).collect(),
            chk_types: met.chk_types().iter().map(|c| c.degrees.clone()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Layout {
    Standard { lambda: Vec<u32>, rho: Vec<u32> },
    Met(MetStructure),
}

/// Result of embedding a free vector.
#[derive(Clone, Debug, PartialEq)]
pub enum Embedding {
    Feasible(Ensemble),
    /// Some solved coefficient fell outside `[0, 1]`.
    Infeasible,
}

impl Embedding {
    pub fn feasible(self) -> Option<Ensemble> {
        match self {
            Embedding::Feasible(e) => Some(e),
            Embedding::Infeasible => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Embedding::Feasible(_))
    }
}

/// Solved form of `A z = b`: `z[dep[k]] = offset[k] - sum_f coeff[k][f] * z[free[f]]`.
#[derive(Clone, Debug, PartialEq)]
struct Elimination {
    n: usize,
    free: Vec<usize>,
    dependent: Vec<usize>,
    offset: Vec<f64>,
    coeff: Vec<Vec<f64>>,
}

impl Elimination {
    fn new(mut a: Vec<Vec<f64>>, mut b: Vec<f64>, preference: &[usize]) -> Result<Self, EnsembleError> {
        let m = a.len();
        let n = a.first().map_or(0, Vec::len);
        let mut row_used = vec![false; m];
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        for &col in preference {
            let pick = (0..m)
                .filter(|&r| !row_used[r])
                .max_by(|&r, &s| a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap_or(Ordering::Equal));
            let Some(row) = pick.filter(|&r| a[r][col].abs() > PIVOT_EPS) else {
                continue;
            };
            let p = a[row][col];
            for x in a[row].iter_mut() {
                *x /= p;
            }
            b[row] /= p;
            for r in 0..m {
                if r != row && a[r][col] != 0.0 {
                    let f = a[r][col];
                    for c in 0..n {
                        a[r][c] -= f * a[row][c];
                    }
                    b[r] -= f * b[row];
                }
            }
            row_used[row] = true;
            pivots.push((row, col));
        }
        for r in (0..m).filter(|&r| !row_used[r]) {
            if b[r].abs() > CONSISTENCY_EPS {
                return Err(EnsembleError::InfeasibleStructure(
                    "constraints are inconsistent for these degrees".into(),
                ));
            }
        }
        let mut is_dep = vec![false; n];
        for &(_, c) in &pivots {
            is_dep[c] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&c| !is_dep[c]).collect();
        let dependent = pivots.iter().map(|&(_, c)| c).collect();
        let offset = pivots.iter().map(|&(r, _)| b[r]).collect();
        let coeff = pivots.iter().map(|&(r, _)| free.iter().map(|&f| a[r][f]).collect()).collect();
        Ok(Self { n, free, dependent, offset, coeff })
    }

    fn solve(&self, free_vals: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.n];
        for (&f, &v) in self.free.iter().zip(free_vals) {
            z[f] = v;
        }
        for (k, &d) in self.dependent.iter().enumerate() {
            let s: f64 = self.coeff[k].iter().zip(free_vals).map(|(c, v)| c * v).sum();
            z[d] = self.offset[k] - s;
        }
        z
    }
}

/// Free-vector descriptor for one structure at one design rate.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameterization {
    layout: Layout,
    rate: f64,
    elim: Elimination,
}

impl Parameterization {
    /// Standard ensemble with allowed variable degrees `lambda_degrees` and
    /// check degrees `rho_degrees`.
    ///
    /// The largest variable degree absorbs the lambda sum, the two largest
    /// check degrees absorb the rho sum and the rate; with a single check
    /// degree the second-largest variable degree takes the rate instead.
    pub fn standard(lambda_degrees: &[u32], rho_degrees: &[u32], rate: f64) -> Result<Self, EnsembleError> {
        let lambda = sorted_unique(lambda_degrees)?;
        let rho = sorted_unique(rho_degrees)?;
        if lambda.is_empty() || rho.is_empty() {
            return Err(EnsembleError::InfeasibleStructure("empty degree set".into()));
        }
        if !(0.0..=1.0).contains(&rate) {
            return Err(EnsembleError::Invalid(format!("rate {rate} outside [0, 1]")));
        }
        let nl = lambda.len();
        let n = nl + rho.len();
        let mut a = vec![vec![0.0; n]; 3];
        for (k, &d) in lambda.iter().enumerate() {
            a[0][k] = 1.0;
            a[2][k] = -(1.0 - rate) / f64::from(d);
        }
        for (k, &d) in rho.iter().enumerate() {
            a[1][nl + k] = 1.0;
            a[2][nl + k] = 1.0 / f64::from(d);
        }
        let b = vec![1.0, 1.0, 0.0];

        let mut pref = vec![nl - 1];
        pref.extend((nl..n).rev());
        pref.extend((0..nl - 1).rev());
        let elim = Elimination::new(a.clone(), b.clone(), &pref)?;
        lp_feasible(&a, &b)?;
        Ok(Self { layout: Layout::Standard { lambda, rho }, rate, elim })
    }

    /// MET structure at design rate `rate`.
    ///
    /// Dependents are chosen greedily: check-node coefficients first, then
    /// variable-node coefficients, each group in ascending lexicographic
    /// order of degree vector.
    pub fn met(structure: &MetStructure, rate: f64) -> Result<Self, EnsembleError> {
        let me = structure.edge_classes;
        if me == 0 {
            return Err(EnsembleError::Invalid("need at least one edge class".into()));
        }
        for (_, d) in &structure.var_types {
            if d.len() != me {
                return Err(EnsembleError::ClassCount { expected: me, got: d.len() });
            }
        }
        for d in &structure.chk_types {
            if d.len() != me {
                return Err(EnsembleError::ClassCount { expected: me, got: d.len() });
            }
        }
        let nv = structure.var_types.len();
        let n = nv + structure.chk_types.len();
        if nv == 0 || n == nv {
            return Err(EnsembleError::InfeasibleStructure("need variable and check types".into()));
        }
        let mut a = vec![vec![0.0; n]; 2 + me];
        for (k, (punct, d)) in structure.var_types.iter().enumerate() {
            if !punct {
                a[0][k] = 1.0;
            }
            a[1][k] = 1.0;
            for i in 0..me {
                a[2 + i][k] = f64::from(d[i]);
            }
        }
        for (k, d) in structure.chk_types.iter().enumerate() {
            a[1][nv + k] = -1.0;
            for i in 0..me {
                a[2 + i][nv + k] = -f64::from(d[i]);
            }
        }
        let mut b = vec![0.0; 2 + me];
        b[0] = 1.0;
        b[1] = rate;

        let mut chk_order: Vec<usize> = (0..structure.chk_types.len()).collect();
        chk_order.sort_by(|&x, &y| structure.chk_types[x].cmp(&structure.chk_types[y]).then(x.cmp(&y)));
        let mut var_order: Vec<usize> = (0..nv).collect();
        var_order.sort_by(|&x, &y| {
            let (px, dx) = &structure.var_types[x];
            let (py, dy) = &structure.var_types[y];
            dx.cmp(dy).then(px.cmp(py)).then(x.cmp(&y))
        });
        let pref: Vec<usize> = chk_order.iter().map(|&k| nv + k).chain(var_order).collect();
        let elim = Elimination::new(a.clone(), b.clone(), &pref)?;
        lp_feasible(&a, &b)?;
        Ok(Self { layout: Layout::Met(structure.clone()), rate, elim })
    }

    /// Number of free coordinates `E`.
    pub fn dim(&self) -> usize {
        self.elim.free.len()
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn is_met(&self) -> bool {
        matches!(self.layout, Layout::Met(_))
    }

    pub fn met_structure(&self) -> Option<&MetStructure> {
        match &self.layout {
            Layout::Met(s) => Some(s),
            Layout::Standard { .. } => None,
        }
    }

    pub fn standard_degrees(&self) -> Option<(&[u32], &[u32])> {
        match &self.layout {
            Layout::Standard { lambda, rho } => Some((lambda, rho)),
            Layout::Met(_) => None,
        }
    }

    fn label(&self, col: usize) -> String {
        match &self.layout {
            Layout::Standard { lambda, rho } => {
                if col < lambda.len() {
                    format!("lambda_{}", lambda[col])
                } else {
                    format!("rho_{}", rho[col - lambda.len()])
                }
            }
            Layout::Met(s) => {
                let nv = s.var_types.len();
                if col < nv {
                    format!("L{}", col + 1)
                } else {
                    format!("R{}", col - nv + 1)
                }
            }
        }
    }

    /// Names of the free coordinates, in free-vector order.
    pub fn free_labels(&self) -> Vec<String> {
        self.elim.free.iter().map(|&c| self.label(c)).collect()
    }

    /// Names of the solved coefficients.
    pub fn dependent_labels(&self) -> Vec<String> {
        self.elim.dependent.iter().map(|&c| self.label(c)).collect()
    }

    /// Solve for the dependent coefficients and build the ensemble.
    pub fn embed(&self, v: &[f64]) -> Result<Embedding, EnsembleError> {
        if v.len() != self.dim() {
            return Err(EnsembleError::Dimension { expected: self.dim(), got: v.len() });
        }
        if v.iter().any(|x| !(x.is_finite() && (0.0..=1.0).contains(x))) {
            return Ok(Embedding::Infeasible);
        }
        let free: Vec<f64> = v.iter().map(|&x| if x < SNAP_EPS { 0.0 } else { x }).collect();
        let mut z = self.elim.solve(&free);
        for &d in &self.elim.dependent {
            let x = z[d];
            if !(x.is_finite() && x >= -RANGE_EPS && x <= 1.0 + RANGE_EPS) {
                return Ok(Embedding::Infeasible);
            }
            z[d] = if x < SNAP_EPS { 0.0 } else { x.min(1.0) };
        }
        Ok(Embedding::Feasible(self.build(&z)?))
    }

    fn build(&self, z: &[f64]) -> Result<Ensemble, EnsembleError> {
        match &self.layout {
            Layout::Standard { lambda, rho } => {
                let nl = lambda.len();
                let dd = DegreeDistribution::new(
                    lambda.iter().copied().zip(z[..nl].iter().copied()),
                    rho.iter().copied().zip(z[nl..].iter().copied()),
                )?;
                Ok(Ensemble::Standard(dd))
            }
            Layout::Met(s) => {
                let nv = s.var_types.len();
                let vars = s
                    .var_types
                    .iter()
                    .zip(&z[..nv])
                    .filter(|(_, &c)| c > 0.0)
                    .map(|((p, d), &c)| VarType { punctured: *p, degrees: d.clone(), coeff: c })
                    .collect();
                let chks = s
                    .chk_types
                    .iter()
                    .zip(&z[nv..])
                    .filter(|(_, &c)| c > 0.0)
                    .map(|(d, &c)| ChkType { degrees: d.clone(), coeff: c })
                    .collect();
                Ok(Ensemble::Met(MetEnsemble::new(s.edge_classes, vars, chks)?))
            }
        }
    }

    /// Free coordinates of an ensemble with this structure.
    pub fn extract(&self, e: &Ensemble) -> Result<Vec<f64>, EnsembleError> {
        let z = self.coefficients(e)?;
        Ok(self.elim.free.iter().map(|&f| z[f]).collect())
    }

    fn coefficients(&self, e: &Ensemble) -> Result<Vec<f64>, EnsembleError> {
        match (&self.layout, e) {
            (Layout::Standard { lambda, rho }, Ensemble::Standard(dd)) => {
                let foreign = dd.lambda().keys().any(|d| !lambda.contains(d))
                    || dd.rho().keys().any(|d| !rho.contains(d));
                if foreign {
                    return Err(EnsembleError::Invalid("ensemble uses degrees outside the structure".into()));
                }
                let mut z: Vec<f64> = lambda.iter().map(|d| dd.lambda().get(d).copied().unwrap_or(0.0)).collect();
                z.extend(rho.iter().map(|d| dd.rho().get(d).copied().unwrap_or(0.0)));
                Ok(z)
            }
            (Layout::Met(s), Ensemble::Met(met)) => {
                let mut z = vec![0.0; s.var_types.len() + s.chk_types.len()];
                for v in met.var_types() {
                    let k = s
                        .var_types
                        .iter()
                        .position(|(p, d)| *p == v.punctured && *d == v.degrees)
                        .ok_or_else(|| EnsembleError::Invalid("variable type outside the structure".into()))?;
                    z[k] += v.coeff;
                }
                let nv = s.var_types.len();
                for c in met.chk_types() {
                    let k = s
                        .chk_types
                        .iter()
                        .position(|d| *d == c.degrees)
                        .ok_or_else(|| EnsembleError::Invalid("check type outside the structure".into()))?;
                    z[nv + k] += c.coeff;
                }
                Ok(z)
            }
            _ => Err(EnsembleError::Invalid("ensemble family does not match the structure".into())),
        }
    }

    /// Free coordinates that maximize the smallest coefficient, free or
    /// dependent, over the feasible polytope. `None` when no coefficient
    /// vector satisfies the constraints.
    pub fn interior_point(&self) -> Option<Vec<f64>> {
        let mut problem = Problem::new(OptimizationDirection::Maximize);
        let t = problem.add_var(1.0, (0.0, 1.0));
        let free: Vec<_> = (0..self.dim()).map(|_| problem.add_var(0.0, (0.0, 1.0))).collect();
        for &f in &free {
            problem.add_constraint([(f, 1.0), (t, -1.0)], ComparisonOp::Ge, 0.0);
        }
        for (offset, coeff) in self.elim.offset.iter().zip(&self.elim.coeff) {
            let mut terms: Vec<_> = free.iter().zip(coeff).filter(|(_, &c)| c != 0.0).map(|(&v, &c)| (v, -c)).collect();
            problem.add_constraint(terms.as_slice(), ComparisonOp::Le, 1.0 - offset);
            terms.push((t, -1.0));
            problem.add_constraint(terms.as_slice(), ComparisonOp::Ge, -offset);
        }
        let solution = problem.solve().ok()?;
        Some(free.iter().map(|&f| solution[f].clamp(0.0, 1.0)).collect())
    }

    /// Re-solve the dependent coefficients of `e` from its free coordinates,
    /// projecting a slightly inconsistent (e.g. rounded) ensemble onto the
    /// constraint surface.
    pub fn project(&self, e: &Ensemble) -> Result<Embedding, EnsembleError> {
        let v: Vec<f64> = self.extract(e)?.into_iter().map(|x| x.clamp(0.0, 1.0)).collect();
        self.embed(&v)
    }
}

fn sorted_unique(degrees: &[u32]) -> Result<Vec<u32>, EnsembleError> {
    let mut d = degrees.to_vec();
    d.sort_unstable();
    d.dedup();
    if let Some(&bad) = d.iter().find(|&&x| x < 2) {
        return Err(EnsembleError::BadDegree(bad));
    }
    Ok(d)
}

/// Is there any `z` in `[0, 1]^n` with `A z = b`?
fn lp_feasible(a: &[Vec<f64>], b: &[f64]) -> Result<(), EnsembleError> {
    let n = a.first().map_or(0, Vec::len);
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..n).map(|_| problem.add_var(0.0, (0.0, 1.0))).collect();
    for (row, &rhs) in a.iter().zip(b) {
        let terms: Vec<_> = vars.iter().zip(row).filter(|(_, &c)| c != 0.0).map(|(&v, &c)| (v, c)).collect();
        problem.add_constraint(terms.as_slice(), ComparisonOp::Eq, rhs);
    }
    problem
        .solve()
        .map(|_| ())
        .map_err(|e| EnsembleError::InfeasibleStructure(format!("no coefficients in [0, 1] satisfy the constraints ({e})")))
}
