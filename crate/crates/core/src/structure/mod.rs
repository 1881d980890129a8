//! Outer search over degree structures. A structure fixes which degrees
//! (or MET node types) may carry mass; its score is the best threshold the
//! inner AR optimizer finds for the coefficients.

mod outer;
mod surface;

pub use outer::{outer_ar, outer_dife, outer_optimize, outer_random, InnerOutcome, OuterObjective, OuterResult};
pub use surface::{
    export_cost_surface, nondecreasing_path_check, strict_local_maxima, CostSurface, SurfaceAxis, SurfaceCell,
    SurfaceConfig, SurfaceError, SurfaceTarget,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensemble::{EnsembleError, MetStructure, Parameterization};
use crate::optimizer::Space;
use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GateError {
    #[error("{what} has {got} degrees, at most {max} allowed")]
    TooMany { what: &'static str, got: usize, max: usize },
    #[error("{what} degree {got} outside [{min}, {max}]")]
    OutOfRange { what: &'static str, got: u32, min: u32, max: u32 },
    #[error("structure kind does not match the spec")]
    Kind,
    #[error("{0}")]
    Met(String),
}

/// Degree budget for standard ensembles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandardSpec {
    pub rate: f64,
    /// Most distinct variable degrees.
    pub lambda_max: usize,
    /// Most distinct check degrees.
    pub gamma_max: usize,
    pub dv_max: u32,
    pub dc_max: u32,
    #[serde(default = "two")]
    pub dv_min: u32,
    #[serde(default = "two")]
    pub dc_min: u32,
}

fn two() -> u32 {
    2
}

/// One MET node-type slot: an inclusive degree range per edge class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetSlot {
    #[serde(default)]
    pub punctured: bool,
    pub degrees: Vec<(u32, u32)>,
}

/// Fixed number of variable and check slots. A slot whose degrees all
/// come out zero is dropped from the structure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetSpec {
    pub rate: f64,
    pub m_e: usize,
    pub var_slots: Vec<MetSlot>,
    pub chk_slots: Vec<MetSlot>,
    /// Cap on the total degree of any variable node type.
    #[serde(default)]
    pub dv_max: Option<u32>,
    /// Cap on the total degree of any check node type.
    #[serde(default)]
    pub dc_max: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum StructureSpec {
    Standard(StandardSpec),
    Met(MetSpec),
}

/// A concrete structure in canonical form: sorted, duplicate-free.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StructureCandidate {
    Standard { lambda: Vec<u32>, gamma: Vec<u32> },
    Met(MetStructure),
}

impl StructureCandidate {
    pub fn standard(lambda: &[u32], gamma: &[u32]) -> Self {
        let canon = |v: &[u32]| {
            let mut v = v.to_vec();
            v.sort_unstable();
            v.dedup();
            v
        };
        StructureCandidate::Standard { lambda: canon(lambda), gamma: canon(gamma) }
    }

    /// Drops all-zero node types, then sorts and merges duplicates.
    pub fn met(s: &MetStructure) -> Self {
        let mut var_types: Vec<_> = s.var_types.iter().filter(|(_, d)| d.iter().any(|&x| x > 0)).cloned().collect();
        var_types.sort();
        var_types.dedup();
        let mut chk_types: Vec<_> = s.chk_types.iter().filter(|d| d.iter().any(|&x| x > 0)).cloned().collect();
        chk_types.sort();
        chk_types.dedup();
        StructureCandidate::Met(MetStructure { edge_classes: s.edge_classes, var_types, chk_types })
    }

    /// Stable integer key for seeding and hashing.
    pub fn key(&self) -> Vec<u64> {
        let mut k = Vec::new();
        match self {
            StructureCandidate::Standard { lambda, gamma } => {
                k.push(0);
                k.push(lambda.len() as u64);
                k.extend(lambda.iter().map(|&d| u64::from(d)));
                k.push(gamma.len() as u64);
                k.extend(gamma.iter().map(|&d| u64::from(d)));
            }
            StructureCandidate::Met(s) => {
                k.push(1);
                k.push(s.edge_classes as u64);
                k.push(s.var_types.len() as u64);
                for (p, d) in &s.var_types {
                    k.push(u64::from(*p));
                    k.extend(d.iter().map(|&x| u64::from(x)));
                }
                k.push(s.chk_types.len() as u64);
                for d in &s.chk_types {
                    k.extend(d.iter().map(|&x| u64::from(x)));
                }
            }
        }
        k
    }

    pub fn seed(&self, outer_seed: u64) -> u64 {
        rng::derive(outer_seed, rng::fnv1a(self.key()))
    }

    pub fn parameterize(&self, rate: f64) -> Result<Parameterization, EnsembleError> {
        match self {
            StructureCandidate::Standard { lambda, gamma } => Parameterization::standard(lambda, gamma, rate),
            StructureCandidate::Met(s) => Parameterization::met(s, rate),
        }
    }
}

impl std::fmt::Display for StructureCandidate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StructureCandidate::Standard { lambda, gamma } => write!(f, "lambda={lambda:?} rho={gamma:?}"),
            StructureCandidate::Met(s) => {
                let v: Vec<String> =
                    s.var_types.iter().map(|(p, d)| format!("{}{d:?}", if *p { "p" } else { "" })).collect();
                let c: Vec<String> = s.chk_types.iter().map(|d| format!("{d:?}")).collect();
                write!(f, "var={} chk={}", v.join(" "), c.join(" "))
            }
        }
    }
}

impl StructureSpec {
    pub fn rate(&self) -> f64 {
        match self {
            StructureSpec::Standard(s) => s.rate,
            StructureSpec::Met(s) => s.rate,
        }
    }

    /// Integer search space: one coordinate per degree slot, or per MET
    /// slot-class pair whose range is not a single value. Standard degree
    /// slots are exchangeable within the variable and check groups.
    pub fn space(&self) -> Space {
        match self {
            StructureSpec::Standard(s) => {
                let mut lo = vec![i64::from(s.dv_min); s.lambda_max];
                let mut hi = vec![i64::from(s.dv_max); s.lambda_max];
                lo.extend(std::iter::repeat(i64::from(s.dc_min)).take(s.gamma_max));
                hi.extend(std::iter::repeat(i64::from(s.dc_max)).take(s.gamma_max));
                let n = s.lambda_max + s.gamma_max;
                Space::integer(lo, hi).with_exchangeable(vec![0..s.lambda_max, s.lambda_max..n])
            }
            StructureSpec::Met(s) => {
                let (lo, hi) = s.free_slots().map(|(_, _, (a, b))| (i64::from(a), i64::from(b))).unzip();
                Space::integer(lo, hi)
            }
        }
    }

    /// Names of the coordinates of [`StructureSpec::space`].
    pub fn coordinate_labels(&self) -> Vec<String> {
        match self {
            StructureSpec::Standard(s) => (1..=s.lambda_max)
                .map(|k| format!("lambda_slot{k}"))
                .chain((1..=s.gamma_max).map(|k| format!("rho_slot{k}")))
                .collect(),
            StructureSpec::Met(s) => s.free_slots().map(|(slot, class, _)| slot_label(slot, class)).collect(),
        }
    }

    pub fn decode(&self, v: &[f64]) -> StructureCandidate {
        let deg = |x: f64| x.round().max(0.0) as u32;
        match self {
            StructureSpec::Standard(s) => {
                let lambda: Vec<u32> = v[..s.lambda_max].iter().map(|&x| deg(x)).collect();
                let gamma: Vec<u32> = v[s.lambda_max..].iter().map(|&x| deg(x)).collect();
                StructureCandidate::standard(&lambda, &gamma)
            }
            StructureSpec::Met(s) => {
                let mut var: Vec<(bool, Vec<u32>)> =
                    s.var_slots.iter().map(|sl| (sl.punctured, sl.degrees.iter().map(|r| r.0).collect())).collect();
                let mut chk: Vec<Vec<u32>> = s.chk_slots.iter().map(|sl| sl.degrees.iter().map(|r| r.0).collect()).collect();
                for ((slot, class, _), &x) in s.free_slots().zip(v) {
                    match slot {
                        Slot::Var(k) => var[k].1[class] = deg(x),
                        Slot::Chk(k) => chk[k][class] = deg(x),
                    }
                }
                StructureCandidate::met(&MetStructure { edge_classes: s.m_e, var_types: var, chk_types: chk })
            }
        }
    }

    /// Degree-budget constraints: counts and caps on the allowed degrees.
    pub fn admits(&self, c: &StructureCandidate) -> Result<(), GateError> {
        match (self, c) {
            (StructureSpec::Standard(s), StructureCandidate::Standard { lambda, gamma }) => {
                count("variable", lambda.len(), s.lambda_max)?;
                count("check", gamma.len(), s.gamma_max)?;
                range("variable", lambda, s.dv_min, s.dv_max)?;
                range("check", gamma, s.dc_min, s.dc_max)
            }
            (StructureSpec::Met(s), StructureCandidate::Met(m)) => s.admits(m),
            _ => Err(GateError::Kind),
        }
    }

    pub fn validate(&self) -> Result<(), GateError> {
        match self {
            StructureSpec::Standard(s) => {
                if s.lambda_max == 0 || s.gamma_max == 0 {
                    return Err(GateError::Met("need at least one variable and one check degree".into()));
                }
                if s.dv_min < 2 || s.dc_min < 2 || s.dv_min > s.dv_max || s.dc_min > s.dc_max {
                    return Err(GateError::Met("degree ranges must satisfy 2 <= min <= max".into()));
                }
                Ok(())
            }
            StructureSpec::Met(s) => s.validate(),
        }
    }
}

fn count(what: &'static str, got: usize, max: usize) -> Result<(), GateError> {
    if got > max {
        Err(GateError::TooMany { what, got, max })
    } else {
        Ok(())
    }
}

fn range(what: &'static str, degs: &[u32], min: u32, max: u32) -> Result<(), GateError> {
    match degs.iter().find(|&&d| d < min || d > max) {
        Some(&got) => Err(GateError::OutOfRange { what, got, min, max }),
        None => Ok(()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Slot {
    Var(usize),
    Chk(usize),
}

fn slot_label(slot: Slot, class: usize) -> String {
    match slot {
        Slot::Var(k) => format!("var{}.class{}", k + 1, class + 1),
        Slot::Chk(k) => format!("chk{}.class{}", k + 1, class + 1),
    }
}

impl MetSpec {
    pub(crate) fn free_slots(&self) -> impl Iterator<Item = (Slot, usize, (u32, u32))> + '_ {
        let vars = self
            .var_slots
            .iter()
            .enumerate()
            .flat_map(|(k, s)| s.degrees.iter().enumerate().map(move |(m, &r)| (Slot::Var(k), m, r)));
        let chks = self
            .chk_slots
            .iter()
            .enumerate()
            .flat_map(|(k, s)| s.degrees.iter().enumerate().map(move |(m, &r)| (Slot::Chk(k), m, r)));
        vars.chain(chks).filter(|&(_, _, (a, b))| b > a)
    }

    fn validate(&self) -> Result<(), GateError> {
        if self.m_e == 0 || self.var_slots.is_empty() || self.chk_slots.is_empty() {
            return Err(GateError::Met("need edge classes, variable slots and check slots".into()));
        }
        for (k, s) in self.var_slots.iter().chain(&self.chk_slots).enumerate() {
            if s.degrees.len() != self.m_e {
                return Err(GateError::Met(format!("slot {} lists {} classes, expected {}", k + 1, s.degrees.len(), self.m_e)));
            }
            if let Some(&(a, b)) = s.degrees.iter().find(|(a, b)| a > b) {
                return Err(GateError::Met(format!("empty degree range [{a}, {b}]")));
            }
        }
        Ok(())
    }

    fn admits(&self, m: &MetStructure) -> Result<(), GateError> {
        if m.edge_classes != self.m_e {
            return Err(GateError::Met(format!("structure has {} edge classes, spec {}", m.edge_classes, self.m_e)));
        }
        count("variable node type", m.var_types.len(), self.var_slots.len())?;
        count("check node type", m.chk_types.len(), self.chk_slots.len())?;
        for (p, d) in &m.var_types {
            let ok = self.var_slots.iter().any(|s| s.punctured == *p && fits(&s.degrees, d));
            if !ok {
                return Err(GateError::Met(format!("variable type {d:?} matches no slot")));
            }
            if let Some(max) = self.dv_max {
                range("variable", &[d.iter().sum()], 1, max)?;
            }
        }
        for d in &m.chk_types {
            if !self.chk_slots.iter().any(|s| fits(&s.degrees, d)) {
                return Err(GateError::Met(format!("check type {d:?} matches no slot")));
            }
            if let Some(max) = self.dc_max {
                range("check", &[d.iter().sum()], 1, max)?;
            }
        }
        Ok(())
    }
}

fn fits(ranges: &[(u32, u32)], d: &[u32]) -> bool {
    ranges.len() == d.len() && ranges.iter().zip(d).all(|(&(a, b), &x)| x >= a && x <= b)
}
