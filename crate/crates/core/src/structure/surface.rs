use std::collections::{BTreeMap, VecDeque};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::OuterObjective;
use crate::optimizer::Objective;
use crate::threshold::CandidateEvaluator;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("unknown coordinate {0}")]
    Unknown(String),
    #[error("coordinate {0} is bound more than once")]
    Duplicate(String),
    #[error("coordinate {0} is neither an axis nor fixed")]
    Unbound(String),
    #[error("axis {0} needs at least one point and lo <= hi")]
    BadAxis(String),
    #[error("value {value} for {coordinate} is outside its range")]
    OutOfRange { coordinate: String, value: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceAxis {
    pub coordinate: String,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl SurfaceAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.lo];
        }
        (0..self.points).map(|k| self.lo + (self.hi - self.lo) * k as f64 / (self.points - 1) as f64).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    pub axes: [SurfaceAxis; 2],
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SurfaceCell {
    pub coord1: f64,
    pub coord2: f64,
    pub threshold: f64,
    pub feasible: bool,
}

/// Row-major grid: `coord1` varies slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct CostSurface {
    pub labels: [String; 2],
    pub n1: usize,
    pub n2: usize,
    pub cells: Vec<SurfaceCell>,
}

/// What the grid is evaluated on.
pub enum SurfaceTarget<'a> {
    /// Free coefficients of a fixed structure.
    Coefficients(&'a CandidateEvaluator),
    /// Integer structure coordinates, each cell an inner AR run.
    Structure(&'a OuterObjective),
}

impl<'a> From<&'a CandidateEvaluator> for SurfaceTarget<'a> {
    fn from(e: &'a CandidateEvaluator) -> Self {
        SurfaceTarget::Coefficients(e)
    }
}

impl<'a> From<&'a OuterObjective> for SurfaceTarget<'a> {
    fn from(o: &'a OuterObjective) -> Self {
        SurfaceTarget::Structure(o)
    }
}

impl SurfaceTarget<'_> {
    fn labels(&self) -> Vec<String> {
        match self {
            SurfaceTarget::Coefficients(e) => e.param.free_labels(),
            SurfaceTarget::Structure(o) => o.spec().coordinate_labels(),
        }
    }

    fn cell(&self, v: &[f64]) -> Result<(f64, bool), SurfaceError> {
        match self {
            SurfaceTarget::Coefficients(e) => Ok(match e.try_threshold(v) {
                Some(t) => (t, true),
                None => (0.0, false),
            }),
            SurfaceTarget::Structure(o) => {
                let space = o.space();
                let v: Vec<f64> = v.iter().map(|x| x.round()).collect();
                if let Some(j) = (0..v.len()).find(|&j| v[j] < space.bounds(j).0 || v[j] > space.bounds(j).1) {
                    return Err(SurfaceError::OutOfRange { coordinate: o.spec().coordinate_labels()[j].clone(), value: v[j] });
                }
                let out = o.outer_objective(&o.spec().decode(&v));
                Ok((out.threshold, out.ensemble.is_some()))
            }
        }
    }
}

/// Evaluate every grid cell; infeasible cells are flagged separately from
/// feasible cells whose threshold is zero.
pub fn export_cost_surface<'a>(target: impl Into<SurfaceTarget<'a>>, cfg: &SurfaceConfig) -> Result<CostSurface, SurfaceError> {
    let target = target.into();
    let labels = target.labels();
    let mut slot: Vec<Option<usize>> = vec![None; labels.len()];
    let mut base = vec![0.0; labels.len()];
    let index = |name: &str| labels.iter().position(|l| l == name).ok_or_else(|| SurfaceError::Unknown(name.to_string()));
    for (a, axis) in cfg.axes.iter().enumerate() {
        if axis.points == 0 || axis.lo > axis.hi || !axis.lo.is_finite() || !axis.hi.is_finite() {
            return Err(SurfaceError::BadAxis(axis.coordinate.clone()));
        }
        let j = index(&axis.coordinate)?;
        if slot[j].replace(a).is_some() {
            return Err(SurfaceError::Duplicate(axis.coordinate.clone()));
        }
    }
    let mut bound: Vec<bool> = slot.iter().map(Option::is_some).collect();
    for (name, &value) in &cfg.fixed {
        let j = index(name)?;
        if bound[j] {
            return Err(SurfaceError::Duplicate(name.clone()));
        }
        bound[j] = true;
        base[j] = value;
    }
    if let Some(j) = bound.iter().position(|b| !b) {
        return Err(SurfaceError::Unbound(labels[j].clone()));
    }
    let v1 = cfg.axes[0].values();
    let v2 = cfg.axes[1].values();
    let (j1, j2) = (index(&cfg.axes[0].coordinate)?, index(&cfg.axes[1].coordinate)?);
    let points: Vec<(f64, f64)> = v1.iter().flat_map(|&a| v2.iter().map(move |&b| (a, b))).collect();
    let cells = points
        .par_iter()
        .map(|&(a, b)| {
            let mut v = base.clone();
            v[j1] = a;
            v[j2] = b;
            let (threshold, feasible) = target.cell(&v)?;
            Ok(SurfaceCell { coord1: a, coord2: b, threshold, feasible })
        })
        .collect::<Result<Vec<_>, SurfaceError>>()?;
    Ok(CostSurface {
        labels: [cfg.axes[0].coordinate.clone(), cfg.axes[1].coordinate.clone()],
        n1: v1.len(),
        n2: v2.len(),
        cells,
    })
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let k = 10f64.powi(decimals);
    (x * k).round() / k
}

impl CostSurface {
    pub fn get(&self, i: usize, j: usize) -> &SurfaceCell {
        &self.cells[i * self.n2 + j]
    }

    /// Feasible cell with the largest threshold (first in row-major order).
    pub fn argmax(&self) -> Option<(usize, usize)> {
        let mut best: Option<(usize, f64)> = None;
        for (k, c) in self.cells.iter().enumerate() {
            if c.feasible && best.map_or(true, |(_, t)| c.threshold > t) {
                best = Some((k, c.threshold));
            }
        }
        best.map(|(k, _)| (k / self.n2, k % self.n2))
    }

    /// The up to eight cells one king move away.
    fn neighbours(&self, i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (i, j) = (i as isize, j as isize);
        let steps = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];
        steps.into_iter().filter_map(move |(di, dj)| {
            let (a, b) = (i + di, j + dj);
            (a >= 0 && b >= 0 && (a as usize) < self.n1 && (b as usize) < self.n2).then_some((a as usize, b as usize))
        })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        if self.cells.is_empty() {
            out.write_record(["coord1", "coord2", "threshold", "feasible"])?;
        }
        for c in &self.cells {
            out.serialize(c)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Cells within `tol` of the maximum that cannot reach the maximum cell
/// along a path of feasible neighbouring cells (diagonals included) whose thresholds, rounded to
/// `decimals`, never decrease. An empty result means the surface is
/// unimodal at that resolution.
pub fn nondecreasing_path_check(s: &CostSurface, tol: f64, decimals: i32) -> Vec<(usize, usize)> {
    let Some((mi, mj)) = s.argmax() else { return Vec::new() };
    let top = s.get(mi, mj).threshold;
    let r = |i: usize, j: usize| round_to(s.get(i, j).threshold, decimals);
    let mut seen = vec![false; s.cells.len()];
    let mut queue = VecDeque::from([(mi, mj)]);
    seen[mi * s.n2 + mj] = true;
    // walk downhill from the maximum; reversed, these are uphill paths
    while let Some((i, j)) = queue.pop_front() {
        for (a, b) in s.neighbours(i, j) {
            let k = a * s.n2 + b;
            if !seen[k] && s.get(a, b).feasible && r(a, b) <= r(i, j) {
                seen[k] = true;
                queue.push_back((a, b));
            }
        }
    }
    (0..s.cells.len())
        .filter(|&k| s.cells[k].feasible && s.cells[k].threshold >= top - tol && !seen[k])
        .map(|k| (k / s.n2, k % s.n2))
        .collect()
}

/// Plateaus of equal rounded threshold (8-connected, feasible, positive)
/// whose every outside neighbour is strictly lower.
pub fn strict_local_maxima(s: &CostSurface, decimals: i32) -> Vec<Vec<(usize, usize)>> {
    let r = |i: usize, j: usize| round_to(s.get(i, j).threshold, decimals);
    let live = |i: usize, j: usize| s.get(i, j).feasible && s.get(i, j).threshold > 0.0;
    let mut label = vec![usize::MAX; s.cells.len()];
    let mut maxima = Vec::new();
    for start in 0..s.cells.len() {
        let (i0, j0) = (start / s.n2, start % s.n2);
        if label[start] != usize::MAX || !live(i0, j0) {
            continue;
        }
        let level = r(i0, j0);
        let mut plateau = Vec::new();
        let mut is_max = true;
        let mut queue = VecDeque::from([(i0, j0)]);
        label[start] = start;
        while let Some((i, j)) = queue.pop_front() {
            plateau.push((i, j));
            for (a, b) in s.neighbours(i, j) {
                let k = a * s.n2 + b;
                let v = if live(a, b) { r(a, b) } else { f64::NEG_INFINITY };
                if v > level {
                    is_max = false;
                } else if v == level && label[k] == usize::MAX {
                    label[k] = start;
                    queue.push_back((a, b));
                }
            }
        }
        if is_max {
            maxima.push(plateau);
        }
    }
    maxima
}
