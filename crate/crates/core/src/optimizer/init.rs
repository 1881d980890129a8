use rand::seq::SliceRandom;
use rand::Rng;

use super::{Objective, Space};
use crate::rng;

/// Stratified population in `space`: along every axis the `np` values fall
/// one per equal-width cell, in an independently shuffled order; each
/// vector is then put in canonical form.
pub fn queens_move_init<R: Rng>(np: usize, space: &Space, rng: &mut R) -> Vec<Vec<f64>> {
    let mut pop = vec![Vec::with_capacity(space.dim()); np];
    let mut cells: Vec<usize> = (0..np).collect();
    for j in 0..space.dim() {
        cells.shuffle(rng);
        for (v, &k) in pop.iter_mut().zip(&cells) {
            let u: f64 = rng.gen();
            v.push(space.stratum(j, k, np, u));
        }
    }
    pop.into_iter().map(|v| space.canonical(v)).collect()
}

/// Stratified batches filtered by [`Objective::admissible`] until `np`
/// vectors are collected. After `batches` rounds the remainder comes from
/// the first batch: each vector is pulled toward [`Objective::anchor`],
/// halving the distance until it is admissible, or kept as drawn when there
/// is no anchor.
pub fn feasible_init<O: Objective>(np: usize, objective: &O, seed: u64, batches: usize) -> Vec<Vec<f64>> {
    let space = objective.space();
    let mut kept = Vec::with_capacity(np);
    let mut first = Vec::new();
    for b in 0..batches.max(1) {
        let batch = queens_move_init(np, space, &mut rng::stream(seed, 0, b as u64));
        for v in &batch {
            if kept.len() < np && objective.admissible(v) {
                kept.push(v.clone());
            }
        }
        if b == 0 {
            first = batch;
        }
        if kept.len() == np {
            return kept;
        }
    }
    let missing = np - kept.len();
    match objective.anchor() {
        Some(a) => kept.extend(first.iter().take(missing).map(|v| toward(objective, &a, v))),
        None => kept.extend(first.into_iter().take(missing)),
    }
    kept
}

/// First admissible point on the way from `v` to `anchor`, at distances
/// `1, 1/2, 1/4, ...` of the original gap.
fn toward<O: Objective>(objective: &O, anchor: &[f64], v: &[f64]) -> Vec<f64> {
    let mut s = 1.0;
    for _ in 0..60 {
        let p: Vec<f64> = anchor.iter().zip(v).map(|(a, x)| a + s * (x - a)).collect();
        let p = objective.space().repair(&p);
        if objective.admissible(&p) {
            return p;
        }
        s *= 0.5;
    }
    anchor.to_vec()
}
