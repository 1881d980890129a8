//! Check-node combination `2 atanh(tanh(a/2) tanh(b/2))` on the quantized
//! grid, via a memoized table over bin magnitudes.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::density::{Grid, QuantizedDensity};
use super::AwgnError;

/// Masses below this are skipped in the pairwise loop.
const NEGLIGIBLE: f64 = 1e-30;

pub(crate) struct BoxplusTable {
    n: usize,
    idx: Vec<u16>,
}

impl BoxplusTable {
    fn build(grid: Grid) -> Self {
        let n = grid.half_bins;
        let step = grid.step();
        let mut idx = vec![0u16; (n + 1) * (n + 1)];
        for a in 0..=n {
            for b in a..=n {
                let x = a as f64 * step;
                let y = b as f64 * step;
                // exact min-sum form: min(x, y) + ln(1+e^{-(x+y)}) - ln(1+e^{-|x-y|})
                let z = x.min(y) + (-(x + y)).exp().ln_1p() - (-(x - y).abs()).exp().ln_1p();
                let k = (z / step).round().clamp(0.0, a.min(b) as f64) as u16;
                idx[a * (n + 1) + b] = k;
                idx[b * (n + 1) + a] = k;
            }
        }
        Self { n, idx }
    }

    #[inline]
    fn row(&self, a: usize) -> &[u16] {
        &self.idx[a * (self.n + 1)..(a + 1) * (self.n + 1)]
    }
}

pub(crate) fn table_for(grid: Grid) -> Arc<BoxplusTable> {
    static TABLES: OnceLock<Mutex<HashMap<(usize, u64), Arc<BoxplusTable>>>> = OnceLock::new();
    let key = (grid.half_bins, grid.bound.to_bits());
    let tables = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = tables.lock().expect("boxplus table cache poisoned");
    guard.entry(key).or_insert_with(|| Arc::new(BoxplusTable::build(grid))).clone()
}

/// Density of `a [+] b` for independent probability densities `a`, `b`.
/// The output is rescaled to unit total mass.
pub fn boxplus_pair(a: &QuantizedDensity, b: &QuantizedDensity) -> Result<QuantizedDensity, AwgnError> {
    a.check_grid(b)?;
    let grid = a.grid;
    let n = grid.half_bins;
    let table = table_for(grid);
    let mut pos = vec![0.0; n + 1];
    let mut neg = vec![0.0; n + 1];

    let a_fin: f64 = a.mass.iter().sum();
    let b_fin: f64 = b.mass.iter().sum();
    // either side at exactly zero erases the output
    let mut zero = a.zero_mass() * b_fin + b.zero_mass() * (a_fin - a.zero_mass());

    let live_b: Vec<(usize, f64, f64)> = (1..=n)
        .map(|k| (k, b.mass[n + k], b.mass[n - k]))
        .filter(|&(_, p, q)| p + q > NEGLIGIBLE)
        .collect();
    for m in 1..=n {
        let (ap, an) = (a.mass[n + m], a.mass[n - m]);
        if ap + an <= NEGLIGIBLE {
            continue;
        }
        let row = table.row(m);
        for &(k, bp, bn) in &live_b {
            let r = row[k] as usize;
            let same = ap * bp + an * bn;
            let diff = ap * bn + an * bp;
            if r == 0 {
                zero += same + diff;
            } else {
                pos[r] += same;
                neg[r] += diff;
            }
        }
    }

    let mut mass = vec![0.0; grid.bins()];
    mass[n] = zero;
    for r in 1..=n {
        mass[n + r] = pos[r];
        mass[n - r] = neg[r];
    }
    // +inf [+] y = y and -inf [+] y = -y; b's atoms against a's finite part
    let b_neg = b.negated();
    let a_neg = a.negated();
    for i in 0..mass.len() {
        mass[i] += a.pos_inf * b.mass[i] + a.neg_inf * b_neg.mass[i];
        mass[i] += b.pos_inf * a.mass[i] + b.neg_inf * a_neg.mass[i];
    }
    let pos_inf = a.pos_inf * b.pos_inf + a.neg_inf * b.neg_inf;
    let neg_inf = a.pos_inf * b.neg_inf + a.neg_inf * b.pos_inf;
    super::conv::renormalize(&mut mass, 1.0 - pos_inf - neg_inf);
    Ok(QuantizedDensity { grid, mass, pos_inf, neg_inf })
}

/// Check-node output density for independent inputs, combined left to
/// right. A single input passes through unchanged.
pub fn chk_update(incoming: &[&QuantizedDensity]) -> Result<QuantizedDensity, AwgnError> {
    let (first, rest) = incoming.split_first().ok_or(AwgnError::Empty)?;
    let mut acc = (*first).clone();
    for d in rest {
        acc = boxplus_pair(&acc, d)?;
    }
    Ok(acc)
}
