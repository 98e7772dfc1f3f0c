use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::perm::{partitions, Permutation};
use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 6;

/// Unitary Weingarten function `Wg(·, d)` on `S_ℓ`, stored per cycle type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeingartenTable {
    pub order: usize,
    pub dim: usize,
    /// `(cycle type, value)` pairs, one per conjugacy class.
    pub classes: Vec<(Vec<usize>, f64)>,
}

impl WeingartenTable {
    pub fn by_cycle_type(&self, cycle_type: &[usize]) -> f64 {
        self.classes
            .iter()
            .find(|(c, _)| c.as_slice() == cycle_type)
            .map(|(_, v)| *v)
            .expect("cycle type of a permutation of the table's order")
    }

    pub fn value(&self, pi: &Permutation) -> f64 {
        assert_eq!(pi.len(), self.order);
        self.by_cycle_type(pi.cycle_type())
    }
}

/// Solve `Σ_τ d^{#cycles(στ⁻¹)} Wg(τ) = [σ = e]` with the unknowns collapsed
/// onto conjugacy classes.
pub fn weingarten_table(order: usize, d: usize) -> Result<WeingartenTable> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::UnsupportedRange(format!("Weingarten order {order} outside 1..={MAX_ORDER}")));
    }
    if d < order {
        return Err(Error::UnsupportedRange(format!("Gram matrix is singular for d = {d} < order = {order}")));
    }
    let classes = partitions(order);
    let index: BTreeMap<&[usize], usize> = classes.iter().enumerate().map(|(i, c)| (c.as_slice(), i)).collect();
    let perms = Permutation::all(order);
    let k = classes.len();
    // one representative σ per class
    let mut reps: Vec<Option<&Permutation>> = vec![None; k];
    for p in &perms {
        let c = index[p.cycle_type()];
        reps[c].get_or_insert(p);
    }
    let df = d as f64;
    let mut gram = DMatrix::<f64>::zeros(k, k);
    for (row, rep) in reps.iter().enumerate() {
        let sigma = rep.expect("every partition is a cycle type");
        for tau in &perms {
            let cycles = sigma.compose(&tau.inverse()).num_cycles();
            gram[(row, index[tau.cycle_type()])] += df.powi(cycles as i32);
        }
    }
    let mut rhs = DVector::<f64>::zeros(k);
    rhs[index[vec![1; order].as_slice()]] = 1.0;
    let solution = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::UnsupportedRange(format!("Gram matrix singular at d = {d}, order = {order}")))?;
    Ok(WeingartenTable { order, dim: d, classes: classes.into_iter().zip(solution.iter().copied()).collect() })
}
