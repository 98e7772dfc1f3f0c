use serde::{Deserialize, Serialize};

/// A permutation of `{0, …, ℓ−1}` in one-line notation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation {
    images: Vec<usize>,
    cycle_type: Vec<usize>,
}

impl Permutation {
    /// Panics if `images` is not a bijection of `0..images.len()`.
    pub fn new(images: Vec<usize>) -> Self {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            assert!(i < n && !seen[i], "not a permutation: {images:?}");
            seen[i] = true;
        }
        let cycle_type = cycle_type_of(&images);
        Self { images, cycle_type }
    }

    pub fn identity(n: usize) -> Self {
        Self::new((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    /// Cycle lengths in non-increasing order.
    pub fn cycle_type(&self) -> &[usize] {
        &self.cycle_type
    }

    pub fn num_cycles(&self) -> usize {
        self.cycle_type.len()
    }

    /// `self ∘ other`, i.e. apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.len(), other.len());
        Permutation::new(other.images.iter().map(|&i| self.images[i]).collect())
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.len()];
        for (i, &j) in self.images.iter().enumerate() {
            inv[j] = i;
        }
        Permutation::new(inv)
    }

    /// All `n!` permutations in lexicographic order.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut current: Vec<usize> = (0..n).collect();
        loop {
            out.push(Permutation::new(current.clone()));
            // next lexicographic permutation
            let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else { break };
            let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).unwrap();
            current.swap(i - 1, j);
            current[i..].reverse();
        }
        out
    }

    /// `Π_C Tr(M^{|C|})` from precomputed traces `power_traces[k] = Tr(M^k)`.
    pub fn trace_product(&self, power_traces: &[f64]) -> f64 {
        self.cycle_type.iter().map(|&k| power_traces[k]).product()
    }
}

fn cycle_type_of(images: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; images.len()];
    let mut lengths = Vec::new();
    for start in 0..images.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = images[i];
            len += 1;
        }
        lengths.push(len);
    }
    lengths.sort_unstable_by(|a, b| b.cmp(a));
    lengths
}

/// Integer partitions of `n`, each in non-increasing order.
pub(crate) fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 0 {
            out.push(prefix.clone());
            return;
        }
        for k in (1..=n.min(max)).rev() {
            prefix.push(k);
            rec(n - k, k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_and_cycle_types() {
        for n in 0..=6 {
            let all = Permutation::all(n);
            let fact: usize = (1..=n).product();
            assert_eq!(all.len(), fact);
            for p in &all {
                assert_eq!(p.cycle_type().iter().sum::<usize>(), n);
                assert_eq!(p.compose(&p.inverse()), Permutation::identity(n));
            }
        }
        assert_eq!(Permutation::new(vec![1, 2, 0, 4, 3]).cycle_type(), &[3, 2]);
        assert_eq!(partitions(4).len(), 5);
        assert_eq!(partitions(6).len(), 11);
    }

    #[test]
    fn composition_order() {
        let a = Permutation::new(vec![1, 0, 2]);
        let b = Permutation::new(vec![0, 2, 1]);
        // apply b then a: 0 → 0 → 1, 1 → 2 → 2, 2 → 1 → 0
        assert_eq!(a.compose(&b).images(), &[1, 2, 0]);
    }
}
