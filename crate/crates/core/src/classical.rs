//! Classical distribution tools: the ℓ2 two-sample tester, discrete
//! divergences, and the ℓ_{2/3} functional.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::PSD_TOL;

/// Per-symbol counts of `N` samples over a finite domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCounts {
    counts: Vec<u64>,
}

impl SampleCounts {
    pub fn new(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    pub fn from_samples(domain: usize, samples: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut counts = vec![0u64; domain];
        for s in samples {
            *counts
                .get_mut(s)
                .ok_or_else(|| Error::InvalidParameter(format!("sample {s} outside domain of size {domain}")))? += 1;
        }
        Ok(Self { counts })
    }

    pub fn domain(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn empirical(&self) -> Vec<f64> {
        let n = self.total() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

fn check_pair(x: &SampleCounts, y: &SampleCounts) -> Result<u64> {
    if x.domain() != y.domain() {
        return Err(Error::DimensionMismatch { expected: x.domain(), found: y.domain() });
    }
    let (nx, ny) = (x.total(), y.total());
    if nx != ny {
        return Err(Error::InvalidParameter(format!("sample sizes differ: {nx} vs {ny}")));
    }
    Ok(nx)
}

/// `Z = Σ_i [(X_i − Y_i)² − X_i − Y_i]`, computed exactly.
pub fn collision_statistic(x: &SampleCounts, y: &SampleCounts) -> Result<i128> {
    check_pair(x, y)?;
    Ok(x.counts
        .iter()
        .zip(&y.counts)
        .map(|(&a, &b)| {
            let (a, b) = (a as i128, b as i128);
            (a - b) * (a - b) - a - b
        })
        .sum())
}

/// `Z + (Σ X_i(X_i−1) + Σ Y_i(Y_i−1))/(N−1)`, whose mean is exactly
/// `N²‖p − q‖₂²` when `X` and `Y` are independent multinomial counts.
///
/// The bare collision statistic has mean `N²‖p−q‖² − N(‖p‖² + ‖q‖²)`; the
/// second term is estimated without bias from the self-collisions.
pub fn unbiased_statistic(x: &SampleCounts, y: &SampleCounts) -> Result<f64> {
    let n = check_pair(x, y)?;
    let z = collision_statistic(x, y)?;
    if n < 2 {
        return Ok(z as f64);
    }
    let self_pairs: i128 = x
        .counts
        .iter()
        .chain(&y.counts)
        .map(|&c| {
            let c = c as i128;
            c * (c - 1)
        })
        .sum();
    Ok(z as f64 + self_pairs as f64 / (n - 1) as f64)
}

/// Result of the repeated two-sample test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleOutcome {
    /// Majority verdict: `true` when more than half of the repetitions rejected.
    pub reject: bool,
    pub rejections: usize,
    pub statistics: Vec<f64>,
    pub threshold: Vec<f64>,
}

/// Does a single repetition reject? Rejects when the statistic exceeds
/// `N²ε²/2`; equality accepts.
pub fn l2_single_round(x: &SampleCounts, y: &SampleCounts, eps: f64) -> Result<(bool, f64, f64)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("l2 gap {eps} must be positive")));
    }
    let n = check_pair(x, y)? as f64;
    let z = unbiased_statistic(x, y)?;
    let threshold = n * n * eps * eps / 2.0;
    Ok((z > threshold, z, threshold))
}

/// Distinguish `p = q` from `‖p − q‖₂ > ε` by a majority vote over the
/// supplied repetitions (one `(X, Y)` pair each).
pub fn l2_two_sample_test(x: &[SampleCounts], y: &[SampleCounts], eps: f64) -> Result<TwoSampleOutcome> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::InvalidParameter("need the same positive number of repetitions on both sides".into()));
    }
    let mut statistics = Vec::with_capacity(x.len());
    let mut threshold = Vec::with_capacity(x.len());
    let mut rejections = 0;
    for (a, b) in x.iter().zip(y) {
        let (r, z, t) = l2_single_round(a, b, eps)?;
        rejections += r as usize;
        statistics.push(z);
        threshold.push(t);
    }
    Ok(TwoSampleOutcome { reject: 2 * rejections > x.len(), rejections, statistics, threshold })
}

fn check_distribution(p: &[f64]) -> Result<()> {
    if let Some(x) = p.iter().find(|x| !(**x >= 0.0)) {
        return Err(Error::InvalidParameter(format!("probability {x} is negative")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > PSD_TOL {
        return Err(Error::InvalidParameter(format!("probabilities sum to {total}")));
    }
    Ok(())
}

fn check_pair_dist(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), found: q.len() });
    }
    check_distribution(p)?;
    check_distribution(q)
}

/// `½ Σ |p_i − q_i|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    check_pair_dist(p, q)?;
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// `Σ (p_i − q_i)²/q_i`; requires `q_i > 0` wherever `p_i > 0`.
pub fn chi_squared(p: &[f64], q: &[f64]) -> Result<f64> {
    check_pair_dist(p, q)?;
    let mut s = 0.0;
    for (i, (&a, &b)) in p.iter().zip(q).enumerate() {
        if b > 0.0 {
            s += (a - b) * (a - b) / b;
        } else if a > 0.0 {
            return Err(Error::InvalidParameter(format!("symbol {i} has mass under p but not under q")));
        }
    }
    Ok(s)
}

/// `Σ p_i log(p_i/q_i)` in nats; infinite when `p` is not dominated by `q`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    check_pair_dist(p, q)?;
    let mut s = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            s += a * (a / b).ln();
        }
    }
    Ok(s.max(0.0))
}

/// Zero the largest entry, then the smallest entries while their total stays
/// within `ε`, and return the 2/3-quasinorm `(Σ x_i^{2/3})^{3/2}` of the rest.
pub fn l23_functional(p: &[f64], eps: f64) -> Result<f64> {
    check_distribution(p)?;
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon {eps} must be nonnegative")));
    }
    let mut order: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    order.pop();
    let mut removed = 0.0;
    let mut start = 0;
    for &i in &order {
        if removed + p[i] > eps + 1e-12 {
            break;
        }
        removed += p[i];
        start += 1;
    }
    let s: f64 = order[start..].iter().map(|&i| p[i].powf(2.0 / 3.0)).sum();
    Ok(s.powf(1.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{sample_multinomial, RngHandle};

    #[test]
    fn statistic_examples() {
        let x = SampleCounts::new(vec![3, 5, 2]);
        assert_eq!(collision_statistic(&x, &x).unwrap(), -20);
        assert!(!l2_single_round(&x, &x, 0.1).unwrap().0);
        let n = 50u64;
        let a = SampleCounts::new(vec![n, 0]);
        let b = SampleCounts::new(vec![0, n]);
        assert_eq!(collision_statistic(&a, &b).unwrap(), 2 * (n as i128) * (n as i128 - 1));
        assert!(l2_single_round(&a, &b, 1.0).unwrap().0);
        assert!(collision_statistic(&a, &SampleCounts::new(vec![1, 1])).is_err());
    }

    #[test]
    fn unbiased_under_null() {
        let mut rng = RngHandle::new(1, 0).rng();
        let p = vec![1.0 / 16.0; 16];
        let trials = 10_000;
        let zs: Vec<f64> = (0..trials)
            .map(|_| {
                let x = SampleCounts::new(sample_multinomial(400, &p, &mut rng).unwrap());
                let y = SampleCounts::new(sample_multinomial(400, &p, &mut rng).unwrap());
                unbiased_statistic(&x, &y).unwrap()
            })
            .collect();
        let mean = zs.iter().sum::<f64>() / trials as f64;
        let var = zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        assert!(mean.abs() <= 3.0 * (var / trials as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn single_round_power() {
        let mut rng = RngHandle::new(2, 0).rng();
        let d = 20;
        let eps = 0.02;
        // p uniform, q moves mass between two symbols so that ‖p−q‖₂ = 2ε
        let p = vec![1.0 / d as f64; d];
        let shift = 2.0 * eps / 2f64.sqrt();
        let mut q = p.clone();
        q[0] += shift;
        q[1] -= shift;
        let b = p.iter().map(|x| x * x).sum::<f64>().sqrt().max(q.iter().map(|x| x * x).sum::<f64>().sqrt());
        let n = (8.0 * b / (eps * eps)).ceil() as u64;
        let trials = 1000;
        let rejections = (0..trials)
            .filter(|_| {
                let x = SampleCounts::new(sample_multinomial(n, &p, &mut rng).unwrap());
                let y = SampleCounts::new(sample_multinomial(n, &q, &mut rng).unwrap());
                l2_single_round(&x, &y, eps).unwrap().0
            })
            .count();
        assert!(rejections as f64 >= 2.0 / 3.0 * trials as f64, "{rejections}");
    }

    #[test]
    fn majority_vote() {
        let same = SampleCounts::new(vec![4, 4]);
        let far_a = SampleCounts::new(vec![8, 0]);
        let far_b = SampleCounts::new(vec![0, 8]);
        let out = l2_two_sample_test(
            &[same.clone(), far_a.clone(), far_a.clone()],
            &[same.clone(), far_b.clone(), far_b.clone()],
            0.5,
        )
        .unwrap();
        assert!(out.reject);
        assert_eq!(out.rejections, 2);
        let tie = l2_two_sample_test(&[same.clone(), far_a], &[same, far_b], 0.5).unwrap();
        assert!(!tie.reject);
    }

    #[test]
    fn divergences() {
        assert_eq!(tv_distance(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert!((tv_distance(&[0.3, 0.7], &[0.5, 0.5]).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(chi_squared(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        assert!((chi_squared(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        assert!(chi_squared(&[0.5, 0.5], &[1.0, 0.0]).is_err());
        assert_eq!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), f64::INFINITY);
        assert!((kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn chi_squared_matches_brute_force_and_pinsker_chain() {
        let mut rng = RngHandle::new(3, 0).rng();
        use rand::Rng;
        for _ in 0..500 {
            let k = rng.random_range(2..10);
            let raw_p: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
            let raw_q: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.01).collect();
            let (sp, sq): (f64, f64) = (raw_p.iter().sum(), raw_q.iter().sum());
            let p: Vec<f64> = raw_p.iter().map(|x| x / sp).collect();
            let q: Vec<f64> = raw_q.iter().map(|x| x / sq).collect();
            let mut brute = 0.0;
            for i in 0..k {
                brute += p[i] * p[i] / q[i];
            }
            brute -= 1.0;
            let chi = chi_squared(&p, &q).unwrap();
            assert!((chi - brute).abs() <= 1e-12 * brute.max(1.0));
            let tv = tv_distance(&p, &q).unwrap();
            assert!(2.0 * tv * tv <= chi + 1e-12);
        }
    }

    #[test]
    fn l23_cases() {
        for d in [4usize, 10, 50] {
            let u = vec![1.0 / d as f64; d];
            let want = (d as f64 - 1.0).powf(1.5) / d as f64;
            assert!((l23_functional(&u, 0.0).unwrap() - want).abs() < 1e-12);
            assert!(l23_functional(&u, 0.0).unwrap() <= (d as f64).powf(1.5) / d as f64);
        }
        assert_eq!(l23_functional(&[0.0, 1.0, 0.0], 0.1).unwrap(), 0.0);
        assert_eq!(l23_functional(&[0.2, 0.3, 0.5], 1.0).unwrap(), 0.0);
    }
}
