//! Seeded randomness: Haar unitaries and isometries, block-diagonal Haar
//! unitaries, and discrete/multinomial sampling.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::spectrum::BucketDecomposition;

/// Tolerance on the total of a probability vector.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// A reproducible random stream: `(master_seed, stream_index)` always yields
/// the same sequence, independent of which thread consumes it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngHandle {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngHandle {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self { master_seed, stream_index }
    }

    /// Stream for trial `trial` of experiment `experiment`.
    pub fn for_trial(master_seed: u64, experiment: u64, trial: u64) -> Self {
        Self::new(master_seed, stream_index(experiment, trial))
    }

    /// Derive a sub-stream, e.g. for one component of a trial.
    pub fn child(&self, tag: u64) -> Self {
        Self::new(self.master_seed, mix64(self.stream_index ^ mix64(tag.wrapping_add(0x5851_f42d_4c95_7f2d))))
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable stream index for `(experiment, trial)`.
pub fn stream_index(experiment: u64, trial: u64) -> u64 {
    mix64(mix64(experiment) ^ trial.rotate_left(17))
}

/// Standard complex Gaussian with `E|z|² = 1`, via Box-Muller.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    // 1 - u lies in (0, 1], so the logarithm is finite
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    Complex64::new(r * theta.cos(), r * theta.sin()) / std::f64::consts::SQRT_2
}

fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Orthonormalize Ginibre columns with modified Gram-Schmidt (two passes).
/// The implicit R factor has a positive real diagonal, which makes the
/// factorization unique and the resulting Q exactly Haar distributed.
fn orthonormal_columns<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(cols);
    for _ in 0..cols {
        let mut v: Vec<Complex64> = (0..rows).map(|_| complex_gaussian(rng)).collect();
        for _pass in 0..2 {
            for q in &basis {
                let r = dot_conj(q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= r * qi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for vi in &mut v {
            *vi /= norm;
        }
        basis.push(v);
    }
    ComplexMatrix::from_fn(rows, cols, |i, j| basis[j][i])
}

/// Haar-random `d × d` unitary.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<ComplexMatrix> {
    if d == 0 {
        return Err(Error::InvalidParameter("unitary dimension must be positive".into()));
    }
    Ok(orthonormal_columns(d, d, rng))
}

/// The first `cols` columns of a Haar-random `rows × rows` unitary.
///
/// Columns are generated in order, so for a fixed stream this is literally the
/// leading block of `haar_unitary(rows)`.
pub fn haar_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<ComplexMatrix> {
    if cols == 0 || rows == 0 {
        return Err(Error::InvalidParameter("isometry dimensions must be positive".into()));
    }
    if cols > rows {
        return Err(Error::InvalidParameter(format!("isometry with {cols} columns in dimension {rows}")));
    }
    Ok(orthonormal_columns(rows, cols, rng))
}

/// Block-diagonal unitary with an independent Haar block on the leading
/// `2⌊d_j/2⌋` coordinates of each bucket and the identity elsewhere
/// (the trailing coordinate of an odd bucket, singleton buckets, and any
/// index not covered by a bucket).
pub fn block_haar<R: Rng + ?Sized>(buckets: &BucketDecomposition, rng: &mut R) -> Result<ComplexMatrix> {
    let d = buckets.dim();
    let mut seen = vec![false; d];
    for set in buckets.index_sets() {
        for &i in set {
            if i >= d || seen[i] {
                return Err(Error::Validation(format!("bucket index {i} is out of range or repeated")));
            }
            seen[i] = true;
        }
    }
    let mut u = ComplexMatrix::identity(d);
    for set in buckets.index_sets() {
        let paired = 2 * (set.len() / 2);
        if paired == 0 {
            continue;
        }
        let idx = &set[..paired];
        let block = haar_unitary(paired, rng)?;
        u.set_block(idx, idx, &block);
    }
    Ok(u)
}

fn validate_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidParameter("empty weight vector".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParameter(format!("weight {w} is negative or not finite")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::InvalidParameter(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

/// Draw an index with probability `weights[i]` using one uniform and a
/// cumulative scan.
pub fn sample_discrete<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    validate_weights(weights)?;
    let u: f64 = rng.random::<f64>();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = i;
            acc += w;
            if u < acc {
                return Ok(i);
            }
        }
    }
    // u landed in the rounding gap above the final cumulative sum
    Ok(last_positive)
}

/// Counts of `n` i.i.d. draws from `probs`, via sequential conditional binomials.
pub fn sample_multinomial<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R) -> Result<Vec<u64>> {
    validate_weights(probs)?;
    let mut counts = vec![0u64; probs.len()];
    let last = probs.iter().rposition(|&p| p > 0.0).expect("weights sum to one");
    let mut remaining_n = n;
    let mut remaining_p = 1.0f64;
    for (i, &p) in probs.iter().enumerate() {
        if remaining_n == 0 {
            break;
        }
        if i == last || remaining_p <= p {
            counts[i] = remaining_n;
            break;
        }
        if p <= 0.0 {
            continue;
        }
        let q = (p / remaining_p).clamp(0.0, 1.0);
        let k = Binomial::new(remaining_n, q).expect("probability in [0,1]").sample(rng);
        counts[i] = k;
        remaining_n -= k;
        remaining_p -= p;
    }
    Ok(counts)
}

/// Number of failures before `successes` successes in Bernoulli(`p`) trials.
pub fn sample_negative_binomial<R: Rng + ?Sized>(successes: u64, p: f64, rng: &mut R) -> Result<u64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("success probability {p} outside (0, 1]")));
    }
    if successes == 0 || p == 1.0 {
        return Ok(0);
    }
    let rate = Gamma::new(successes as f64, (1.0 - p) / p)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?
        .sample(rng);
    if rate <= 0.0 {
        return Ok(0);
    }
    let draws: f64 = Poisson::new(rate).map_err(|e| Error::InvalidParameter(e.to_string()))?.sample(rng);
    Ok(draws as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{bucketize, Spectrum};

    #[test]
    fn handles_are_deterministic_and_distinct() {
        let a = RngHandle::for_trial(7, 1, 2);
        let u1 = haar_unitary(4, &mut a.rng()).unwrap();
        let u2 = haar_unitary(4, &mut a.rng()).unwrap();
        assert_eq!(u1, u2);
        let b = RngHandle::for_trial(7, 1, 3);
        assert_ne!(u1, haar_unitary(4, &mut b.rng()).unwrap());
        assert_ne!(a.child(0), a.child(1));
    }

    #[test]
    fn unitarity_and_scalar_case() {
        let mut rng = RngHandle::new(1, 0).rng();
        let s = haar_unitary(1, &mut rng).unwrap();
        assert!((s[(0, 0)].norm() - 1.0).abs() < 1e-12);
        for d in [2, 5, 16, 64] {
            let u = haar_unitary(d, &mut rng).unwrap();
            assert!(u.isometry_residual() <= 1e-10);
            assert!(u.adjoint().isometry_residual() <= 1e-10);
        }
        assert!(haar_unitary(0, &mut rng).is_err());
    }

    #[test]
    fn isometry_is_prefix_of_unitary() {
        let h = RngHandle::new(5, 9);
        let full = haar_unitary(6, &mut h.rng()).unwrap();
        let part = haar_isometry(6, 2, &mut h.rng()).unwrap();
        let cols: Vec<usize> = (0..2).collect();
        let rows: Vec<usize> = (0..6).collect();
        assert_eq!(full.select(&rows, &cols), part);
        assert!(haar_isometry(2, 3, &mut h.rng()).is_err());
        let mut rng = h.rng();
        for _ in 0..100 {
            assert!(haar_isometry(7, 3, &mut rng).unwrap().isometry_residual() <= 1e-10);
        }
    }

    #[test]
    fn block_haar_structure() {
        let mut rng = RngHandle::new(3, 0).rng();
        let single = bucketize(&Spectrum::new(vec![0.25; 4]).unwrap());
        assert!(block_haar(&single, &mut rng).unwrap().isometry_residual() <= 1e-10);

        let distinct = bucketize(&Spectrum::new(vec![0.6, 0.3, 0.1]).unwrap());
        assert_eq!(block_haar(&distinct, &mut rng).unwrap(), ComplexMatrix::identity(3));

        // bucket j=1 holds indices 0..3, bucket j=3 holds indices 3, 4
        let spec = Spectrum::new(vec![0.26, 0.26, 0.26, 0.11, 0.11]).unwrap();
        let b = bucketize(&spec);
        assert_eq!(b.sizes(), vec![(1, 3), (3, 2)]);
        let u = block_haar(&b, &mut rng).unwrap();
        for k in 0..5 {
            if k != 2 {
                assert_eq!(u[(2, k)].norm(), 0.0);
                assert_eq!(u[(k, 2)].norm(), 0.0);
            }
        }
        assert_eq!(u[(2, 2)], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn discrete_sampling() {
        let mut rng = RngHandle::new(2, 0).rng();
        for _ in 0..100 {
            assert_eq!(sample_discrete(&[1.0], &mut rng).unwrap(), 0);
            assert_eq!(sample_discrete(&[0.0, 1.0], &mut rng).unwrap(), 1);
        }
        assert!(sample_discrete(&[-0.1, 1.1], &mut rng).is_err());
        assert!(sample_discrete(&[0.5, 0.4], &mut rng).is_err());
        let n = 100_000;
        let hits = (0..n).filter(|_| sample_discrete(&[0.3, 0.7], &mut rng).unwrap() == 0).count() as f64;
        let sd = (n as f64 * 0.3 * 0.7).sqrt();
        assert!((hits - 0.3 * n as f64).abs() <= 3.0 * sd);
    }

    #[test]
    fn first_moment_of_haar_entry() {
        let mut rng = RngHandle::new(4, 0).rng();
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| haar_unitary(4, &mut rng).unwrap()[(0, 0)].norm_sqr()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 0.25).abs() <= 3.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn multinomial_counts_sum_and_mean() {
        let mut rng = RngHandle::new(8, 0).rng();
        let probs = [0.1, 0.0, 0.4, 0.5];
        let mut mean = [0.0; 4];
        for _ in 0..2000 {
            let c = sample_multinomial(1000, &probs, &mut rng).unwrap();
            assert_eq!(c.iter().sum::<u64>(), 1000);
            assert_eq!(c[1], 0);
            for (m, x) in mean.iter_mut().zip(&c) {
                *m += *x as f64 / 2000.0;
            }
        }
        for (m, p) in mean.iter().zip(&probs) {
            assert!((m - 1000.0 * p).abs() < 2.0);
        }
    }

    #[test]
    fn negative_binomial_mean() {
        let mut rng = RngHandle::new(9, 0).rng();
        let trials = 4000;
        let p = 0.25;
        let mean = (0..trials).map(|_| sample_negative_binomial(50, p, &mut rng).unwrap() as f64).sum::<f64>()
            / trials as f64;
        let expect = 50.0 * (1.0 - p) / p;
        let sd = (50.0 * (1.0 - p) / (p * p) / trials as f64).sqrt();
        assert!((mean - expect).abs() <= 4.0 * sd, "mean {mean} vs {expect}");
        assert_eq!(sample_negative_binomial(10, 1.0, &mut rng).unwrap(), 0);
        assert!(sample_negative_binomial(10, 0.0, &mut rng).is_err());
    }
}
