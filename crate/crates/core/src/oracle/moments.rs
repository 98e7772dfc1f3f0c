use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::perm::Permutation;
use super::weingarten::{weingarten_table, MAX_ORDER};
use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::random::{haar_unitary, RngHandle};

const CHUNK: usize = 4096;

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl MonteCarloEstimate {
    pub fn from_sums(sum: f64, sum_sq: f64, n: usize) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 { ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
        Self { mean, std_error: (var / nf).sqrt(), samples: n }
    }

    /// `|mean − target| ≤ k·SE`, with an absolute floor for exact zero-variance cases.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error + 1e-12 * target.abs().max(1.0)
    }
}

fn power_traces(m: &HermitianMatrix, order: usize) -> Vec<f64> {
    let mut out = vec![m.dim() as f64];
    let mut power = m.matrix().clone();
    for k in 1..=order {
        if k > 1 {
            power = power.matmul(m.matrix());
        }
        out.push(power.trace().re);
    }
    out
}

/// `E_U[Tr(A·U†BU)^ℓ]` as an exact sum over `S_ℓ × S_ℓ`.
pub fn haar_moment(a: &HermitianMatrix, b: &HermitianMatrix, order: usize) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    if order > MAX_ORDER {
        return Err(Error::UnsupportedRange(format!("moment order {order} above {MAX_ORDER}")));
    }
    if order == 0 {
        return Ok(1.0);
    }
    let wg = weingarten_table(order, a.dim())?;
    let ta = power_traces(a, order);
    let tb = power_traces(b, order);
    let perms = Permutation::all(order);
    let inverses: Vec<Permutation> = perms.iter().map(Permutation::inverse).collect();
    let mut total = 0.0;
    for sigma in &perms {
        let pa = sigma.trace_product(&ta);
        if pa == 0.0 {
            continue;
        }
        for (tau, tau_inv) in perms.iter().zip(&inverses) {
            total += pa * tau.trace_product(&tb) * wg.value(&sigma.compose(tau_inv));
        }
    }
    Ok(total)
}

fn chunked_mc(samples: usize, seed: RngHandle, f: impl Fn(&mut rand_chacha::ChaCha20Rng) -> Result<f64> + Sync) -> Result<MonteCarloEstimate> {
    if samples == 0 {
        return Err(Error::InvalidParameter("at least one sample is required".into()));
    }
    let chunks = samples.div_ceil(CHUNK);
    let sums = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed.child(c as u64).rng();
            let n = CHUNK.min(samples - c * CHUNK);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..n {
                let x = f(&mut rng)?;
                s += x;
                s2 += x * x;
            }
            Ok((s, s2))
        })
        .collect::<Result<Vec<_>>>()?;
    let (s, s2) = sums.iter().fold((0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
    Ok(MonteCarloEstimate::from_sums(s, s2, samples))
}

/// Monte Carlo estimate of `E_U[Tr(A·U†BU)^ℓ]`. Chunks get their own
/// streams, so the result does not depend on the thread count.
pub fn haar_moment_mc(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    order: usize,
    samples: usize,
    seed: RngHandle,
) -> Result<MonteCarloEstimate> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let d = a.dim();
    chunked_mc(samples, seed, |rng| {
        let u = haar_unitary(d, rng)?;
        Ok(a.inner(&b.conjugate_by(&u)).powi(order as i32))
    })
}

/// Monte Carlo check of the first two moments of
/// `Z = Σ_i (u_i†·M·u_i)²` over the columns of a Haar unitary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub dim: usize,
    pub hs_norm_sq: f64,
    pub trace: f64,
    pub z: MonteCarloEstimate,
    /// `(Tr(M)² + ‖M‖²_HS)/(d+1)`.
    pub expected_z: f64,
    pub first_moment_pass: bool,
    pub z_squared: MonteCarloEstimate,
    /// `1.5·‖M‖⁴_HS/d⁴`.
    pub second_moment_bound: f64,
    /// `None` when `M` is not traceless.
    pub second_moment_pass: Option<bool>,
    /// `E[Z²]·d²/‖M‖⁴_HS`, which stays of order one as `d` grows.
    pub second_moment_d2_ratio: f64,
}

pub fn verify_moments_basic(m: &HermitianMatrix, samples: usize, seed: RngHandle) -> Result<MomentReport> {
    let d = m.dim();
    let hs2 = m.inner(m);
    let trace = m.trace();
    let traceless = trace.abs() <= 1e-12 * hs2.sqrt().max(1.0);
    let z_of = |rng: &mut rand_chacha::ChaCha20Rng| -> Result<f64> {
        let u = haar_unitary(d, rng)?;
        Ok((0..d).map(|i| m.quadratic_form(&u.column(i)).powi(2)).sum())
    };
    let z = chunked_mc(samples, seed.child(0), z_of)?;
    let z_squared = chunked_mc(samples, seed.child(1), |rng| Ok(z_of(rng)?.powi(2)))?;
    let expected_z = (trace * trace + hs2) / (d as f64 + 1.0);
    let bound = 1.5 * hs2 * hs2 / (d as f64).powi(4);
    let d2_ratio = if hs2 > 0.0 { z_squared.mean * (d as f64).powi(2) / (hs2 * hs2) } else { 0.0 };
    Ok(MomentReport {
        dim: d,
        hs_norm_sq: hs2,
        trace,
        z,
        expected_z,
        first_moment_pass: z.within(expected_z, 3.0),
        z_squared,
        second_moment_bound: bound,
        second_moment_pass: traceless.then(|| z_squared.mean <= bound),
        second_moment_d2_ratio: d2_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexMatrix;
    use num_complex::Complex64;

    fn projector(d: usize) -> HermitianMatrix {
        let mut v = vec![Complex64::new(0.0, 0.0); d];
        v[0] = Complex64::new(1.0, 0.0);
        HermitianMatrix::outer(&v)
    }

    #[test]
    fn identity_first_moment() {
        for d in 1..=5 {
            let i = HermitianMatrix::identity(d);
            assert!((haar_moment(&i, &i, 1).unwrap() - d as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn projector_second_moment_matches_basis_formula() {
        // E[(u₁†Mu₁)²] = (Tr(M)² + Tr(M²))/(d(d+1))
        let d = 5;
        let m = HermitianMatrix::new(ComplexMatrix::from_fn(d, d, |i, j| {
            Complex64::new((i + j) as f64 * 0.1 - 0.3, if i == j { 0.0 } else { 0.05 * (i as f64 - j as f64) })
        }))
        .unwrap();
        let tr = m.trace();
        let tr2 = m.inner(&m);
        let expected = (tr * tr + tr2) / (d as f64 * (d as f64 + 1.0));
        assert!((haar_moment(&projector(d), &m, 2).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_gives_zero() {
        let r = verify_moments_basic(&HermitianMatrix::zeros(3), 100, RngHandle::new(1, 0)).unwrap();
        assert_eq!(r.z.mean, 0.0);
        assert!(r.first_moment_pass);
    }

    #[test]
    fn qubit_first_moment() {
        let m = HermitianMatrix::from_real_diagonal(&[1.0, -1.0]);
        let r = verify_moments_basic(&m, 20_000, RngHandle::new(2, 0)).unwrap();
        assert!((r.expected_z - 2.0 / 3.0).abs() < 1e-15);
        assert!(r.first_moment_pass, "{r:?}");
    }

    #[test]
    fn mc_agrees_with_exact_small_case() {
        let a = HermitianMatrix::from_real_diagonal(&[0.7, 0.2, 0.1]);
        let b = HermitianMatrix::from_real_diagonal(&[1.0, -0.5, 0.25]);
        let exact = haar_moment(&a, &b, 3).unwrap();
        let mc = haar_moment_mc(&a, &b, 3, 50_000, RngHandle::new(3, 0)).unwrap();
        assert!(mc.within(exact, 4.0), "{exact} vs {mc:?}");
    }
}
