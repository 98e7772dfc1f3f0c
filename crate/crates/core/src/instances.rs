//! Lower-bound alternative ensembles around a diagonal state: the bucketed
//! Paninski perturbation, the off-diagonal isometry block, and the corner
//! instance for a dominant eigenvalue.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityMatrix, HermitianMatrix};
use crate::random::{block_haar, haar_isometry};
use crate::spectrum::{bucketize, BucketDecomposition, Spectrum};

const BISECTION_ITERS: usize = 200;
const BISECTION_RESIDUAL: f64 = 1e-10;
const DIAGONAL_TOL: f64 = 1e-12;

/// A distribution over alternative states around a fixed null state.
pub trait AlternativeEnsemble: Send + Sync {
    fn null_state(&self) -> &DensityMatrix;

    fn sample(&self, rng: &mut dyn RngCore) -> Result<DensityMatrix>;

    /// All members with equal weight, when the ensemble is finite.
    fn members(&self) -> Option<Vec<DensityMatrix>> {
        None
    }

    fn family(&self) -> &'static str;
}

fn diagonal_of(sigma: &DensityMatrix) -> Result<Vec<f64>> {
    if !sigma.hermitian().is_diagonal(DIAGONAL_TOL) {
        return Err(Error::Validation("state must be diagonal in the computational basis".into()));
    }
    Ok(sigma.hermitian().real_diagonal())
}

fn check_matches(sigma: &DensityMatrix, spectrum: &Spectrum) -> Result<()> {
    let diag = diagonal_of(sigma)?;
    if diag.len() != spectrum.dim() {
        return Err(Error::DimensionMismatch { expected: spectrum.dim(), found: diag.len() });
    }
    if diag.iter().zip(spectrum.values()).any(|(a, b)| (a - b).abs() > DIAGONAL_TOL) {
        return Err(Error::Validation("instance was tuned for a different spectrum".into()));
    }
    Ok(())
}

/// Per-bucket magnitudes of the paired `±ε_j` perturbation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaninskiInstance {
    pub spectrum: Spectrum,
    pub buckets: BucketDecomposition,
    pub epsilon: f64,
    pub zeta: f64,
    /// `ε_j` for every bucket with more than one element.
    pub eps_by_bucket: BTreeMap<u32, f64>,
}

impl PaninskiInstance {
    /// `Σ_j 2⌊d_j/2⌋ ε_j`, which equals the trace distance of every sample.
    pub fn total_perturbation(&self) -> f64 {
        self.eps_by_bucket.iter().map(|(j, e)| 2.0 * (self.buckets.size(*j) / 2) as f64 * e).sum()
    }

    /// Diagonal of the perturbation before rotation.
    pub fn perturbation_diagonal(&self) -> Vec<f64> {
        let mut diag = vec![0.0; self.spectrum.dim()];
        for (j, &e) in &self.eps_by_bucket {
            let set = self.buckets.bucket(*j).expect("tuned bucket exists");
            let half = set.len() / 2;
            for &i in &set[..half] {
                diag[i] = e;
            }
            for &i in &set[half..2 * half] {
                diag[i] = -e;
            }
        }
        diag
    }
}

fn bucket_cap(j: u32) -> f64 {
    2f64.powi(-(j as i32) - 1)
}

fn zeta_coefficient(j: u32, dj: usize) -> f64 {
    2f64.powf(-2.0 / 3.0 * (j as f64 + 1.0)) * (dj as f64).powf(2.0 / 3.0)
}

/// Choose `ε_j = min(2^{−j−1}, ζ·2^{−2(j+1)/3}·d_j^{2/3})` with `ζ` solved by
/// bisection so that `Σ_j 2⌊d_j/2⌋ ε_j = ε`.
pub fn tune_paninski(spec: &Spectrum, eps: f64) -> Result<PaninskiInstance> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("epsilon {eps} must be nonnegative")));
    }
    let buckets = bucketize(spec);
    let multi: Vec<(u32, usize)> = buckets.sizes().into_iter().filter(|(_, dj)| *dj > 1).collect();
    if multi.is_empty() {
        return Err(Error::EnsembleUnavailable(
            "every bucket has a single element; the perturbation would be vacuous".into(),
        ));
    }
    let eps_for = |zeta: f64| -> BTreeMap<u32, f64> {
        multi.iter().map(|&(j, dj)| (j, bucket_cap(j).min(zeta * zeta_coefficient(j, dj)))).collect()
    };
    let total_for = |zeta: f64| -> f64 {
        multi.iter().map(|&(j, dj)| 2.0 * (dj / 2) as f64 * bucket_cap(j).min(zeta * zeta_coefficient(j, dj))).sum()
    };
    let saturation: f64 = multi.iter().map(|&(j, dj)| 2.0 * (dj / 2) as f64 * bucket_cap(j)).sum();
    if eps > saturation + BISECTION_RESIDUAL {
        return Err(Error::Infeasible {
            reason: format!("epsilon {eps} exceeds the saturation value"),
            max_feasible: saturation,
        });
    }

    let zeta = if eps == 0.0 {
        0.0
    } else if eps >= saturation - BISECTION_RESIDUAL {
        // every cap is active: the smallest ζ that saturates all buckets
        multi.iter().map(|&(j, dj)| bucket_cap(j) / zeta_coefficient(j, dj)).fold(0.0, f64::max)
    } else {
        let j_max = multi.iter().map(|(j, _)| *j).max().unwrap_or(0);
        let mut lo = 0.0;
        let mut hi = 2f64.powi(j_max as i32);
        while total_for(hi) < eps {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..BISECTION_ITERS {
            let mid = 0.5 * (lo + hi);
            if total_for(mid) < eps {
                lo = mid;
            } else {
                hi = mid;
            }
            if total_for(hi) - eps <= BISECTION_RESIDUAL * 1e-3 {
                break;
            }
        }
        hi
    };
    let inst = PaninskiInstance { spectrum: spec.clone(), buckets, epsilon: eps, zeta, eps_by_bucket: eps_for(zeta) };
    let residual = (inst.total_perturbation() - eps).abs();
    if residual > BISECTION_RESIDUAL {
        return Err(Error::NoConvergence { sweeps: BISECTION_ITERS });
    }
    Ok(inst)
}

/// `σ + U†ℰU` with `U` block-diagonal Haar over the buckets.
pub fn sample_paninski(sigma: &DensityMatrix, inst: &PaninskiInstance, rng: &mut dyn RngCore) -> Result<DensityMatrix> {
    check_matches(sigma, &inst.spectrum)?;
    let u = block_haar(&inst.buckets, rng)?;
    let pert = HermitianMatrix::from_real_diagonal(&inst.perturbation_diagonal()).conjugate_by(&u);
    DensityMatrix::new(sigma.hermitian().add(&pert))
}

#[derive(Clone, Debug)]
pub struct PaninskiEnsemble {
    sigma: DensityMatrix,
    pub instance: PaninskiInstance,
}

impl PaninskiEnsemble {
    pub fn new(sigma: DensityMatrix, eps: f64) -> Result<Self> {
        let spec = Spectrum::new(diagonal_of(&sigma)?)?;
        let instance = tune_paninski(&spec, eps)?;
        Ok(Self { sigma, instance })
    }
}

impl AlternativeEnsemble for PaninskiEnsemble {
    fn null_state(&self) -> &DensityMatrix {
        &self.sigma
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Result<DensityMatrix> {
        sample_paninski(&self.sigma, &self.instance, rng)
    }
    fn family(&self) -> &'static str {
        "paninski"
    }
}

/// Placement of a scaled isometry between two buckets (or two halves of one).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffDiagInstance {
    /// The bucket with the larger size (rows of the isometry).
    pub bucket_rows: u32,
    /// The bucket with the smaller size (columns); equal to `bucket_rows`
    /// when one bucket is split into halves.
    pub bucket_cols: u32,
    pub epsilon: f64,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl OffDiagInstance {
    /// Validate and orient the pair so that the row bucket is the larger one.
    pub fn new(buckets: &BucketDecomposition, j: u32, j_prime: u32, eps: f64) -> Result<Self> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!("epsilon {eps} must be nonnegative")));
        }
        let set = |b: u32| {
            buckets.bucket(b).ok_or_else(|| Error::InvalidParameter(format!("bucket {b} is empty")))
        };
        let (bucket_rows, bucket_cols, rows, cols) = if j == j_prime {
            let s = set(j)?;
            if s.len() < 2 {
                return Err(Error::EnsembleUnavailable(format!("bucket {j} has a single element and cannot be split")));
            }
            let split = s.len().div_ceil(2);
            (j, j, s[..split].to_vec(), s[split..].to_vec())
        } else {
            let (a, b) = (set(j)?, set(j_prime)?);
            if a.len() >= b.len() {
                (j, j_prime, a.to_vec(), b.to_vec())
            } else {
                (j_prime, j, b.to_vec(), a.to_vec())
            }
        };
        let max_feasible = cols.len() as f64 * 2f64.powf(-(bucket_rows as f64) / 2.0 - bucket_cols as f64 / 2.0);
        if eps > max_feasible * (1.0 + 1e-12) {
            return Err(Error::Infeasible {
                reason: format!("epsilon {eps} too large for buckets ({bucket_rows}, {bucket_cols})"),
                max_feasible,
            });
        }
        Ok(Self { bucket_rows, bucket_cols, epsilon: eps, rows, cols })
    }

    /// Amplitude `ε/(2·d_{j′})` multiplying the isometry.
    pub fn amplitude(&self) -> f64 {
        self.epsilon / (2.0 * self.cols.len() as f64)
    }
}

/// Default bucket pair: the most populous bucket and the bucket maximising
/// `d_j²·2^{−j}`; ties go to the smaller bucket index.
pub fn default_offdiag_pair(buckets: &BucketDecomposition) -> Result<(u32, u32)> {
    let sizes = buckets.sizes();
    let argmax = |score: &dyn Fn(u32, usize) -> f64| {
        sizes
            .iter()
            .fold(None::<(u32, f64)>, |best, &(j, dj)| {
                let s = score(j, dj);
                match best {
                    Some((_, bs)) if bs >= s => best,
                    _ => Some((j, s)),
                }
            })
            .map(|(j, _)| j)
    };
    let first = argmax(&|_, dj| dj as f64).ok_or_else(|| Error::EnsembleUnavailable("no buckets".into()))?;
    let second = argmax(&|j, dj| (dj * dj) as f64 * 2f64.powi(-(j as i32))).expect("nonempty");
    if first == second && buckets.size(first) < 2 {
        // a single dominant singleton bucket: pair it with the next most populous one
        let other = sizes
            .iter()
            .filter(|(j, _)| *j != first)
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            .map(|(j, _)| *j)
            .ok_or_else(|| Error::EnsembleUnavailable("only one singleton bucket".into()))?;
        return Ok((first, other));
    }
    Ok((first, second))
}

/// `σ + D_W`, with `D_W` holding `(ε/2d_{j′})·W` on the row×column block and
/// its adjoint on the transposed block.
pub fn build_offdiag(sigma: &DensityMatrix, inst: &OffDiagInstance, rng: &mut dyn RngCore) -> Result<DensityMatrix> {
    diagonal_of(sigma)?;
    let w = haar_isometry(inst.rows.len(), inst.cols.len(), rng)?;
    offdiag_with_isometry(sigma, inst, &w)
}

/// Same as [`build_offdiag`] for a caller-supplied isometry.
pub fn offdiag_with_isometry(sigma: &DensityMatrix, inst: &OffDiagInstance, w: &ComplexMatrix) -> Result<DensityMatrix> {
    let d = sigma.dim();
    if inst.rows.iter().chain(&inst.cols).any(|&i| i >= d) {
        return Err(Error::DimensionMismatch { expected: d, found: inst.rows.len() + inst.cols.len() });
    }
    if (w.rows(), w.cols()) != (inst.rows.len(), inst.cols.len()) {
        return Err(Error::DimensionMismatch { expected: inst.rows.len() * inst.cols.len(), found: w.rows() * w.cols() });
    }
    let block = w.scale_real(inst.amplitude());
    let mut m = sigma.matrix().clone();
    m.set_block(&inst.rows, &inst.cols, &block);
    m.set_block(&inst.cols, &inst.rows, &block.adjoint());
    DensityMatrix::from_matrix(m)
}

#[derive(Clone, Debug)]
pub struct OffDiagEnsemble {
    sigma: DensityMatrix,
    pub instance: OffDiagInstance,
}

impl OffDiagEnsemble {
    pub fn new(sigma: DensityMatrix, j: u32, j_prime: u32, eps: f64) -> Result<Self> {
        let buckets = bucketize(&Spectrum::new(diagonal_of(&sigma)?)?);
        let instance = OffDiagInstance::new(&buckets, j, j_prime, eps)?;
        Ok(Self { sigma, instance })
    }

    /// Using [`default_offdiag_pair`].
    pub fn with_default_pair(sigma: DensityMatrix, eps: f64) -> Result<Self> {
        let buckets = bucketize(&Spectrum::new(diagonal_of(&sigma)?)?);
        let (j, jp) = default_offdiag_pair(&buckets)?;
        let instance = OffDiagInstance::new(&buckets, j, jp, eps)?;
        Ok(Self { sigma, instance })
    }
}

impl AlternativeEnsemble for OffDiagEnsemble {
    fn null_state(&self) -> &DensityMatrix {
        &self.sigma
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Result<DensityMatrix> {
        build_offdiag(&self.sigma, &self.instance, rng)
    }
    fn family(&self) -> &'static str {
        "offdiag"
    }
}

/// The two largest diagonal entries and the perturbation size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CornerInstance {
    pub top: usize,
    pub second: usize,
    pub epsilon: f64,
}

impl CornerInstance {
    /// Largest entry must be at least 3/4 and `ε ≤ 1/2`; ties for either
    /// position go to the smaller index.
    pub fn for_state(sigma: &DensityMatrix, eps: f64) -> Result<Self> {
        let diag = diagonal_of(sigma)?;
        if diag.len() < 2 {
            return Err(Error::InvalidParameter("corner instance needs dimension at least 2".into()));
        }
        if !(0.0..=0.5).contains(&eps) {
            return Err(Error::InvalidParameter(format!("epsilon {eps} outside [0, 1/2]")));
        }
        let mut order: Vec<usize> = (0..diag.len()).collect();
        order.sort_by(|&a, &b| diag[b].total_cmp(&diag[a]).then(a.cmp(&b)));
        let (top, second) = (order[0], order[1]);
        if diag[top] < 0.75 {
            return Err(Error::InvalidParameter(format!("largest entry {} is below 3/4", diag[top])));
        }
        Ok(Self { top, second, epsilon: eps })
    }

    /// `2√(ε⁴/16 + ε²/4)`.
    pub fn trace_distance(&self) -> f64 {
        let e = self.epsilon;
        2.0 * (e.powi(4) / 16.0 + e * e / 4.0).sqrt()
    }
}

/// Shift `ε²/4` of mass from the top entry to the second and place `(ε/2)·u`
/// on the off-diagonal pair, `u ∈ {+1, −1}`.
pub fn build_corner(sigma: &DensityMatrix, eps: f64, u: i8) -> Result<DensityMatrix> {
    let inst = CornerInstance::for_state(sigma, eps)?;
    corner_state(sigma, &inst, u)
}

pub fn corner_state(sigma: &DensityMatrix, inst: &CornerInstance, u: i8) -> Result<DensityMatrix> {
    if u != 1 && u != -1 {
        return Err(Error::InvalidParameter(format!("sign must be +1 or -1, got {u}")));
    }
    let shift = inst.epsilon * inst.epsilon / 4.0;
    let mut m = sigma.matrix().clone();
    let (a, b) = (inst.top, inst.second);
    m[(a, a)] -= shift;
    m[(b, b)] += shift;
    let off = Complex64::new(inst.epsilon / 2.0 * u as f64, 0.0);
    m[(a, b)] = off;
    m[(b, a)] = off;
    DensityMatrix::from_matrix(m)
}

#[derive(Clone, Debug)]
pub struct CornerEnsemble {
    sigma: DensityMatrix,
    pub instance: CornerInstance,
    plus: DensityMatrix,
    minus: DensityMatrix,
}

impl CornerEnsemble {
    pub fn new(sigma: DensityMatrix, eps: f64) -> Result<Self> {
        let instance = CornerInstance::for_state(&sigma, eps)?;
        let plus = corner_state(&sigma, &instance, 1)?;
        let minus = corner_state(&sigma, &instance, -1)?;
        Ok(Self { sigma, instance, plus, minus })
    }
}

impl AlternativeEnsemble for CornerEnsemble {
    fn null_state(&self) -> &DensityMatrix {
        &self.sigma
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Result<DensityMatrix> {
        Ok(if rng.next_u32() & 1 == 0 { self.plus.clone() } else { self.minus.clone() })
    }
    fn members(&self) -> Option<Vec<DensityMatrix>> {
        Some(vec![self.plus.clone(), self.minus.clone()])
    }
    fn family(&self) -> &'static str {
        "corner"
    }
}

/// Uniform mixture over an explicit list of states.
#[derive(Clone, Debug)]
pub struct FiniteEnsemble {
    sigma: DensityMatrix,
    states: Vec<DensityMatrix>,
}

impl FiniteEnsemble {
    pub fn new(sigma: DensityMatrix, states: Vec<DensityMatrix>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidParameter("ensemble needs at least one state".into()));
        }
        if let Some(s) = states.iter().find(|s| s.dim() != sigma.dim()) {
            return Err(Error::DimensionMismatch { expected: sigma.dim(), found: s.dim() });
        }
        Ok(Self { sigma, states })
    }
}

impl AlternativeEnsemble for FiniteEnsemble {
    fn null_state(&self) -> &DensityMatrix {
        &self.sigma
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Result<DensityMatrix> {
        let k = (rng.next_u64() % self.states.len() as u64) as usize;
        Ok(self.states[k].clone())
    }
    fn members(&self) -> Option<Vec<DensityMatrix>> {
        Some(self.states.clone())
    }
    fn family(&self) -> &'static str {
        "finite"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eig, is_psd, trace_distance};
    use crate::random::RngHandle;

    fn spec(v: &[f64]) -> Spectrum {
        Spectrum::new(v.to_vec()).unwrap()
    }

    #[test]
    fn paninski_maximally_mixed() {
        let inst = tune_paninski(&spec(&[0.25; 4]), 0.2).unwrap();
        assert_eq!(inst.eps_by_bucket.len(), 1);
        assert!((inst.eps_by_bucket[&1] - 0.05).abs() < 1e-12);
        let sigma = DensityMatrix::maximally_mixed(4);
        let mut rng = RngHandle::new(1, 0).rng();
        let s = sample_paninski(&sigma, &inst, &mut rng).unwrap();
        let e = hermitian_eig(s.hermitian()).unwrap();
        for (got, want) in e.values.iter().zip([0.2, 0.2, 0.3, 0.3]) {
            assert!((got - want).abs() < 1e-10);
        }
        assert!((trace_distance(&sigma, &s).unwrap() - 0.2).abs() < 1e-8);
    }

    #[test]
    fn paninski_zero_and_saturation() {
        let sigma = DensityMatrix::maximally_mixed(4);
        let inst = tune_paninski(&spec(&[0.25; 4]), 0.0).unwrap();
        let s = sample_paninski(&sigma, &inst, &mut RngHandle::new(2, 0).rng()).unwrap();
        assert!(s.matrix().max_abs_diff(sigma.matrix()) < 1e-15);
        let inst = tune_paninski(&spec(&[0.25; 4]), 1.0).unwrap();
        assert_eq!(inst.eps_by_bucket[&1], 0.25);
        assert!(matches!(tune_paninski(&spec(&[0.25; 4]), 1.1), Err(Error::Infeasible { .. })));
        assert!(matches!(tune_paninski(&spec(&[0.6, 0.3, 0.1]), 0.1), Err(Error::EnsembleUnavailable(_))));
    }

    #[test]
    fn paninski_two_buckets_residual() {
        let d = 16;
        let r = 4;
        let mut v = vec![0.5 / r as f64; r];
        v.extend(vec![0.5 / (d - r) as f64; d - r]);
        let inst = tune_paninski(&spec(&v), 0.1).unwrap();
        assert!((inst.total_perturbation() - 0.1).abs() <= 1e-10);
        for (j, e) in &inst.eps_by_bucket {
            assert!(*e <= 2f64.powi(-(*j as i32) - 1));
        }
    }

    #[test]
    fn offdiag_two_by_two_example() {
        let sigma = DensityMatrix::diagonal(&[0.5, 0.5]).unwrap();
        let ens = OffDiagEnsemble::new(sigma.clone(), 0, 0, 0.4).unwrap();
        assert_eq!((ens.instance.rows.clone(), ens.instance.cols.clone()), (vec![0], vec![1]));
        let s = ens.sample(&mut RngHandle::new(3, 0).rng()).unwrap();
        assert!((s.matrix()[(0, 1)].norm() - 0.2).abs() < 1e-12);
        let e = hermitian_eig(s.hermitian()).unwrap();
        assert!((e.values[0] - 0.3).abs() < 1e-12 && (e.values[1] - 0.7).abs() < 1e-12);
        assert!((trace_distance(&sigma, &s).unwrap() - 0.4).abs() < 1e-8);
    }

    #[test]
    fn offdiag_split_and_boundary() {
        let sigma = DensityMatrix::maximally_mixed(4);
        let b = bucketize(&spec(&[0.25; 4]));
        let inst = OffDiagInstance::new(&b, 1, 1, 0.1).unwrap();
        assert_eq!((inst.rows.len(), inst.cols.len()), (2, 2));
        let s = build_offdiag(&sigma, &inst, &mut RngHandle::new(4, 0).rng()).unwrap();
        for &i in &inst.rows {
            for &k in &inst.rows {
                if i != k {
                    assert_eq!(s.matrix()[(i, k)].norm(), 0.0);
                }
            }
        }
        assert!(s.matrix().trace().re - 1.0 < 1e-15);

        // λ at the lower edge of its bucket: the feasibility limit gives a zero eigenvalue
        let sigma = DensityMatrix::diagonal(&[0.25, 0.25, 0.25, 0.25]).unwrap();
        let max = 2.0 * 2f64.powf(-1.0);
        let inst = OffDiagInstance::new(&b, 1, 1, max).unwrap();
        let s = build_offdiag(&sigma, &inst, &mut RngHandle::new(5, 0).rng()).unwrap();
        let min = hermitian_eig(s.hermitian()).unwrap().values[0];
        assert!(min.abs() < 1e-12, "min eigenvalue {min}");
        match OffDiagInstance::new(&b, 1, 1, max * 1.01) {
            Err(Error::Infeasible { max_feasible, .. }) => assert!((max_feasible - max).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn corner_example() {
        let sigma = DensityMatrix::diagonal(&[0.75, 0.25]).unwrap();
        let plus = build_corner(&sigma, 0.2, 1).unwrap();
        assert!((plus.matrix()[(0, 0)].re - 0.74).abs() < 1e-15);
        assert!((plus.matrix()[(1, 1)].re - 0.26).abs() < 1e-15);
        assert!((plus.matrix()[(0, 1)].re - 0.1).abs() < 1e-15);
        let td = trace_distance(&sigma, &plus).unwrap();
        assert!((td - 0.200998).abs() < 1e-5);
        assert!((td - CornerInstance::for_state(&sigma, 0.2).unwrap().trace_distance()).abs() < 1e-12);
        let minus = build_corner(&sigma, 0.2, -1).unwrap();
        assert_eq!(minus.matrix()[(0, 1)].re, -0.1);
        let ep = hermitian_eig(plus.hermitian()).unwrap().values;
        let em = hermitian_eig(minus.hermitian()).unwrap().values;
        assert!((ep[0] - em[0]).abs() < 1e-14 && (ep[1] - em[1]).abs() < 1e-14);
        assert!(build_corner(&sigma, 0.6, 1).is_err());
        assert!(build_corner(&DensityMatrix::diagonal(&[0.7, 0.3]).unwrap(), 0.2, 1).is_err());
        assert!(build_corner(&sigma, 0.2, 0).is_err());
        // the determinant of the perturbed 2x2 block
        let (a, b, e) = (0.75f64, 0.25f64, 0.2f64);
        let det = (a - e * e / 4.0) * (b + e * e / 4.0) - e * e / 4.0;
        assert!(det >= 0.0);
        assert!(is_psd(plus.hermitian(), 1e-9).unwrap());
    }

    #[test]
    fn default_pair_choice() {
        let b = bucketize(&spec(&[0.174, 0.174, 0.174, 0.174, 0.1, 0.1, 0.1, 0.004]));
        assert_eq!(default_offdiag_pair(&b).unwrap(), (2, 2));
        let b = bucketize(&spec(&[0.6, 0.3, 0.1]));
        assert_eq!(default_offdiag_pair(&b).unwrap(), (0, 1));
    }
}
