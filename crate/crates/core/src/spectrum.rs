//! Dyadic bucketing of a diagonal spectrum, the mass-removal procedures, and
//! the leading-order copy-complexity values they feed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{schatten_of_values, DensityMatrix, PSD_TOL};

/// Slack used when comparing cumulative masses against a removal cap.
pub const CAP_TOL: f64 = 1e-12;

/// Eigenvalues of a density matrix, indexed by their original position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Spectrum {
    lambdas: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Spectrum {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Spectrum> for Vec<f64> {
    fn from(s: Spectrum) -> Self {
        s.lambdas
    }
}

impl Spectrum {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::Validation("spectrum is empty".into()));
        }
        if let Some(x) = lambdas.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(Error::Validation(format!("spectrum entry {x} is negative or not finite")));
        }
        let total: f64 = lambdas.iter().sum();
        if (total - 1.0).abs() > PSD_TOL {
            return Err(Error::Validation(format!("spectrum sums to {total}, not 1")));
        }
        Ok(Self { lambdas })
    }

    /// Eigenvalues of `sigma` in ascending order, or its diagonal if already
    /// diagonal (keeping the coordinate order). Tiny negative eigenvalues
    /// allowed by the PSD tolerance are clipped to zero.
    pub fn of_state(sigma: &DensityMatrix) -> Result<Self> {
        let h = sigma.hermitian();
        let raw = if h.is_diagonal(0.0) { h.real_diagonal() } else { h.eig()?.values };
        let clipped: Vec<f64> = raw.iter().map(|x| x.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        Self::new(clipped.iter().map(|x| x / total).collect())
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn to_state(&self) -> DensityMatrix {
        DensityMatrix::diagonal(&self.lambdas).expect("validated spectrum")
    }
}

/// Bucket index of a positive value: `j` with `x ∈ [2^{−j−1}, 2^{−j})`, except
/// that `x = 1` joins bucket 0. Zero and negative values have no bucket.
pub fn bucket_index(x: f64) -> Option<u32> {
    if !(x > 0.0) {
        return None;
    }
    // write x = m·2^e with m ∈ [1/2, 1); then x lies in [2^{e−1}, 2^e)
    let (mut y, mut shift) = (x, 0i64);
    while y < f64::MIN_POSITIVE {
        y *= 2f64.powi(64);
        shift += 64;
    }
    let exp_field = ((y.to_bits() >> 52) & 0x7ff) as i64;
    let e = exp_field - 1022 - shift;
    Some((-e).max(0) as u32)
}

/// Partition of the support of a spectrum into dyadic buckets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketDecomposition {
    dim: usize,
    buckets: BTreeMap<u32, Vec<usize>>,
}

impl BucketDecomposition {
    /// Build from explicit index sets; each set is sorted ascending.
    pub fn from_sets(dim: usize, sets: BTreeMap<u32, Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; dim];
        let mut buckets = BTreeMap::new();
        for (j, mut set) in sets {
            set.sort_unstable();
            for &i in &set {
                if i >= dim || seen[i] {
                    return Err(Error::Validation(format!("index {i} out of range or in two buckets")));
                }
                seen[i] = true;
            }
            if !set.is_empty() {
                buckets.insert(j, set);
            }
        }
        Ok(Self { dim, buckets })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Active bucket indices in ascending order.
    pub fn active(&self) -> Vec<u32> {
        self.buckets.keys().copied().collect()
    }

    pub fn index_sets(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.buckets.values()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &[usize])> {
        self.buckets.iter().map(|(j, s)| (*j, s.as_slice()))
    }

    pub fn bucket(&self, j: u32) -> Option<&[usize]> {
        self.buckets.get(&j).map(|s| s.as_slice())
    }

    pub fn size(&self, j: u32) -> usize {
        self.buckets.get(&j).map_or(0, |s| s.len())
    }

    /// `(j, d_j)` pairs in ascending `j`.
    pub fn sizes(&self) -> Vec<(u32, usize)> {
        self.buckets.iter().map(|(j, s)| (*j, s.len())).collect()
    }

    pub fn bucket_of(&self, i: usize) -> Option<u32> {
        self.buckets.iter().find(|(_, s)| s.binary_search(&i).is_ok()).map(|(j, _)| *j)
    }

    /// Per-index bucket lookup table.
    pub fn assignment(&self) -> Vec<Option<u32>> {
        let mut out = vec![None; self.dim];
        for (j, s) in &self.buckets {
            for &i in s {
                out[i] = Some(*j);
            }
        }
        out
    }

    pub fn num_buckets(&self) -> usize {
        self.buckets.len()
    }

    /// Indices lying in buckets with a single element.
    pub fn singleton_indices(&self) -> Vec<usize> {
        self.buckets.values().filter(|s| s.len() == 1).map(|s| s[0]).collect()
    }

    /// Buckets with more than one element.
    pub fn multi_element(&self) -> Vec<u32> {
        self.buckets.iter().filter(|(_, s)| s.len() > 1).map(|(j, _)| *j).collect()
    }

    pub fn covered(&self) -> usize {
        self.buckets.values().map(|s| s.len()).sum()
    }
}

/// Bucket the nonzero entries of any nonnegative vector.
pub fn bucketize_values(values: &[f64]) -> BucketDecomposition {
    let mut buckets: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &x) in values.iter().enumerate() {
        if let Some(j) = bucket_index(x) {
            buckets.entry(j).or_default().push(i);
        }
    }
    BucketDecomposition { dim: values.len(), buckets }
}

pub fn bucketize(spec: &Spectrum) -> BucketDecomposition {
    bucketize_values(spec.values())
}

/// `log(d/ε)` as a natural logarithm floored at 1.
pub fn log_ratio(d: usize, eps: f64) -> f64 {
    (d as f64 / eps).ln().max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemovalVariant {
    LowerNonadaptive,
    LowerAdaptive,
    Upper,
}

/// Surviving spectra produced by one removal procedure. Entries are either
/// copied unchanged from the input or set to zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum Survivors {
    /// `top_and_tail_removed` zeroes the largest entry and the tail;
    /// `tail_and_light_removed` zeroes the tail and the light buckets but keeps
    /// the largest entry; `trimmed` additionally drops the smallest remaining
    /// entries up to mass `2ε`.
    LowerNonadaptive { top_and_tail_removed: Vec<f64>, tail_and_light_removed: Vec<f64>, trimmed: Vec<f64> },
    LowerAdaptive { top_and_tail_removed: Vec<f64> },
    /// `buckets` is recomputed on the surviving entries.
    Upper { tail_removed: Vec<f64>, buckets: BucketDecomposition },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassRemovalResult {
    pub epsilon: f64,
    pub tail: Vec<usize>,
    /// Only populated by the lower-nonadaptive procedure.
    pub light: Vec<usize>,
    pub largest: Option<usize>,
    pub survivors: Survivors,
    /// Nonzero entries of the spectrum that defines the effective dimension
    /// (`trimmed`, `top_and_tail_removed`, or `tail_removed`).
    pub d_eff: usize,
    /// Mass zeroed in that same spectrum.
    pub removed_mass: f64,
}

impl MassRemovalResult {
    pub fn variant(&self) -> RemovalVariant {
        match self.survivors {
            Survivors::LowerNonadaptive { .. } => RemovalVariant::LowerNonadaptive,
            Survivors::LowerAdaptive { .. } => RemovalVariant::LowerAdaptive,
            Survivors::Upper { .. } => RemovalVariant::Upper,
        }
    }

    /// The spectrum whose nonzero count is `d_eff`.
    pub fn effective(&self) -> &[f64] {
        match &self.survivors {
            Survivors::LowerNonadaptive { trimmed, .. } => trimmed,
            Survivors::LowerAdaptive { top_and_tail_removed } => top_and_tail_removed,
            Survivors::Upper { tail_removed, .. } => tail_removed,
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon {eps} outside (0, 1)")));
    }
    Ok(())
}

/// Longest prefix of `order` whose mass stays within `cap`.
fn capped_prefix(values: &[f64], order: &[usize], cap: f64) -> Vec<usize> {
    let mut acc = 0.0;
    let mut out = Vec::new();
    for &i in order {
        acc += values[i];
        if acc > cap + CAP_TOL {
            break;
        }
        out.push(i);
    }
    out
}

/// Support indices sorted ascending by `key(i)`, ties by index.
fn sorted_support(values: &[f64], key: impl Fn(usize) -> f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).filter(|&i| values[i] > 0.0).collect();
    idx.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
    idx
}

/// Index of the largest entry; among equal values the one with the largest index.
fn largest_index(values: &[f64]) -> Option<usize> {
    sorted_support(values, |i| values[i]).last().copied()
}

fn zeroed(values: &[f64], remove: impl IntoIterator<Item = usize>) -> Vec<f64> {
    let mut out = values.to_vec();
    for i in remove {
        out[i] = 0.0;
    }
    out
}

fn nonzero_count(values: &[f64]) -> usize {
    values.iter().filter(|x| **x > 0.0).count()
}

fn mass_removed(original: &[f64], kept: &[f64]) -> f64 {
    original.iter().zip(kept).filter(|(_, k)| **k == 0.0).map(|(o, _)| o).sum()
}

/// Mass removal for the nonadaptive lower bound.
///
/// The tail is the longest prefix, in ascending order of `λ_i/d_{j(i)}²`, with
/// mass at most `3ε`. A non-tail index is light when the non-tail mass of its
/// bucket is at most `2ε/log(d/ε)`.
pub fn remove_mass_lower_nonadaptive(spec: &Spectrum, eps: f64) -> Result<MassRemovalResult> {
    check_eps(eps)?;
    let lambdas = spec.values();
    let d = spec.dim();
    let buckets = bucketize(spec);
    let assign = buckets.assignment();
    let bucket_size = |i: usize| buckets.size(assign[i].expect("support index has a bucket")) as f64;

    let order = sorted_support(lambdas, |i| lambdas[i] / bucket_size(i).powi(2));
    let tail = capped_prefix(lambdas, &order, 3.0 * eps);
    let mut in_tail = vec![false; d];
    for &i in &tail {
        in_tail[i] = true;
    }

    let light_cap = 2.0 * eps / log_ratio(d, eps);
    let mut light = Vec::new();
    for (_, set) in buckets.iter() {
        let remaining: f64 = set.iter().filter(|&&i| !in_tail[i]).map(|&i| lambdas[i]).sum();
        if remaining <= light_cap + CAP_TOL {
            light.extend(set.iter().copied().filter(|&i| !in_tail[i]));
        }
    }
    light.sort_unstable();

    let largest = largest_index(lambdas);
    let top_and_tail_removed = zeroed(lambdas, tail.iter().copied().chain(largest));
    let tail_and_light_removed = zeroed(lambdas, tail.iter().chain(&light).copied());

    let ascending = sorted_support(&tail_and_light_removed, |i| tail_and_light_removed[i]);
    let smallest = capped_prefix(&tail_and_light_removed, &ascending, 2.0 * eps);
    let trimmed = zeroed(&tail_and_light_removed, smallest);

    Ok(MassRemovalResult {
        epsilon: eps,
        d_eff: nonzero_count(&trimmed),
        removed_mass: mass_removed(lambdas, &trimmed),
        tail,
        light,
        largest,
        survivors: Survivors::LowerNonadaptive { top_and_tail_removed, tail_and_light_removed, trimmed },
    })
}

/// Mass removal for the adaptive lower bound: zero the largest entry and the
/// longest ascending prefix (by `λ_i`) of mass at most `4ε`.
pub fn remove_mass_adaptive(spec: &Spectrum, eps: f64) -> Result<MassRemovalResult> {
    check_eps(eps)?;
    let lambdas = spec.values();
    let order = sorted_support(lambdas, |i| lambdas[i]);
    let tail = capped_prefix(lambdas, &order, 4.0 * eps);
    let largest = order.last().copied();
    let kept = zeroed(lambdas, tail.iter().copied().chain(largest));
    Ok(MassRemovalResult {
        epsilon: eps,
        d_eff: nonzero_count(&kept),
        removed_mass: mass_removed(lambdas, &kept),
        tail,
        light: Vec::new(),
        largest,
        survivors: Survivors::LowerAdaptive { top_and_tail_removed: kept },
    })
}

/// Mass removal used by the certification algorithm: zero the longest
/// ascending prefix of mass at most `ε²/20`, then re-bucket the survivors.
pub fn remove_mass_upper(spec: &Spectrum, eps: f64) -> Result<MassRemovalResult> {
    check_eps(eps)?;
    let lambdas = spec.values();
    let order = sorted_support(lambdas, |i| lambdas[i]);
    let tail = capped_prefix(lambdas, &order, eps * eps / 20.0);
    let kept = zeroed(lambdas, tail.iter().copied());
    let buckets = bucketize_values(&kept);
    Ok(MassRemovalResult {
        epsilon: eps,
        d_eff: nonzero_count(&kept),
        removed_mass: mass_removed(lambdas, &kept),
        tail,
        light: Vec::new(),
        largest: None,
        survivors: Survivors::Upper { tail_removed: kept, buckets },
    })
}

/// One predicted copy-complexity value and the quantities it is built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    pub d_eff: usize,
    /// Fidelity of the renormalised surviving spectrum with the maximally
    /// mixed state of the full dimension.
    pub fidelity: f64,
    pub surviving_mass: f64,
    /// The surviving spectrum was empty; `value` is reported as 0.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub dim: usize,
    pub epsilon: f64,
    pub lower_nonadaptive: BoundValue,
    pub lower_adaptive: BoundValue,
    pub upper: BoundValue,
    /// `log(d/ε)`; every polylog factor in the values above is set to 1.
    pub log_factor: f64,
    /// Schatten-2/5 quasinorm of the spectrum with the largest entry and tail removed.
    pub top_and_tail_removed_norm_2_5: f64,
    /// Schatten-1/2 quasinorm of the spectrum with tail and light buckets removed.
    pub tail_and_light_removed_norm_1_2: f64,
}

/// `(Tr√x̂)²/d` for the renormalisation `x̂` of a nonnegative vector.
pub fn fidelity_with_mm(values: &[f64]) -> f64 {
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let root: f64 = values.iter().map(|x| (x / total).sqrt()).sum();
    root * root / values.len() as f64
}

fn bound_value(kept: &[f64], d_eff_power: f64, eps: f64) -> BoundValue {
    let d = kept.len() as f64;
    let d_eff = nonzero_count(kept);
    let mass: f64 = kept.iter().sum();
    if d_eff == 0 {
        return BoundValue { value: 0.0, d_eff: 0, fidelity: 0.0, surviving_mass: 0.0, degenerate: true };
    }
    let fidelity = fidelity_with_mm(kept);
    BoundValue {
        value: d * (d_eff as f64).powf(d_eff_power) * fidelity / (eps * eps),
        d_eff,
        fidelity,
        surviving_mass: mass,
        degenerate: false,
    }
}

/// Leading-order copy-complexity values with unit constants.
///
/// * nonadaptive lower: `d·√d_eff·F/ε²` on the trimmed spectrum;
/// * adaptive lower: `d·d_eff^{1/3}·F/ε²` on the adaptive survivors;
/// * upper: `d·√d_eff·F/ε²` on the certification survivors.
pub fn predicted_bounds(spec: &Spectrum, eps: f64) -> Result<BoundReport> {
    let nonadaptive = remove_mass_lower_nonadaptive(spec, eps)?;
    let adaptive = remove_mass_adaptive(spec, eps)?;
    let upper = remove_mass_upper(spec, eps)?;
    let Survivors::LowerNonadaptive { top_and_tail_removed, tail_and_light_removed, trimmed } = &nonadaptive.survivors
    else {
        unreachable!()
    };
    Ok(BoundReport {
        dim: spec.dim(),
        epsilon: eps,
        lower_nonadaptive: bound_value(trimmed, 0.5, eps),
        lower_adaptive: bound_value(adaptive.effective(), 1.0 / 3.0, eps),
        upper: bound_value(upper.effective(), 0.5, eps),
        log_factor: log_ratio(spec.dim(), eps),
        top_and_tail_removed_norm_2_5: schatten_of_values(top_and_tail_removed, 0.4)?,
        tail_and_light_removed_norm_1_2: schatten_of_values(tail_and_light_removed, 0.5)?,
    })
}
