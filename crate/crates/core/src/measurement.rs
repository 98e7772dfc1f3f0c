//! POVMs, nonadaptive schedules, budget-tracked copy sources, and the
//! likelihood-ratio quantities used by the lower-bound analysis.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{is_psd, ComplexMatrix, DensityMatrix, HermitianMatrix, PSD_TOL};
use crate::random::{sample_multinomial, sample_negative_binomial};
use crate::spectrum::BucketDecomposition;

/// Null probabilities at or below this are treated as zero.
pub const NULL_PROB_FLOOR: f64 = 1e-15;
const UNITARY_TOL: f64 = 1e-10;

/// A finite POVM: PSD elements summing to the identity, with outcome labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Povm {
    elements: Vec<HermitianMatrix>,
    labels: Vec<String>,
}

impl Povm {
    /// Validates that every element is PSD and that the elements sum to the
    /// identity, both within `1e-9`.
    pub fn new(elements: Vec<HermitianMatrix>, labels: Vec<String>) -> Result<Self> {
        for (k, e) in elements.iter().enumerate() {
            if !is_psd(e, PSD_TOL)? {
                return Err(Error::Validation(format!("POVM element {k} is not positive semidefinite")));
            }
        }
        Self::from_psd_elements(elements, labels)
    }

    /// Elements labelled by their position.
    pub fn unlabelled(elements: Vec<HermitianMatrix>) -> Result<Self> {
        let labels = (0..elements.len()).map(|k| k.to_string()).collect();
        Self::new(elements, labels)
    }

    /// For elements that are PSD by construction: checks shape and completeness only.
    pub(crate) fn from_psd_elements(elements: Vec<HermitianMatrix>, labels: Vec<String>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::Validation("POVM has no elements".into()));
        };
        if labels.len() != elements.len() {
            return Err(Error::DimensionMismatch { expected: elements.len(), found: labels.len() });
        }
        let d = first.dim();
        let mut total = ComplexMatrix::zeros(d, d);
        for e in &elements {
            if e.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: e.dim() });
            }
            total = &total + e.matrix();
        }
        let residual = total.max_abs_diff(&ComplexMatrix::identity(d));
        if residual > PSD_TOL {
            return Err(Error::Validation(format!("POVM elements sum to identity only within {residual:e}")));
        }
        Ok(Self { elements, labels })
    }

    /// The single-outcome POVM `{I}`.
    pub fn trivial(d: usize) -> Self {
        Self { elements: vec![HermitianMatrix::identity(d)], labels: vec!["I".into()] }
    }

    pub fn computational(d: usize) -> Self {
        let elements = (0..d)
            .map(|i| {
                let mut diag = vec![0.0; d];
                diag[i] = 1.0;
                HermitianMatrix::from_real_diagonal(&diag)
            })
            .collect();
        Self { elements, labels: (0..d).map(|i| i.to_string()).collect() }
    }

    /// `{Π_S, I − Π_S}` for the coordinate projector onto `coords`.
    pub fn coordinate_split(d: usize, coords: &[usize]) -> Result<Self> {
        let mut inside = vec![0.0; d];
        for &i in coords {
            if i >= d {
                return Err(Error::DimensionMismatch { expected: d, found: i + 1 });
            }
            inside[i] = 1.0;
        }
        let outside: Vec<f64> = inside.iter().map(|x| 1.0 - x).collect();
        Ok(Self {
            elements: vec![HermitianMatrix::from_real_diagonal(&inside), HermitianMatrix::from_real_diagonal(&outside)],
            labels: vec!["in".into(), "out".into()],
        })
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[HermitianMatrix] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Elements `V M V†`: the same measurement expressed in a frame rotated by `V`.
    pub fn rotated(&self, v: &ComplexMatrix) -> Povm {
        Povm { elements: self.elements.iter().map(|e| e.rotate(v)).collect(), labels: self.labels.clone() }
    }

    /// Largest entry of `|Σ M_z − I|`.
    pub fn completeness_residual(&self) -> f64 {
        let d = self.dim();
        let mut total = ComplexMatrix::zeros(d, d);
        for e in &self.elements {
            total = &total + e.matrix();
        }
        total.max_abs_diff(&ComplexMatrix::identity(d))
    }
}

/// Rank-one POVM onto the columns of a unitary.
pub fn basis_povm(u: &ComplexMatrix) -> Result<Povm> {
    if !u.is_square() {
        return Err(Error::Validation("basis matrix must be square".into()));
    }
    let residual = u.isometry_residual();
    if residual > UNITARY_TOL {
        return Err(Error::Validation(format!("basis matrix is not unitary (residual {residual:e})")));
    }
    let elements = (0..u.cols()).map(|j| HermitianMatrix::outer(&u.column(j))).collect();
    Povm::from_psd_elements(elements, (0..u.cols()).map(|j| j.to_string()).collect())
}

/// Probabilities `⟨M_z, ρ⟩`. Rounding negatives are clipped and the vector is
/// renormalised.
pub fn outcome_distribution(rho: &DensityMatrix, m: &Povm) -> Result<Vec<f64>> {
    if rho.dim() != m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), found: rho.dim() });
    }
    let raw: Vec<f64> = m.elements.iter().map(|e| rho.expectation(e).max(0.0)).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.iter().map(|p| p / total).collect())
}

/// Restrict every element to every block: `Π_j M_z Π_j` over the buckets
/// (plus one block for indices outside all buckets). Exactly zero elements are
/// dropped. Returns the new POVM and the map from new outcome to old outcome.
pub fn project_povm_to_blocks(m: &Povm, buckets: &BucketDecomposition) -> Result<(Povm, Vec<usize>)> {
    let d = m.dim();
    if buckets.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: buckets.dim() });
    }
    let mut blocks: Vec<(String, Vec<usize>)> = buckets.iter().map(|(j, s)| (format!("b{j}"), s.to_vec())).collect();
    let assign = buckets.assignment();
    let rest: Vec<usize> = (0..d).filter(|&i| assign[i].is_none()).collect();
    if !rest.is_empty() {
        blocks.push(("rest".into(), rest));
    }
    let mut elements = Vec::new();
    let mut labels = Vec::new();
    let mut map = Vec::new();
    for (z, e) in m.elements.iter().enumerate() {
        for (tag, idx) in &blocks {
            let restricted = e.restrict_principal(idx);
            if restricted.matrix().max_abs() == 0.0 {
                continue;
            }
            elements.push(restricted);
            labels.push(format!("{}@{}", m.labels[z], tag));
            map.push(z);
        }
    }
    Ok((Povm::from_psd_elements(elements, labels)?, map))
}

/// Push a distribution on new outcomes forward through an outcome map.
pub fn pushforward(probs: &[f64], map: &[usize], target_len: usize) -> Vec<f64> {
    let mut out = vec![0.0; target_len];
    for (p, &z) in probs.iter().zip(map) {
        out[z] += p;
    }
    out
}

/// `⟨M_z, ρ_alt⟩/⟨M_z, ρ⟩ − 1`.
pub fn likelihood_g(element: &HermitianMatrix, rho: &DensityMatrix, rho_alt: &DensityMatrix) -> Result<f64> {
    let p0 = rho.expectation(element);
    if p0 <= NULL_PROB_FLOOR {
        return Err(Error::UndefinedOutcome { outcome: "element".into() });
    }
    Ok(rho_alt.expectation(element) / p0 - 1.0)
}

/// The null outcome distribution together with the likelihood-ratio
/// deviations of alternatives, for evaluating many correlations cheaply.
#[derive(Clone, Debug)]
pub struct LikelihoodProfile {
    pub null_probs: Vec<f64>,
    /// Outcomes kept (null probability above the floor).
    support: Vec<usize>,
    labels: Vec<String>,
    povm: Povm,
}

impl LikelihoodProfile {
    pub fn new(m: &Povm, rho: &DensityMatrix) -> Result<Self> {
        if rho.dim() != m.dim() {
            return Err(Error::DimensionMismatch { expected: m.dim(), found: rho.dim() });
        }
        let null_probs: Vec<f64> = m.elements.iter().map(|e| rho.expectation(e)).collect();
        let support = (0..m.len()).filter(|&z| null_probs[z] > NULL_PROB_FLOOR).collect();
        Ok(Self { null_probs, support, labels: m.labels.clone(), povm: m.clone() })
    }

    /// `g(z)` for each outcome; outcomes where both null and alternative
    /// vanish get 0, outcomes where only the null vanishes are an error.
    pub fn deviations(&self, alt: &DensityMatrix) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.null_probs.len()];
        let mut next = self.support.iter().peekable();
        for (z, e) in self.povm.elements.iter().enumerate() {
            let pa = alt.expectation(e);
            if next.peek() == Some(&&z) {
                next.next();
                g[z] = pa / self.null_probs[z] - 1.0;
            } else if pa.abs() > NULL_PROB_FLOOR {
                return Err(Error::UndefinedOutcome { outcome: self.labels[z].clone() });
            }
        }
        Ok(g)
    }

    /// `Σ_z p₀(z)·a(z)·b(z)`.
    pub fn correlate(&self, a: &[f64], b: &[f64]) -> f64 {
        self.support.iter().map(|&z| self.null_probs[z] * a[z] * b[z]).sum()
    }

    /// `Σ_z p₀(z)·g(z)`, which vanishes whenever both states have equal trace.
    pub fn mean(&self, g: &[f64]) -> f64 {
        self.support.iter().map(|&z| self.null_probs[z] * g[z]).sum()
    }
}

/// `E_{z∼p₀}[g_U(z)·g_V(z)]`.
pub fn phi(m: &Povm, rho: &DensityMatrix, rho_u: &DensityMatrix, rho_v: &DensityMatrix) -> Result<f64> {
    let profile = LikelihoodProfile::new(m, rho)?;
    let gu = profile.deviations(rho_u)?;
    let gv = profile.deviations(rho_v)?;
    Ok(profile.correlate(&gu, &gv))
}

/// `E_{z∼p₀}[(g_U(z) + g_V(z))²] = E g_U² + 2φ + E g_V²`.
pub fn k_quantity(m: &Povm, rho: &DensityMatrix, rho_u: &DensityMatrix, rho_v: &DensityMatrix) -> Result<f64> {
    let profile = LikelihoodProfile::new(m, rho)?;
    let gu = profile.deviations(rho_u)?;
    let gv = profile.deviations(rho_v)?;
    Ok(profile.correlate(&gu, &gu) + 2.0 * profile.correlate(&gu, &gv) + profile.correlate(&gv, &gv))
}

/// A fixed sequence of POVMs, one per copy; repeated POVMs are stored once.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NonadaptiveSchedule {
    povms: Vec<Povm>,
    /// `slots[t]` is the POVM index used on copy `t`.
    slots: Vec<usize>,
}

impl NonadaptiveSchedule {
    pub fn new(povms: Vec<Povm>, slots: Vec<usize>) -> Result<Self> {
        let Some(first) = povms.first() else {
            return Err(Error::Validation("schedule has no POVMs".into()));
        };
        if let Some(p) = povms.iter().find(|p| p.dim() != first.dim()) {
            return Err(Error::DimensionMismatch { expected: first.dim(), found: p.dim() });
        }
        if let Some(&s) = slots.iter().find(|&&s| s >= povms.len()) {
            return Err(Error::InvalidParameter(format!("slot refers to POVM {s} of {}", povms.len())));
        }
        Ok(Self { povms, slots })
    }

    pub fn from_sequence(povms: Vec<Povm>) -> Result<Self> {
        let slots = (0..povms.len()).collect();
        Self::new(povms, slots)
    }

    pub fn repeated(povm: Povm, copies: usize) -> Self {
        Self { povms: vec![povm], slots: vec![0; copies] }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.povms[0].dim()
    }

    pub fn povm_at(&self, t: usize) -> &Povm {
        &self.povms[self.slots[t]]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Povm> {
        self.slots.iter().map(|&s| &self.povms[s])
    }
}

/// One measured copy: which measurement setting and which outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub povm: u64,
    pub outcome: String,
}

/// Write records as JSON lines.
pub fn write_transcript_jsonl<W: Write>(records: &[TranscriptRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Anything that hands out measurement outcomes on fresh copies of a hidden
/// state and charges each copy to a budget.
pub trait CopyAccess {
    fn dim(&self) -> usize;

    /// Physical copies consumed so far, including any discarded ones.
    fn copies_used(&self) -> u64;

    fn budget(&self) -> u64;

    /// Exact outcome law of `m` on the hidden state. Used only to drive the
    /// simulation of measurements; never exposed to certification logic.
    #[doc(hidden)]
    fn outcome_law(&self, m: &Povm) -> Result<Vec<f64>>;

    /// Charge the copies behind `counts` and record them.
    #[doc(hidden)]
    fn commit(&mut self, m: &Povm, counts: &[u64], rng: &mut dyn RngCore) -> Result<()>;

    /// Measure `n` fresh copies with `m` and return the outcome counts.
    fn measure_counts(&mut self, m: &Povm, n: u64, rng: &mut dyn RngCore) -> Result<Vec<u64>> {
        if m.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: m.dim() });
        }
        let used = self.copies_used();
        if used.saturating_add(n) > self.budget() {
            return Err(Error::BudgetExhausted { used, budget: self.budget() });
        }
        let law = self.outcome_law(m)?;
        let counts = sample_multinomial(n, &law, rng)?;
        self.commit(m, &counts, rng)?;
        Ok(counts)
    }

    /// Measure one fresh copy.
    fn measure(&mut self, m: &Povm, rng: &mut dyn RngCore) -> Result<usize> {
        let counts = self.measure_counts(m, 1, rng)?;
        Ok(counts.iter().position(|&c| c == 1).expect("one outcome"))
    }
}

/// The root copy source holding the hidden state.
#[derive(Clone, Debug)]
pub struct CopySource {
    state: DensityMatrix,
    copies_used: u64,
    budget: u64,
    settings_used: u64,
    transcript: Option<Vec<TranscriptRecord>>,
}

impl CopySource {
    pub fn new(state: DensityMatrix, budget: u64) -> Self {
        Self { state, copies_used: 0, budget, settings_used: 0, transcript: None }
    }

    /// Also keep a per-copy transcript (memory grows with the copy count).
    pub fn with_transcript(mut self) -> Self {
        self.transcript = Some(Vec::new());
        self
    }

    pub fn transcript(&self) -> Option<&[TranscriptRecord]> {
        self.transcript.as_deref()
    }

    pub fn remaining(&self) -> u64 {
        self.budget - self.copies_used
    }
}

impl CopyAccess for CopySource {
    fn dim(&self) -> usize {
        self.state.dim()
    }

    fn copies_used(&self) -> u64 {
        self.copies_used
    }

    fn budget(&self) -> u64 {
        self.budget
    }

    fn outcome_law(&self, m: &Povm) -> Result<Vec<f64>> {
        outcome_distribution(&self.state, m)
    }

    fn commit(&mut self, m: &Povm, counts: &[u64], rng: &mut dyn RngCore) -> Result<()> {
        let n: u64 = counts.iter().sum();
        if self.copies_used.saturating_add(n) > self.budget {
            return Err(Error::BudgetExhausted { used: self.copies_used, budget: self.budget });
        }
        self.copies_used += n;
        let setting = self.settings_used;
        self.settings_used += 1;
        if let Some(t) = self.transcript.as_mut() {
            // copies within one call are i.i.d., so a uniformly random order
            // of the outcome multiset has the right joint law
            let mut batch: Vec<TranscriptRecord> = counts
                .iter()
                .enumerate()
                .flat_map(|(z, &c)| {
                    std::iter::repeat_n(TranscriptRecord { povm: setting, outcome: m.labels()[z].clone() }, c as usize)
                })
                .collect();
            batch.shuffle(rng);
            t.extend(batch);
        }
        Ok(())
    }
}

/// Measurements expressed in a rotated frame: a POVM `M` requested here is
/// performed as `V M V†` on the parent.
pub struct RotatedSource<'a> {
    parent: &'a mut dyn CopyAccess,
    basis: ComplexMatrix,
}

impl<'a> RotatedSource<'a> {
    pub fn new(parent: &'a mut dyn CopyAccess, basis: ComplexMatrix) -> Result<Self> {
        if basis.rows() != parent.dim() || !basis.is_square() {
            return Err(Error::DimensionMismatch { expected: parent.dim(), found: basis.rows() });
        }
        if basis.isometry_residual() > UNITARY_TOL {
            return Err(Error::Validation("rotation is not unitary".into()));
        }
        Ok(Self { parent, basis })
    }
}

impl CopyAccess for RotatedSource<'_> {
    fn dim(&self) -> usize {
        self.parent.dim()
    }
    fn copies_used(&self) -> u64 {
        self.parent.copies_used()
    }
    fn budget(&self) -> u64 {
        self.parent.budget()
    }
    fn outcome_law(&self, m: &Povm) -> Result<Vec<f64>> {
        self.parent.outcome_law(&m.rotated(&self.basis))
    }
    fn commit(&mut self, m: &Povm, counts: &[u64], rng: &mut dyn RngCore) -> Result<()> {
        self.parent.commit(&m.rotated(&self.basis), counts, rng)
    }
}

/// Copies of the conditional state `ΠρΠ/Tr(ΠρΠ)` for a coordinate projector
/// `Π`, realised by rejection sampling on the parent.
///
/// A POVM `{M_z}` on the `k`-dimensional subspace is performed on the parent
/// as `{ΠM_zΠ} ∪ {I − Π}`; copies landing on `I − Π` are discarded but still
/// charged.
pub struct ConditionalSource<'a> {
    parent: &'a mut dyn CopyAccess,
    coords: Vec<usize>,
    accepted: u64,
    discarded: u64,
}

impl<'a> ConditionalSource<'a> {
    pub fn new(parent: &'a mut dyn CopyAccess, coords: Vec<usize>) -> Result<Self> {
        let d = parent.dim();
        let mut seen = vec![false; d];
        for &i in &coords {
            if i >= d || seen[i] {
                return Err(Error::Validation(format!("projector coordinate {i} out of range or repeated")));
            }
            seen[i] = true;
        }
        if coords.is_empty() {
            return Err(Error::Validation("projector is empty".into()));
        }
        Ok(Self { parent, coords, accepted: 0, discarded: 0 })
    }

    pub fn discarded(&self) -> u64 {
        self.discarded
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    fn refine(&self, m: &Povm) -> Result<Povm> {
        let d = self.parent.dim();
        if m.dim() != self.coords.len() {
            return Err(Error::DimensionMismatch { expected: self.coords.len(), found: m.dim() });
        }
        let mut elements = Vec::with_capacity(m.len() + 1);
        for e in m.elements() {
            let mut big = ComplexMatrix::zeros(d, d);
            big.set_block(&self.coords, &self.coords, e.matrix());
            elements.push(HermitianMatrix::symmetrize(big));
        }
        let mut outside = vec![1.0; d];
        for &i in &self.coords {
            outside[i] = 0.0;
        }
        elements.push(HermitianMatrix::from_real_diagonal(&outside));
        let mut labels = m.labels().to_vec();
        labels.push("discard".into());
        Povm::from_psd_elements(elements, labels)
    }
}

impl CopyAccess for ConditionalSource<'_> {
    fn dim(&self) -> usize {
        self.coords.len()
    }
    fn copies_used(&self) -> u64 {
        self.parent.copies_used()
    }
    fn budget(&self) -> u64 {
        self.parent.budget()
    }

    fn outcome_law(&self, m: &Povm) -> Result<Vec<f64>> {
        let law = self.parent.outcome_law(&self.refine(m)?)?;
        let accept = 1.0 - law[law.len() - 1];
        if accept <= NULL_PROB_FLOOR {
            return Err(Error::Validation("conditional state is undefined: projector has zero weight".into()));
        }
        Ok(law[..law.len() - 1].iter().map(|p| p / accept).collect())
    }

    fn commit(&mut self, _m: &Povm, _counts: &[u64], _rng: &mut dyn RngCore) -> Result<()> {
        unreachable!("conditional sources commit through measure_counts")
    }

    fn measure_counts(&mut self, m: &Povm, n: u64, rng: &mut dyn RngCore) -> Result<Vec<u64>> {
        let refined = self.refine(m)?;
        let law = self.parent.outcome_law(&refined)?;
        let reject = law[law.len() - 1];
        let accept = 1.0 - reject;
        if n == 0 {
            return Ok(vec![0; m.len()]);
        }
        let used = self.parent.copies_used();
        if accept <= NULL_PROB_FLOOR {
            // rejection sampling would never terminate
            return Err(Error::BudgetExhausted { used, budget: self.parent.budget() });
        }
        let conditional: Vec<f64> = law[..law.len() - 1].iter().map(|p| p / accept).collect();
        let discards = sample_negative_binomial(n, accept.min(1.0), rng)?;
        if used.saturating_add(n).saturating_add(discards) > self.parent.budget() {
            return Err(Error::BudgetExhausted { used, budget: self.parent.budget() });
        }
        let mut counts = sample_multinomial(n, &conditional, rng)?;
        counts.push(discards);
        self.parent.commit(&refined, &counts, rng)?;
        counts.pop();
        self.accepted += n;
        self.discarded += discards;
        Ok(counts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{haar_unitary, RngHandle};
    use crate::spectrum::bucketize_values;

    fn rng(seed: u64) -> rand_chacha::ChaCha20Rng {
        RngHandle::new(seed, 0).rng()
    }

    #[test]
    fn distributions() {
        let rho = DensityMatrix::diagonal(&[0.1, 0.2, 0.7]).unwrap();
        assert_eq!(outcome_distribution(&rho, &Povm::trivial(3)).unwrap(), vec![1.0]);
        let p = outcome_distribution(&rho, &Povm::computational(3)).unwrap();
        for (a, b) in p.iter().zip([0.1, 0.2, 0.7]) {
            assert!((a - b).abs() < 1e-15);
        }
        let u = haar_unitary(5, &mut rng(1)).unwrap();
        let m = basis_povm(&u).unwrap();
        let p = outcome_distribution(&DensityMatrix::maximally_mixed(5), &m).unwrap();
        assert!(p.iter().all(|x| (x - 0.2).abs() < 1e-10));
        assert!(m.completeness_residual() < 1e-9);
        for e in m.elements() {
            let sq = e.matrix().matmul(e.matrix());
            assert!(sq.max_abs_diff(e.matrix()) < 1e-9);
        }
        assert_eq!(basis_povm(&ComplexMatrix::identity(3)).unwrap().elements(), Povm::computational(3).elements());
        assert!(basis_povm(&ComplexMatrix::from_real_diagonal(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn povm_validation() {
        let bad = Povm::unlabelled(vec![HermitianMatrix::from_real_diagonal(&[1.0, 0.5])]);
        assert!(bad.is_err());
        let neg = Povm::unlabelled(vec![
            HermitianMatrix::from_real_diagonal(&[1.5, 0.5]),
            HermitianMatrix::from_real_diagonal(&[-0.5, 0.5]),
        ]);
        assert!(neg.is_err());
    }

    #[test]
    fn source_accounting() {
        let mut src = CopySource::new(DensityMatrix::maximally_mixed(2), 10);
        let mut r = rng(2);
        assert_eq!(src.measure(&Povm::trivial(2), &mut r).unwrap(), 0);
        assert_eq!(src.copies_used(), 1);
        src.measure_counts(&Povm::computational(2), 9, &mut r).unwrap();
        assert_eq!(src.copies_used(), 10);
        assert!(matches!(src.measure(&Povm::trivial(2), &mut r), Err(Error::BudgetExhausted { .. })));
        assert_eq!(src.copies_used(), 10);
        let mut empty = CopySource::new(DensityMatrix::maximally_mixed(2), 0);
        assert!(empty.measure(&Povm::trivial(2), &mut r).is_err());
    }

    #[test]
    fn measured_frequencies_match() {
        let rho = DensityMatrix::diagonal(&[0.2, 0.3, 0.5]).unwrap();
        let m = basis_povm(&haar_unitary(3, &mut rng(3)).unwrap()).unwrap();
        let probs = outcome_distribution(&rho, &m).unwrap();
        let mut src = CopySource::new(rho, u64::MAX);
        let mut r = rng(4);
        let n = 100_000u64;
        let mut counts = vec![0u64; 3];
        for _ in 0..n {
            counts[src.measure(&m, &mut r).unwrap()] += 1;
        }
        for (c, p) in counts.iter().zip(&probs) {
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((*c as f64 - n as f64 * p).abs() <= 3.5 * sd);
        }
    }

    #[test]
    fn transcript_lines() {
        let mut src = CopySource::new(DensityMatrix::maximally_mixed(2), 100).with_transcript();
        let mut r = rng(5);
        src.measure_counts(&Povm::computational(2), 5, &mut r).unwrap();
        src.measure(&Povm::trivial(2), &mut r).unwrap();
        let t = src.transcript().unwrap();
        assert_eq!(t.len() as u64, src.copies_used());
        assert_eq!(t[5], TranscriptRecord { povm: 1, outcome: "I".into() });
        let mut buf = Vec::new();
        write_transcript_jsonl(t, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 6);
    }

    #[test]
    fn conditional_passthrough_and_pure() {
        let rho = DensityMatrix::diagonal(&[0.5, 0.5]).unwrap();
        let mut src = CopySource::new(rho, 1000);
        let mut r = rng(6);
        {
            let mut cond = ConditionalSource::new(&mut src, vec![0, 1]).unwrap();
            cond.measure_counts(&Povm::computational(2), 100, &mut r).unwrap();
            assert_eq!(cond.discarded(), 0);
        }
        assert_eq!(src.copies_used(), 100);

        let pure = DensityMatrix::diagonal(&[0.0, 1.0, 0.0]).unwrap();
        let mut src = CopySource::new(pure, 1000);
        let mut cond = ConditionalSource::new(&mut src, vec![1]).unwrap();
        let c = cond.measure_counts(&Povm::trivial(1), 50, &mut r).unwrap();
        assert_eq!((c, cond.discarded()), (vec![50], 0));
        let mut cond = ConditionalSource::new(&mut src, vec![0]).unwrap();
        assert!(cond.measure_counts(&Povm::trivial(1), 1, &mut r).is_err());
    }

    #[test]
    fn conditional_discard_rate() {
        let rho = DensityMatrix::diagonal(&[0.3, 0.2, 0.5]).unwrap();
        let mut src = CopySource::new(rho, u64::MAX);
        let mut r = rng(7);
        let mut cond = ConditionalSource::new(&mut src, vec![0, 1]).unwrap();
        let counts = cond.measure_counts(&Povm::computational(2), 10_000, &mut r).unwrap();
        assert_eq!(counts.iter().sum::<u64>(), 10_000);
        let discarded = cond.discarded() as f64;
        drop(cond);
        let total = src.copies_used() as f64;
        assert_eq!(total, 10_000.0 + discarded);
        let rate = discarded / total;
        let sd = (0.5 * 0.5 / total).sqrt();
        assert!((rate - 0.5).abs() <= 3.0 * sd, "discard rate {rate}");
        // conditional frequencies: 0.6 / 0.4
        let sd = (10_000.0f64 * 0.24).sqrt();
        assert!((counts[0] as f64 - 6000.0).abs() <= 3.5 * sd);
    }

    #[test]
    fn rotated_source_measures_in_frame() {
        let u = haar_unitary(3, &mut rng(8)).unwrap();
        let sigma_frame = DensityMatrix::diagonal(&[0.6, 0.3, 0.1]).unwrap();
        // hidden state V diag V†: in the rotated frame it looks diagonal
        let hidden = DensityMatrix::new(sigma_frame.hermitian().rotate(&u)).unwrap();
        let mut src = CopySource::new(hidden, u64::MAX);
        let rot = RotatedSource::new(&mut src, u).unwrap();
        let law = rot.outcome_law(&Povm::computational(3)).unwrap();
        for (a, b) in law.iter().zip([0.6, 0.3, 0.1]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn block_projection_pushforward() {
        let spec = [0.3, 0.3, 0.15, 0.15, 0.1];
        let buckets = bucketize_values(&spec);
        let mut r = rng(9);
        let u = haar_unitary(5, &mut r).unwrap();
        let m = basis_povm(&u).unwrap();
        let (proj, map) = project_povm_to_blocks(&m, &buckets).unwrap();
        assert!(proj.completeness_residual() < 1e-9);
        // a block-diagonal state: random PSD blocks on each bucket
        let mut rho = ComplexMatrix::zeros(5, 5);
        for set in buckets.index_sets() {
            let g = ComplexMatrix::from_fn(set.len(), set.len(), |_, _| crate::random::complex_gaussian(&mut r));
            rho.set_block(set, set, &g.matmul(&g.adjoint()));
        }
        let tr = rho.trace().re;
        let rho = DensityMatrix::from_matrix(rho.scale_real(1.0 / tr)).unwrap();
        let old = outcome_distribution(&rho, &m).unwrap();
        let new = outcome_distribution(&rho, &proj).unwrap();
        let pushed = pushforward(&new, &map, m.len());
        for (a, b) in pushed.iter().zip(&old) {
            assert!((a - b).abs() < 1e-10);
        }
        let (same, _) = project_povm_to_blocks(&Povm::computational(5), &buckets).unwrap();
        assert_eq!(same.len(), 5);
        assert_eq!(same.labels()[0], "0@b1");
    }

    #[test]
    fn likelihood_quantities() {
        let rho = DensityMatrix::diagonal(&[0.75, 0.25]).unwrap();
        let m = basis_povm(&haar_unitary(2, &mut rng(10)).unwrap()).unwrap();
        assert_eq!(phi(&m, &rho, &rho, &rho).unwrap(), 0.0);
        let alt = crate::instances::build_corner(&rho, 0.3, 1).unwrap();
        let other = crate::instances::build_corner(&rho, 0.3, -1).unwrap();
        assert!(phi(&m, &rho, &alt, &alt).unwrap() >= 0.0);
        let a = phi(&m, &rho, &alt, &other).unwrap();
        let b = phi(&m, &rho, &other, &alt).unwrap();
        assert!((a - b).abs() < 1e-15);
        let profile = LikelihoodProfile::new(&m, &rho).unwrap();
        let g = profile.deviations(&alt).unwrap();
        assert!(profile.mean(&g).abs() < 1e-12);
        let k = k_quantity(&m, &rho, &alt, &other).unwrap();
        let direct = profile.correlate(&g, &g) + 2.0 * a + phi(&m, &rho, &other, &other).unwrap();
        assert!((k - direct).abs() < 1e-14);

        // single-element route agrees with the profile
        let g0 = likelihood_g(&m.elements()[0], &rho, &alt).unwrap();
        assert!((g0 - g[0]).abs() < 1e-14);

        // zero null probability with nonzero alternative is an error
        let pure = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!(matches!(phi(&Povm::computational(2), &pure, &mixed, &mixed), Err(Error::UndefinedOutcome { .. })));
        assert_eq!(phi(&Povm::computational(2), &pure, &pure, &pure).unwrap(), 0.0);
    }
}
