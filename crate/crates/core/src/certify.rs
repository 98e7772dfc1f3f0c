//! State certification with nonadaptive unentangled measurements: the basic
//! Haar-basis tester and the bucketed certification algorithm built on it.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::classical::{l2_single_round, SampleCounts};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityMatrix, HermitianMatrix};
use crate::measurement::{
    basis_povm, outcome_distribution, ConditionalSource, CopyAccess, Povm, RotatedSource,
};
use crate::random::{haar_unitary, sample_multinomial, RngHandle};
use crate::spectrum::{log_ratio, remove_mass_upper, Spectrum, Survivors};

/// Constant multipliers for the copy counts. The defaults come from the
/// calibration run in `examples/calibrate_constants.rs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    /// Copies per basic round are `⌈c_basic·√d/ε²⌉`.
    pub c_basic: f64,
    /// The ℓ2 gap handed to the two-sample tester is `c_l2·ε/√d`.
    pub c_l2: f64,
    /// Trace estimates use `⌈c_trace·ln(2k/δ)/t²⌉` copies for accuracy `t`.
    pub c_trace: f64,
    /// The tail-mass check uses `⌈c_tail·ln(1/δ)/ε²⌉` copies.
    pub c_tail: f64,
    pub seed: RngHandle,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self { c_basic: 12.0, c_l2: 1.0, c_trace: 0.5, c_tail: 400.0, seed: RngHandle::new(0, 0) }
    }
}

impl CertifyConfig {
    pub fn with_seed(mut self, seed: RngHandle) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in
            [("c_basic", self.c_basic), ("c_l2", self.c_l2), ("c_trace", self.c_trace), ("c_tail", self.c_tail)]
        {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Yes,
    No,
    /// The copy budget ran out before a decision.
    Inconclusive,
}

/// Record of one basic-certification call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasicReport {
    pub dim: usize,
    pub hs_gap: f64,
    pub l2_gap: f64,
    pub rounds: usize,
    pub copies_per_round: u64,
    pub rejections: usize,
    pub statistics: Vec<f64>,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "lowercase")]
pub enum CheckStatus {
    Passed,
    Rejected,
    Skipped(String),
}

/// One step of the certification run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    /// `tail`, `bucket` (a single bucket), `pair` (two buckets), or `basic`.
    pub kind: String,
    pub buckets: Vec<u32>,
    pub copies: u64,
    pub observed_fraction: Option<f64>,
    pub reference_trace: Option<f64>,
    pub threshold: Option<f64>,
    pub basic: Option<BasicReport>,
    pub status: CheckStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub answer: Answer,
    pub copies_used: u64,
    pub checks: Vec<CheckRecord>,
}

/// `R = max(1, ⌈18·ln(1/δ)⌉)` majority rounds.
pub fn majority_rounds(delta: f64) -> usize {
    ((18.0 * (1.0 / delta).ln()).ceil() as usize).max(1)
}

/// Copies per round `⌈c_basic·√d/ε²⌉`.
pub fn basic_copies_per_round(d: usize, hs_gap: f64, c_basic: f64) -> u64 {
    (c_basic * (d as f64).sqrt() / (hs_gap * hs_gap)).ceil() as u64
}

/// Fixed-parameter core of the basic tester.
#[derive(Clone, Copy, Debug)]
pub struct BasicPlan {
    pub rounds: usize,
    pub copies_per_round: u64,
    pub l2_gap: f64,
}

impl BasicPlan {
    pub fn new(d: usize, hs_gap: f64, delta: f64, cfg: &CertifyConfig) -> Self {
        Self {
            rounds: majority_rounds(delta),
            copies_per_round: basic_copies_per_round(d, hs_gap, cfg.c_basic),
            l2_gap: cfg.c_l2 * hs_gap / (d as f64).sqrt(),
        }
    }
}

/// Run the basic tester with an explicit plan. Returns `Ok(None)` when the
/// budget runs out.
pub fn run_basic_plan(
    src: &mut dyn CopyAccess,
    sigma: &DensityMatrix,
    hs_gap: f64,
    plan: BasicPlan,
    rng: &mut dyn RngCore,
) -> Result<(Answer, BasicReport)> {
    let d = sigma.dim();
    if src.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: src.dim() });
    }
    let n = plan.copies_per_round;
    let mut report = BasicReport {
        dim: d,
        hs_gap,
        l2_gap: plan.l2_gap,
        rounds: plan.rounds,
        copies_per_round: n,
        rejections: 0,
        statistics: Vec::with_capacity(plan.rounds),
        threshold: (n as f64).powi(2) * plan.l2_gap * plan.l2_gap / 2.0,
    };
    if d == 1 {
        return Ok((Answer::Yes, report));
    }
    for _ in 0..plan.rounds {
        let u = haar_unitary(d, rng)?;
        let m = basis_povm(&u)?;
        let x = match src.measure_counts(&m, n, rng) {
            Ok(c) => SampleCounts::new(c),
            Err(Error::BudgetExhausted { .. }) => return Ok((Answer::Inconclusive, report)),
            Err(e) => return Err(e),
        };
        let q = outcome_distribution(sigma, &m)?;
        let y = SampleCounts::new(sample_multinomial(n, &q, rng)?);
        let (reject, z, _) = l2_single_round(&x, &y, plan.l2_gap)?;
        report.rejections += reject as usize;
        report.statistics.push(z);
    }
    let answer = if 2 * report.rejections > plan.rounds { Answer::No } else { Answer::Yes };
    Ok((answer, report))
}

/// Distinguish `ρ = σ` from `‖ρ − σ‖_HS > ε` with Haar-random basis
/// measurements and a majority of ℓ2 two-sample tests.
pub fn basic_certify(
    src: &mut dyn CopyAccess,
    sigma: &DensityMatrix,
    eps: f64,
    delta: f64,
    cfg: &CertifyConfig,
) -> Result<Verdict> {
    let mut rng = cfg.seed.rng();
    basic_certify_with_rng(src, sigma, eps, delta, cfg, &mut rng)
}

fn check_unit_interval(name: &str, x: f64, upper: f64) -> Result<()> {
    if !(x > 0.0 && x <= upper) {
        return Err(Error::InvalidParameter(format!("{name} = {x} outside (0, {upper}]")));
    }
    Ok(())
}

fn basic_certify_with_rng(
    src: &mut dyn CopyAccess,
    sigma: &DensityMatrix,
    eps: f64,
    delta: f64,
    cfg: &CertifyConfig,
    rng: &mut dyn RngCore,
) -> Result<Verdict> {
    check_unit_interval("epsilon", eps, 2.0)?;
    check_unit_interval("delta", delta, 1.0)?;
    cfg.validate()?;
    let start = src.copies_used();
    let plan = BasicPlan::new(sigma.dim(), eps, delta, cfg);
    let (answer, report) = run_basic_plan(src, sigma, eps, plan, rng)?;
    let copies = src.copies_used() - start;
    let status = match answer {
        Answer::Yes => CheckStatus::Passed,
        Answer::No => CheckStatus::Rejected,
        Answer::Inconclusive => CheckStatus::Skipped("budget exhausted".into()),
    };
    Ok(Verdict {
        answer,
        copies_used: src.copies_used(),
        checks: vec![CheckRecord {
            kind: "basic".into(),
            buckets: Vec::new(),
            copies,
            observed_fraction: None,
            reference_trace: None,
            threshold: None,
            basic: Some(report),
            status,
        }],
    })
}

/// Frame in which `σ` is diagonal, with its spectrum in that frame.
fn diagonal_frame(sigma: &DensityMatrix) -> Result<(Option<ComplexMatrix>, Spectrum)> {
    if sigma.hermitian().is_diagonal(1e-14) {
        return Ok((None, Spectrum::of_state(sigma)?));
    }
    let eig = sigma.hermitian().eig()?;
    let clipped: Vec<f64> = eig.values.iter().map(|x| x.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    Ok((Some(eig.vectors), Spectrum::new(clipped.iter().map(|x| x / total).collect())?))
}

fn subspace_state(lambdas: &[f64], coords: &[usize]) -> Result<DensityMatrix> {
    let block: Vec<f64> = coords.iter().map(|&i| lambdas[i]).collect();
    let total: f64 = block.iter().sum();
    DensityMatrix::new(HermitianMatrix::from_real_diagonal(&block.iter().map(|x| x / total).collect::<Vec<_>>()))
}

enum Step {
    Continue,
    Reject,
    OutOfBudget,
}

struct Run<'a> {
    src: &'a mut dyn CopyAccess,
    checks: Vec<CheckRecord>,
    rng: rand_chacha::ChaCha20Rng,
}

impl Run<'_> {
    /// Measure `{Π, I − Π}` on `n` copies; `None` when the budget runs out.
    fn fraction_inside(&mut self, coords: &[usize], n: u64) -> Result<Option<f64>> {
        let m = Povm::coordinate_split(self.src.dim(), coords)?;
        match self.src.measure_counts(&m, n, &mut self.rng) {
            Ok(c) => Ok(Some(c[0] as f64 / n as f64)),
            Err(Error::BudgetExhausted { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn gated_subspace_check(
        &mut self,
        kind: &str,
        buckets: Vec<u32>,
        coords: &[usize],
        lambdas: &[f64],
        gate: TraceGate,
        hs_gap: f64,
        delta: f64,
        cfg: &CertifyConfig,
    ) -> Result<Step> {
        let start = self.src.copies_used();
        let reference: f64 = coords.iter().map(|&i| lambdas[i]).sum();
        let threshold = reference + gate.accuracy;
        let mut record = CheckRecord {
            kind: kind.into(),
            buckets,
            copies: 0,
            observed_fraction: None,
            reference_trace: Some(reference),
            threshold: Some(threshold),
            basic: None,
            status: CheckStatus::Passed,
        };
        let Some(fraction) = self.fraction_inside(coords, gate.copies)? else {
            record.status = CheckStatus::Skipped("budget exhausted".into());
            record.copies = self.src.copies_used() - start;
            self.checks.push(record);
            return Ok(Step::OutOfBudget);
        };
        record.observed_fraction = Some(fraction);
        if fraction >= threshold {
            record.status = CheckStatus::Rejected;
            record.copies = self.src.copies_used() - start;
            self.checks.push(record);
            return Ok(Step::Reject);
        }
        let skip = if coords.len() < 2 {
            Some("one-dimensional subspace")
        } else if reference < gate.min_reference {
            Some("reference trace below the basic-test gate")
        } else if fraction < gate.min_estimate {
            Some("estimated trace below the rejection-sampling floor")
        } else {
            None
        };
        if let Some(reason) = skip {
            record.status = CheckStatus::Skipped(reason.into());
            record.copies = self.src.copies_used() - start;
            self.checks.push(record);
            return Ok(Step::Continue);
        }
        let sigma_hat = subspace_state(lambdas, coords)?;
        let plan = BasicPlan::new(coords.len(), hs_gap, delta, cfg);
        let outcome = {
            let mut cond = ConditionalSource::new(&mut *self.src, coords.to_vec())?;
            run_basic_plan(&mut cond, &sigma_hat, hs_gap, plan, &mut self.rng)?
        };
        let (answer, report) = outcome;
        record.basic = Some(report);
        record.copies = self.src.copies_used() - start;
        let step = match answer {
            Answer::Yes => Step::Continue,
            Answer::No => {
                record.status = CheckStatus::Rejected;
                Step::Reject
            }
            Answer::Inconclusive => {
                record.status = CheckStatus::Skipped("budget exhausted".into());
                Step::OutOfBudget
            }
        };
        self.checks.push(record);
        Ok(step)
    }
}

#[derive(Clone, Copy)]
struct TraceGate {
    copies: u64,
    accuracy: f64,
    /// Below this reference trace the basic test is not run.
    min_reference: f64,
    /// Below this estimated trace the conditional state is not sampled.
    min_estimate: f64,
}

fn trace_copies(accuracy: f64, tests: f64, delta: f64, c_trace: f64) -> u64 {
    (c_trace * (2.0 * tests / delta).ln() / (accuracy * accuracy)).ceil() as u64
}

/// Decide `ρ = σ` versus `‖ρ − σ‖₁ > ε`.
///
/// `σ` may be any density matrix: it is diagonalised, and every measurement
/// is expressed in its eigenbasis before being applied to the copies.
pub fn certify(
    src: &mut dyn CopyAccess,
    sigma: &DensityMatrix,
    eps: f64,
    delta: f64,
    cfg: &CertifyConfig,
) -> Result<Verdict> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon {eps} outside (0, 1)")));
    }
    check_unit_interval("delta", delta, 1.0)?;
    cfg.validate()?;
    let d = sigma.dim();
    if src.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: src.dim() });
    }
    let (frame, spectrum) = diagonal_frame(sigma)?;
    let mut rotated;
    let src: &mut dyn CopyAccess = match frame {
        Some(v) => {
            rotated = RotatedSource::new(src, v)?;
            &mut rotated
        }
        None => src,
    };
    let removal = remove_mass_upper(&spectrum, eps)?;
    let Survivors::Upper { buckets, .. } = &removal.survivors else { unreachable!() };
    let lambdas = spectrum.values();
    let m = log_ratio(10 * d, eps * eps);
    let m2 = m * m;

    let mut run = Run { src, checks: Vec::new(), rng: cfg.seed.rng() };
    let finish = |run: Run<'_>, answer: Answer| Verdict { answer, copies_used: run.src.copies_used(), checks: run.checks };

    // tail mass
    if removal.tail.is_empty() {
        run.checks.push(CheckRecord {
            kind: "tail".into(),
            buckets: Vec::new(),
            copies: 0,
            observed_fraction: None,
            reference_trace: Some(0.0),
            threshold: Some(eps * eps / 5.0),
            basic: None,
            status: CheckStatus::Skipped("no tail indices".into()),
        });
    } else {
        let n = (cfg.c_tail * (1.0 / delta).ln().max(1.0) / (eps * eps)).ceil() as u64;
        let reference: f64 = removal.tail.iter().map(|&i| lambdas[i]).sum();
        let start = run.src.copies_used();
        let fraction = run.fraction_inside(&removal.tail, n)?;
        let threshold = eps * eps / 5.0;
        let mut record = CheckRecord {
            kind: "tail".into(),
            buckets: Vec::new(),
            copies: run.src.copies_used() - start,
            observed_fraction: fraction,
            reference_trace: Some(reference),
            threshold: Some(threshold),
            basic: None,
            status: CheckStatus::Passed,
        };
        match fraction {
            None => {
                record.status = CheckStatus::Skipped("budget exhausted".into());
                run.checks.push(record);
                return Ok(finish(run, Answer::Inconclusive));
            }
            Some(f) if f >= threshold => {
                record.status = CheckStatus::Rejected;
                run.checks.push(record);
                return Ok(finish(run, Answer::No));
            }
            Some(_) => run.checks.push(record),
        }
    }

    let active = buckets.active();

    // single buckets
    let single_gate = TraceGate {
        copies: trace_copies(eps / (40.0 * m2), m, delta, cfg.c_trace),
        accuracy: eps / (40.0 * m2),
        min_reference: eps / (10.0 * m2),
        min_estimate: eps / (40.0 * m2),
    };
    for &j in &active {
        let coords = buckets.bucket(j).expect("active bucket").to_vec();
        let reference: f64 = coords.iter().map(|&i| lambdas[i]).sum();
        let eps_prime = eps / (20.0 * m2 * reference);
        let hs_gap = (eps_prime / (coords.len() as f64).sqrt()).min(2.0);
        match run.gated_subspace_check("bucket", vec![j], &coords, lambdas, single_gate, hs_gap, delta / m, cfg)? {
            Step::Continue => {}
            Step::Reject => return Ok(finish(run, Answer::No)),
            Step::OutOfBudget => return Ok(finish(run, Answer::Inconclusive)),
        }
    }

    // bucket pairs
    let pair_gate = TraceGate {
        copies: trace_copies(eps / (20.0 * m2), m2, delta, cfg.c_trace),
        accuracy: eps / (20.0 * m2),
        min_reference: eps / (5.0 * m2),
        min_estimate: eps / (40.0 * m2),
    };
    for (a, &ja) in active.iter().enumerate() {
        for &jb in &active[a + 1..] {
            let (j, jp) = if buckets.size(ja) >= buckets.size(jb) { (ja, jb) } else { (jb, ja) };
            let mut coords: Vec<usize> =
                buckets.bucket(j).expect("active").iter().chain(buckets.bucket(jp).expect("active")).copied().collect();
            coords.sort_unstable();
            let reference: f64 = coords.iter().map(|&i| lambdas[i]).sum();
            let eps_dprime = eps / (10.0 * m2 * reference);
            let hs_gap = (eps_dprime / (coords.len() as f64).sqrt()).min(2.0);
            match run.gated_subspace_check("pair", vec![j, jp], &coords, lambdas, pair_gate, hs_gap, delta / m2, cfg)? {
                Step::Continue => {}
                Step::Reject => return Ok(finish(run, Answer::No)),
                Step::OutOfBudget => return Ok(finish(run, Answer::Inconclusive)),
            }
        }
    }
    Ok(finish(run, Answer::Yes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::CopySource;

    #[test]
    fn trivial_dimension_is_yes() {
        let sigma = DensityMatrix::maximally_mixed(1);
        let mut src = CopySource::new(sigma.clone(), 10);
        let v = basic_certify(&mut src, &sigma, 0.3, 0.1, &CertifyConfig::default()).unwrap();
        assert_eq!(v.answer, Answer::Yes);
        assert_eq!(v.copies_used, 0);
    }

    #[test]
    fn basic_accounting_and_determinism() {
        let sigma = DensityMatrix::maximally_mixed(4);
        let cfg = CertifyConfig::default().with_seed(RngHandle::new(5, 1));
        let mut a = CopySource::new(sigma.clone(), u64::MAX);
        let va = basic_certify(&mut a, &sigma, 0.5, 0.2, &cfg).unwrap();
        let plan = BasicPlan::new(4, 0.5, 0.2, &cfg);
        assert_eq!(va.copies_used, plan.rounds as u64 * plan.copies_per_round);
        assert_eq!(va.copies_used, a.copies_used());
        let mut b = CopySource::new(sigma.clone(), u64::MAX);
        let vb = basic_certify(&mut b, &sigma, 0.5, 0.2, &cfg).unwrap();
        assert_eq!(va, vb);
    }

    #[test]
    fn budget_exhaustion_is_inconclusive() {
        let sigma = DensityMatrix::maximally_mixed(4);
        let mut src = CopySource::new(sigma.clone(), 100);
        let v = basic_certify(&mut src, &sigma, 0.5, 0.2, &CertifyConfig::default()).unwrap();
        assert_eq!(v.answer, Answer::Inconclusive);
        assert!(v.copies_used <= 100);
        let mut src = CopySource::new(sigma.clone(), 100);
        let v = certify(&mut src, &sigma, 0.3, 0.2, &CertifyConfig::default()).unwrap();
        assert_eq!(v.answer, Answer::Inconclusive);
    }

    #[test]
    fn certify_accepts_null_and_counts_exactly() {
        let sigma = DensityMatrix::diagonal(&[0.174, 0.174, 0.174, 0.174, 0.1, 0.1, 0.1, 0.004]).unwrap();
        let cfg = CertifyConfig::default().with_seed(RngHandle::new(11, 0));
        let mut src = CopySource::new(sigma.clone(), u64::MAX);
        let v = certify(&mut src, &sigma, 0.3, 0.2, &cfg).unwrap();
        assert_eq!(v.copies_used, src.copies_used());
        assert_eq!(v.checks.iter().map(|c| c.copies).sum::<u64>(), v.copies_used);
        assert_eq!(v.answer, Answer::Yes, "{:#?}", v.checks);
    }

    #[test]
    fn certify_rejects_far_state() {
        let sigma = DensityMatrix::diagonal(&[0.25, 0.25, 0.25, 0.25]).unwrap();
        let rho = DensityMatrix::diagonal(&[0.55, 0.15, 0.15, 0.15]).unwrap();
        let cfg = CertifyConfig::default().with_seed(RngHandle::new(12, 0));
        let mut src = CopySource::new(rho, u64::MAX);
        let v = certify(&mut src, &sigma, 0.3, 0.2, &cfg).unwrap();
        assert_eq!(v.answer, Answer::No);
    }

    #[test]
    fn certify_handles_non_diagonal_sigma() {
        let mut rng = RngHandle::new(13, 0).rng();
        let u = haar_unitary(4, &mut rng).unwrap();
        let diag = HermitianMatrix::from_real_diagonal(&[0.4, 0.3, 0.2, 0.1]);
        let sigma = DensityMatrix::new(diag.rotate(&u)).unwrap();
        let cfg = CertifyConfig::default().with_seed(RngHandle::new(14, 0));
        let mut src = CopySource::new(sigma.clone(), u64::MAX);
        assert_eq!(certify(&mut src, &sigma, 0.3, 0.2, &cfg).unwrap().answer, Answer::Yes);
        // the same spectrum in the computational basis is far from the rotated σ
        let rho = DensityMatrix::new(diag).unwrap();
        let mut src = CopySource::new(rho, u64::MAX);
        assert_eq!(certify(&mut src, &sigma, 0.3, 0.2, &cfg).unwrap().answer, Answer::No);
    }
}
