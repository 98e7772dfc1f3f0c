use serde::{Deserialize, Serialize};

use super::moments::MonteCarloEstimate;
use crate::error::{Error, Result};
use crate::instances::AlternativeEnsemble;
use crate::linalg::DensityMatrix;
use crate::measurement::{outcome_distribution, phi, NonadaptiveSchedule, Povm};
use crate::random::RngHandle;

pub const MAX_TRANSCRIPTS: u128 = 1_000_000;
pub const MAX_COPIES: usize = 8;
pub const DEFAULT_ENSEMBLE_DRAWS: usize = 1000;
const NULL_FLOOR: f64 = 1e-300;

/// Divergences between the transcript law under the null and under the
/// ensemble mixture, for the first `copies` slots of a schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptDivergence {
    pub copies: usize,
    pub transcripts: usize,
    pub tv: f64,
    pub chi2: f64,
    pub kl: f64,
    /// Smallest `p₁(z)/p₀(z)` over transcripts with positive null probability.
    pub min_likelihood_ratio: f64,
    /// True when the ensemble was averaged over all its members.
    pub exact_mixture: bool,
    pub mixture_draws: usize,
}

fn product_law(per_slot: &[Vec<f64>]) -> Vec<f64> {
    let mut law = vec![1.0];
    for p in per_slot {
        let mut next = Vec::with_capacity(law.len() * p.len());
        for &a in &law {
            next.extend(p.iter().map(|&b| a * b));
        }
        law = next;
    }
    law
}

fn slot_laws(state: &DensityMatrix, povms: &[&Povm]) -> Result<Vec<Vec<f64>>> {
    povms.iter().map(|m| outcome_distribution(state, m)).collect()
}

pub fn exact_transcript_divergence(
    sigma: &DensityMatrix,
    ensemble: &dyn AlternativeEnsemble,
    schedule: &NonadaptiveSchedule,
    copies: usize,
    draws: usize,
    seed: RngHandle,
) -> Result<TranscriptDivergence> {
    if copies > MAX_COPIES {
        return Err(Error::UnsupportedRange(format!("at most {MAX_COPIES} copies, got {copies}")));
    }
    if copies > schedule.len() {
        return Err(Error::InvalidParameter(format!("schedule has {} slots, need {copies}", schedule.len())));
    }
    if copies > 0 && schedule.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: sigma.dim(), found: schedule.dim() });
    }
    let povms: Vec<&Povm> = (0..copies).map(|t| schedule.povm_at(t)).collect();
    let size: u128 = povms.iter().map(|m| m.len() as u128).product();
    if size > MAX_TRANSCRIPTS {
        return Err(Error::TranscriptOverflow { size, limit: MAX_TRANSCRIPTS });
    }
    let p0 = product_law(&slot_laws(sigma, &povms)?);
    let mut p1 = vec![0.0; p0.len()];
    let (states, exact) = match ensemble.members() {
        Some(members) => (members, true),
        None => {
            if draws == 0 {
                return Err(Error::InvalidParameter("continuous ensembles need at least one draw".into()));
            }
            let mut rng = seed.rng();
            ((0..draws).map(|_| ensemble.sample(&mut rng)).collect::<Result<Vec<_>>>()?, false)
        }
    };
    let weight = 1.0 / states.len() as f64;
    for state in &states {
        for (acc, x) in p1.iter_mut().zip(product_law(&slot_laws(state, &povms)?)) {
            *acc += weight * x;
        }
    }
    let mut tv = 0.0;
    let mut chi2 = 0.0;
    let mut kl = 0.0;
    let mut min_ratio = f64::INFINITY;
    for (&a, &b) in p0.iter().zip(&p1) {
        tv += (b - a).abs();
        if a > NULL_FLOOR {
            chi2 += (b - a).powi(2) / a;
            min_ratio = min_ratio.min(b / a);
            if b > 0.0 {
                kl += b * (b / a).ln();
            }
        } else if b > NULL_FLOOR {
            chi2 = f64::INFINITY;
            kl = f64::INFINITY;
        }
    }
    Ok(TranscriptDivergence {
        copies,
        transcripts: p0.len(),
        tv: tv / 2.0,
        chi2,
        kl,
        min_likelihood_ratio: min_ratio,
        exact_mixture: exact,
        mixture_draws: states.len(),
    })
}

/// Monte Carlo estimate of `E[(1+φ)^N] − 1` from correlation samples.
pub fn ingster_bound(phi_samples: &[f64], copies: usize) -> Result<MonteCarloEstimate> {
    if phi_samples.is_empty() {
        return Err(Error::InvalidParameter("no correlation samples".into()));
    }
    let mut s = 0.0;
    let mut s2 = 0.0;
    for &x in phi_samples {
        if !(1.0 + x > 0.0) {
            return Err(Error::InvalidParameter(format!("1 + φ must be positive, got φ = {x}")));
        }
        let y = (1.0 + x).powi(copies as i32) - 1.0;
        s += y;
        s2 += y * y;
    }
    Ok(MonteCarloEstimate::from_sums(s, s2, phi_samples.len()))
}

/// The largest per-slot bound `max_t E[(1+φ_t)^N] − 1`.
pub fn ingster_bound_per_slot(per_slot: &[Vec<f64>], copies: usize) -> Result<MonteCarloEstimate> {
    let mut best: Option<MonteCarloEstimate> = None;
    for samples in per_slot {
        let e = ingster_bound(samples, copies)?;
        if best.is_none_or(|b| e.mean > b.mean) {
            best = Some(e);
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("empty schedule".into()))
}

/// `φ_t` for every ordered pair of members of a finite ensemble, per slot.
/// Averaging `(1+φ_t)^N` over these pairs is exact, not a sample mean.
pub fn finite_ensemble_phi_per_slot(
    sigma: &DensityMatrix,
    members: &[DensityMatrix],
    schedule: &NonadaptiveSchedule,
    copies: usize,
) -> Result<Vec<Vec<f64>>> {
    (0..copies)
        .map(|t| {
            let m = schedule.povm_at(t);
            let mut out = Vec::with_capacity(members.len() * members.len());
            for a in members {
                for b in members {
                    out.push(phi(m, sigma, a, b)?);
                }
            }
            Ok(out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{CornerEnsemble, FiniteEnsemble};
    use crate::measurement::basis_povm;
    use crate::random::haar_unitary;

    fn haar_schedule(d: usize, n: usize, seed: u64) -> NonadaptiveSchedule {
        let mut rng = RngHandle::new(seed, 0).rng();
        NonadaptiveSchedule::from_sequence(
            (0..n).map(|_| basis_povm(&haar_unitary(d, &mut rng).unwrap()).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn trivial_cases() {
        let sigma = DensityMatrix::diagonal(&[0.8, 0.2]).unwrap();
        let ens = CornerEnsemble::new(sigma.clone(), 0.3).unwrap();
        let sched = haar_schedule(2, 3, 1);
        let r = exact_transcript_divergence(&sigma, &ens, &sched, 0, 0, RngHandle::new(0, 0)).unwrap();
        assert_eq!((r.tv, r.chi2, r.kl), (0.0, 0.0, 0.0));
        let same = FiniteEnsemble::new(sigma.clone(), vec![sigma.clone()]).unwrap();
        let r = exact_transcript_divergence(&sigma, &same, &sched, 3, 0, RngHandle::new(0, 0)).unwrap();
        assert!(r.tv < 1e-15 && r.chi2 < 1e-15 && r.kl.abs() < 1e-15);
    }

    #[test]
    fn corner_ratio_and_divergence_chain() {
        let eps: f64 = 0.3;
        let sigma = DensityMatrix::diagonal(&[0.85, 0.15]).unwrap();
        let ens = CornerEnsemble::new(sigma.clone(), eps).unwrap();
        let sched = haar_schedule(2, 5, 2);
        let r = exact_transcript_divergence(&sigma, &ens, &sched, 5, 0, RngHandle::new(0, 0)).unwrap();
        let floor = (1.0 - 32.0 * eps * eps / 9.0).powf(2.5);
        assert!(r.min_likelihood_ratio >= floor - 1e-12);
        assert!(r.tv <= 1.0 - floor + 1e-12);
        assert!(2.0 * r.tv * r.tv <= r.chi2 + 1e-15);
        assert!(r.kl <= (1.0 + r.chi2).ln() + 1e-15);
        let phis = finite_ensemble_phi_per_slot(&sigma, &ens.members().unwrap(), &sched, 4).unwrap();
        let bound = ingster_bound_per_slot(&phis, 4).unwrap();
        let r4 = exact_transcript_divergence(&sigma, &ens, &sched, 4, 0, RngHandle::new(0, 0)).unwrap();
        assert!(r4.chi2 <= bound.mean + 1e-12);
    }

    #[test]
    fn ingster_arithmetic() {
        assert_eq!(ingster_bound(&[0.0; 5], 4).unwrap().mean, 0.0);
        let e = ingster_bound(&[0.1; 3], 3).unwrap();
        assert!((e.mean - (1.1f64.powi(3) - 1.0)).abs() < 1e-15);
        assert!(ingster_bound(&[-1.0], 2).is_err());
    }

    #[test]
    fn overflow_is_reported() {
        let sigma = DensityMatrix::maximally_mixed(8);
        let same = FiniteEnsemble::new(sigma.clone(), vec![sigma.clone()]).unwrap();
        let sched = haar_schedule(8, 8, 3);
        let err = exact_transcript_divergence(&sigma, &same, &sched, 8, 0, RngHandle::new(0, 0)).unwrap_err();
        assert!(matches!(err, Error::TranscriptOverflow { .. }));
    }
}
