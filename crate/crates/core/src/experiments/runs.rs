use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::alternatives::{build_alternative, Alternative};
use super::families::{spectrum_for_family, SpectrumFamily};
use super::report::Report;
use crate::certify::{basic_certify, certify, Answer, CertifyConfig};
use crate::error::{Error, Result};
use crate::linalg::DensityMatrix;
use crate::measurement::{CopyAccess, CopySource};
use crate::random::RngHandle;

const EXPERIMENT_CERTIFY: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Haar-basis tester for Hilbert–Schmidt distance.
    Basic,
    /// Bucketed tester for trace distance.
    Full,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Basic => "basic",
            Self::Full => "full",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basic" => Ok(Self::Basic),
            "full" => Ok(Self::Full),
            _ => Err(Error::InvalidParameter(format!("algorithm must be basic or full, got `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyRunConfig {
    pub family: SpectrumFamily,
    pub d: usize,
    pub eps: f64,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub threads: usize,
    pub alternative: Alternative,
    pub algorithm: Algorithm,
    pub budget: u64,
    pub c_basic: f64,
    pub c_l2: f64,
    pub c_trace: f64,
    pub c_tail: f64,
}

impl CertifyRunConfig {
    pub fn new(family: SpectrumFamily, d: usize, eps: f64, delta: f64, alternative: Alternative, algorithm: Algorithm) -> Self {
        let c = CertifyConfig::default();
        Self {
            family,
            d,
            eps,
            delta,
            trials: 100,
            seed: 0,
            threads: 0,
            alternative,
            algorithm,
            budget: u64::MAX,
            c_basic: c.c_basic,
            c_l2: c.c_l2,
            c_trace: c.c_trace,
            c_tail: c.c_tail,
        }
    }

    fn certify_config(&self, seed: RngHandle) -> CertifyConfig {
        CertifyConfig { c_basic: self.c_basic, c_l2: self.c_l2, c_trace: self.c_trace, c_tail: self.c_tail, seed }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub stream: u64,
    pub answer: Answer,
    pub copies: u64,
    pub correct: bool,
    pub wall_ms: f64,
}

fn run_one(cfg: &CertifyRunConfig, sigma: &DensityMatrix, trial: usize) -> Result<TrialOutcome> {
    let handle = RngHandle::for_trial(cfg.seed, EXPERIMENT_CERTIFY, trial as u64);
    let start = Instant::now();
    let rho = build_alternative(cfg.alternative, sigma, cfg.eps, &mut handle.child(0).rng())?;
    let mut src = CopySource::new(rho, cfg.budget);
    let ccfg = cfg.certify_config(handle.child(1));
    let verdict = match cfg.algorithm {
        Algorithm::Basic => basic_certify(&mut src, sigma, cfg.eps, cfg.delta, &ccfg)?,
        Algorithm::Full => certify(&mut src, sigma, cfg.eps, cfg.delta, &ccfg)?,
    };
    debug_assert_eq!(verdict.copies_used, src.copies_used());
    let expected = if cfg.alternative.is_null() { Answer::Yes } else { Answer::No };
    Ok(TrialOutcome {
        trial,
        stream: handle.stream_index,
        answer: verdict.answer,
        copies: verdict.copies_used,
        correct: verdict.answer == expected,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Run the configured trials in parallel; the trial → stream mapping does
/// not depend on the worker count.
pub fn run_certify_trials(cfg: &CertifyRunConfig) -> Result<Vec<TrialOutcome>> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let sigma = spectrum_for_family(&cfg.family, cfg.d)?.to_state();
    (0..cfg.trials).into_par_iter().map(|t| run_one(cfg, &sigma, t)).collect()
}

pub fn cmd_certify(cfg: &CertifyRunConfig) -> Result<Report> {
    let outcomes = super::with_threads(cfg.threads, || run_certify_trials(cfg))??;
    let mut report = Report::new(
        "certify",
        cfg,
        &["trial", "stream", "family", "alternative", "algorithm", "answer", "copies", "correct", "wall_ms"],
    )?;
    for o in &outcomes {
        report.push_row(vec![
            json!(o.trial),
            json!(o.stream),
            json!(cfg.family.to_string()),
            json!(cfg.alternative.name()),
            json!(cfg.algorithm.to_string()),
            serde_json::to_value(o.answer)?,
            json!(o.copies),
            json!(o.correct),
            json!((o.wall_ms * 1e3).round() / 1e3),
        ]);
    }
    let n = outcomes.len() as f64;
    let rate = |a: Answer| outcomes.iter().filter(|o| o.answer == a).count() as f64 / n;
    let errors = outcomes.iter().filter(|o| !o.correct).count() as f64 / n;
    report.summary = json!({
        "trials": outcomes.len(),
        "yes_rate": rate(Answer::Yes),
        "no_rate": rate(Answer::No),
        "inconclusive_rate": rate(Answer::Inconclusive),
        "error_rate": errors,
        "mean_copies": outcomes.iter().map(|o| o.copies as f64).sum::<f64>() / n,
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_trials_rejected() {
        let mut cfg = CertifyRunConfig::new(SpectrumFamily::MaximallyMixed, 4, 0.3, 0.1, Alternative::Null, Algorithm::Basic);
        cfg.trials = 0;
        assert!(cmd_certify(&cfg).is_err());
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let mut cfg = CertifyRunConfig::new(SpectrumFamily::MaximallyMixed, 4, 0.3, 0.1, Alternative::HsFar, Algorithm::Basic);
        cfg.trials = 6;
        cfg.seed = 9;
        cfg.threads = 1;
        let a = run_certify_trials(&cfg).unwrap();
        cfg.threads = 3;
        let b = super::super::with_threads(3, || run_certify_trials(&cfg)).unwrap().unwrap();
        let strip = |v: &[TrialOutcome]| v.iter().map(|o| (o.answer, o.copies, o.stream)).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
    }
}
