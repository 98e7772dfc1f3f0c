use serde::{Deserialize, Serialize};
use serde_json::json;

use super::checks::{self, CheckOutcome};
use super::report::Report;
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Monte Carlo samples for moment checks.
    pub samples: usize,
    /// Cases per randomized property check.
    pub cases: usize,
    /// Trials per certification rate check.
    pub trials: usize,
    /// Skip the certification runs, which dominate the running time.
    pub skip_certify: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { seed: 0, samples: 200_000, cases: 1000, trials: 100, skip_certify: false }
    }
}

/// Every named check, in a fixed order.
pub fn run_checks(cfg: &VerifyConfig) -> Result<Vec<CheckOutcome>> {
    let s = cfg.seed;
    let mut out = Vec::new();
    out.extend(checks::moment_identities(&[2, 3, 4, 8], cfg.samples, s)?);
    out.push(checks::weingarten_exactness(2..=8)?);
    out.push(checks::haar_moment_vs_monte_carlo(20, cfg.samples, s)?);
    out.push(checks::haar_invariance(cfg.cases.max(500), s)?);
    out.push(checks::bucket_rule(cfg.cases, s)?);
    out.extend(checks::instance_validity(cfg.cases, s)?);
    out.extend(checks::corner_oracle(50, 0.3, 5, s)?);
    out.push(checks::ingster_consistency(20, 4, 0.3, s)?);
    out.push(checks::block_pushforward(cfg.cases.min(100), s)?);
    out.push(checks::property_tracepsd(cfg.cases, s)?);
    out.push(checks::property_schur(cfg.cases, s)?);
    out.push(checks::property_optimize(cfg.cases, s)?);
    out.push(checks::property_geoseries(cfg.cases, s)?);
    out.push(checks::property_sort_mix(cfg.cases, s)?);
    out.extend(checks::phi_second_moment_paninski(cfg.cases.min(200), 2000, s)?);
    out.push(checks::phi_second_moment_offdiag(cfg.cases.min(200), 2000, s)?);
    out.push(checks::phi_tail_decay(16, 0.3, 20_000, s)?);
    out.extend(checks::bound_formulas()?);
    out.push(checks::alternative_inputs(s)?);
    if !cfg.skip_certify {
        out.extend(checks::basic_power(16, 0.3, 0.1, 2 * cfg.trials, 0.15, s)?);
        out.push(checks::basic_null_general(8, cfg.trials, s)?);
        out.extend(checks::full_certify_rates(cfg.trials, 0.3, 0.2, 0.8, s)?);
    }
    Ok(out)
}

/// Runs the battery; the report passes only when every check does.
pub fn cmd_verify(cfg: &VerifyConfig) -> Result<Report> {
    let outcomes = run_checks(cfg)?;
    let mut report = Report::new("verify", cfg, &["check", "passed", "value", "limit", "detail"])?;
    for c in &outcomes {
        report.push_row(vec![json!(c.name), json!(c.passed), json!(c.value), json!(c.limit), json!(c.detail)]);
    }
    let failed: Vec<&str> = outcomes.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    report.summary = json!({ "checks": outcomes.len(), "failed": failed });
    report.passed = Some(failed.is_empty());
    Ok(report)
}
