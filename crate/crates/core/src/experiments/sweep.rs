use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::alternatives::hs_far_state;
use super::families::{spectrum_for_family, SpectrumFamily};
use super::report::Report;
use super::runs::Algorithm;
use crate::certify::{certify, majority_rounds, run_basic_plan, Answer, BasicPlan, CertifyConfig};
use crate::error::{Error, Result};
use crate::linalg::DensityMatrix;
use crate::measurement::CopySource;
use crate::random::RngHandle;
use crate::spectrum::log_ratio;

const EXPERIMENT_SWEEP: u64 = 2;
const MAX_DOUBLINGS: u32 = 40;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub family: SpectrumFamily,
    pub dims: Vec<usize>,
    pub eps: f64,
    pub delta: f64,
    /// Trials per evaluated copy count (each trial runs one null and one
    /// alternative instance).
    pub trials: usize,
    pub seed: u64,
    pub threads: usize,
    pub target: f64,
    pub algorithm: Algorithm,
    pub c_l2: f64,
}

impl SweepConfig {
    pub fn basic(dims: Vec<usize>, eps: f64, delta: f64) -> Self {
        Self {
            family: SpectrumFamily::MaximallyMixed,
            dims,
            eps,
            delta,
            trials: 200,
            seed: 0,
            threads: 0,
            target: 0.9,
            algorithm: Algorithm::Basic,
            c_l2: CertifyConfig::default().c_l2,
        }
    }
}

/// Least-squares slope of `ln y` against `ln x` with a 95% interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    /// Set when fewer than two distinct points are available.
    pub undefined: bool,
}

fn t_quantile_975(df: usize) -> f64 {
    const TABLE: [f64; 10] = [12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228];
    TABLE.get(df.wrapping_sub(1)).copied().unwrap_or(1.96)
}

pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> SlopeFit {
    let undefined = SlopeFit { slope: None, intercept: None, ci_low: None, ci_high: None, undefined: true };
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return undefined;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n as f64;
    let my = ly.iter().sum::<f64>() / n as f64;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return undefined;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (ci_low, ci_high) = if n > 2 {
        let ssr: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        let se = (ssr / (n - 2) as f64 / sxx).sqrt();
        let half = t_quantile_975(n - 2) * se;
        (Some(slope - half), Some(slope + half))
    } else {
        (None, None)
    };
    SlopeFit { slope: Some(slope), intercept: Some(intercept), ci_low, ci_high, undefined: false }
}

/// Fraction of trials answered correctly on the null and on the
/// Hilbert–Schmidt-far alternative, whichever is smaller.
fn basic_success(cfg: &SweepConfig, sigma: &DensityMatrix, copies_per_round: u64) -> Result<f64> {
    let d = sigma.dim();
    let plan = BasicPlan {
        rounds: majority_rounds(cfg.delta),
        copies_per_round,
        l2_gap: cfg.c_l2 * cfg.eps / (d as f64).sqrt(),
    };
    let results: Vec<(bool, bool)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let h = RngHandle::for_trial(cfg.seed, EXPERIMENT_SWEEP + ((d as u64) << 8), t as u64);
            let alt = hs_far_state(sigma, cfg.eps, &mut h.child(0).rng())?;
            let mut null_src = CopySource::new(sigma.clone(), u64::MAX);
            let (a0, _) = run_basic_plan(&mut null_src, sigma, cfg.eps, plan, &mut h.child(1).rng())?;
            let mut alt_src = CopySource::new(alt, u64::MAX);
            let (a1, _) = run_basic_plan(&mut alt_src, sigma, cfg.eps, plan, &mut h.child(2).rng())?;
            Ok((a0 == Answer::Yes, a1 == Answer::No))
        })
        .collect::<Result<_>>()?;
    let n = results.len() as f64;
    let null_ok = results.iter().filter(|r| r.0).count() as f64 / n;
    let alt_ok = results.iter().filter(|r| r.1).count() as f64 / n;
    Ok(null_ok.min(alt_ok))
}

/// Smallest copies-per-round reaching the target success, by doubling and
/// then bisection. Every evaluation reuses the same trial seeds.
pub fn minimal_copies(cfg: &SweepConfig, d: usize) -> Result<(u64, f64)> {
    let sigma = spectrum_for_family(&cfg.family, d)?.to_state();
    let mut hi = 2u64;
    let mut hi_success = basic_success(cfg, &sigma, hi)?;
    let mut doublings = 0;
    while hi_success < cfg.target {
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::InvalidParameter(format!("target success {} not reached at d = {d}", cfg.target)));
        }
        hi *= 2;
        hi_success = basic_success(cfg, &sigma, hi)?;
    }
    let mut lo = hi / 2;
    if lo < 2 {
        return Ok((hi, hi_success));
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let s = basic_success(cfg, &sigma, mid)?;
        if s >= cfg.target {
            hi = mid;
            hi_success = s;
        } else {
            lo = mid;
        }
    }
    Ok((hi, hi_success))
}

fn full_copies(cfg: &SweepConfig, d: usize) -> Result<f64> {
    let sigma = spectrum_for_family(&cfg.family, d)?.to_state();
    let copies: Vec<u64> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let h = RngHandle::for_trial(cfg.seed, EXPERIMENT_SWEEP + ((d as u64) << 8), t as u64);
            let mut src = CopySource::new(sigma.clone(), u64::MAX);
            let ccfg = CertifyConfig { c_l2: cfg.c_l2, ..CertifyConfig::default() }.with_seed(h);
            Ok(certify(&mut src, &sigma, cfg.eps, cfg.delta, &ccfg)?.copies_used)
        })
        .collect::<Result<_>>()?;
    Ok(copies.iter().map(|&c| c as f64).sum::<f64>() / copies.len() as f64)
}

pub fn cmd_sweep(cfg: &SweepConfig) -> Result<Report> {
    if cfg.trials == 0 || cfg.dims.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one trial and one dimension".into()));
    }
    let mut dims = cfg.dims.clone();
    dims.sort_unstable();
    dims.dedup();
    let mut report = Report::new(
        "sweep",
        cfg,
        &["d", "algorithm", "copies_per_round", "rounds", "total_copies", "success", "polylog_adjusted_copies"],
    )?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut adjusted = Vec::new();
    super::with_threads(cfg.threads, || -> Result<()> {
        for &d in &dims {
            let dim_actual = spectrum_for_family(&cfg.family, d)?.dim();
            let m = log_ratio(10 * dim_actual, cfg.eps * cfg.eps);
            match cfg.algorithm {
                Algorithm::Basic => {
                    let (n, success) = minimal_copies(cfg, d)?;
                    let rounds = majority_rounds(cfg.delta) as u64;
                    report.push_row(vec![
                        json!(d),
                        json!("basic"),
                        json!(n),
                        json!(rounds),
                        json!(n * rounds),
                        json!(success),
                        serde_json::Value::Null,
                    ]);
                    xs.push(d as f64);
                    ys.push(n as f64);
                }
                Algorithm::Full => {
                    let copies = full_copies(cfg, d)?;
                    let adj = copies / m.powi(4);
                    report.push_row(vec![
                        json!(d),
                        json!("full"),
                        serde_json::Value::Null,
                        serde_json::Value::Null,
                        json!(copies),
                        serde_json::Value::Null,
                        json!(adj),
                    ]);
                    xs.push(d as f64);
                    ys.push(copies);
                    adjusted.push(adj);
                }
            }
        }
        Ok(())
    })??;
    let fit = fit_loglog_slope(&xs, &ys);
    let monotone = ys.windows(2).all(|w| w[1] >= w[0]);
    report.summary = json!({
        "slope": fit,
        "polylog_adjusted_slope": (!adjusted.is_empty()).then(|| fit_loglog_slope(&xs, &adjusted)),
        "monotone_in_d": monotone,
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_fit_exact_power_law() {
        let xs = [4.0, 8.0, 16.0, 32.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(0.5)).collect();
        let fit = fit_loglog_slope(&xs, &ys);
        assert!((fit.slope.unwrap() - 0.5).abs() < 1e-12);
        assert!((fit.ci_high.unwrap() - fit.ci_low.unwrap()).abs() < 1e-9);
        assert!(fit_loglog_slope(&[4.0], &[2.0]).undefined);
    }

    #[test]
    fn single_dimension_sweep_flags_slope() {
        let mut cfg = SweepConfig::basic(vec![4], 0.5, 0.2);
        cfg.trials = 20;
        let r = cmd_sweep(&cfg).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.summary["slope"]["undefined"], json!(true));
    }
}
