//! Batch experiment drivers behind the `qcert` binary. Every command
//! returns a [`Report`] that records its resolved configuration and master
//! seed next to the data rows.

mod alternatives;
mod bounds;
pub mod checks;
mod divergence;
mod families;
mod report;
mod runs;
mod sweep;
mod verify;

pub use alternatives::{build_alternative, hs_far_state, tail_shifted_state, Alternative};
pub use bounds::{cmd_bounds, cmd_gen_sigma, BoundsConfig, GenSigmaConfig};
pub use divergence::{cmd_divergence, DivergenceConfig, EnsembleKind};
pub use families::{load_spectrum, spectrum_for_family, SpectrumFamily};
pub use report::{Format, Report};
pub use runs::{cmd_certify, run_certify_trials, Algorithm, CertifyRunConfig, TrialOutcome};
pub use sweep::{cmd_sweep, fit_loglog_slope, minimal_copies, SlopeFit, SweepConfig};
pub use verify::{cmd_verify, run_checks, VerifyConfig};

use crate::error::{Error, Result};

/// Run `f` on a pool capped at `threads` workers (0 keeps rayon's default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
