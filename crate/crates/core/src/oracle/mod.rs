//! Exact and Monte Carlo oracles: Weingarten calculus for Haar moments,
//! transcript-level divergences of small nonadaptive experiments, and the
//! chi-squared bound built from likelihood-ratio correlations.

mod divergence;
mod moments;
mod perm;
mod stats;
mod weingarten;

pub use divergence::{
    finite_ensemble_phi_per_slot, exact_transcript_divergence, ingster_bound, ingster_bound_per_slot, TranscriptDivergence,
    DEFAULT_ENSEMBLE_DRAWS, MAX_TRANSCRIPTS,
};
pub use moments::{haar_moment, haar_moment_mc, verify_moments_basic, MomentReport, MonteCarloEstimate};
pub use perm::Permutation;
pub use stats::{ks_critical_value, ks_two_sample};
pub use weingarten::{weingarten_table, WeingartenTable, MAX_ORDER};
