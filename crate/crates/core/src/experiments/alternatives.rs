use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{build_corner, AlternativeEnsemble, OffDiagEnsemble, PaninskiEnsemble};
use crate::linalg::{hs_distance, DensityMatrix};
use crate::random::haar_isometry;
use crate::spectrum::{remove_mass_upper, Spectrum};

/// Hidden state handed to a certification trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    /// The hidden state equals `σ`.
    Null,
    /// Mixture with a Haar-random pure state at Hilbert–Schmidt distance `ε`.
    HsFar,
    /// Scaled Haar isometry on the default off-diagonal bucket pair.
    Offdiag,
    /// `ε²/4` of mass moved from the largest entry into the tail indices.
    Tail,
    Paninski,
    Corner,
}

impl Alternative {
    pub const ALL: [Alternative; 6] = [Self::Null, Self::HsFar, Self::Offdiag, Self::Tail, Self::Paninski, Self::Corner];

    pub fn name(self) -> &'static str {
        match self {
            Self::Null => "null",
            Self::HsFar => "hs-far",
            Self::Offdiag => "offdiag",
            Self::Tail => "tail",
            Self::Paninski => "paninski",
            Self::Corner => "corner",
        }
    }

    pub fn is_null(self) -> bool {
        self == Self::Null
    }
}

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Alternative {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown alternative `{s}`")))
    }
}

/// `(1 − t)σ + t·ψψ†` with `ψ` Haar-random and `t` chosen so that the
/// Hilbert–Schmidt distance to `σ` is `eps`.
pub fn hs_far_state(sigma: &DensityMatrix, eps: f64, rng: &mut dyn RngCore) -> Result<DensityMatrix> {
    let psi: Vec<Complex64> = haar_isometry(sigma.dim(), 1, rng)?.column(0);
    let pure = DensityMatrix::pure(&psi)?;
    let full = hs_distance(sigma, &pure)?;
    if full <= 0.0 || eps > full {
        return Err(Error::Infeasible {
            reason: format!("Hilbert–Schmidt distance {eps} exceeds the reachable {full}"),
            max_feasible: full,
        });
    }
    sigma.mix(&pure, eps / full)
}

/// Move `ε²/4` of mass from the largest entry of a diagonal `σ` onto the
/// tail indices chosen by the upper-bound mass removal, split evenly.
pub fn tail_shifted_state(sigma: &DensityMatrix, eps: f64) -> Result<DensityMatrix> {
    if !sigma.hermitian().is_diagonal(1e-12) {
        return Err(Error::Validation("tail alternative needs a diagonal state".into()));
    }
    let diag = sigma.hermitian().real_diagonal();
    let removal = remove_mass_upper(&Spectrum::new(diag.clone())?, eps)?;
    if removal.tail.is_empty() {
        return Err(Error::EnsembleUnavailable("the tail set is empty".into()));
    }
    let shift = eps * eps / 4.0;
    let top = (0..diag.len()).max_by(|&a, &b| diag[a].total_cmp(&diag[b]).then(b.cmp(&a))).expect("nonempty");
    if removal.tail.contains(&top) || diag[top] < shift {
        return Err(Error::Infeasible { reason: "largest entry cannot supply the shifted mass".into(), max_feasible: 0.0 });
    }
    let mut out = diag;
    out[top] -= shift;
    for &i in &removal.tail {
        out[i] += shift / removal.tail.len() as f64;
    }
    DensityMatrix::diagonal(&out)
}

/// Hidden state for one trial.
pub fn build_alternative(kind: Alternative, sigma: &DensityMatrix, eps: f64, rng: &mut dyn RngCore) -> Result<DensityMatrix> {
    match kind {
        Alternative::Null => Ok(sigma.clone()),
        Alternative::HsFar => hs_far_state(sigma, eps, rng),
        Alternative::Offdiag => OffDiagEnsemble::with_default_pair(sigma.clone(), eps)?.sample(rng),
        Alternative::Tail => tail_shifted_state(sigma, eps),
        Alternative::Paninski => PaninskiEnsemble::new(sigma.clone(), eps)?.sample(rng),
        Alternative::Corner => build_corner(sigma, eps, if rng.next_u32() & 1 == 0 { 1 } else { -1 }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::trace_distance;
    use crate::random::RngHandle;

    #[test]
    fn hs_far_has_requested_distance() {
        let sigma = DensityMatrix::maximally_mixed(16);
        let mut rng = RngHandle::new(1, 0).rng();
        let rho = hs_far_state(&sigma, 0.3, &mut rng).unwrap();
        assert!((hs_distance(&sigma, &rho).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn tail_shift_moves_quarter_eps_squared() {
        let sigma = DensityMatrix::diagonal(&crate::experiments::families::TWO_BUCKET).unwrap();
        let rho = tail_shifted_state(&sigma, 0.3).unwrap();
        let diag = rho.hermitian().real_diagonal();
        assert!((diag[7] - (0.004 + 0.0225)).abs() < 1e-15);
        assert!((trace_distance(&sigma, &rho).unwrap() - 0.045).abs() < 1e-12);
        assert!(tail_shifted_state(&DensityMatrix::maximally_mixed(4), 0.3).is_err());
    }

    #[test]
    fn names_round_trip() {
        for a in Alternative::ALL {
            assert_eq!(a.name().parse::<Alternative>().unwrap(), a);
        }
    }
}
