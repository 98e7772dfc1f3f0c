use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Named spectrum families. Parsed from `mm`, `rank:R`, `spiked`,
/// `geometric:RATIO`, `two-bucket` or `file:PATH`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SpectrumFamily {
    MaximallyMixed,
    /// Maximally mixed on the first `r` coordinates.
    Rank(usize),
    /// `(1 − 1/d, 1/d², …, 1/d²)` in dimension `d + 1`.
    Spiked,
    /// `λ_i ∝ ratio^i`.
    Geometric(f64),
    /// Four entries of 0.174, three of 0.1 and one of 0.004 (`d = 8` only).
    TwoBucket,
    File(PathBuf),
}

impl fmt::Display for SpectrumFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MaximallyMixed => write!(f, "mm"),
            Self::Rank(r) => write!(f, "rank:{r}"),
            Self::Spiked => write!(f, "spiked"),
            Self::Geometric(q) => write!(f, "geometric:{q}"),
            Self::TwoBucket => write!(f, "two-bucket"),
            Self::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for SpectrumFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown spectrum family `{s}`"));
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        match (head, arg) {
            ("mm", None) => Ok(Self::MaximallyMixed),
            ("spiked", None) => Ok(Self::Spiked),
            ("two-bucket", None) => Ok(Self::TwoBucket),
            ("rank", Some(a)) => a.parse().map(Self::Rank).map_err(|_| bad()),
            ("geometric", Some(a)) => a.parse().map(Self::Geometric).map_err(|_| bad()),
            ("file", Some(a)) => Ok(Self::File(PathBuf::from(a))),
            _ => Err(bad()),
        }
    }
}

impl From<SpectrumFamily> for String {
    fn from(f: SpectrumFamily) -> String {
        f.to_string()
    }
}

impl TryFrom<String> for SpectrumFamily {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

pub const TWO_BUCKET: [f64; 8] = [0.174, 0.174, 0.174, 0.174, 0.1, 0.1, 0.1, 0.004];

/// Spectrum of the family at parameter `d`. The spiked family has
/// dimension `d + 1`; every other family has dimension `d`.
pub fn spectrum_for_family(family: &SpectrumFamily, d: usize) -> Result<Spectrum> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be at least 1".into()));
    }
    match family {
        SpectrumFamily::MaximallyMixed => Spectrum::new(vec![1.0 / d as f64; d]),
        SpectrumFamily::Rank(r) => {
            if *r == 0 || *r > d {
                return Err(Error::InvalidParameter(format!("rank {r} outside 1..={d}")));
            }
            let mut v = vec![0.0; d];
            v[..*r].fill(1.0 / *r as f64);
            Spectrum::new(v)
        }
        SpectrumFamily::Spiked => {
            let df = d as f64;
            let mut v = vec![1.0 / (df * df); d + 1];
            v[0] = 1.0 - 1.0 / df;
            Spectrum::new(v)
        }
        SpectrumFamily::Geometric(q) => {
            if !(*q > 0.0) || !q.is_finite() {
                return Err(Error::InvalidParameter(format!("geometric ratio {q} must be positive")));
            }
            let raw: Vec<f64> = (0..d).map(|i| q.powi(i as i32)).collect();
            let total: f64 = raw.iter().sum();
            if !(total.is_finite() && total > 0.0) || raw.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter(format!("geometric ratio {q} cannot be normalised at d = {d}")));
            }
            Spectrum::new(raw.iter().map(|x| x / total).collect())
        }
        SpectrumFamily::TwoBucket => {
            if d != TWO_BUCKET.len() {
                return Err(Error::InvalidParameter(format!("two-bucket family is defined for d = 8 only, got {d}")));
            }
            Spectrum::new(TWO_BUCKET.to_vec())
        }
        SpectrumFamily::File(path) => load_spectrum(path),
    }
}

/// Read a spectrum from JSON: either a bare array or an object with a
/// `spectrum` array, at the top level or under `summary` (the JSON written
/// by `gen-sigma`).
pub fn load_spectrum(path: &Path) -> Result<Spectrum> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let array = match &value {
        serde_json::Value::Object(map) => map
            .get("spectrum")
            .or_else(|| map.get("summary").and_then(|s| s.get("spectrum")))
            .cloned()
            .ok_or_else(|| Error::Validation("spectrum file has no `spectrum` field".into()))?,
        other => other.clone(),
    };
    let values: Vec<f64> = serde_json::from_value(array)?;
    Spectrum::new(values)
}
