use serde::{Deserialize, Serialize};
use serde_json::json;

use super::families::{spectrum_for_family, SpectrumFamily};
use super::report::Report;
use crate::classical::l23_functional;
use crate::error::Result;
use crate::spectrum::{fidelity_with_mm, predicted_bounds, BoundValue};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenSigmaConfig {
    pub family: SpectrumFamily,
    pub d: usize,
}

/// One row per eigenvalue; the summary carries the spectrum array so the
/// JSON output can be read back with `file:PATH`.
pub fn cmd_gen_sigma(cfg: &GenSigmaConfig) -> Result<Report> {
    let spec = spectrum_for_family(&cfg.family, cfg.d)?;
    let mut report = Report::new("gen-sigma", cfg, &["index", "value"])?;
    for (i, v) in spec.values().iter().enumerate() {
        report.push_row(vec![json!(i), json!(v)]);
    }
    report.summary = json!({ "dim": spec.dim(), "spectrum": spec.values() });
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsConfig {
    pub family: SpectrumFamily,
    pub d: usize,
    pub eps: f64,
}

fn bound_rows(report: &mut Report, name: &str, b: &BoundValue) {
    report.push_row(vec![json!(format!("{name}.value")), json!(b.value)]);
    report.push_row(vec![json!(format!("{name}.d_eff")), json!(b.d_eff)]);
    report.push_row(vec![json!(format!("{name}.fidelity")), json!(b.fidelity)]);
    report.push_row(vec![json!(format!("{name}.surviving_mass")), json!(b.surviving_mass)]);
    report.push_row(vec![json!(format!("{name}.degenerate")), json!(b.degenerate)]);
}

/// Predicted copy complexities (unit constants, polylog factors dropped)
/// and the functionals they are built from.
pub fn cmd_bounds(cfg: &BoundsConfig) -> Result<Report> {
    let spec = spectrum_for_family(&cfg.family, cfg.d)?;
    let bounds = predicted_bounds(&spec, cfg.eps)?;
    let mut report = Report::new("bounds", cfg, &["quantity", "value"])?;
    bound_rows(&mut report, "lower_nonadaptive", &bounds.lower_nonadaptive);
    bound_rows(&mut report, "lower_adaptive", &bounds.lower_adaptive);
    bound_rows(&mut report, "upper", &bounds.upper);
    let extra = [
        ("top_and_tail_removed_norm_2_5", bounds.top_and_tail_removed_norm_2_5),
        ("tail_and_light_removed_norm_1_2", bounds.tail_and_light_removed_norm_1_2),
        ("fidelity_with_maximally_mixed", fidelity_with_mm(spec.values())),
        ("classical_l23_functional", l23_functional(spec.values(), cfg.eps)?),
        ("log_factor", bounds.log_factor),
    ];
    for (name, v) in extra {
        report.push_row(vec![json!(name), json!(v)]);
    }
    report.summary = serde_json::to_value(&bounds)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximally_mixed_lower_bound() {
        let r = cmd_bounds(&BoundsConfig { family: SpectrumFamily::MaximallyMixed, d: 16, eps: 1e-3 }).unwrap();
        let v = r.summary["lower_nonadaptive"]["value"].as_f64().unwrap();
        assert!((v - 64.0 / 1e-6).abs() < 1e-9 * v);
    }

    #[test]
    fn gen_sigma_round_trips_through_file() {
        let r = cmd_gen_sigma(&GenSigmaConfig { family: SpectrumFamily::Spiked, d: 4 }).unwrap();
        let dir = std::env::temp_dir().join(format!("qcert-gen-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("s.json");
        std::fs::write(&path, r.to_string(super::super::Format::Json).unwrap()).unwrap();
        let back = spectrum_for_family(&SpectrumFamily::File(path.clone()), 1).unwrap();
        assert_eq!(back.values(), &[0.75, 0.0625, 0.0625, 0.0625, 0.0625]);
        std::fs::remove_dir_all(dir).unwrap();
    }
}
