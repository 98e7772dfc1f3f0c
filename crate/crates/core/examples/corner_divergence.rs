// Exact transcript divergences of the two-state corner ensemble, against
// the correlation bound, as the number of copies grows.

use qcert::experiments::{cmd_divergence, DivergenceConfig, Format};

pub fn run_example() -> qcert::Result<()> {
    for copies in 1..=5 {
        let mut cfg = DivergenceConfig::corner(2, 0.3, copies);
        cfg.schedules = 5;
        let report = cmd_divergence(&cfg)?;
        println!(
            "N={copies}: max TV {:.4}, max(chi2 - bound) {:.2e}",
            report.summary["max_tv"].as_f64().unwrap_or(f64::NAN),
            report.summary["max_chi2_minus_bound"].as_f64().unwrap_or(f64::NAN)
        );
    }
    let report = cmd_divergence(&DivergenceConfig::corner(2, 0.3, 3))?;
    print!("{}", report.to_string(Format::Csv)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> qcert::Result<()> {
    run_example()
}
