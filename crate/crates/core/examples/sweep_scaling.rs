// Minimal copies per round for the basic tester as the dimension grows,
// with a log-log slope fit.

use qcert::experiments::{cmd_sweep, Format, SweepConfig};

pub fn run_example() -> qcert::Result<()> {
    let mut cfg = SweepConfig::basic(vec![4, 8, 16], 0.5, 0.2);
    cfg.trials = 40;
    let report = cmd_sweep(&cfg)?;
    print!("{}", report.to_string(Format::Csv)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> qcert::Result<()> {
    run_example()
}
