//! Copy-count scaling of the bucketed tester on the maximally mixed state.
//!
//! The per-bucket Hilbert–Schmidt gap shrinks by `m² = log²(10d/ε²)`, so raw
//! totals carry an `m⁴` factor on top of the `d^{3/2}` law. The exponent is
//! checked on totals divided by `m⁴`; the raw slope is printed beside it.

use qcert::experiments::{cmd_sweep, Algorithm, SweepConfig};

#[test]
fn full_certify_exponent_on_maximally_mixed() {
    let mut cfg = SweepConfig::basic(vec![4, 8, 16], 0.3, 0.1);
    cfg.algorithm = Algorithm::Full;
    cfg.trials = 5;
    let report = cmd_sweep(&cfg).unwrap();
    let raw = report.summary["slope"]["slope"].as_f64().unwrap();
    let adjusted = report.summary["polylog_adjusted_slope"]["slope"].as_f64().unwrap();
    for row in &report.rows {
        println!("d={} total={} total/m^4={}", row[0], row[4], row[6]);
    }
    println!("raw slope {raw:.3}, log-adjusted slope {adjusted:.3} (accepted [1.2, 1.8])");
    assert!((1.2..=1.8).contains(&adjusted), "adjusted slope {adjusted}");
    assert_eq!(report.summary["monotone_in_d"], serde_json::json!(true));
}
