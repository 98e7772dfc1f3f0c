// Dyadic buckets of a spectrum and the copy complexities predicted for it.

use qcert::spectrum::{bucketize, predicted_bounds, Spectrum};

pub fn run_example() -> qcert::Result<()> {
    let spec = Spectrum::new(vec![0.5, 0.2, 0.2, 0.05, 0.05])?;
    for (j, set) in bucketize(&spec).iter() {
        println!("bucket {j}: indices {set:?}");
    }
    for eps in [0.1, 0.01] {
        let b = predicted_bounds(&spec, eps)?;
        println!(
            "eps={eps}: nonadaptive lower {:.3e} (d_eff {}), adaptive lower {:.3e}, upper {:.3e}",
            b.lower_nonadaptive.value, b.lower_nonadaptive.d_eff, b.lower_adaptive.value, b.upper.value
        );
    }

    let mm = Spectrum::new(vec![1.0 / 64.0; 64])?;
    let b = predicted_bounds(&mm, 1e-3)?;
    println!("maximally mixed d=64: {:.4e} = d^1.5/eps^2 = {:.4e}", b.lower_nonadaptive.value, 512.0 / 1e-6);
    Ok(())
}

#[allow(dead_code)]
fn main() -> qcert::Result<()> {
    run_example()
}
