// Hilbert–Schmidt certification of the maximally mixed state with random
// basis measurements.

use qcert::certify::{basic_certify, CertifyConfig};
use qcert::experiments::hs_far_state;
use qcert::linalg::{hs_distance, DensityMatrix};
use qcert::measurement::CopySource;
use qcert::random::RngHandle;

pub fn run_example() -> qcert::Result<()> {
    let d = 16;
    let (eps, delta) = (0.3, 0.1);
    let sigma = DensityMatrix::maximally_mixed(d);
    let far = hs_far_state(&sigma, eps, &mut RngHandle::new(11, 0).rng())?;
    println!("alternative at HS distance {:.3}", hs_distance(&sigma, &far)?);

    for (name, state) in [("null", sigma.clone()), ("far", far)] {
        let mut src = CopySource::new(state, u64::MAX);
        let cfg = CertifyConfig::default().with_seed(RngHandle::new(11, 1));
        let verdict = basic_certify(&mut src, &sigma, eps, delta, &cfg)?;
        let basic = verdict.checks[0].basic.as_ref().expect("basic report");
        println!(
            "{name:>4}: {:?} after {} copies ({} of {} rounds rejected)",
            verdict.answer, verdict.copies_used, basic.rejections, basic.rounds
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> qcert::Result<()> {
    run_example()
}
