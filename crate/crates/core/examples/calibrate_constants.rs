// Single-round rejection rates of the basic tester for several values of
// the copy constant. The default `c_basic` is the smallest value whose
// null rejection stays near 3% while the far alternative is rejected in
// most rounds; majority voting over rounds does the rest.

use qcert::certify::{run_basic_plan, BasicPlan, CertifyConfig};
use qcert::experiments::hs_far_state;
use qcert::linalg::DensityMatrix;
use qcert::measurement::CopySource;
use qcert::random::RngHandle;

pub fn single_round_rates(d: usize, eps: f64, c_basic: f64, rounds: usize, seed: u64) -> qcert::Result<(f64, f64)> {
    let sigma = DensityMatrix::maximally_mixed(d);
    let cfg = CertifyConfig { c_basic, ..CertifyConfig::default() };
    let mut plan = BasicPlan::new(d, eps, 0.5, &cfg);
    plan.rounds = 1;
    let mut rng = RngHandle::new(seed, 0).rng();
    let (mut null_rej, mut far_rej) = (0usize, 0usize);
    for _ in 0..rounds {
        let far = hs_far_state(&sigma, eps, &mut rng)?;
        let mut src = CopySource::new(sigma.clone(), u64::MAX);
        null_rej += run_basic_plan(&mut src, &sigma, eps, plan, &mut rng)?.1.rejections;
        let mut src = CopySource::new(far, u64::MAX);
        far_rej += run_basic_plan(&mut src, &sigma, eps, plan, &mut rng)?.1.rejections;
    }
    Ok((null_rej as f64 / rounds as f64, far_rej as f64 / rounds as f64))
}

pub fn run_example() -> qcert::Result<()> {
    println!("c_basic  null-reject  far-reject   (d=16, eps=0.3)");
    for c in [3.0, 6.0, 12.0, 24.0] {
        let (n, f) = single_round_rates(16, 0.3, c, 300, 1)?;
        println!("{c:>7}  {n:>11.3}  {f:>10.3}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> qcert::Result<()> {
    run_example()
}
