// Trace-distance certification of a two-bucket state, including a
// non-diagonal null that is first rotated to its eigenbasis.

use qcert::certify::{certify, CertifyConfig};
use qcert::experiments::{build_alternative, Alternative};
use qcert::linalg::DensityMatrix;
use qcert::measurement::CopySource;
use qcert::random::{haar_unitary, RngHandle};

pub fn run_example() -> qcert::Result<()> {
    let diag = [0.174, 0.174, 0.174, 0.174, 0.1, 0.1, 0.1, 0.004];
    let sigma = DensityMatrix::diagonal(&diag)?;
    let (eps, delta) = (0.3, 0.2);
    for alt in [Alternative::Null, Alternative::Offdiag, Alternative::Tail] {
        let rho = build_alternative(alt, &sigma, eps, &mut RngHandle::new(5, 0).rng())?;
        let mut src = CopySource::new(rho, u64::MAX);
        let verdict = certify(&mut src, &sigma, eps, delta, &CertifyConfig::default().with_seed(RngHandle::new(5, 1)))?;
        println!("{:>8}: {:?} after {:.3e} copies", alt.name(), verdict.answer, verdict.copies_used as f64);
        for c in &verdict.checks {
            println!("          {:<6} {:?} {:?}", c.kind, c.buckets, c.status);
        }
    }

    let u = haar_unitary(8, &mut RngHandle::new(5, 2).rng())?;
    let rotated = DensityMatrix::new(sigma.hermitian().rotate(&u))?;
    let mut src = CopySource::new(rotated.clone(), u64::MAX);
    let verdict = certify(&mut src, &rotated, eps, delta, &CertifyConfig::default())?;
    println!("rotated null: {:?}", verdict.answer);
    Ok(())
}

#[allow(dead_code)]
fn main() -> qcert::Result<()> {
    run_example()
}
