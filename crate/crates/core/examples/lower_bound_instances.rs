// Build one member of each hard alternative family and report its distance
// from the null state.

use qcert::instances::{AlternativeEnsemble, CornerEnsemble, OffDiagEnsemble, PaninskiEnsemble};
use qcert::linalg::{trace_distance, DensityMatrix};
use qcert::random::RngHandle;

pub fn run_example() -> qcert::Result<()> {
    let mut rng = RngHandle::new(3, 0).rng();
    let sigma = DensityMatrix::diagonal(&[0.174, 0.174, 0.174, 0.174, 0.1, 0.1, 0.1, 0.004])?;
    let paninski = PaninskiEnsemble::new(sigma.clone(), 0.2)?;
    let offdiag = OffDiagEnsemble::with_default_pair(sigma.clone(), 0.05)?;
    let families: [&dyn AlternativeEnsemble; 2] = [&paninski, &offdiag];
    for ens in families {
        let rho = ens.sample(&mut rng)?;
        println!("{:>9}: trace distance {:.10}", ens.family(), trace_distance(&sigma, &rho)?);
    }

    let skewed = DensityMatrix::diagonal(&[0.85, 0.15])?;
    let corner = CornerEnsemble::new(skewed.clone(), 0.3)?;
    for rho in corner.members().expect("two members") {
        println!("   corner: trace distance {:.10}", trace_distance(&skewed, &rho)?);
    }
    println!("   corner: expected       {:.10}", corner.instance.trace_distance());
    Ok(())
}

#[allow(dead_code)]
fn main() -> qcert::Result<()> {
    run_example()
}
