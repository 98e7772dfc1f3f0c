// Draw Haar unitaries, check they are unitary, and compare an empirical
// moment against its exact Weingarten value.

use qcert::linalg::HermitianMatrix;
use qcert::oracle::{haar_moment, haar_moment_mc};
use qcert::random::{haar_unitary, RngHandle};

pub fn run_example() -> qcert::Result<()> {
    let mut rng = RngHandle::new(7, 0).rng();
    let u = haar_unitary(4, &mut rng)?;
    println!("residual |U^dag U - I|_max = {:.2e}", u.isometry_residual());

    let a = HermitianMatrix::from_real_diagonal(&[1.0, 0.0, 0.0, 0.0]);
    let b = HermitianMatrix::from_real_diagonal(&[1.0, -1.0, 0.5, 0.0]);
    for order in 1..=3 {
        let exact = haar_moment(&a, &b, order)?;
        let mc = haar_moment_mc(&a, &b, order, 50_000, RngHandle::new(7, order as u64))?;
        println!(
            "E[Tr(A U^dag B U)^{order}]: exact {exact:.6}, sampled {:.6} +- {:.1e}",
            mc.mean, mc.std_error
        );
        assert!(mc.within(exact, 5.0));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> qcert::Result<()> {
    run_example()
}
