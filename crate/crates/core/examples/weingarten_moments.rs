// Weingarten values by cycle type and the orthogonality relation they
// satisfy.

use qcert::oracle::{weingarten_table, Permutation};

pub fn run_example() -> qcert::Result<()> {
    let d = 5;
    for order in 1..=4 {
        let table = weingarten_table(order, d)?;
        println!("order {order}, d = {d}:");
        for (cycle_type, value) in &table.classes {
            println!("  {cycle_type:?}: {value:+.6e}");
        }
        // sum over tau of d^{cycles(sigma tau^-1)} Wg(tau) is 1 at the identity, 0 elsewhere
        let perms = Permutation::all(order);
        let worst = perms
            .iter()
            .map(|s| {
                let total: f64 = perms
                    .iter()
                    .map(|t| (d as f64).powi(s.compose(&t.inverse()).num_cycles() as i32) * table.value(t))
                    .sum();
                let target = if *s == Permutation::identity(order) { 1.0 } else { 0.0 };
                (total - target).abs()
            })
            .fold(0.0, f64::max);
        println!("  orthogonality residual {worst:.1e}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> qcert::Result<()> {
    run_example()
}
