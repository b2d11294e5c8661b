//! For a linear equation whose auxiliary operator equals the equation's own
//! right-hand side, the series collapses after one correction: at c0 = -1 the
//! first-order sum already solves the problem and every later coefficient is
//! numerically zero.
//!
//!     cargo run --example linear_exactness

use hamschrod::builtins::builtin_with;
use hamschrod::ham::{ham_solve, HamConfig};
use num_complex::Complex64;

fn main() {
    let problem = builtin_with("heat", 64, 200, 1.0).unwrap();
    let mut config = HamConfig::new(problem.nonlinearity.linear_part());
    config.order = 2;
    config.iterations = 0;

    let (sum, records) = ham_solve(&problem, &config).unwrap();

    println!("heat equation, 64 nodes, 200 steps, c0 = {}", config.c0);
    println!("order  residual of partial sum   |increment|");
    for record in &records {
        println!(
            "{:>5}  {:<24.3e} {:.3e}",
            record.m,
            record.residual_norm_after,
            record.delta_m.max_norm()
        );
    }

    let one = Complex64::new(1.0, 0.0);
    let psi_2 = records[1].delta_m.axpy(one, &records[0].delta_m);
    println!();
    println!("max |psi_2| = {:.3e}  (second coefficient vanishes)", psi_2.max_norm());
    println!("max |sum|   = {:.3e}", sum.max_norm());
}
