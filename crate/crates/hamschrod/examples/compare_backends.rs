//! Solves the same deformation series twice — once integrating each linear
//! sub-problem directly, once routing every sub-problem through the
//! warped-phase quantum-algorithm emulation — and reports how far the two
//! assembled sums drift apart.
//!
//!     cargo run --example compare_backends

use hamschrod::builtins::builtin_with;
use hamschrod::ham::{ham_solve, Backend, HamConfig};
use hamschrod::schrod::SchrodOptions;

fn main() {
    let problem = builtin_with("burgers", 16, 200, 0.5).unwrap();
    let mut config = HamConfig::new(problem.nonlinearity.linear_part());
    config.order = 3;
    config.iterations = 0;

    let (classical, classical_records) = ham_solve(&problem, &config).unwrap();
    config.backend = Backend::Schrodingerise(SchrodOptions {
        n_p: 1 << 8,
        l_p: 20.0,
        mu_margin: 0.1,
    });
    let (emulated, emulated_records) = ham_solve(&problem, &config).unwrap();

    println!("burgers, 16 nodes, 200 steps, order 3, both backends");
    println!("order  residual (direct)  residual (emulated)");
    for (a, b) in classical_records.iter().zip(&emulated_records) {
        println!(
            "{:>5}  {:<17.3e}  {:.3e}",
            a.m, a.residual_norm_after, b.residual_norm_after
        );
    }
    println!();
    println!("max nodal difference between the sums: {:.3e}", emulated.max_diff(&classical));
}
