//! Solves viscous Burgers (nu = 0.1, sine initial data, periodic) by the
//! deformation series with two re-entry passes, and checks the assembled sum
//! against a refined direct nonlinear integration.
//!
//!     cargo run --example burgers_series

use hamschrod::builtins::builtin_with;
use hamschrod::classical::solve_nonlinear_reference;
use hamschrod::convergence::convergence_report;
use hamschrod::ham::{ham_solve, HamConfig};

fn main() {
    let problem = builtin_with("burgers", 64, 500, 1.0).unwrap();
    let mut config = HamConfig::new(problem.nonlinearity.linear_part());
    config.order = 6;
    config.iterations = 2;

    println!(
        "burgers, 64 nodes, 500 steps, order {} with {} re-entry passes",
        config.order, config.iterations
    );

    let (sum, records) = ham_solve(&problem, &config).unwrap();
    println!("solve  order  driving |f_m|  residual after");
    for (i, record) in records.iter().enumerate() {
        println!(
            "{:>5}  {:>5}  {:<13.3e} {:.3e}",
            i + 1,
            record.m,
            record.f_m.max_norm(),
            record.residual_norm_after
        );
    }

    let report = convergence_report(&records);
    println!();
    println!("verdict: {:?}", report.verdict);
    if let Some(last) = report.ratios.last() {
        println!("last residual ratio: {last:.3}");
    }

    let reference = solve_nonlinear_reference(&problem, 2).unwrap();
    println!("max nodal error vs refined reference: {:.3e}", sum.max_diff(&reference));
}
