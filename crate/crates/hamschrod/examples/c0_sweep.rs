//! Sweeps the convergence-control parameter and picks the best value by the
//! residual of the assembled sum. For a linear problem the curve bottoms out
//! at -1 (where the series is exact); for Burgers the minimum sits at a
//! problem-dependent interior point.
//!
//!     cargo run --example c0_sweep

use hamschrod::builtins::builtin_with;
use hamschrod::convergence::{residual_curve, select_c0};
use hamschrod::ham::HamConfig;

fn main() {
    let heat = builtin_with("heat", 64, 200, 1.0).unwrap();
    let mut config = HamConfig::new(heat.nonlinearity.linear_part());
    config.order = 1;
    config.iterations = 0;
    let values: Vec<f64> = (1..=15).map(|k| -0.125 * k as f64).collect();
    let curve = residual_curve(&heat, &config, &values).unwrap();

    println!("heat, first-order series:");
    println!("   c0      residual");
    for (c0, residual) in &curve.samples {
        println!("{c0:>7.3}  {residual:.3e}");
    }
    println!("selected c0 = {}", select_c0(&curve).unwrap());
    println!();

    let burgers = builtin_with("burgers", 64, 300, 1.0).unwrap();
    let mut config = HamConfig::new(burgers.nonlinearity.linear_part());
    config.order = 4;
    config.iterations = 0;
    let bracket: Vec<f64> = (1..=8).map(|k| -0.2 * k as f64).collect();
    let curve = residual_curve(&burgers, &config, &bracket).unwrap();

    println!("burgers, fourth-order series:");
    println!("   c0      residual");
    for (c0, residual) in &curve.samples {
        println!("{c0:>7.3}  {residual:.3e}");
    }
    println!("selected c0 = {}", select_c0(&curve).unwrap());
}
