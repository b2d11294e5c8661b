//! Frozen benchmark problems. Every builtin lives on the periodic circle
//! `[0, 2π]` with spectral differentiation and, unless noted, a `sin x`
//! initial profile, 128 nodes, horizon 1.0, and 1000 time steps:
//!
//! * `burgers` — `u_t = 0.1·u_xx − u·u_x`
//! * `heat` — `u_t = 0.1·u_xx`
//! * `advection` — `u_t = −u_x`
//! * `reaction_diffusion` — `u_t = u_xx + u²`, `α = 0.1·sin x`, horizon 0.5

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::FieldSnapshot;
use crate::grid::{build_grid, TimeGrid};
use crate::operator::{Factor, OperatorExpr, OperatorTerm};
use crate::problem::{periodic_problem, EvolutionProblem, Forcing};

/// Default node count shared by all builtins.
pub const DEFAULT_N: usize = 128;
/// Default number of time steps shared by all builtins.
pub const DEFAULT_N_STEPS: usize = 1000;

/// Names accepted by [`builtin`] and the run-configuration parser.
pub const NAMES: [&str; 4] = ["burgers", "heat", "advection", "reaction_diffusion"];

/// Default time horizon of a builtin.
pub fn default_t_final(name: &str) -> Option<f64> {
    match name {
        "burgers" | "heat" | "advection" => Some(1.0),
        "reaction_diffusion" => Some(0.5),
        _ => None,
    }
}

fn nonlinearity(name: &str) -> Option<OperatorExpr> {
    let expr = match name {
        "burgers" => OperatorExpr::new(vec![
            OperatorTerm::new(0.1, vec![Factor::state(2)]),
            OperatorTerm::new(-1.0, vec![Factor::state(0), Factor::state(1)]),
        ]),
        "heat" => OperatorExpr::single(0.1, 2),
        "advection" => OperatorExpr::single(-1.0, 1),
        "reaction_diffusion" => OperatorExpr::new(vec![
            OperatorTerm::new(1.0, vec![Factor::state(2)]),
            OperatorTerm::new(1.0, vec![Factor::state(0), Factor::state(0)]),
        ]),
        _ => return None,
    };
    Some(expr)
}

fn amplitude(name: &str) -> f64 {
    if name == "reaction_diffusion" {
        0.1
    } else {
        1.0
    }
}

/// A builtin at a caller-chosen resolution and horizon.
pub fn builtin_with(
    name: &str,
    n: usize,
    n_steps: usize,
    t_final: f64,
) -> Result<EvolutionProblem> {
    let expr = nonlinearity(name).ok_or_else(|| {
        Error::Config(format!(
            "unknown builtin problem '{name}'; expected one of {NAMES:?}"
        ))
    })?;
    let a = amplitude(name);
    let grid = build_grid(0.0, 2.0 * PI, n, true)?;
    let time = TimeGrid::new(t_final, n_steps)?;
    let initial = FieldSnapshot::from_fn(&grid, 0.0, |x| a * x.sin());
    periodic_problem(grid, time, expr, Forcing::Zero, initial)
}

/// A builtin at its pinned default resolution.
pub fn builtin(name: &str) -> Result<EvolutionProblem> {
    let t_final = default_t_final(name).ok_or_else(|| {
        Error::Config(format!(
            "unknown builtin problem '{name}'; expected one of {NAMES:?}"
        ))
    })?;
    builtin_with(name, DEFAULT_N, DEFAULT_N_STEPS, t_final)
}
