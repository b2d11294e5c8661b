//! The evolution-problem statement: `∂u/∂t = N[u] + g` on a space-time grid,
//! with an initial profile and either periodic or Dirichlet boundaries.

use num_complex::Complex64;

use crate::diff::Scheme;
use crate::error::Result;
use crate::field::{FieldSeries, FieldSnapshot};
use crate::grid::{SpatialGrid, TimeGrid};
use crate::operator::OperatorExpr;

/// Boundary treatment for the spatial domain.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundarySpec {
    Periodic,
    /// Dirichlet data: one uniform trace value per time node, applied at both
    /// endpoints (the boundary value has no spatial dependence in 1-D).
    Dirichlet { trace: Vec<Complex64> },
}

/// The inhomogeneous forcing `g(x, t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Forcing {
    Zero,
    Sampled(FieldSeries),
}

impl Forcing {
    /// The forcing snapshot at time-node index `k`, or `None` when zero.
    pub fn at(&self, k: usize) -> Option<&FieldSnapshot> {
        match self {
            Forcing::Zero => None,
            Forcing::Sampled(series) => series.snapshots.get(k),
        }
    }
}

/// A complete nonlinear (or linear) evolution problem.
#[derive(Debug, Clone)]
pub struct EvolutionProblem {
    pub grid: SpatialGrid,
    pub time: TimeGrid,
    /// The operator `N` in `∂u/∂t = N[u] + g`.
    pub nonlinearity: OperatorExpr,
    pub forcing: Forcing,
    /// Initial profile `α(x)` (timestamped 0).
    pub initial: FieldSnapshot,
    pub boundary: BoundarySpec,
    /// Spatial differentiation scheme used everywhere this problem is
    /// evaluated. Dirichlet problems require finite differences.
    pub scheme: Scheme,
}

/// Everything that is wrong with a problem statement; empty means runnable.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Check every cross-field invariant of the problem statement and list all
/// violations (rather than stopping at the first).
pub fn validate_problem(p: &EvolutionProblem) -> ValidationReport {
    let mut failures = Vec::new();

    if p.initial.values.len() != p.grid.n {
        failures.push(format!(
            "initial profile has {} values, grid wants {}",
            p.initial.values.len(),
            p.grid.n
        ));
    }
    if p.initial.t != 0.0 {
        failures.push(format!(
            "initial profile timestamp must be 0, got {}",
            p.initial.t
        ));
    }
    if let Err(e) = p.nonlinearity.validate(&p.grid) {
        failures.push(format!("nonlinearity: {e}"));
    }
    if let Forcing::Sampled(series) = &p.forcing {
        if let Err(e) = series.validate(&p.grid, &p.time) {
            failures.push(format!("forcing: {e}"));
        }
    }
    match (&p.boundary, p.grid.periodic) {
        (BoundarySpec::Periodic, false) => {
            failures.push("periodic boundary on a non-periodic grid".into());
        }
        (BoundarySpec::Dirichlet { .. }, true) => {
            failures.push("dirichlet boundary on a periodic grid".into());
        }
        _ => {}
    }
    if let BoundarySpec::Dirichlet { trace } = &p.boundary {
        if p.scheme != Scheme::CentralFd {
            failures.push("dirichlet boundaries require the central_fd scheme".into());
        }
        if trace.len() != p.time.n_steps + 1 {
            failures.push(format!(
                "boundary trace has {} samples, time grid wants {}",
                trace.len(),
                p.time.n_steps + 1
            ));
        }
        if let (Some(beta0), true) = (trace.first(), p.initial.values.len() == p.grid.n) {
            let tol = 1e-10 * (1.0 + p.initial.max_norm());
            let left = p.initial.values[0];
            let right = p.initial.values[p.grid.n - 1];
            if (left - beta0).norm() > tol || (right - beta0).norm() > tol {
                failures.push(format!(
                    "incompatible data: boundary trace starts at {beta0} but the initial \
                     profile has endpoints {left} and {right}"
                ));
            }
        }
    }
    if p.scheme == Scheme::Spectral && !p.grid.periodic {
        failures.push("spectral scheme requires a periodic grid".into());
    }

    ValidationReport { failures }
}

/// Convenience constructor for periodic problems with spectral
/// differentiation (the primary mode).
pub fn periodic_problem(
    grid: SpatialGrid,
    time: TimeGrid,
    nonlinearity: OperatorExpr,
    forcing: Forcing,
    initial: FieldSnapshot,
) -> Result<EvolutionProblem> {
    let p = EvolutionProblem {
        grid,
        time,
        nonlinearity,
        forcing,
        initial,
        boundary: BoundarySpec::Periodic,
        scheme: Scheme::Spectral,
    };
    let report = validate_problem(&p);
    if report.is_ok() {
        Ok(p)
    } else {
        Err(crate::error::Error::Validation(report.failures))
    }
}
