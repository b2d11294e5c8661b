//! A numerical laboratory for solving nonlinear evolution equations by
//! deformation series, with interchangeable linear solvers.
//!
//! The engine embeds a nonlinear initial-value problem
//! `∂u/∂t = N[u] + g` in a one-parameter family that connects an initial
//! guess to the true solution, then peels the family into a sequence of
//! *linear* constant-operator sub-problems: the `m`th series coefficient
//! solves `∂δ_m/∂t = L δ_m + c0·Δ_{m−1}`, where `Δ_{m−1}` is the defect left
//! by the previous coefficients and `c0` is a free convergence-control
//! parameter. Summing the coefficients (and optionally feeding the sum back
//! in as a fresh guess for further passes) produces the approximation; the
//! space-time residual of the partial sums is the convergence diagnostic.
//!
//! Every linear sub-problem is an ODE system `dv/dt = A v + b(t)` after
//! spatial discretization, and two interchangeable backends solve it:
//!
//! - [`classical`]: dense Runge–Kutta integration (plus a matrix-exponential
//!   integrator used as an oracle in tests);
//! - [`schrod`]: a state-vector emulation of a quantum algorithm that maps
//!   the system — Hermitian or not — onto unitary Schrödinger-type evolution
//!   in one extra warped dimension, evolves each auxiliary Fourier mode
//!   exactly, and reads the answer back at a recovery node.
//!
//! Module map:
//!
//! - [`grid`], [`field`], [`diff`]: uniform 1-D grids, complex space-time
//!   fields, spectral and finite-difference derivatives.
//! - [`operator`], [`problem`]: nonlinear operators as sums of products of
//!   derivatives, and complete evolution problems (domain, initial data,
//!   boundary rule, forcing).
//! - [`ham`]: the deformation-series engine — structural `q`-derivatives,
//!   per-order linear solves, re-entry passes, divergence guards.
//! - [`classical`], [`expm`], [`schrod`]: the linear solvers.
//! - [`convergence`]: `c0` sweeps, residual curves, trend verdicts.
//! - [`builtins`]: four ready-made benchmark problems (`burgers`, `heat`,
//!   `advection`, `reaction_diffusion`).
//! - [`runner`]: JSON-configured runs and CSV/JSON artifacts backing the
//!   `hamschrod` command-line binary.
//!
//! The `examples/` directory walks through each capability; start with
//! `linear_exactness` and `burgers_series`.

pub mod builtins;
pub mod classical;
pub mod convergence;
pub mod diff;
pub mod error;
pub mod expm;
pub mod field;
pub mod grid;
pub mod ham;
pub mod operator;
pub mod problem;
pub mod runner;
pub mod schrod;
