//! Operator expressions: sums of scalar-weighted products of spatial
//! derivatives of the state and known coefficient fields.
//!
//! This small AST covers polynomial-differential operators — Burgers-type
//! convection (`u·u_x`), reaction terms (`u²`, `u³`), diffusion (`u_xx`),
//! variable coefficients (`sin(x)·u_x`) — which is exactly the class whose
//! homotopy derivatives reduce to Cauchy convolutions of the series terms.

use ndarray::Array1;
use num_complex::Complex64;

use crate::diff::{differentiate, Scheme, MAX_DERIVATIVE_ORDER};
use crate::error::{Error, Result};
use crate::field::{FieldSeries, FieldSnapshot};
use crate::grid::SpatialGrid;

/// A fixed coefficient field inside an operator term.
#[derive(Debug, Clone, PartialEq)]
pub enum KnownField {
    /// Same nodal values at every time.
    Constant(Array1<Complex64>),
    /// Time-varying values, sampled on the problem's time grid.
    Sampled(FieldSeries),
}

impl KnownField {
    /// Values at time `t`. Sampled fields require `t` to match one of their
    /// snapshot timestamps (within `tol`).
    pub fn at(&self, t: f64, tol: f64) -> Result<&Array1<Complex64>> {
        match self {
            KnownField::Constant(v) => Ok(v),
            KnownField::Sampled(series) => series
                .snapshots
                .iter()
                .find(|s| (s.t - t).abs() <= tol)
                .map(|s| &s.values)
                .ok_or_else(|| {
                    Error::Domain(format!("known function has no sample at t = {t}"))
                }),
        }
    }
}

/// One multiplicative factor of an operator term.
#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    /// The state differentiated `order` times (`order = 0` is the state
    /// itself).
    DerivativeOfState { order: usize },
    /// A known coefficient field.
    KnownFunction(KnownField),
}

impl Factor {
    /// Shorthand for a state-derivative factor.
    pub fn state(order: usize) -> Factor {
        Factor::DerivativeOfState { order }
    }

    pub fn is_state(&self) -> bool {
        matches!(self, Factor::DerivativeOfState { .. })
    }
}

/// `coefficient * factor_1 * factor_2 * ...`, evaluated pointwise.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorTerm {
    pub coefficient: f64,
    pub factors: Vec<Factor>,
}

impl OperatorTerm {
    pub fn new(coefficient: f64, factors: Vec<Factor>) -> OperatorTerm {
        OperatorTerm {
            coefficient,
            factors,
        }
    }

    /// Number of state-derivative factors; two or more make the term
    /// nonlinear.
    pub fn state_factor_count(&self) -> usize {
        self.factors.iter().filter(|f| f.is_state()).count()
    }
}

/// A sum of operator terms. The empty expression is the zero operator.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperatorExpr {
    pub terms: Vec<OperatorTerm>,
}

impl OperatorExpr {
    pub fn new(terms: Vec<OperatorTerm>) -> OperatorExpr {
        OperatorExpr { terms }
    }

    /// The zero operator.
    pub fn zero() -> OperatorExpr {
        OperatorExpr { terms: vec![] }
    }

    /// A single pure derivative term `coefficient * d^order u / dx^order`.
    pub fn single(coefficient: f64, order: usize) -> OperatorExpr {
        OperatorExpr {
            terms: vec![OperatorTerm::new(coefficient, vec![Factor::state(order)])],
        }
    }

    /// Linear in the sense that every term touches the state at most once.
    pub fn is_linear(&self) -> bool {
        self.terms.iter().all(|t| t.state_factor_count() <= 1)
    }

    /// The terms with at most one state factor — the natural default for the
    /// auxiliary linear operator when the full expression is nonlinear.
    pub fn linear_part(&self) -> OperatorExpr {
        OperatorExpr {
            terms: self
                .terms
                .iter()
                .filter(|t| t.state_factor_count() <= 1)
                .cloned()
                .collect(),
        }
    }

    /// Largest derivative order appearing anywhere in the expression.
    pub fn max_order(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|t| t.factors.iter())
            .filter_map(|f| match f {
                Factor::DerivativeOfState { order } => Some(*order),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Check structural validity against a grid: derivative orders within
    /// the cap and known-function lengths matching the node count.
    pub fn validate(&self, grid: &SpatialGrid) -> Result<()> {
        for term in &self.terms {
            for factor in &term.factors {
                match factor {
                    Factor::DerivativeOfState { order } => {
                        if *order > MAX_DERIVATIVE_ORDER {
                            return Err(Error::Scheme(format!(
                                "derivative order {order} exceeds the cap of {MAX_DERIVATIVE_ORDER}"
                            )));
                        }
                    }
                    Factor::KnownFunction(k) => {
                        let len = match k {
                            KnownField::Constant(v) => v.len(),
                            KnownField::Sampled(s) => {
                                s.snapshots.first().map(|s| s.values.len()).unwrap_or(0)
                            }
                        };
                        if len != grid.n {
                            return Err(Error::Domain(format!(
                                "known function has {len} values, grid wants {}",
                                grid.n
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Evaluate an operator expression on a field: for each term, multiply the
/// coefficient by the pointwise product of its factors (state derivatives
/// computed with the given scheme, known functions sampled at the field's
/// timestamp), then sum the terms.
pub fn eval_operator(
    expr: &OperatorExpr,
    field: &FieldSnapshot,
    grid: &SpatialGrid,
    scheme: Scheme,
) -> Result<FieldSnapshot> {
    let mut acc = Array1::<Complex64>::zeros(grid.n);
    let t_tol = 1e-9 * (1.0 + field.t.abs());
    for term in &expr.terms {
        let mut prod = Array1::<Complex64>::from_elem(grid.n, Complex64::new(term.coefficient, 0.0));
        for factor in &term.factors {
            match factor {
                Factor::DerivativeOfState { order } => {
                    let d = differentiate(field, *order, grid, scheme)?;
                    prod = &prod * &d.values;
                }
                Factor::KnownFunction(k) => {
                    prod = &prod * k.at(field.t, t_tol)?;
                }
            }
        }
        acc = &acc + &prod;
    }
    Ok(FieldSnapshot {
        t: field.t,
        values: acc,
    })
}
