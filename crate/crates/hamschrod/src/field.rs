//! Scalar fields sampled on the space-time grid.
//!
//! A [`FieldSnapshot`] is one time slice (complex-valued so every consumer —
//! spectral transforms, the quantum-style backend — shares a representation;
//! real problems simply carry zero imaginary parts). A [`FieldSeries`] holds
//! one snapshot per time node and is the common currency between the
//! homotopy engine and the backends.

use ndarray::Array1;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{SpatialGrid, TimeGrid};

/// One time slice of a field: `n` nodal values stamped with their time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub t: f64,
    pub values: Array1<Complex64>,
}

impl FieldSnapshot {
    /// A zero field on `grid` at time `t`.
    pub fn zero(grid: &SpatialGrid, t: f64) -> Self {
        FieldSnapshot {
            t,
            values: Array1::zeros(grid.n),
        }
    }

    /// Sample a real-valued closed form at the grid nodes.
    pub fn from_fn(grid: &SpatialGrid, t: f64, f: impl Fn(f64) -> f64) -> Self {
        let values = grid
            .nodes()
            .iter()
            .map(|&x| Complex64::new(f(x), 0.0))
            .collect();
        FieldSnapshot { t, values }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Grid-weighted L2 norm `sqrt(sum |v|^2 * h)`.
    pub fn l2_norm(&self, grid: &SpatialGrid) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.h()).sqrt()
    }

    /// Largest nodal magnitude.
    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// `self + c * other`, keeping `self`'s timestamp.
    pub fn axpy(&self, c: Complex64, other: &FieldSnapshot) -> FieldSnapshot {
        FieldSnapshot {
            t: self.t,
            values: &self.values + &(&other.values * c),
        }
    }
}

/// A field on the full space-time grid: one snapshot per time node.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSeries {
    pub snapshots: Vec<FieldSnapshot>,
}

impl FieldSeries {
    /// A zero series on the given grids.
    pub fn zero(grid: &SpatialGrid, time: &TimeGrid) -> Self {
        let snapshots = time
            .nodes()
            .into_iter()
            .map(|t| FieldSnapshot::zero(grid, t))
            .collect();
        FieldSeries { snapshots }
    }

    /// Sample a real-valued closed form `f(x, t)` on the space-time grid.
    pub fn from_fn(grid: &SpatialGrid, time: &TimeGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let snapshots = time
            .nodes()
            .into_iter()
            .map(|t| FieldSnapshot::from_fn(grid, t, |x| f(x, t)))
            .collect();
        FieldSeries { snapshots }
    }

    /// Replicate one spatial profile across every time node.
    pub fn constant_in_time(profile: &FieldSnapshot, time: &TimeGrid) -> Self {
        let snapshots = time
            .nodes()
            .into_iter()
            .map(|t| FieldSnapshot {
                t,
                values: profile.values.clone(),
            })
            .collect();
        FieldSeries { snapshots }
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Check shape and timestamps against the owning grids: `n_steps + 1`
    /// snapshots of length `n`, with strictly increasing timestamps matching
    /// the time nodes.
    pub fn validate(&self, grid: &SpatialGrid, time: &TimeGrid) -> Result<()> {
        if self.snapshots.len() != time.n_steps + 1 {
            return Err(Error::Domain(format!(
                "series has {} snapshots, time grid wants {}",
                self.snapshots.len(),
                time.n_steps + 1
            )));
        }
        let tol = time.dt() * 1e-9;
        for (snap, t) in self.snapshots.iter().zip(time.nodes()) {
            if snap.values.len() != grid.n {
                return Err(Error::Domain(format!(
                    "snapshot at t={} has {} values, grid wants {}",
                    snap.t,
                    snap.values.len(),
                    grid.n
                )));
            }
            if (snap.t - t).abs() > tol {
                return Err(Error::Domain(format!(
                    "snapshot timestamp {} does not match time node {t}",
                    snap.t
                )));
            }
        }
        Ok(())
    }

    /// Space-time L2 norm `sqrt(sum_k sum_i |v_{k,i}|^2 * h * dt)`.
    pub fn l2_norm(&self, grid: &SpatialGrid, time: &TimeGrid) -> f64 {
        let sum: f64 = self
            .snapshots
            .iter()
            .map(|s| s.values.iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum();
        (sum * grid.h() * time.dt()).sqrt()
    }

    /// Largest nodal magnitude over all of space-time.
    pub fn max_norm(&self) -> f64 {
        self.snapshots.iter().map(|s| s.max_norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.snapshots.iter().all(|s| s.is_finite())
    }

    /// Nodewise `self + c * other`. Panics on shape mismatch, which is a
    /// programming error (all series in one run share the grids).
    pub fn axpy(&self, c: Complex64, other: &FieldSeries) -> FieldSeries {
        assert_eq!(self.snapshots.len(), other.snapshots.len());
        let snapshots = self
            .snapshots
            .iter()
            .zip(&other.snapshots)
            .map(|(a, b)| a.axpy(c, b))
            .collect();
        FieldSeries { snapshots }
    }

    /// Largest nodal magnitude of `self - other`.
    pub fn max_diff(&self, other: &FieldSeries) -> f64 {
        self.axpy(Complex64::new(-1.0, 0.0), other).max_norm()
    }
}
