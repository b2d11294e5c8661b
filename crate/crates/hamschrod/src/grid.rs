//! Uniform spatial and temporal grids.
//!
//! Space is one-dimensional and uniformly sampled. On periodic grids the
//! right endpoint aliases the left one, so the spacing divides by `n`; on
//! bounded grids both endpoints are nodes and the spacing divides by `n - 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniform 1-D spatial grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub x_min: f64,
    pub x_max: f64,
    /// Number of nodes carried by field vectors.
    pub n: usize,
    pub periodic: bool,
}

impl SpatialGrid {
    /// Node spacing: `(x_max - x_min) / n` when periodic (node `n` would
    /// alias node 0), `(x_max - x_min) / (n - 1)` otherwise.
    pub fn h(&self) -> f64 {
        if self.periodic {
            (self.x_max - self.x_min) / self.n as f64
        } else {
            (self.x_max - self.x_min) / (self.n - 1) as f64
        }
    }

    /// Node coordinates `x_min + i*h` for `i = 0..n`.
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.h();
        (0..self.n).map(|i| self.x_min + i as f64 * h).collect()
    }

    /// Domain length `x_max - x_min`.
    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }
}

/// Build a validated spatial grid.
///
/// Requires `x_max > x_min` and at least 4 nodes (the smallest count every
/// differentiation stencil in the crate supports).
pub fn build_grid(x_min: f64, x_max: f64, n: usize, periodic: bool) -> Result<SpatialGrid> {
    if !(x_max > x_min) {
        return Err(Error::Domain(format!(
            "x_max ({x_max}) must exceed x_min ({x_min})"
        )));
    }
    if n < 4 {
        return Err(Error::Domain(format!("need at least 4 nodes, got {n}")));
    }
    if !x_min.is_finite() || !x_max.is_finite() {
        return Err(Error::Domain("grid endpoints must be finite".into()));
    }
    Ok(SpatialGrid {
        x_min,
        x_max,
        n,
        periodic,
    })
}

/// A uniform time grid covering `[0, t_final]` in `n_steps` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_final: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    /// Build a validated time grid (`t_final > 0`, at least one step).
    pub fn new(t_final: f64, n_steps: usize) -> Result<TimeGrid> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::Domain(format!(
                "t_final must be positive and finite, got {t_final}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::Domain("n_steps must be positive".into()));
        }
        Ok(TimeGrid { t_final, n_steps })
    }

    /// Step size `t_final / n_steps`.
    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    /// The `n_steps + 1` node times `k * dt`, with the final node pinned to
    /// `t_final` exactly.
    pub fn nodes(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.n_steps)
            .map(|k| {
                if k == self.n_steps {
                    self.t_final
                } else {
                    k as f64 * dt
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn periodic_spacing_divides_by_n() {
        let g = build_grid(0.0, 2.0 * PI, 8, true).unwrap();
        assert_abs_diff_eq!(g.h(), PI / 4.0, epsilon = 1e-15);
    }

    #[test]
    fn bounded_spacing_divides_by_n_minus_one() {
        let g = build_grid(0.0, 1.0, 5, false).unwrap();
        assert_abs_diff_eq!(g.h(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn reversed_domain_is_rejected() {
        assert!(matches!(
            build_grid(1.0, 0.0, 8, true),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn tiny_grids_are_rejected() {
        assert!(build_grid(0.0, 1.0, 3, false).is_err());
    }

    #[test]
    fn periodic_nodes_exclude_right_endpoint() {
        let g = build_grid(0.0, 2.0 * PI, 4, true).unwrap();
        let xs = g.nodes();
        assert_eq!(xs.len(), 4);
        assert_abs_diff_eq!(xs[3], 3.0 * PI / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn time_grid_dt_times_steps_recovers_horizon() {
        let t = TimeGrid::new(1.0, 1000).unwrap();
        assert_abs_diff_eq!(t.dt() * t.n_steps as f64, 1.0, epsilon = 1e-12);
        let nodes = t.nodes();
        assert_eq!(nodes.len(), 1001);
        assert_eq!(nodes[1000], 1.0);
    }

    #[test]
    fn time_grid_rejects_bad_inputs() {
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(-1.0, 10).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }
}
