//! Discrete spatial differentiation: Fourier-spectral on periodic grids and
//! second-order finite differences on any uniform grid.
//!
//! Spectral differentiation multiplies the DFT by `(ik)^order` (with the
//! Nyquist mode zeroed for odd orders, where `(ik)^order` is not conjugate-
//! symmetric) and is exact for resolved modes. The finite-difference path
//! builds its stencils with Fornberg's interpolation-weight recurrence:
//! centered stencils in the interior, one-sided stencils of the same formal
//! order near the boundary of non-periodic grids.

use std::cell::RefCell;

use ndarray::Array1;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldSnapshot;
use crate::grid::SpatialGrid;

/// Highest spatial derivative order the crate supports.
pub const MAX_DERIVATIVE_ORDER: usize = 4;

/// Which discrete differentiation to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Fourier differentiation; periodic grids only.
    Spectral,
    /// Second-order finite differences; any uniform grid.
    CentralFd,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward DFT (unnormalized), matching the usual convention where
/// `ifft(fft(x)) = n * x` before the `1/n` rescale applied by [`ifft`].
pub fn fft(values: &Array1<Complex64>) -> Array1<Complex64> {
    let mut buf: Vec<Complex64> = values.to_vec();
    PLANNER.with(|p| {
        let fft = p.borrow_mut().plan_fft_forward(buf.len());
        fft.process(&mut buf);
    });
    Array1::from_vec(buf)
}

/// Inverse DFT including the `1/n` normalization.
pub fn ifft(coeffs: &Array1<Complex64>) -> Array1<Complex64> {
    let n = coeffs.len();
    let mut buf: Vec<Complex64> = coeffs.to_vec();
    PLANNER.with(|p| {
        let fft = p.borrow_mut().plan_fft_inverse(buf.len());
        fft.process(&mut buf);
    });
    let scale = 1.0 / n as f64;
    Array1::from_vec(buf.into_iter().map(|v| v * scale).collect())
}

/// Angular wavenumbers `2π/L * [0, 1, .., n/2-1, -n/2, .., -1]` for a
/// periodic domain of length `L`.
pub fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    let base = 2.0 * std::f64::consts::PI / length;
    (0..n)
        .map(|i| {
            let k = if i <= n / 2 { i as isize } else { i as isize - n as isize };
            base * k as f64
        })
        .collect()
}

/// Fornberg finite-difference weights for the `m`-th derivative at point `z`
/// from the nodes `x` (classic recurrence; exact for polynomials up to
/// degree `x.len() - 1`).
pub fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<f64> {
    let nn = x.len();
    let mut c = vec![vec![0.0; m + 1]; nn];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..nn {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

fn spectral_derivative(field: &FieldSnapshot, order: usize, grid: &SpatialGrid) -> FieldSnapshot {
    let n = grid.n;
    let ks = wavenumbers(n, grid.length());
    let mut coeffs = fft(&field.values);
    for (i, c) in coeffs.iter_mut().enumerate() {
        // The Nyquist mode has no well-defined sign of k; its odd-order
        // derivative multiplier is dropped (standard practice).
        if n % 2 == 0 && i == n / 2 && order % 2 == 1 {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= Complex64::new(0.0, ks[i]).powu(order as u32);
        }
    }
    FieldSnapshot {
        t: field.t,
        values: ifft(&coeffs),
    }
}

/// Width of the second-order-accurate stencil for a given derivative order:
/// centered over `order + 1` points when that count is odd, `order + 2`
/// otherwise (odd derivative orders need the extra symmetric point).
fn stencil_width(order: usize) -> usize {
    if order % 2 == 0 {
        order + 1
    } else {
        order + 2
    }
}

fn fd_derivative(
    field: &FieldSnapshot,
    order: usize,
    grid: &SpatialGrid,
) -> Result<FieldSnapshot> {
    let n = grid.n;
    let h = grid.h();
    let width = stencil_width(order);
    if n < width + 1 {
        return Err(Error::Scheme(format!(
            "grid with {n} nodes is too small for an order-{order} stencil"
        )));
    }
    let half = width / 2;
    let offsets: Vec<f64> = (0..width).map(|j| (j as f64 - half as f64) * h).collect();
    let central = fornberg_weights(0.0, &offsets, order);
    let mut out = Array1::<Complex64>::zeros(n);
    if grid.periodic {
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, w) in central.iter().enumerate() {
                let idx = (i + n + j - half) % n;
                acc += field.values[idx] * *w;
            }
            out[i] = acc;
        }
    } else {
        // One extra point buys back second-order accuracy where the stencil
        // cannot be centered.
        let one_sided = width + 1;
        for i in 0..n {
            let (start, weights) = if i >= half && i + half < n {
                (i - half, &central)
            } else {
                let start = if i < half { 0 } else { n - one_sided };
                let xs: Vec<f64> =
                    (0..one_sided).map(|j| (start + j) as f64 * h - i as f64 * h).collect();
                let w = fornberg_weights(0.0, &xs, order);
                out[i] = (0..one_sided)
                    .map(|j| field.values[start + j] * w[j])
                    .sum();
                continue;
            };
            out[i] = (0..width)
                .map(|j| field.values[start + j] * weights[j])
                .sum();
        }
    }
    Ok(FieldSnapshot {
        t: field.t,
        values: out,
    })
}

/// Differentiate a field `order` times in space.
///
/// `order = 0` returns the field unchanged. Spectral differentiation demands
/// a periodic grid and is exact on resolved Fourier modes; `CentralFd` is
/// second-order accurate on any uniform grid.
pub fn differentiate(
    field: &FieldSnapshot,
    order: usize,
    grid: &SpatialGrid,
    scheme: Scheme,
) -> Result<FieldSnapshot> {
    if order > MAX_DERIVATIVE_ORDER {
        return Err(Error::Scheme(format!(
            "derivative order {order} exceeds the cap of {MAX_DERIVATIVE_ORDER}"
        )));
    }
    if field.values.len() != grid.n {
        return Err(Error::Domain(format!(
            "field has {} values, grid wants {}",
            field.values.len(),
            grid.n
        )));
    }
    if order == 0 {
        return Ok(field.clone());
    }
    match scheme {
        Scheme::Spectral => {
            if !grid.periodic {
                return Err(Error::Scheme(
                    "spectral differentiation requires a periodic grid".into(),
                ));
            }
            Ok(spectral_derivative(field, order, grid))
        }
        Scheme::CentralFd => fd_derivative(field, order, grid),
    }
}
