//! Quantum-algorithm emulation backend: solves `du/dt = A u + b(t)` by the
//! warped-phase construction — homogenize the forcing into an augmented
//! generator, split it into Hermitian parts, attach an auxiliary periodic
//! dimension `p` carrying an exponentially decaying profile, evolve every
//! Fourier mode of `p` under its own Hermitian Hamiltonian with exact
//! (eigendecomposition) unitaries, and read the solution back at a positive
//! recovery node `p*`.
//!
//! The state vector of the emulated machine is the full `N_p × n` mode
//! array; no gate synthesis or measurement sampling is modelled.

use ndarray::{s, Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::classical::LinearSystem;
use crate::diff::{fft, wavenumbers};
use crate::error::{Error, Result};
use crate::field::{FieldSeries, FieldSnapshot};

/// Mass of the decay profile ignored beyond the support bound.
const TAIL_EPSILON: f64 = 1e-12;

/// Tunable knobs of the backend: auxiliary resolution, auxiliary extent, and
/// the margin added to the Hermitian shift.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SchrodOptions {
    /// Number of auxiliary Fourier modes (power of two).
    pub n_p: usize,
    /// Auxiliary half-extent divided by π: `p ∈ [−π·l_p, π·l_p)`.
    pub l_p: f64,
    /// Safety margin added to `max(0, λ_max(H1))` when shifting.
    pub mu_margin: f64,
}

impl Default for SchrodOptions {
    fn default() -> Self {
        SchrodOptions {
            n_p: 1 << 10,
            l_p: 20.0,
            mu_margin: 0.1,
        }
    }
}

/// Fully resolved backend configuration for one solve.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SchrodConfig {
    pub n_p: usize,
    pub l_p: f64,
    /// Recovery node; a positive multiple of the auxiliary grid spacing.
    pub p_star: f64,
    /// Time-step size of the per-step loop.
    pub dt: f64,
    pub mu_margin: f64,
}

impl SchrodConfig {
    /// Resolves options against a step size, placing the recovery node at
    /// the smallest grid multiple of the spacing that is ≥ 0.5.
    pub fn from_options(options: SchrodOptions, dt: f64) -> Result<Self> {
        let cfg = SchrodConfig {
            n_p: options.n_p,
            l_p: options.l_p,
            p_star: {
                let dp = 2.0 * PI * options.l_p / options.n_p as f64;
                (0.5 / dp).ceil() * dp
            },
            dt,
            mu_margin: options.mu_margin,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_p < 4 || !self.n_p.is_power_of_two() {
            return Err(Error::Config(format!(
                "auxiliary mode count must be a power of two ≥ 4, got {}",
                self.n_p
            )));
        }
        if !(self.l_p > 0.0) || !self.l_p.is_finite() {
            return Err(Error::Config(format!(
                "auxiliary extent must be positive, got {}",
                self.l_p
            )));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!(
                "step size must be positive, got {}",
                self.dt
            )));
        }
        if self.mu_margin < 0.0 {
            return Err(Error::Config(format!(
                "shift margin must be nonnegative, got {}",
                self.mu_margin
            )));
        }
        let dp = self.dp();
        let steps = self.p_star / dp;
        if !(self.p_star > 0.0) || (steps - steps.round()).abs() > 1e-9 * self.n_p as f64 {
            return Err(Error::Config(format!(
                "recovery node {} is not a positive auxiliary grid node (spacing {dp})",
                self.p_star
            )));
        }
        if self.p_star >= PI * self.l_p {
            return Err(Error::Config(format!(
                "recovery node {} lies outside the auxiliary domain [−π·{}, π·{})",
                self.p_star, self.l_p, self.l_p
            )));
        }
        Ok(())
    }

    /// Auxiliary grid spacing.
    pub fn dp(&self) -> f64 {
        2.0 * PI * self.l_p / self.n_p as f64
    }

    /// Auxiliary nodes `p_j = (j − N_p/2)·dp`, covering `[−π·l_p, π·l_p)`.
    pub fn p_nodes(&self) -> Vec<f64> {
        let dp = self.dp();
        let half = (self.n_p / 2) as isize;
        (0..self.n_p as isize)
            .map(|j| (j - half) as f64 * dp)
            .collect()
    }

    /// Auxiliary Fourier frequencies in FFT ordering (`k/l_p` signed).
    pub fn xi(&self) -> Vec<f64> {
        wavenumbers(self.n_p, 2.0 * PI * self.l_p)
    }
}

/// Hermitian decomposition `A = H1 + i·H2` together with the shift `mu` that
/// makes `H1 − mu·I` negative semidefinite.
#[derive(Debug, Clone)]
pub struct HermitianSplit {
    pub h1: Array2<Complex64>,
    pub h2: Array2<Complex64>,
    pub mu: f64,
    /// Spectral norm of the shifted part `H1 − mu·I` (= mu − λ_min(H1)),
    /// the transport speed bound used by the wrap check.
    pub(crate) h1_shifted_norm: f64,
}

impl HermitianSplit {
    pub fn n(&self) -> usize {
        self.h1.nrows()
    }

    /// `H1 − mu·I`.
    pub fn h1_shifted(&self) -> Array2<Complex64> {
        let mut out = self.h1.clone();
        let shift = Complex64::new(self.mu, 0.0);
        for i in 0..out.nrows() {
            out[[i, i]] -= shift;
        }
        out
    }
}

/// Splits a square matrix into `H1 = (A + A†)/2`, `H2 = (A − A†)/(2i)` and
/// computes the shift `mu = max(0, λ_max(H1)) + mu_margin`.
pub fn hermitian_split(a: &Array2<Complex64>, mu_margin: f64) -> Result<HermitianSplit> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Domain(format!(
            "Hermitian split needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite(
            "Hermitian split of a non-finite matrix".into(),
        ));
    }
    let adjoint = a.t().mapv(|z| z.conj());
    let h1 = (a + &adjoint) * Complex64::new(0.5, 0.0);
    let h2 = (a - &adjoint) * Complex64::new(0.0, -0.5);
    let (eigenvalues, _) = h1
        .eigh(UPLO::Lower)
        .map_err(|e| Error::EigenFailure(format!("shift estimation failed: {e}")))?;
    let lambda_min = eigenvalues[0];
    let lambda_max = eigenvalues[eigenvalues.len() - 1];
    let mu = lambda_max.max(0.0) + mu_margin;
    Ok(HermitianSplit {
        h1,
        h2,
        mu,
        h1_shifted_norm: mu - lambda_min,
    })
}

/// Builds the homogenized generator for one step: `Ã = [[A, b_mid], [0, 0]]`
/// with the forcing frozen at the step midpoint, and the augmented state
/// `ũ = [state; 1]` whose last slot stays constant under `dũ/dt = Ã ũ`.
pub fn homogenize(
    sys: &LinearSystem,
    step: usize,
    state: &Array1<Complex64>,
) -> Result<(Array2<Complex64>, Array1<Complex64>)> {
    if step >= sys.time.n_steps {
        return Err(Error::Domain(format!(
            "step {step} out of range for {} steps",
            sys.time.n_steps
        )));
    }
    let n = sys.n();
    if state.len() != n {
        return Err(Error::Domain(format!(
            "state has {} entries but the system is {n}-dimensional",
            state.len()
        )));
    }
    let b_mid = (&sys.forcing[step] + &sys.forcing[step + 1]) * Complex64::new(0.5, 0.0);
    Ok((
        augmented_generator(&sys.matrix, &b_mid),
        augmented_state(state),
    ))
}

fn augmented_generator(matrix: &Array2<Complex64>, b_mid: &Array1<Complex64>) -> Array2<Complex64> {
    let n = matrix.nrows();
    let mut out = Array2::<Complex64>::zeros((n + 1, n + 1));
    out.slice_mut(s![..n, ..n]).assign(matrix);
    out.slice_mut(s![..n, n]).assign(b_mid);
    out
}

fn augmented_state(state: &Array1<Complex64>) -> Array1<Complex64> {
    let n = state.len();
    let mut out = Array1::<Complex64>::zeros(n + 1);
    out.slice_mut(s![..n]).assign(state);
    out[n] = Complex64::new(1.0, 0.0);
    out
}

/// Fourier modes of the auxiliary dimension for each state component.
#[derive(Debug, Clone)]
pub struct WarpedState {
    /// `N_p × n` array: row `k` holds mode `ξ_k` of every state component.
    pub modes: Array2<Complex64>,
    /// Auxiliary half-extent divided by π.
    pub p_extent: f64,
    /// Frequencies in FFT ordering, matching the mode rows.
    pub xi: Vec<f64>,
}

impl WarpedState {
    pub fn n_p(&self) -> usize {
        self.modes.nrows()
    }

    /// Per-mode 2-norms (the unitarity witnesses).
    pub fn mode_norms(&self) -> Vec<f64> {
        self.modes
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .collect()
    }
}

/// The literal initialization profile `e^{−|p|}`.
fn kinked_profile(p: f64) -> f64 {
    (-p.abs()).exp()
}

/// Decay profile with a smooth left continuation: identical to `e^{−p}` for
/// `p ≥ 0` and matched in value and first three derivatives at `p = 0` by
/// `e^{p}(1 − 2p + 2p² − (4/3)p³)` for `p < 0`. Because the shifted
/// generator transports the profile **leftward** only, the recovery at
/// `p* > 0` never sees the continuation region — but the smoothness removes
/// the spectral pollution the `|p|` kink would inject into every mode.
fn smooth_profile(p: f64) -> f64 {
    if p >= 0.0 {
        (-p).exp()
    } else {
        p.exp() * (1.0 - 2.0 * p + 2.0 * p * p - (4.0 / 3.0) * p * p * p)
    }
}

fn warp_with_profile(
    state: &Array1<Complex64>,
    cfg: &SchrodConfig,
    profile: impl Fn(f64) -> f64,
) -> WarpedState {
    let samples: Array1<Complex64> = cfg
        .p_nodes()
        .iter()
        .map(|&p| Complex64::new(profile(p), 0.0))
        .collect();
    let profile_hat = fft(&samples);
    let mut modes = Array2::<Complex64>::zeros((cfg.n_p, state.len()));
    for (k, &coeff) in profile_hat.iter().enumerate() {
        for (i, &v) in state.iter().enumerate() {
            modes[[k, i]] = coeff * v;
        }
    }
    WarpedState {
        modes,
        p_extent: cfg.l_p,
        xi: cfg.xi(),
    }
}

/// Attaches the auxiliary dimension: samples `w(0, p) = e^{−|p|}·ũ0` on the
/// `p`-grid and transforms along `p`.
pub fn warp_initialize(state: &Array1<Complex64>, cfg: &SchrodConfig) -> Result<WarpedState> {
    cfg.validate()?;
    Ok(warp_with_profile(state, cfg, kinked_profile))
}

/// Same transform with the smooth left continuation the stepping pipeline
/// uses: matching the solver's profile avoids the O(Δp) kink penalty when
/// recovering at a non-grid point.
pub fn warp_initialize_smooth(
    state: &Array1<Complex64>,
    cfg: &SchrodConfig,
) -> Result<WarpedState> {
    cfg.validate()?;
    Ok(warp_with_profile(state, cfg, smooth_profile))
}

/// Eigendecomposition of one mode Hamiltonian `H(ξ) = H2 − ξ·(H1 − mu·I)`.
type ModeDecomposition = (Array1<f64>, Array2<Complex64>);

/// Full Hermitian eigendecomposition `H = V diag(λ) V†` with V's columns as
/// eigenvectors. Some LAPACK wrappers hand back the eigenvectors of the
/// transposed buffer when the input is row-major, so the true eigenvector is
/// the conjugate of each returned column; a one-column residual check picks
/// whichever reading actually diagonalizes `H`.
fn hermitian_eigendecomposition(h: &Array2<Complex64>) -> Result<ModeDecomposition> {
    let (eigenvalues, raw) = h
        .eigh(UPLO::Lower)
        .map_err(|e| Error::EigenFailure(format!("Hermitian eigendecomposition: {e}")))?;
    let residual = |vectors: &Array2<Complex64>| -> f64 {
        let v = vectors.column(0).to_owned();
        let hv = h.dot(&v);
        hv.iter()
            .zip(v.iter())
            .map(|(a, b)| (a - b * Complex64::new(eigenvalues[0], 0.0)).norm())
            .sum()
    };
    let conjugated = raw.mapv(|z| z.conj());
    let (vectors, best) = if residual(&conjugated) <= residual(&raw) {
        let r = residual(&conjugated);
        (conjugated, r)
    } else {
        let r = residual(&raw);
        (raw, r)
    };
    let scale = h.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    if best > 1e-6 * (1.0 + scale) * h.nrows() as f64 {
        return Err(Error::EigenFailure(format!(
            "eigenvector residual {best:.3e} is too large for a matrix of scale {scale:.3e}"
        )));
    }
    Ok((eigenvalues, vectors))
}

fn mode_decompositions(split: &HermitianSplit, xi: &[f64]) -> Result<Vec<ModeDecomposition>> {
    let h1_shifted = split.h1_shifted();
    xi.par_iter()
        .map(|&x| {
            let h = &split.h2 - &(&h1_shifted * Complex64::new(x, 0.0));
            hermitian_eigendecomposition(&h)
                .map_err(|e| Error::EigenFailure(format!("mode Hamiltonian at ξ = {x}: {e}")))
        })
        .collect()
}

/// Applies `exp(i·H·t)` through the eigendecomposition `H = V diag(λ) V†`.
fn apply_mode_unitary(
    decomp: &ModeDecomposition,
    t: f64,
    input: &ndarray::ArrayView1<Complex64>,
) -> Array1<Complex64> {
    let (eigenvalues, vectors) = decomp;
    let n = input.len();
    let mut projected = Array1::<Complex64>::zeros(n);
    for j in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            acc += vectors[[i, j]].conj() * input[i];
        }
        projected[j] = acc * Complex64::from_polar(1.0, eigenvalues[j] * t);
    }
    let mut out = Array1::<Complex64>::zeros(n);
    for i in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            acc += vectors[[i, j]] * projected[j];
        }
        out[i] = acc;
    }
    out
}

/// Evolves every auxiliary mode by its exact unitary
/// `exp(i·(H2 − ξ_k·(H1 − mu·I))·t)`.
pub fn warped_evolve(state: &WarpedState, split: &HermitianSplit, t: f64) -> Result<WarpedState> {
    if split.n() != state.modes.ncols() {
        return Err(Error::Domain(format!(
            "split dimension {} does not match warped state dimension {}",
            split.n(),
            state.modes.ncols()
        )));
    }
    let decomps = mode_decompositions(split, &state.xi)?;
    let rows: Vec<Array1<Complex64>> = state
        .modes
        .rows()
        .into_iter()
        .enumerate()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(k, row)| apply_mode_unitary(&decomps[k], t, &row))
        .collect();
    let mut modes = Array2::<Complex64>::zeros(state.modes.dim());
    for (k, row) in rows.into_iter().enumerate() {
        modes.row_mut(k).assign(&row);
    }
    Ok(WarpedState {
        modes,
        p_extent: state.p_extent,
        xi: state.xi.clone(),
    })
}

fn ln_tail() -> f64 {
    (1.0 / TAIL_EPSILON).ln()
}

/// Remaining distance between the recovery node plus transported support and
/// the periodic boundary; negative means wrap-around contamination.
fn wrap_margin(cfg: &SchrodConfig, transport_norm: f64, horizon: f64) -> f64 {
    PI * cfg.l_p - (cfg.p_star + transport_norm * horizon + ln_tail())
}

/// Reads the solution back: inverse transform evaluated at `p_star`, scaled
/// by `e^{mu·t}·e^{p_star}`. Returns every component of the warped state;
/// pipelines that homogenized the forcing drop the trailing slot themselves.
pub fn recover(
    state: &WarpedState,
    split: &HermitianSplit,
    cfg: &SchrodConfig,
    t: f64,
) -> Result<Array1<Complex64>> {
    let margin = wrap_margin(cfg, split.h1_shifted_norm, t);
    if margin < 0.0 {
        return Err(Error::Wrap(format!(
            "auxiliary support bound violated by {:.3}: π·l_p = {:.3} < p* + ‖H1−μI‖·t + ln(1/ε) \
             = {:.3}; increase l_p or reduce the horizon",
            -margin,
            PI * cfg.l_p,
            PI * cfg.l_p - margin,
        )));
    }
    let n = state.modes.ncols();
    let inv_n_p = 1.0 / state.n_p() as f64;
    // p_star − p_0 with p_0 = −π·l_p, the offset of the first grid node.
    let offset = cfg.p_star + PI * cfg.l_p;
    let mut out = Array1::<Complex64>::zeros(n);
    for (k, &x) in state.xi.iter().enumerate() {
        let phase = Complex64::from_polar(inv_n_p, x * offset);
        for i in 0..n {
            out[i] += phase * state.modes[[k, i]];
        }
    }
    let scale = Complex64::new((split.mu * t).exp() * cfg.p_star.exp(), 0.0);
    Ok(out * scale)
}

/// One-run health summary, serializable as a diagnostic JSON line.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SchrodDiagnostics {
    #[serde(rename = "N_p")]
    pub n_p: usize,
    #[serde(rename = "L_p")]
    pub l_p: f64,
    /// Largest shift used by any step.
    pub mu: f64,
    pub p_star: f64,
    /// Largest deviation of the recovered homogenization slot from 1.
    pub slot_error: f64,
    /// Smallest support margin seen by any step.
    pub wrap_margin: f64,
}

/// Step cache: eigendecompositions are reused while the midpoint forcing is
/// bit-identical to the previous step's (always true for constant forcing).
struct StepOperators {
    b_mid: Array1<Complex64>,
    split: HermitianSplit,
    decomps: Vec<ModeDecomposition>,
}

/// Solves the system through the full emulation loop. Each step freezes the
/// forcing at its midpoint, homogenizes, splits, warps the current state
/// with the smooth-continuation profile, evolves every mode for one step,
/// and recovers the state at `p_star`, dropping the homogenization slot.
pub fn schrodingerise_solve(sys: &LinearSystem, cfg: &SchrodConfig) -> Result<FieldSeries> {
    schrodingerise_solve_with_diagnostics(sys, cfg).map(|(series, _)| series)
}

/// [`schrodingerise_solve`] plus the run's health diagnostics.
pub fn schrodingerise_solve_with_diagnostics(
    sys: &LinearSystem,
    cfg: &SchrodConfig,
) -> Result<(FieldSeries, SchrodDiagnostics)> {
    cfg.validate()?;
    let dt = sys.time.dt();
    if (cfg.dt - dt).abs() > 1e-9 * dt.max(1.0) {
        return Err(Error::Config(format!(
            "configured step {} does not match the system's step {dt}",
            cfg.dt
        )));
    }
    let n = sys.n();
    let nodes = sys.time.nodes();
    let half = Complex64::new(0.5, 0.0);

    let mut u = sys.initial.clone();
    if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("initial state is non-finite".into()));
    }
    let mut snapshots = Vec::with_capacity(nodes.len());
    snapshots.push(FieldSnapshot {
        t: nodes[0],
        values: u.clone(),
    });

    let mut operators: Option<StepOperators> = None;
    let mut max_mu = f64::NEG_INFINITY;
    let mut max_slot_error = 0.0f64;
    let mut min_wrap_margin = f64::INFINITY;

    for k in 0..sys.time.n_steps {
        let b_mid = (&sys.forcing[k] + &sys.forcing[k + 1]) * half;
        let reuse = operators
            .as_ref()
            .map_or(false, |ops| ops.b_mid == b_mid);
        if !reuse {
            let generator = augmented_generator(&sys.matrix, &b_mid);
            let split = hermitian_split(&generator, cfg.mu_margin)?;
            let decomps = mode_decompositions(&split, &cfg.xi())?;
            operators = Some(StepOperators {
                b_mid,
                split,
                decomps,
            });
        }
        let ops = operators.as_ref().unwrap();

        let margin = wrap_margin(cfg, ops.split.h1_shifted_norm, dt);
        if margin < 0.0 {
            return Err(Error::Wrap(format!(
                "auxiliary support bound violated at step {k} by {:.3}; increase l_p",
                -margin
            )));
        }
        min_wrap_margin = min_wrap_margin.min(margin);
        max_mu = max_mu.max(ops.split.mu);

        let warped = warp_with_profile(&augmented_state(&u), cfg, smooth_profile);
        let rows: Vec<(usize, ndarray::ArrayView1<Complex64>)> =
            warped.modes.rows().into_iter().enumerate().collect();
        let offset = cfg.p_star + PI * cfg.l_p;
        let inv_n_p = 1.0 / cfg.n_p as f64;
        // Parallel per-mode evolution, but an ordered sequential sum: float
        // addition is not associative, and output files must be
        // byte-identical across runs regardless of thread count.
        let contributions: Vec<Array1<Complex64>> = rows
            .into_par_iter()
            .map(|(mode, row)| {
                let evolved = apply_mode_unitary(&ops.decomps[mode], dt, &row);
                let phase = Complex64::from_polar(inv_n_p, warped.xi[mode] * offset);
                evolved * phase
            })
            .collect();
        let mut recovered_sum = Array1::<Complex64>::zeros(n + 1);
        for contribution in contributions {
            recovered_sum = recovered_sum + contribution;
        }
        let scale = Complex64::new((ops.split.mu * dt).exp() * cfg.p_star.exp(), 0.0);
        let recovered = recovered_sum * scale;

        let slot = recovered[n];
        max_slot_error = max_slot_error.max((slot - Complex64::new(1.0, 0.0)).norm());
        u = recovered.slice(s![..n]).to_owned();
        if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(format!(
                "recovered state became non-finite at step {}",
                k + 1
            )));
        }
        snapshots.push(FieldSnapshot {
            t: nodes[k + 1],
            values: u.clone(),
        });
    }

    let diagnostics = SchrodDiagnostics {
        n_p: cfg.n_p,
        l_p: cfg.l_p,
        mu: if max_mu.is_finite() { max_mu } else { 0.0 },
        p_star: cfg.p_star,
        slot_error: max_slot_error,
        wrap_margin: if min_wrap_margin.is_finite() {
            min_wrap_margin
        } else {
            wrap_margin(cfg, 0.0, dt)
        },
    };
    Ok((FieldSeries { snapshots }, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::integrate_expm;
    use crate::expm::expm;
    use crate::grid::TimeGrid;
    use ndarray::array;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn default_config(dt: f64) -> SchrodConfig {
        SchrodConfig::from_options(SchrodOptions::default(), dt).unwrap()
    }

    fn xorshift(seed: u64) -> impl FnMut() -> f64 {
        let mut state = seed.max(1);
        move || {
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            let v = state.wrapping_mul(0x2545F4914F6CDD1D);
            (v >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        }
    }

    fn random_matrix(seed: u64, n: usize) -> Array2<Complex64> {
        let mut next = xorshift(seed);
        Array2::from_shape_fn((n, n), |_| c(next(), next()))
    }

    #[test]
    fn recovery_node_is_a_grid_multiple_at_least_half() {
        let cfg = default_config(0.01);
        let dp = cfg.dp();
        assert!(cfg.p_star >= 0.5);
        assert!(cfg.p_star - dp < 0.5);
        let steps = cfg.p_star / dp;
        assert!((steps - steps.round()).abs() < 1e-9);
    }

    #[test]
    fn split_of_hermitian_matrix_has_no_skew_part() {
        let mut a = random_matrix(9, 5);
        let adj = a.t().mapv(|z| z.conj());
        a = (&a + &adj) * c(0.5, 0.0);
        let split = hermitian_split(&a, 0.1).unwrap();
        assert!(split.h2.iter().all(|z| z.norm() < 1e-12));
        let d = split
            .h1
            .iter()
            .zip(a.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(d < 1e-12);
    }

    #[test]
    fn split_of_i_times_hermitian_is_pure_skew() {
        let mut k = random_matrix(3, 4);
        let adj = k.t().mapv(|z| z.conj());
        k = (&k + &adj) * c(0.5, 0.0);
        let a = &k * c(0.0, 1.0);
        let split = hermitian_split(&a, 0.1).unwrap();
        assert!(split.h1.iter().all(|z| z.norm() < 1e-12));
        let d = split
            .h2
            .iter()
            .zip(k.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(d < 1e-12);
    }

    #[test]
    fn split_of_upper_shift_matches_hand_computation() {
        let a = array![[c(0., 0.), c(1., 0.)], [c(0., 0.), c(0., 0.)]];
        let split = hermitian_split(&a, 0.1).unwrap();
        assert!((split.h1[[0, 1]] - c(0.5, 0.0)).norm() < 1e-14);
        assert!((split.h1[[1, 0]] - c(0.5, 0.0)).norm() < 1e-14);
        assert!((split.h2[[0, 1]] - c(0.0, -0.5)).norm() < 1e-14);
        assert!((split.h2[[1, 0]] - c(0.0, 0.5)).norm() < 1e-14);
        // Reconstruction A = H1 + i·H2 and mu = λ_max + margin = 0.5 + 0.1.
        let recon = &split.h1 + &(&split.h2 * c(0.0, 1.0));
        let d = recon
            .iter()
            .zip(a.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(d < 1e-12);
        assert!((split.mu - 0.6).abs() < 1e-10);
    }

    #[test]
    fn split_reconstructs_random_matrices() {
        for seed in 1..=20u64 {
            let a = random_matrix(seed, 6);
            let split = hermitian_split(&a, 0.1).unwrap();
            let recon = &split.h1 + &(&split.h2 * c(0.0, 1.0));
            let d = recon
                .iter()
                .zip(a.iter())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(d < 1e-12);
            let h1_adj = split.h1.t().mapv(|z| z.conj());
            let herm = split
                .h1
                .iter()
                .zip(h1_adj.iter())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(herm < 1e-12);
        }
    }

    #[test]
    fn homogenized_constant_system_drifts_linearly() {
        // n = 1, A = 0, b = 3, a = 2: ũ(1) = (2 + 3, 1).
        let matrix = Array2::from_shape_vec((1, 1), vec![c(0., 0.)]).unwrap();
        let time = TimeGrid::new(1.0, 1).unwrap();
        let forcing = vec![Array1::from_vec(vec![c(3., 0.)]); 2];
        let initial = Array1::from_vec(vec![c(2., 0.)]);
        let sys = LinearSystem::new(matrix, forcing, initial.clone(), time).unwrap();
        let (generator, augmented) = homogenize(&sys, 0, &initial).unwrap();
        let propagator = expm(&generator).unwrap();
        let evolved = propagator.dot(&augmented);
        assert!((evolved[0] - c(5., 0.)).norm() < 1e-12);
        assert!((evolved[1] - c(1., 0.)).norm() < 1e-12);
    }

    #[test]
    fn homogenization_with_zero_forcing_decouples() {
        let matrix = -Array2::<Complex64>::eye(3);
        let time = TimeGrid::new(1.0, 1).unwrap();
        let initial = Array1::from_vec(vec![c(1., 0.), c(0., 2.), c(-1., 1.)]);
        let sys = LinearSystem::homogeneous(matrix.clone(), initial.clone(), time).unwrap();
        let (generator, augmented) = homogenize(&sys, 0, &initial).unwrap();
        let big = expm(&(&generator * c(0.7, 0.0))).unwrap();
        let evolved = big.dot(&augmented);
        let small = expm(&(&matrix * c(0.7, 0.0))).unwrap();
        let direct = small.dot(&initial);
        for i in 0..3 {
            assert!((evolved[i] - direct[i]).norm() < 1e-12);
        }
        assert!((evolved[3] - c(1., 0.)).norm() < 1e-14);
    }

    #[test]
    fn zero_state_warps_to_zero_modes() {
        let cfg = default_config(0.01);
        let state = Array1::<Complex64>::zeros(3);
        let warped = warp_initialize(&state, &cfg).unwrap();
        assert!(warped.modes.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn warp_round_trips_at_the_origin() {
        let cfg = default_config(0.01);
        let state = Array1::from_vec(vec![c(1.0, -0.5), c(0.3, 0.2)]);
        let warped = warp_initialize(&state, &cfg).unwrap();
        // Inverse transform at p = 0 (grid node N_p/2): e^{−|0|}·ũ0 = ũ0.
        let j0 = cfg.n_p / 2;
        let mut reconstructed = Array1::<Complex64>::zeros(2);
        for (k, &x) in warped.xi.iter().enumerate() {
            // p_{j0} − p_0 = j0·dp.
            let phase = Complex64::from_polar(1.0 / cfg.n_p as f64, x * (j0 as f64 * cfg.dp()));
            for i in 0..2 {
                reconstructed[i] += phase * warped.modes[[k, i]];
            }
        }
        for i in 0..2 {
            assert!(
                (reconstructed[i] - state[i]).norm() < 1e-10,
                "component {i}: {}",
                (reconstructed[i] - state[i]).norm()
            );
        }
    }

    #[test]
    fn warp_energy_matches_the_sampled_profile() {
        let cfg = default_config(0.01);
        let state = Array1::from_vec(vec![c(0.8, 0.1)]);
        let warped = warp_initialize(&state, &cfg).unwrap();
        // Parseval: Σ_k |ŵ_k|²/N_p·dp = Σ_j |w_j|²·dp.
        let from_modes: f64 = warped.modes.iter().map(|z| z.norm_sqr()).sum::<f64>()
            / cfg.n_p as f64
            * cfg.dp();
        let direct: f64 = cfg
            .p_nodes()
            .iter()
            .map(|&p| (-2.0 * p.abs()).exp() * state[0].norm_sqr() * cfg.dp())
            .sum();
        assert!((from_modes - direct).abs() < 1e-10 * direct);
    }

    #[test]
    fn evolution_preserves_every_mode_norm() {
        let cfg =
            SchrodConfig::from_options(SchrodOptions { n_p: 1 << 6, ..Default::default() }, 0.3)
                .unwrap();
        let a = random_matrix(17, 4);
        let split = hermitian_split(&a, 0.1).unwrap();
        let mut next = xorshift(23);
        let state = Array1::from_shape_fn(4, |_| c(next(), next()));
        let warped = warp_initialize(&state, &cfg).unwrap();
        let before = warped.mode_norms();
        let evolved = warped_evolve(&warped, &split, 0.3).unwrap();
        let after = evolved.mode_norms();
        for (b, a) in before.iter().zip(after.iter()) {
            assert!((b - a).abs() <= 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn zero_frequency_mode_sees_only_the_rotation_part() {
        let cfg =
            SchrodConfig::from_options(SchrodOptions { n_p: 1 << 5, ..Default::default() }, 0.2)
                .unwrap();
        let a = random_matrix(31, 3);
        let split = hermitian_split(&a, 0.1).unwrap();
        let state = Array1::from_vec(vec![c(1., 0.), c(0., 1.), c(0.5, -0.5)]);
        let warped = warp_initialize(&state, &cfg).unwrap();
        let evolved = warped_evolve(&warped, &split, 0.2).unwrap();
        // Mode k = 0 has ξ = 0, so it evolves by exp(i·H2·t) alone.
        let h_t = &split.h2 * c(0.0, 0.2);
        let u = expm(&h_t).unwrap();
        let expected = u.dot(&warped.modes.row(0).to_owned());
        for i in 0..3 {
            assert!((evolved.modes[[0, i]] - expected[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn decay_system_recovers_the_exponential() {
        // A = −I: H1 = −I (λ_max < 0 so mu = margin), u(1) = e^{−1}·e_1.
        let cfg = SchrodConfig::from_options(
            SchrodOptions { n_p: 1 << 12, ..Default::default() },
            1.0,
        )
        .unwrap();
        let a = -Array2::<Complex64>::eye(2);
        let split = hermitian_split(&a, 0.1).unwrap();
        let state = Array1::from_vec(vec![c(1., 0.), c(0., 0.)]);
        let warped = warp_initialize_smooth(&state, &cfg).unwrap();
        let evolved = warped_evolve(&warped, &split, 1.0).unwrap();
        let recovered = recover(&evolved, &split, &cfg, 1.0).unwrap();
        let expect = (-1f64).exp();
        assert!(
            (recovered[0] - c(expect, 0.)).norm() < 1e-6,
            "error {}",
            (recovered[0] - c(expect, 0.)).norm()
        );
        assert!(recovered[1].norm() < 1e-8);
    }

    #[test]
    fn recovery_with_no_evolution_returns_the_state() {
        let cfg = default_config(0.5);
        let a = random_matrix(41, 3);
        let split = hermitian_split(&a, 0.1).unwrap();
        let state = Array1::from_vec(vec![c(0.4, 0.1), c(-0.2, 0.0), c(0.0, 0.9)]);
        let warped = warp_initialize(&state, &cfg).unwrap();
        let recovered = recover(&warped, &split, &cfg, 0.0).unwrap();
        for i in 0..3 {
            assert!((recovered[i] - state[i]).norm() < 1e-8);
        }
    }

    #[test]
    fn wrap_violation_is_reported() {
        // Tiny extent: the support bound cannot hold.
        let options = SchrodOptions {
            n_p: 1 << 6,
            l_p: 2.0,
            mu_margin: 0.1,
        };
        let cfg = SchrodConfig::from_options(options, 1.0).unwrap();
        let a = -Array2::<Complex64>::eye(2);
        let split = hermitian_split(&a, 0.1).unwrap();
        let state = Array1::from_vec(vec![c(1., 0.), c(0., 0.)]);
        let warped = warp_initialize(&state, &cfg).unwrap();
        let evolved = warped_evolve(&warped, &split, 1.0).unwrap();
        let err = recover(&evolved, &split, &cfg, 1.0).unwrap_err();
        assert!(matches!(err, Error::Wrap(_)));
    }

    #[test]
    fn zero_system_solve_is_constant_in_time() {
        let matrix = Array2::<Complex64>::zeros((2, 2));
        let time = TimeGrid::new(1.0, 5).unwrap();
        let initial = Array1::from_vec(vec![c(0.7, 0.0), c(-0.3, 0.4)]);
        let sys = LinearSystem::homogeneous(matrix, initial.clone(), time).unwrap();
        let cfg = SchrodConfig::from_options(
            SchrodOptions { n_p: 1 << 10, ..Default::default() },
            sys.time.dt(),
        )
        .unwrap();
        let out = schrodingerise_solve(&sys, &cfg).unwrap();
        for snap in &out.snapshots {
            for (a, b) in snap.values.iter().zip(initial.iter()) {
                assert!((a - b).norm() < 1e-5, "{}", (a - b).norm());
            }
        }
    }

    #[test]
    fn random_systems_match_the_exponential_integrator() {
        for seed in [5u64, 19] {
            let mut next = xorshift(seed);
            let n = 5;
            let matrix = Array2::from_shape_fn((n, n), |_| c(next(), next()));
            let initial = Array1::from_shape_fn(n, |_| c(next(), next()));
            let b_const = Array1::from_shape_fn(n, |_| c(next(), next()));
            let time = TimeGrid::new(0.5, 25).unwrap();
            let forcing = vec![b_const; 26];
            let sys = LinearSystem::new(matrix, forcing, initial, time).unwrap();
            let cfg = SchrodConfig::from_options(
                SchrodOptions { n_p: 1 << 10, ..Default::default() },
                sys.time.dt(),
            )
            .unwrap();
            let (emulated, diag) = schrodingerise_solve_with_diagnostics(&sys, &cfg).unwrap();
            let exact = integrate_expm(&sys).unwrap();
            let scale = exact.max_norm().max(1.0);
            let rel = emulated.max_diff(&exact) / scale;
            assert!(rel < 1e-4, "seed {seed}: relative error {rel}");
            assert!(diag.slot_error < 1e-5, "slot error {}", diag.slot_error);
            assert!(diag.wrap_margin > 0.0);
        }
    }

    #[test]
    fn pure_transport_preserves_the_norm() {
        // A anti-Hermitian ⇒ H1 = 0 ⇒ the solve is an isometry.
        let mut k = random_matrix(77, 4);
        let adj = k.t().mapv(|z| z.conj());
        k = (&k + &adj) * c(0.5, 0.0);
        let a = &k * c(0.0, 1.0);
        let time = TimeGrid::new(0.5, 20).unwrap();
        let mut next = xorshift(99);
        let initial = Array1::from_shape_fn(4, |_| c(next(), next()));
        let sys = LinearSystem::homogeneous(a, initial.clone(), time).unwrap();
        let cfg = SchrodConfig::from_options(
            SchrodOptions { n_p: 1 << 12, ..Default::default() },
            sys.time.dt(),
        )
        .unwrap();
        let out = schrodingerise_solve(&sys, &cfg).unwrap();
        let norm0: f64 = initial.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let last = out.snapshots.last().unwrap();
        let norm1: f64 = last.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(
            (norm0 - norm1).abs() < 1e-6 * norm0,
            "norm drift {}",
            (norm0 - norm1).abs() / norm0
        );
    }

    #[test]
    fn shift_covariance_holds_at_recovery_level() {
        // Solving with A − cI and multiplying by e^{ct} matches solving A.
        let mut next = xorshift(3);
        let n = 4;
        let matrix = Array2::from_shape_fn((n, n), |_| c(next(), next()) * c(0.5, 0.0));
        let initial = Array1::from_shape_fn(n, |_| c(next(), next()));
        let time = TimeGrid::new(0.3, 10).unwrap();
        let shift = 0.7;
        let mut shifted = matrix.clone();
        for i in 0..n {
            shifted[[i, i]] -= c(shift, 0.0);
        }
        let cfg = SchrodConfig::from_options(
            SchrodOptions { n_p: 1 << 12, ..Default::default() },
            time.dt(),
        )
        .unwrap();
        let base = schrodingerise_solve(
            &LinearSystem::homogeneous(matrix, initial.clone(), time.clone()).unwrap(),
            &cfg,
        )
        .unwrap();
        let moved = schrodingerise_solve(
            &LinearSystem::homogeneous(shifted, initial, time).unwrap(),
            &cfg,
        )
        .unwrap();
        for (s_base, s_moved) in base.snapshots.iter().zip(moved.snapshots.iter()) {
            let factor = c((shift * s_base.t).exp(), 0.0);
            for (a, b) in s_base.values.iter().zip(s_moved.values.iter()) {
                assert!((a - b * factor).norm() < 1e-8, "{}", (a - b * factor).norm());
            }
        }
    }

    #[test]
    fn config_step_mismatch_is_rejected() {
        let matrix = Array2::<Complex64>::zeros((1, 1));
        let time = TimeGrid::new(1.0, 10).unwrap();
        let initial = Array1::from_vec(vec![c(1., 0.)]);
        let sys = LinearSystem::homogeneous(matrix, initial, time).unwrap();
        let cfg = SchrodConfig::from_options(SchrodOptions::default(), 0.05).unwrap();
        assert!(matches!(
            schrodingerise_solve(&sys, &cfg),
            Err(Error::Config(_))
        ));
    }
}
