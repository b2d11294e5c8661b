//! Classical linear-ODE backend: discretizes a linear spatial operator into
//! `du/dt = A u + b(t)` and integrates it with either a fourth-order one-step
//! method or per-step exact exponentials, plus a method-of-lines reference
//! solver for the full nonlinear problem.

use ndarray::{s, Array1, Array2, ArrayView2};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::diff::{fft, ifft, Scheme};
use crate::error::{Error, Result};
use crate::expm::expm;
use crate::field::{FieldSnapshot, FieldSeries};
use crate::grid::{build_grid, SpatialGrid, TimeGrid};
use crate::operator::{eval_operator, OperatorExpr};
use crate::problem::{BoundarySpec, EvolutionProblem, Forcing};

/// A semi-discrete linear system `du/dt = A u + b(t)` with the forcing
/// sampled on the time grid's nodes.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    /// System matrix; may be non-Hermitian.
    pub matrix: Array2<Complex64>,
    /// Forcing samples, one vector per time node.
    pub forcing: Vec<Array1<Complex64>>,
    /// Initial state.
    pub initial: Array1<Complex64>,
    /// Time grid the forcing is sampled on.
    pub time: TimeGrid,
}

impl LinearSystem {
    pub fn new(
        matrix: Array2<Complex64>,
        forcing: Vec<Array1<Complex64>>,
        initial: Array1<Complex64>,
        time: TimeGrid,
    ) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::Domain(format!(
                "system matrix must be square, got {}x{}",
                n,
                matrix.ncols()
            )));
        }
        if initial.len() != n {
            return Err(Error::Domain(format!(
                "initial state has {} entries but the matrix is {n}x{n}",
                initial.len()
            )));
        }
        let expected = time.n_steps + 1;
        if forcing.len() != expected {
            return Err(Error::Domain(format!(
                "forcing needs one sample per time node ({expected}), got {}",
                forcing.len()
            )));
        }
        if let Some(bad) = forcing.iter().position(|v| v.len() != n) {
            return Err(Error::Domain(format!(
                "forcing sample {bad} has {} entries, expected {n}",
                forcing[bad].len()
            )));
        }
        Ok(Self {
            matrix,
            forcing,
            initial,
            time,
        })
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// Zero forcing at every time node.
    pub fn homogeneous(
        matrix: Array2<Complex64>,
        initial: Array1<Complex64>,
        time: TimeGrid,
    ) -> Result<Self> {
        let n = matrix.nrows();
        let forcing = vec![Array1::zeros(n); time.n_steps + 1];
        Self::new(matrix, forcing, initial, time)
    }

    /// Serializes to JSON: `A` as dense rows, `b` as one vector per time
    /// node, `a` as the initial vector, complex entries as `[re, im]`.
    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .matrix
            .rows()
            .into_iter()
            .map(|r| Value::Array(r.iter().map(complex_to_json).collect()))
            .collect();
        let b: Vec<Value> = self
            .forcing
            .iter()
            .map(|v| Value::Array(v.iter().map(complex_to_json).collect()))
            .collect();
        let a: Vec<Value> = self.initial.iter().map(complex_to_json).collect();
        json!({
            "A": rows,
            "b": b,
            "a": a,
            "time": { "t_final": self.time.t_final, "n_steps": self.time.n_steps },
        })
    }

    /// Parses the JSON layout produced by [`LinearSystem::to_json`]. Complex
    /// entries may be written as `[re, im]` pairs or as plain real numbers.
    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = as_object(value, "")?;
        for key in obj.keys() {
            if !matches!(key.as_str(), "A" | "b" | "a" | "time") {
                return Err(parse_err(&format!("/{key}"), "unknown key"));
            }
        }
        let rows = as_array(require(obj, "A", "")?, "/A")?;
        let n = rows.len();
        let mut matrix = Array2::<Complex64>::zeros((n, n));
        for (i, row) in rows.iter().enumerate() {
            let ptr = format!("/A/{i}");
            let entries = as_array(row, &ptr)?;
            if entries.len() != n {
                return Err(parse_err(
                    &ptr,
                    &format!("row has {} entries, expected {n}", entries.len()),
                ));
            }
            for (j, e) in entries.iter().enumerate() {
                matrix[[i, j]] = parse_complex(e, &format!("{ptr}/{j}"))?;
            }
        }
        let initial = parse_complex_vector(require(obj, "a", "")?, "/a", n)?;
        let time_obj = as_object(require(obj, "time", "")?, "/time")?;
        for key in time_obj.keys() {
            if !matches!(key.as_str(), "t_final" | "n_steps") {
                return Err(parse_err(&format!("/time/{key}"), "unknown key"));
            }
        }
        let t_final = require(time_obj, "t_final", "/time")?
            .as_f64()
            .ok_or_else(|| parse_err("/time/t_final", "expected a number"))?;
        let n_steps = require(time_obj, "n_steps", "/time")?
            .as_u64()
            .ok_or_else(|| parse_err("/time/n_steps", "expected a non-negative integer"))?
            as usize;
        let time = TimeGrid::new(t_final, n_steps)?;
        let b_rows = as_array(require(obj, "b", "")?, "/b")?;
        if b_rows.len() != n_steps + 1 {
            return Err(parse_err(
                "/b",
                &format!(
                    "needs one sample per time node ({}), got {}",
                    n_steps + 1,
                    b_rows.len()
                ),
            ));
        }
        let mut forcing = Vec::with_capacity(b_rows.len());
        for (k, sample) in b_rows.iter().enumerate() {
            forcing.push(parse_complex_vector(sample, &format!("/b/{k}"), n)?);
        }
        LinearSystem::new(matrix, forcing, initial, time)
    }
}

pub(crate) fn complex_to_json(z: &Complex64) -> Value {
    json!([z.re, z.im])
}

pub(crate) fn parse_complex(value: &Value, pointer: &str) -> Result<Complex64> {
    if let Some(x) = value.as_f64() {
        return Ok(Complex64::new(x, 0.0));
    }
    if let Some(pair) = value.as_array() {
        if pair.len() == 2 {
            let re = pair[0]
                .as_f64()
                .ok_or_else(|| parse_err(pointer, "expected a number in [re, im]"))?;
            let im = pair[1]
                .as_f64()
                .ok_or_else(|| parse_err(pointer, "expected a number in [re, im]"))?;
            return Ok(Complex64::new(re, im));
        }
    }
    Err(parse_err(pointer, "expected a real number or an [re, im] pair"))
}

pub(crate) fn parse_complex_vector(
    value: &Value,
    pointer: &str,
    expected_len: usize,
) -> Result<Array1<Complex64>> {
    let entries = as_array(value, pointer)?;
    if entries.len() != expected_len {
        return Err(parse_err(
            pointer,
            &format!("has {} entries, expected {expected_len}", entries.len()),
        ));
    }
    let mut out = Array1::zeros(expected_len);
    for (i, e) in entries.iter().enumerate() {
        out[i] = parse_complex(e, &format!("{pointer}/{i}"))?;
    }
    Ok(out)
}

pub(crate) fn parse_err(pointer: &str, message: &str) -> Error {
    Error::Parse {
        pointer: pointer.to_string(),
        message: message.to_string(),
    }
}

pub(crate) fn as_object<'v>(
    value: &'v Value,
    pointer: &str,
) -> Result<&'v serde_json::Map<String, Value>> {
    value
        .as_object()
        .ok_or_else(|| parse_err(pointer, "expected an object"))
}

pub(crate) fn as_array<'v>(value: &'v Value, pointer: &str) -> Result<&'v Vec<Value>> {
    value
        .as_array()
        .ok_or_else(|| parse_err(pointer, "expected an array"))
}

pub(crate) fn require<'v>(
    obj: &'v serde_json::Map<String, Value>,
    key: &str,
    parent: &str,
) -> Result<&'v Value> {
    obj.get(key)
        .ok_or_else(|| parse_err(&format!("{parent}/{key}"), "missing required key"))
}

/// Assembles the dense matrix of a linear operator column by column from its
/// action on unit basis fields, then replaces Dirichlet boundary rows with
/// identity rows whose forcing pins the boundary values to the given trace.
///
/// Every operator term must contain exactly one state factor; time-varying
/// coefficient fields are frozen at the initial time. On a Dirichlet grid the
/// boundary rows become `du_i/dt = u_i + (β'(t) − β(t))`, which the exact
/// trace `u_i(t) = β(t)` solves when the initial state agrees with `β(0)`;
/// `β'` is approximated by second-order finite differences on the time nodes.
pub fn discretize(
    linear_op: &OperatorExpr,
    forcing: &FieldSeries,
    initial: &FieldSnapshot,
    grid: &SpatialGrid,
    boundary: &BoundarySpec,
    scheme: Scheme,
    time: &TimeGrid,
) -> Result<LinearSystem> {
    if let Some(term) = linear_op
        .terms
        .iter()
        .find(|t| t.state_factor_count() != 1)
    {
        return Err(Error::Linearity(format!(
            "discretization needs exactly one state factor per term, found {}",
            term.state_factor_count()
        )));
    }
    linear_op.validate(grid)?;
    let n = grid.n;
    if initial.n() != n {
        return Err(Error::Domain(format!(
            "initial state has {} entries but the grid has {n}",
            initial.n()
        )));
    }
    forcing.validate(grid, time)?;

    let mut matrix = Array2::<Complex64>::zeros((n, n));
    let mut basis = FieldSnapshot {
        t: 0.0,
        values: Array1::zeros(n),
    };
    for j in 0..n {
        basis.values.fill(Complex64::new(0.0, 0.0));
        basis.values[j] = Complex64::new(1.0, 0.0);
        let column = eval_operator(linear_op, &basis, grid, scheme)?;
        matrix.column_mut(j).assign(&column.values);
    }

    let mut b: Vec<Array1<Complex64>> = forcing
        .snapshots
        .iter()
        .map(|s| s.values.clone())
        .collect();

    if let BoundarySpec::Dirichlet { trace } = boundary {
        if grid.periodic {
            return Err(Error::Domain(
                "Dirichlet rows apply to bounded grids only".into(),
            ));
        }
        if trace.len() != time.n_steps + 1 {
            return Err(Error::Domain(format!(
                "boundary trace needs one sample per time node ({}), got {}",
                time.n_steps + 1,
                trace.len()
            )));
        }
        let ddt = time_derivative_samples(trace, time.dt());
        for &i in &[0, n - 1] {
            matrix.row_mut(i).fill(Complex64::new(0.0, 0.0));
            matrix[[i, i]] = Complex64::new(1.0, 0.0);
            for (k, sample) in b.iter_mut().enumerate() {
                sample[i] = ddt[k] - trace[k];
            }
        }
    }

    LinearSystem::new(matrix, b, initial.values.clone(), time.clone())
}

/// Second-order finite-difference time derivative of node samples
/// (centered inside, one-sided three-point stencils at the ends).
pub(crate) fn time_derivative_samples(samples: &[Complex64], dt: f64) -> Vec<Complex64> {
    let m = samples.len();
    let inv2 = Complex64::new(1.0 / (2.0 * dt), 0.0);
    if m < 3 {
        // With two nodes only the first difference is available.
        let slope = if m == 2 {
            (samples[1] - samples[0]) / Complex64::new(dt, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
        return vec![slope; m];
    }
    let mut out = Vec::with_capacity(m);
    out.push((-samples[2] + samples[1] * 4.0 - samples[0] * 3.0) * inv2);
    for k in 1..m - 1 {
        out.push((samples[k + 1] - samples[k - 1]) * inv2);
    }
    out.push((samples[m - 1] * 3.0 - samples[m - 2] * 4.0 + samples[m - 3]) * inv2);
    out
}

/// Largest eigenvalue magnitude estimated by power iteration; used only for
/// the step-size advisory, so loose convergence is acceptable.
fn spectral_radius_estimate(a: &ArrayView2<Complex64>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    // Deterministic, generically non-orthogonal start vector.
    let mut v: Array1<Complex64> = Array1::from_shape_fn(n, |i| {
        let x = (i as f64 + 1.0) * 0.7390851332151607;
        Complex64::new(x.sin(), x.cos() * 0.5)
    });
    let norm = |w: &Array1<Complex64>| w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut nv = norm(&v);
    if nv == 0.0 {
        return 0.0;
    }
    v.mapv_inplace(|z| z / nv);
    let mut estimate = 0.0;
    for _ in 0..80 {
        let w = a.dot(&v);
        let nw = norm(&w);
        if nw < 1e-300 {
            return 0.0;
        }
        if (nw - estimate).abs() <= 1e-6 * nw.max(1.0) {
            return nw;
        }
        estimate = nw;
        v = w / Complex64::new(nw, 0.0);
        nv = nw;
    }
    let _ = nv;
    estimate
}

fn check_finite(u: &Array1<Complex64>, step: usize) -> Result<()> {
    if u.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!(
            "state became non-finite at step {step}"
        )))
    }
}

/// Classic fourth-order one-step integration of `du/dt = A u + b(t)` with
/// the forcing interpolated linearly at half steps. Emits a JSON advisory on
/// stderr when the estimated `|λ_max|·dt` exceeds the stability budget.
pub fn integrate_rk4(sys: &LinearSystem) -> Result<FieldSeries> {
    let dt = sys.time.dt();
    let nodes = sys.time.nodes();
    let radius = spectral_radius_estimate(&sys.matrix.view());
    if radius * dt > 2.5 {
        eprintln!(
            "{}",
            json!({
                "event": "stability_warning",
                "lambda_max_dt": radius * dt,
                "limit": 2.5,
            })
        );
    }
    let half = Complex64::new(0.5 * dt, 0.0);
    let full = Complex64::new(dt, 0.0);
    let sixth = Complex64::new(dt / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);
    let mut u = sys.initial.clone();
    check_finite(&u, 0)?;
    let mut snapshots = Vec::with_capacity(nodes.len());
    snapshots.push(FieldSnapshot {
        t: nodes[0],
        values: u.clone(),
    });
    for k in 0..sys.time.n_steps {
        let b0 = &sys.forcing[k];
        let b1 = &sys.forcing[k + 1];
        let bh = (b0 + b1) * Complex64::new(0.5, 0.0);
        let k1 = sys.matrix.dot(&u) + b0;
        let k2 = sys.matrix.dot(&(&u + &(&k1 * half))) + &bh;
        let k3 = sys.matrix.dot(&(&u + &(&k2 * half))) + &bh;
        let k4 = sys.matrix.dot(&(&u + &(&k3 * full))) + b1;
        u = &u + &((&k1 + &(&k2 * two) + &(&k3 * two) + &k4) * sixth);
        check_finite(&u, k + 1)?;
        snapshots.push(FieldSnapshot {
            t: nodes[k + 1],
            values: u.clone(),
        });
    }
    Ok(FieldSeries { snapshots })
}

/// Per-step exact integration via the exponential of the augmented generator:
/// `exp([[A, I], [0, 0]]·dt)` yields the propagator `E = e^{A·dt}` and the
/// forcing response `Φ = ∫_0^dt e^{A s} ds` in its top blocks, so each step is
/// `u ← E u + Φ b_mid` with the forcing frozen at the step midpoint.
pub fn integrate_expm(sys: &LinearSystem) -> Result<FieldSeries> {
    let n = sys.n();
    let dt = sys.time.dt();
    let nodes = sys.time.nodes();
    let mut augmented = Array2::<Complex64>::zeros((2 * n, 2 * n));
    let cdt = Complex64::new(dt, 0.0);
    augmented
        .slice_mut(s![..n, ..n])
        .assign(&(&sys.matrix * cdt));
    for i in 0..n {
        augmented[[i, n + i]] = cdt;
    }
    let big = expm(&augmented)?;
    let propagator = big.slice(s![..n, ..n]).to_owned();
    let response = big.slice(s![..n, n..]).to_owned();

    let mut u = sys.initial.clone();
    check_finite(&u, 0)?;
    let mut snapshots = Vec::with_capacity(nodes.len());
    snapshots.push(FieldSnapshot {
        t: nodes[0],
        values: u.clone(),
    });
    for k in 0..sys.time.n_steps {
        let b_mid = (&sys.forcing[k] + &sys.forcing[k + 1]) * Complex64::new(0.5, 0.0);
        u = propagator.dot(&u) + response.dot(&b_mid);
        check_finite(&u, k + 1)?;
        snapshots.push(FieldSnapshot {
            t: nodes[k + 1],
            values: u.clone(),
        });
    }
    Ok(FieldSeries { snapshots })
}

/// Band-limited refinement of a periodic snapshot by Fourier zero-padding.
fn refine_periodic_values(values: &Array1<Complex64>, refine: usize) -> Array1<Complex64> {
    if refine == 1 {
        return values.clone();
    }
    let n = values.len();
    let nf = n * refine;
    let hat = fft(values);
    let mut padded = Array1::<Complex64>::zeros(nf);
    let half = n / 2;
    for k in 0..n {
        let coeff = hat[k];
        if k < half {
            padded[k] = coeff;
        } else if k == half && n % 2 == 0 {
            // Split the ambiguous highest mode symmetrically.
            let h = coeff * Complex64::new(0.5, 0.0);
            padded[half] = h;
            padded[nf - half] = h;
        } else {
            padded[nf - (n - k)] = coeff;
        }
    }
    let scale = Complex64::new(refine as f64, 0.0);
    ifft(&padded).mapv(|z| z * scale)
}

/// Integrates the full nonlinear problem `∂_t u = N[u] + g` by the method of
/// lines with fourth-order time stepping on a `refine`-times finer grid in
/// both space and time, restricting back to the problem's own nodes.
///
/// Refinement beyond 1 requires a periodic grid (the fine initial data and
/// forcing are produced by band-limited Fourier interpolation).
pub fn solve_nonlinear_reference(problem: &EvolutionProblem, refine: usize) -> Result<FieldSeries> {
    if refine == 0 {
        return Err(Error::Domain("refinement factor must be at least 1".into()));
    }
    if refine > 1 && !problem.grid.periodic {
        return Err(Error::Domain(
            "refinement beyond 1 requires a periodic grid".into(),
        ));
    }
    let report = crate::problem::validate_problem(problem);
    if !report.is_ok() {
        return Err(Error::Validation(report.failures));
    }

    let grid = &problem.grid;
    let fine_grid = if refine == 1 {
        grid.clone()
    } else {
        build_grid(grid.x_min, grid.x_max, grid.n * refine, true)?
    };
    let fine_time = TimeGrid::new(problem.time.t_final, problem.time.n_steps * refine)?;
    let dt = fine_time.dt();
    let fine_nodes = fine_time.nodes();
    let coarse_nodes = problem.time.nodes();
    let coarse_dt = problem.time.dt();

    // Space-refined forcing samples at the coarse time nodes; time lookups
    // interpolate linearly between them.
    let fine_forcing: Option<Vec<Array1<Complex64>>> = match &problem.forcing {
        Forcing::Zero => None,
        Forcing::Sampled(series) => Some(
            series
                .snapshots
                .iter()
                .map(|s| refine_periodic_values(&s.values, refine))
                .collect(),
        ),
    };
    let forcing_at = |t: f64| -> Option<Array1<Complex64>> {
        let samples = fine_forcing.as_ref()?;
        let pos = (t / coarse_dt).clamp(0.0, (samples.len() - 1) as f64);
        let k = (pos.floor() as usize).min(samples.len() - 2);
        let theta = pos - k as f64;
        Some(
            &samples[k] * Complex64::new(1.0 - theta, 0.0)
                + &samples[k + 1] * Complex64::new(theta, 0.0),
        )
    };

    let rhs = |values: &Array1<Complex64>, t: f64| -> Result<Array1<Complex64>> {
        let snap = FieldSnapshot {
            t,
            values: values.clone(),
        };
        let mut out = eval_operator(&problem.nonlinearity, &snap, &fine_grid, problem.scheme)?.values;
        if let Some(g) = forcing_at(t) {
            out = out + g;
        }
        Ok(out)
    };

    let mut u = refine_periodic_values(&problem.initial.values, refine);
    check_finite(&u, 0)?;
    let half = Complex64::new(0.5 * dt, 0.0);
    let full = Complex64::new(dt, 0.0);
    let sixth = Complex64::new(dt / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);
    let stride = (0..grid.n).map(|j| j * refine).collect::<Vec<_>>();
    let restrict = |w: &Array1<Complex64>, t: f64| FieldSnapshot {
        t,
        values: Array1::from_iter(stride.iter().map(|&j| w[j])),
    };

    let mut snapshots = Vec::with_capacity(coarse_nodes.len());
    snapshots.push(restrict(&u, coarse_nodes[0]));
    for k in 0..fine_time.n_steps {
        let t = fine_nodes[k];
        let k1 = rhs(&u, t)?;
        let k2 = rhs(&(&u + &(&k1 * half)), t + 0.5 * dt)?;
        let k3 = rhs(&(&u + &(&k2 * half)), t + 0.5 * dt)?;
        let k4 = rhs(&(&u + &(&k3 * full)), t + dt)?;
        u = &u + &((&k1 + &(&k2 * two) + &(&k3 * two) + &k4) * sixth);
        check_finite(&u, k + 1)?;
        if (k + 1) % refine == 0 {
            let coarse_index = (k + 1) / refine;
            snapshots.push(restrict(&u, coarse_nodes[coarse_index]));
        }
    }
    Ok(FieldSeries { snapshots })
}
