//! Dense matrix exponential by scaling-and-squaring with Padé approximants
//! (Higham 2005): pick the smallest Padé degree whose backward-error bound
//! covers the matrix 1-norm, scaling by powers of two only when even the
//! degree-13 bound is exceeded.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Factorize, Solve};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Matrix 1-norm (maximum absolute column sum).
fn opnorm_one(a: &Array2<Complex64>) -> f64 {
    let mut best = 0.0f64;
    for col in a.columns() {
        let s: f64 = col.iter().map(|v| v.norm()).sum();
        best = best.max(s);
    }
    best
}

/// Backward-error thresholds theta_m for Padé degrees 3, 5, 7, 9, 13.
const THETA: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
];

fn pade_coeffs(m: usize) -> &'static [f64] {
    match m {
        3 => &[120., 60., 12., 1.],
        5 => &[30240., 15120., 3360., 420., 30., 1.],
        7 => &[
            17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.,
        ],
        9 => &[
            17643225600.,
            8821612800.,
            2075673600.,
            302702400.,
            30270240.,
            2162160.,
            110880.,
            3960.,
            90.,
            1.,
        ],
        13 => &[
            64764752532480000.,
            32382376266240000.,
            7771770303897600.,
            1187353796428800.,
            129060195264000.,
            10559470521600.,
            670442572800.,
            33522128640.,
            1323241920.,
            40840800.,
            960960.,
            16380.,
            182.,
            1.,
        ],
        _ => unreachable!("unsupported Padé degree"),
    }
}

fn eye(n: usize) -> Array2<Complex64> {
    Array2::eye(n)
}

/// Solve (V - U) X = (V + U) column by column through one LU factorization.
fn pade_solve(u: Array2<Complex64>, v: Array2<Complex64>) -> Result<Array2<Complex64>> {
    let n = u.nrows();
    let denom = &v - &u;
    let numer = &v + &u;
    let f = denom
        .factorize()
        .map_err(|e| Error::NonFinite(format!("matrix exponential LU failed: {e}")))?;
    let mut x = Array2::<Complex64>::zeros((n, n));
    for j in 0..n {
        let col: Array1<Complex64> = numer.column(j).to_owned();
        let sol = f
            .solve(&col)
            .map_err(|e| Error::NonFinite(format!("matrix exponential solve failed: {e}")))?;
        x.column_mut(j).assign(&sol);
    }
    Ok(x)
}

fn pade_low(a: &Array2<Complex64>, m: usize) -> Result<Array2<Complex64>> {
    let n = a.nrows();
    let b = pade_coeffs(m);
    let a2 = a.dot(a);
    // Even-power accumulators for U's odd part and V's even part.
    let mut u_poly = eye(n) * Complex64::new(b[1], 0.0);
    let mut v_poly = eye(n) * Complex64::new(b[0], 0.0);
    let mut pow = eye(n);
    for k in 1..=(m / 2) {
        pow = pow.dot(&a2);
        u_poly = &u_poly + &(&pow * Complex64::new(b[2 * k + 1], 0.0));
        v_poly = &v_poly + &(&pow * Complex64::new(b[2 * k], 0.0));
    }
    let u = a.dot(&u_poly);
    pade_solve(u, v_poly)
}

fn pade13(a: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let n = a.nrows();
    let b = pade_coeffs(13);
    let c = |i: usize| Complex64::new(b[i], 0.0);
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let u_hi = a6.dot(&(&a6 * c(13) + &(&a4 * c(11)) + &(&a2 * c(9))));
    let u_lo = &a6 * c(7) + &(&a4 * c(5)) + &(&a2 * c(3)) + &(eye(n) * c(1));
    let u = a.dot(&(&u_hi + &u_lo));
    let v_hi = a6.dot(&(&a6 * c(12) + &(&a4 * c(10)) + &(&a2 * c(8))));
    let v = &v_hi + &(&a6 * c(6)) + &(&a4 * c(4)) + &(&a2 * c(2)) + &(eye(n) * c(0));
    pade_solve(u, v)
}

/// `exp(A)` for a square complex matrix.
pub fn expm(a: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Domain(format!(
            "matrix exponential needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite("matrix exponential of non-finite matrix".into()));
    }
    let norm = opnorm_one(a);
    for &(m, theta) in &THETA[..4] {
        if norm <= theta {
            return pade_low(a, m);
        }
    }
    let theta13 = THETA[4].1;
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / Complex64::new(2f64.powi(s as i32), 0.0);
    let mut x = pade13(&scaled)?;
    for _ in 0..s {
        x = x.dot(&x);
    }
    Ok(x)
}
