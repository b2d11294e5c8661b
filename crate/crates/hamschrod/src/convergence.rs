//! Empirical machinery for the convergence-control parameter: sweep a grid
//! of c0 values, record the residual each one reaches at fixed truncation
//! order, select the best, and diagnose whether a solve's residual history
//! is behaving convergently.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ham::{ham_solve, DeformationSolveRecord, HamConfig};
use crate::problem::EvolutionProblem;

/// Residual-vs-c0 curve at a fixed truncation order. Diverged runs carry a
/// `+∞` residual sentinel.
#[derive(Debug, Clone)]
pub struct C0Curve {
    /// `(c0, residual_norm)` pairs, c0 strictly increasing and nonzero.
    pub samples: Vec<(f64, f64)>,
    /// Truncation order every sample was run at.
    pub order: usize,
    /// Free-form label for exports.
    pub problem_tag: String,
}

/// Runs the solver once per requested c0 (duplicates collapsed, then sorted
/// ascending) and records the final residual norm of each run. Runs that
/// trip the divergence guard — or lose finiteness — are recorded as `+∞`
/// rather than aborting the sweep; any other failure aborts.
pub fn residual_curve(
    problem: &EvolutionProblem,
    base_config: &HamConfig,
    c0_values: &[f64],
) -> Result<C0Curve> {
    for &c0 in c0_values {
        if c0 == 0.0 || !c0.is_finite() {
            return Err(Error::Config(format!(
                "sweep values must be nonzero finite reals, got {c0}"
            )));
        }
    }
    let mut unique: Vec<f64> = Vec::with_capacity(c0_values.len());
    for &c0 in c0_values {
        if !unique.contains(&c0) {
            unique.push(c0);
        }
    }
    unique.sort_by(|a, b| a.partial_cmp(b).expect("finite by precondition"));

    let samples = unique
        .into_iter()
        .map(|c0| {
            let config = HamConfig {
                c0,
                ..base_config.clone()
            };
            match ham_solve(problem, &config) {
                Ok((_, history)) => {
                    let residual = history
                        .last()
                        .map(|r| r.residual_norm_after)
                        .unwrap_or(f64::INFINITY);
                    Ok((c0, residual))
                }
                Err(Error::Divergence(_)) | Err(Error::NonFinite(_)) => Ok((c0, f64::INFINITY)),
                Err(other) => Err(other),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(C0Curve {
        samples,
        order: base_config.order,
        problem_tag: format!(
            "n{}x{}steps",
            problem.grid.n, problem.time.n_steps
        ),
    })
}

/// The c0 with the smallest finite residual. Exact residual ties break
/// toward the value closest to −1, then toward the smaller magnitude.
pub fn select_c0(curve: &C0Curve) -> Result<f64> {
    if curve.samples.is_empty() {
        return Err(Error::EmptyCurve("the sweep produced no samples".into()));
    }
    let best = curve
        .samples
        .iter()
        .filter(|(_, r)| r.is_finite())
        .min_by(|(c_a, r_a), (c_b, r_b)| {
            let key_a = (*r_a, (c_a + 1.0).abs(), c_a.abs());
            let key_b = (*r_b, (c_b + 1.0).abs(), c_b.abs());
            key_a.partial_cmp(&key_b).expect("finite residuals")
        });
    match best {
        Some((c0, _)) => Ok(*c0),
        None => Err(Error::AllDiverged(
            "every sweep point diverged; widen the grid or lower the order".into(),
        )),
    }
}

/// Trend of a residual history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Converging,
    Stalled,
    Diverging,
}

/// Per-order residual diagnostics with a three-way trend verdict.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub residual_norms: Vec<f64>,
    /// Successive ratios `residual[m] / residual[m−1]`.
    pub ratios: Vec<f64>,
    pub verdict: Verdict,
}

/// Diagnoses a solve history: the last three successive residual ratios all
/// below 0.9 certify `converging`, all above 1.1 certify `diverging`, and
/// anything else — including histories too short for three ratios — is
/// `stalled`.
pub fn convergence_report(history: &[DeformationSolveRecord]) -> ConvergenceReport {
    let residual_norms: Vec<f64> = history.iter().map(|r| r.residual_norm_after).collect();
    let ratios: Vec<f64> = residual_norms
        .windows(2)
        .map(|pair| pair[1] / pair[0])
        .collect();
    let verdict = if ratios.len() >= 3 {
        let tail = &ratios[ratios.len() - 3..];
        if tail.iter().all(|&r| r < 0.9) {
            Verdict::Converging
        } else if tail.iter().all(|&r| r > 1.1) {
            Verdict::Diverging
        } else {
            Verdict::Stalled
        }
    } else {
        Verdict::Stalled
    };
    ConvergenceReport {
        residual_norms,
        ratios,
        verdict,
    }
}
