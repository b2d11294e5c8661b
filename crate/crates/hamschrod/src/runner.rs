//! Batch front door: parses JSON run configurations (strict — unknown keys
//! are rejected), wires problems to the engine and backends, and writes the
//! data artifacts (`solution.csv`, `history.json`, `report.json`,
//! `curve.csv`, `diff.json`). All diagnostics go to standard error as JSON
//! lines; file contents are deterministic byte-for-byte across runs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array1;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::builtins;
use crate::convergence::{convergence_report, residual_curve, select_c0, C0Curve};
use crate::diff::Scheme;
use crate::error::{Error, Result};
use crate::field::{FieldSeries, FieldSnapshot};
use crate::grid::{build_grid, SpatialGrid, TimeGrid};
use crate::ham::{ham_solve, Backend, DeformationSolveRecord, GuessPolicy, HamConfig};
use crate::operator::{Factor, KnownField, OperatorExpr, OperatorTerm};
use crate::problem::{validate_problem, BoundarySpec, EvolutionProblem, Forcing};
use crate::schrod::SchrodOptions;

/// The four batch commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Solve with the configured backend.
    Run,
    /// Sweep the convergence-control parameter, then solve at the winner.
    SweepC0,
    /// Solve with both backends and report their disagreement.
    CompareBackends,
    /// Solve via the quantum-emulation backend.
    Schrodingerise,
}

impl Command {
    pub fn parse(name: &str) -> Option<Command> {
        match name {
            "run" => Some(Command::Run),
            "sweep-c0" => Some(Command::SweepC0),
            "compare-backends" => Some(Command::CompareBackends),
            "schrodingerise" => Some(Command::Schrodingerise),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::SweepC0 => "sweep-c0",
            Command::CompareBackends => "compare-backends",
            Command::Schrodingerise => "schrodingerise",
        }
    }
}

/// A fully resolved run: every default filled, every value validated.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub problem: EvolutionProblem,
    /// Builtin name, or "inline" for spelled-out problems.
    pub problem_tag: String,
    pub ham: HamConfig,
    pub schrod: SchrodOptions,
    /// Sweep grid for `sweep-c0` (defaults to 40 points on [−2, −0.05]).
    pub sweep_values: Vec<f64>,
    /// Output directory requested by the document, if any.
    pub outputs: Option<PathBuf>,
}

/// The default sweep grid: 40 equispaced points spanning [−2.0, −0.05].
pub fn default_sweep_values() -> Vec<f64> {
    linspace(-2.0, -0.05, 40)
}

fn linspace(min: f64, max: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| min + (max - min) * (i as f64) / ((points - 1) as f64))
        .collect()
}

// ---------------------------------------------------------------------------
// Strict JSON parsing
// ---------------------------------------------------------------------------

fn parse_failure(pointer: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        pointer: pointer.to_string(),
        message: message.into(),
    }
}

fn as_object<'a>(value: &'a Value, pointer: &str) -> Result<&'a Map<String, Value>> {
    value
        .as_object()
        .ok_or_else(|| parse_failure(pointer, "expected a JSON object"))
}

fn reject_unknown(map: &Map<String, Value>, allowed: &[&str], pointer: &str) -> Result<()> {
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(parse_failure(
                &format!("{pointer}/{key}"),
                format!("unknown key '{key}'; allowed keys here: {allowed:?}"),
            ));
        }
    }
    Ok(())
}

fn as_f64(value: &Value, pointer: &str) -> Result<f64> {
    value
        .as_f64()
        .ok_or_else(|| parse_failure(pointer, "expected a number"))
}

fn as_usize(value: &Value, pointer: &str) -> Result<usize> {
    value
        .as_u64()
        .map(|v| v as usize)
        .ok_or_else(|| parse_failure(pointer, "expected a non-negative integer"))
}

fn as_str<'a>(value: &'a Value, pointer: &str) -> Result<&'a str> {
    value
        .as_str()
        .ok_or_else(|| parse_failure(pointer, "expected a string"))
}

fn as_bool(value: &Value, pointer: &str) -> Result<bool> {
    value
        .as_bool()
        .ok_or_else(|| parse_failure(pointer, "expected a boolean"))
}

fn as_f64_array(value: &Value, pointer: &str) -> Result<Vec<f64>> {
    let array = value
        .as_array()
        .ok_or_else(|| parse_failure(pointer, "expected an array of numbers"))?;
    array
        .iter()
        .enumerate()
        .map(|(i, v)| as_f64(v, &format!("{pointer}/{i}")))
        .collect()
}

fn as_nested_f64(value: &Value, pointer: &str) -> Result<Vec<Vec<f64>>> {
    let array = value
        .as_array()
        .ok_or_else(|| parse_failure(pointer, "expected an array of arrays of numbers"))?;
    array
        .iter()
        .enumerate()
        .map(|(i, row)| as_f64_array(row, &format!("{pointer}/{i}")))
        .collect()
}

fn complex_values(
    re: &[f64],
    im: Option<&Vec<f64>>,
    pointer: &str,
    violations: &mut Vec<String>,
) -> Array1<Complex64> {
    if let Some(im) = im {
        if im.len() != re.len() {
            violations.push(format!(
                "{pointer}: imaginary part has {} entries, real part has {}",
                im.len(),
                re.len()
            ));
        }
    }
    Array1::from_iter(re.iter().enumerate().map(|(i, &r)| {
        let imag = im.and_then(|v| v.get(i).copied()).unwrap_or(0.0);
        Complex64::new(r, imag)
    }))
}

fn parse_terms(
    value: &Value,
    pointer: &str,
    violations: &mut Vec<String>,
) -> Result<OperatorExpr> {
    let array = value
        .as_array()
        .ok_or_else(|| parse_failure(pointer, "expected an array of operator terms"))?;
    let mut terms = Vec::with_capacity(array.len());
    for (i, term_value) in array.iter().enumerate() {
        let term_ptr = format!("{pointer}/{i}");
        let term = as_object(term_value, &term_ptr)?;
        reject_unknown(term, &["coefficient", "factors"], &term_ptr)?;
        let coefficient = as_f64(
            term.get("coefficient")
                .ok_or_else(|| parse_failure(&term_ptr, "missing required key 'coefficient'"))?,
            &format!("{term_ptr}/coefficient"),
        )?;
        if !coefficient.is_finite() {
            violations.push(format!("{term_ptr}/coefficient: must be finite"));
        }
        let factors_value = term
            .get("factors")
            .ok_or_else(|| parse_failure(&term_ptr, "missing required key 'factors'"))?;
        let factors_array = factors_value.as_array().ok_or_else(|| {
            parse_failure(&format!("{term_ptr}/factors"), "expected an array of factors")
        })?;
        let mut factors = Vec::with_capacity(factors_array.len());
        for (j, factor_value) in factors_array.iter().enumerate() {
            let factor_ptr = format!("{term_ptr}/factors/{j}");
            let factor = as_object(factor_value, &factor_ptr)?;
            if factor.contains_key("derivative") {
                reject_unknown(factor, &["derivative"], &factor_ptr)?;
                let order = as_usize(
                    factor.get("derivative").expect("checked"),
                    &format!("{factor_ptr}/derivative"),
                )?;
                factors.push(Factor::state(order));
            } else if factor.contains_key("constant_re") {
                reject_unknown(factor, &["constant_re", "constant_im"], &factor_ptr)?;
                let re = as_f64_array(
                    factor.get("constant_re").expect("checked"),
                    &format!("{factor_ptr}/constant_re"),
                )?;
                let im = match factor.get("constant_im") {
                    Some(v) => Some(as_f64_array(v, &format!("{factor_ptr}/constant_im"))?),
                    None => None,
                };
                let values = complex_values(&re, im.as_ref(), &factor_ptr, violations);
                factors.push(Factor::KnownFunction(KnownField::Constant(values)));
            } else {
                return Err(parse_failure(
                    &factor_ptr,
                    "a factor is either {\"derivative\": k} or {\"constant_re\": [...], \
                     \"constant_im\": [...]}",
                ));
            }
        }
        terms.push(OperatorTerm::new(coefficient, factors));
    }
    Ok(OperatorExpr::new(terms))
}

const INLINE_KEYS: [&str; 14] = [
    "x_min",
    "x_max",
    "n",
    "periodic",
    "t_final",
    "n_steps",
    "scheme",
    "initial_re",
    "initial_im",
    "nonlinearity",
    "forcing_re",
    "forcing_im",
    "dirichlet_trace_re",
    "dirichlet_trace_im",
];

fn req<'a>(map: &'a Map<String, Value>, key: &str, pointer: &str) -> Result<&'a Value> {
    map.get(key)
        .ok_or_else(|| parse_failure(pointer, format!("missing required key '{key}'")))
}

fn parse_inline_problem(
    map: &Map<String, Value>,
    pointer: &str,
    violations: &mut Vec<String>,
) -> Result<Option<EvolutionProblem>> {
    reject_unknown(map, &INLINE_KEYS, pointer)?;
    let x_min = as_f64(req(map, "x_min", pointer)?, &format!("{pointer}/x_min"))?;
    let x_max = as_f64(req(map, "x_max", pointer)?, &format!("{pointer}/x_max"))?;
    let n = as_usize(req(map, "n", pointer)?, &format!("{pointer}/n"))?;
    let periodic = as_bool(req(map, "periodic", pointer)?, &format!("{pointer}/periodic"))?;
    let t_final = as_f64(req(map, "t_final", pointer)?, &format!("{pointer}/t_final"))?;
    let n_steps = as_usize(req(map, "n_steps", pointer)?, &format!("{pointer}/n_steps"))?;

    let scheme = match map.get("scheme") {
        Some(v) => match as_str(v, &format!("{pointer}/scheme"))? {
            "spectral" => Scheme::Spectral,
            "central_fd" => Scheme::CentralFd,
            other => {
                return Err(parse_failure(
                    &format!("{pointer}/scheme"),
                    format!("unknown scheme '{other}'; expected 'spectral' or 'central_fd'"),
                ))
            }
        },
        None => {
            if periodic {
                Scheme::Spectral
            } else {
                Scheme::CentralFd
            }
        }
    };

    let grid = match build_grid(x_min, x_max, n, periodic) {
        Ok(g) => g,
        Err(e) => {
            violations.push(format!("{pointer}: {e}"));
            return Ok(None);
        }
    };
    let time = match TimeGrid::new(t_final, n_steps) {
        Ok(t) => t,
        Err(e) => {
            violations.push(format!("{pointer}: {e}"));
            return Ok(None);
        }
    };

    let initial_re = as_f64_array(
        req(map, "initial_re", pointer)?,
        &format!("{pointer}/initial_re"),
    )?;
    let initial_im = match map.get("initial_im") {
        Some(v) => Some(as_f64_array(v, &format!("{pointer}/initial_im"))?),
        None => None,
    };
    if initial_re.len() != n {
        violations.push(format!(
            "{pointer}/initial_re: expected {n} entries, got {}",
            initial_re.len()
        ));
    }
    let initial = FieldSnapshot {
        t: 0.0,
        values: complex_values(
            &initial_re,
            initial_im.as_ref(),
            &format!("{pointer}/initial_re"),
            violations,
        ),
    };

    let nonlinearity = parse_terms(
        req(map, "nonlinearity", pointer)?,
        &format!("{pointer}/nonlinearity"),
        violations,
    )?;

    let forcing = match map.get("forcing_re") {
        Some(v) => {
            let re = as_nested_f64(v, &format!("{pointer}/forcing_re"))?;
            let im = match map.get("forcing_im") {
                Some(v) => Some(as_nested_f64(v, &format!("{pointer}/forcing_im"))?),
                None => None,
            };
            let nodes = time.nodes();
            if re.len() != nodes.len() {
                violations.push(format!(
                    "{pointer}/forcing_re: expected {} rows (one per time node), got {}",
                    nodes.len(),
                    re.len()
                ));
                Forcing::Zero
            } else {
                let snapshots = re
                    .iter()
                    .enumerate()
                    .map(|(k, row)| FieldSnapshot {
                        t: nodes[k],
                        values: complex_values(
                            row,
                            im.as_ref().and_then(|rows| rows.get(k)),
                            &format!("{pointer}/forcing_re/{k}"),
                            violations,
                        ),
                    })
                    .collect();
                Forcing::Sampled(FieldSeries { snapshots })
            }
        }
        None => {
            if map.contains_key("forcing_im") {
                return Err(parse_failure(
                    &format!("{pointer}/forcing_im"),
                    "forcing_im without forcing_re",
                ));
            }
            Forcing::Zero
        }
    };

    let boundary = if periodic {
        if map.contains_key("dirichlet_trace_re") || map.contains_key("dirichlet_trace_im") {
            violations.push(format!(
                "{pointer}: periodic problems take no boundary trace"
            ));
        }
        BoundarySpec::Periodic
    } else {
        match map.get("dirichlet_trace_re") {
            Some(v) => {
                let re = as_f64_array(v, &format!("{pointer}/dirichlet_trace_re"))?;
                let im = match map.get("dirichlet_trace_im") {
                    Some(v) => Some(as_f64_array(v, &format!("{pointer}/dirichlet_trace_im"))?),
                    None => None,
                };
                BoundarySpec::Dirichlet {
                    trace: complex_values(
                        &re,
                        im.as_ref(),
                        &format!("{pointer}/dirichlet_trace_re"),
                        violations,
                    )
                    .to_vec(),
                }
            }
            None => {
                violations.push(format!(
                    "{pointer}: bounded problems require dirichlet_trace_re"
                ));
                return Ok(None);
            }
        }
    };

    let problem = EvolutionProblem {
        grid,
        time,
        nonlinearity,
        forcing,
        initial,
        boundary,
        scheme,
    };
    let report = validate_problem(&problem);
    if !report.is_ok() {
        violations.extend(
            report
                .failures
                .into_iter()
                .map(|f| format!("{pointer}: {f}")),
        );
        return Ok(None);
    }
    Ok(Some(problem))
}

fn parse_problem(
    value: &Value,
    pointer: &str,
    violations: &mut Vec<String>,
) -> Result<Option<(EvolutionProblem, String)>> {
    if let Some(name) = value.as_str() {
        return match builtins::builtin(name) {
            Ok(problem) => Ok(Some((problem, name.to_string()))),
            Err(e) => {
                violations.push(format!("{pointer}: {e}"));
                Ok(None)
            }
        };
    }
    let map = as_object(value, pointer)?;
    if map.contains_key("builtin") {
        reject_unknown(map, &["builtin", "n", "n_steps", "t_final"], pointer)?;
        let name = as_str(req(map, "builtin", pointer)?, &format!("{pointer}/builtin"))?;
        let n = match map.get("n") {
            Some(v) => as_usize(v, &format!("{pointer}/n"))?,
            None => builtins::DEFAULT_N,
        };
        let n_steps = match map.get("n_steps") {
            Some(v) => as_usize(v, &format!("{pointer}/n_steps"))?,
            None => builtins::DEFAULT_N_STEPS,
        };
        let t_final = match map.get("t_final") {
            Some(v) => as_f64(v, &format!("{pointer}/t_final"))?,
            None => match builtins::default_t_final(name) {
                Some(t) => t,
                None => {
                    violations.push(format!("{pointer}/builtin: unknown builtin '{name}'"));
                    return Ok(None);
                }
            },
        };
        return match builtins::builtin_with(name, n, n_steps, t_final) {
            Ok(problem) => Ok(Some((problem, name.to_string()))),
            Err(e) => {
                violations.push(format!("{pointer}: {e}"));
                Ok(None)
            }
        };
    }
    Ok(parse_inline_problem(map, pointer, violations)?.map(|p| (p, "inline".to_string())))
}

struct HamBlock {
    config: HamConfig,
    backend_declared: Option<&'static str>,
}

fn parse_ham_block(
    value: Option<&Value>,
    problem: Option<&EvolutionProblem>,
    violations: &mut Vec<String>,
) -> Result<Option<HamBlock>> {
    let pointer = "/ham";
    let empty = Map::new();
    let map = match value {
        Some(v) => as_object(v, pointer)?,
        None => &empty,
    };
    reject_unknown(
        map,
        &[
            "c0",
            "order",
            "iterations",
            "divergence_guard",
            "backend",
            "linear_op",
        ],
        pointer,
    )?;

    let c0 = match map.get("c0") {
        Some(v) => as_f64(v, "/ham/c0")?,
        None => -1.0,
    };
    if c0 == 0.0 || !c0.is_finite() {
        violations.push("/ham/c0: the convergence-control parameter must be a nonzero finite real".into());
    }
    let order = match map.get("order") {
        Some(v) => as_usize(v, "/ham/order")?,
        None => 10,
    };
    if order == 0 {
        violations.push("/ham/order: truncation order must be at least 1".into());
    }
    let iterations = match map.get("iterations") {
        Some(v) => as_usize(v, "/ham/iterations")?,
        None => 2,
    };
    let divergence_guard = match map.get("divergence_guard") {
        Some(v) => as_f64(v, "/ham/divergence_guard")?,
        None => 10.0,
    };
    if !(divergence_guard > 1.0) {
        violations.push("/ham/divergence_guard: must exceed 1".into());
    }

    let backend_declared = match map.get("backend") {
        Some(v) => match as_str(v, "/ham/backend")? {
            "classical" => Some("classical"),
            "schrodingerise" => Some("schrodingerise"),
            other => {
                return Err(parse_failure(
                    "/ham/backend",
                    format!("unknown backend '{other}'; expected 'classical' or 'schrodingerise'"),
                ))
            }
        },
        None => None,
    };

    let problem = match problem {
        Some(p) => p,
        // The problem failed to assemble; violations already recorded, and
        // no config can be built without a grid to validate against.
        None => return Ok(None),
    };

    let linear_op = match map.get("linear_op") {
        Some(v) => parse_terms(v, "/ham/linear_op", violations)?,
        None => problem.nonlinearity.linear_part(),
    };
    if linear_op.terms.is_empty() {
        violations.push(
            "/ham/linear_op: the nonlinearity has no linear part; specify the auxiliary \
             operator explicitly"
                .into(),
        );
    } else if !linear_op.is_linear() {
        violations.push("/ham/linear_op: the auxiliary operator must be linear".into());
    } else if let Err(e) = linear_op.validate(&problem.grid) {
        violations.push(format!("/ham/linear_op: {e}"));
    }

    Ok(Some(HamBlock {
        config: HamConfig {
            c0,
            order,
            iterations,
            linear_op,
            guess: GuessPolicy::ConstantInTimeFromInitial,
            backend: Backend::Classical,
            divergence_guard,
        },
        backend_declared,
    }))
}

fn parse_schrod_block(
    value: Option<&Value>,
    violations: &mut Vec<String>,
) -> Result<Option<SchrodOptions>> {
    let value = match value {
        Some(v) => v,
        None => return Ok(None),
    };
    let pointer = "/schrod";
    let map = as_object(value, pointer)?;
    reject_unknown(map, &["n_p", "l_p", "mu_margin"], pointer)?;
    let defaults = SchrodOptions::default();
    let n_p = match map.get("n_p") {
        Some(v) => as_usize(v, "/schrod/n_p")?,
        None => defaults.n_p,
    };
    if n_p < 4 || !n_p.is_power_of_two() {
        violations.push("/schrod/n_p: must be a power of two, at least 4".into());
    }
    let l_p = match map.get("l_p") {
        Some(v) => as_f64(v, "/schrod/l_p")?,
        None => defaults.l_p,
    };
    if !(l_p > 0.0) || !l_p.is_finite() {
        violations.push("/schrod/l_p: must be a positive finite real".into());
    }
    let mu_margin = match map.get("mu_margin") {
        Some(v) => as_f64(v, "/schrod/mu_margin")?,
        None => defaults.mu_margin,
    };
    if !(mu_margin >= 0.0) || !mu_margin.is_finite() {
        violations.push("/schrod/mu_margin: must be a non-negative finite real".into());
    }
    Ok(Some(SchrodOptions { n_p, l_p, mu_margin }))
}

fn parse_sweep_block(value: Option<&Value>, violations: &mut Vec<String>) -> Result<Vec<f64>> {
    let value = match value {
        Some(v) => v,
        None => return Ok(default_sweep_values()),
    };
    let pointer = "/sweep";
    let map = as_object(value, pointer)?;
    reject_unknown(map, &["values", "points", "min", "max"], pointer)?;
    let values = if let Some(v) = map.get("values") {
        if map.contains_key("points") || map.contains_key("min") || map.contains_key("max") {
            return Err(parse_failure(
                pointer,
                "give either explicit 'values' or a 'points'/'min'/'max' grid, not both",
            ));
        }
        as_f64_array(v, "/sweep/values")?
    } else {
        let points = as_usize(req(map, "points", pointer)?, "/sweep/points")?;
        let min = as_f64(req(map, "min", pointer)?, "/sweep/min")?;
        let max = as_f64(req(map, "max", pointer)?, "/sweep/max")?;
        if points < 2 {
            violations.push("/sweep/points: need at least 2 grid points".into());
            return Ok(default_sweep_values());
        }
        if !(min < max) || !min.is_finite() || !max.is_finite() {
            violations.push("/sweep: need finite min < max".into());
            return Ok(default_sweep_values());
        }
        linspace(min, max, points)
    };
    if values.is_empty() {
        violations.push("/sweep/values: the sweep grid is empty".into());
    }
    for (i, v) in values.iter().enumerate() {
        if *v == 0.0 || !v.is_finite() {
            violations.push(format!(
                "/sweep/values/{i}: sweep values must be nonzero finite reals"
            ));
        }
    }
    Ok(values)
}

/// Parses and validates a configuration document. Structural problems
/// (malformed JSON, unknown keys, wrong types) fail fast with a
/// JSON-pointer path; every semantic violation found is collected and
/// reported together.
pub fn parse_config(document: &str) -> Result<RunConfig> {
    parse_config_for_command(document, None)
}

/// Like [`parse_config`], but reconciles the document against a command
/// requested on the command line: the invocation wins when the document is
/// silent, and a contradiction is a validation failure.
pub fn parse_config_for_command(
    document: &str,
    cli_command: Option<Command>,
) -> Result<RunConfig> {
    let value: Value = serde_json::from_str(document)
        .map_err(|e| parse_failure("", format!("malformed JSON: {e}")))?;
    let root = as_object(&value, "")?;
    reject_unknown(
        root,
        &["command", "problem", "ham", "schrod", "sweep", "outputs"],
        "",
    )?;

    let mut violations: Vec<String> = Vec::new();

    let declared_command = match root.get("command") {
        Some(v) => {
            let name = as_str(v, "/command")?;
            Some(Command::parse(name).ok_or_else(|| {
                parse_failure(
                    "/command",
                    format!(
                        "unknown command '{name}'; expected run, sweep-c0, \
                         compare-backends, or schrodingerise"
                    ),
                )
            })?)
        }
        None => None,
    };
    let command = match (declared_command, cli_command) {
        (Some(declared), Some(cli)) if declared != cli => {
            violations.push(format!(
                "/command: the document declares '{}' but the invocation requested '{}'",
                declared.name(),
                cli.name()
            ));
            cli
        }
        (declared, cli) => cli.or(declared).unwrap_or(Command::Run),
    };

    let problem_entry = match root.get("problem") {
        Some(v) => parse_problem(v, "/problem", &mut violations)?,
        None => return Err(parse_failure("", "missing required key 'problem'")),
    };
    let problem_ref = problem_entry.as_ref().map(|(p, _)| p);

    let ham_block = parse_ham_block(root.get("ham"), problem_ref, &mut violations)?;
    let schrod_block = parse_schrod_block(root.get("schrod"), &mut violations)?;
    let sweep_values = parse_sweep_block(root.get("sweep"), &mut violations)?;

    let outputs = match root.get("outputs") {
        Some(v) => Some(PathBuf::from(as_str(v, "/outputs")?)),
        None => None,
    };

    // Backend resolution: the explicit field must be honored and is the one
    // place the schrod block becomes mandatory.
    let schrod = schrod_block.unwrap_or_default();
    if let Some(block) = &ham_block {
        match (block.backend_declared, command) {
            (Some("schrodingerise"), Command::CompareBackends) => {
                violations.push(
                    "/ham/backend: compare-backends drives both backends itself; \
                     leave the backend unset"
                        .into(),
                );
            }
            (Some("schrodingerise"), _) if root.get("schrod").is_none() => {
                violations.push(
                    "/ham/backend: the schrodingerise backend requires a schrod block".into(),
                );
            }
            (Some("classical"), Command::Schrodingerise) => {
                violations.push(
                    "/ham/backend: conflicts with the schrodingerise command".into(),
                );
            }
            _ => {}
        }
    }

    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }

    let (problem, problem_tag) = problem_entry.expect("present when no violations");
    let mut ham = ham_block.expect("present when no violations").config;
    let declared = match root.get("ham") {
        Some(v) => as_object(v, "/ham")?
            .get("backend")
            .and_then(|b| b.as_str())
            .map(|s| s.to_string()),
        None => None,
    };
    ham.backend = match command {
        Command::Schrodingerise => Backend::Schrodingerise(schrod),
        Command::CompareBackends => Backend::Classical,
        _ => match declared.as_deref() {
            Some("schrodingerise") => Backend::Schrodingerise(schrod),
            _ => Backend::Classical,
        },
    };

    Ok(RunConfig {
        command,
        problem,
        problem_tag,
        ham,
        schrod,
        sweep_values,
        outputs,
    })
}

// ---------------------------------------------------------------------------
// Artifact writers
// ---------------------------------------------------------------------------

/// Writes `t,x,value_re,value_im` rows, row-major by time then space, with
/// shortest round-trip decimal formatting.
pub fn write_solution_csv(path: &Path, series: &FieldSeries, grid: &SpatialGrid) -> Result<()> {
    let mut out = String::with_capacity(series.len() * grid.n * 24);
    out.push_str("t,x,value_re,value_im\n");
    let nodes = grid.nodes();
    for snapshot in &series.snapshots {
        for (i, &x) in nodes.iter().enumerate() {
            let v = snapshot.values[i];
            out.push_str(&format!("{},{},{},{}\n", snapshot.t, x, v.re, v.im));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes `c0,residual_norm` rows; diverged points print as `inf`.
pub fn write_curve_csv(path: &Path, curve: &C0Curve) -> Result<()> {
    let mut out = String::with_capacity(curve.samples.len() * 24);
    out.push_str("c0,residual_norm\n");
    for (c0, residual) in &curve.samples {
        out.push_str(&format!("{c0},{residual}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

#[derive(Serialize)]
struct HistoryRow {
    m: usize,
    residual_norm_after: f64,
    f_m_norm: f64,
}

fn write_history_json(
    path: &Path,
    history: &[DeformationSolveRecord],
    problem: &EvolutionProblem,
) -> Result<()> {
    let rows: Vec<HistoryRow> = history
        .iter()
        .map(|record| HistoryRow {
            m: record.m,
            residual_norm_after: record.residual_norm_after,
            f_m_norm: record.f_m.l2_norm(&problem.grid, &problem.time),
        })
        .collect();
    write_pretty_json(path, &rows)
}

fn write_pretty_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}

fn diagnostic(value: Value) {
    eprintln!("{value}");
}

/// Disagreement between two solves of the same problem.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BackendDiff {
    /// Largest pointwise magnitude of the difference.
    pub max_norm: f64,
    /// Space-time L2 norm of the difference.
    pub l2: f64,
}

/// Measures classical-vs-emulated disagreement on a shared problem.
pub fn backend_diff(
    a: &FieldSeries,
    b: &FieldSeries,
    problem: &EvolutionProblem,
) -> BackendDiff {
    let difference = a.axpy(Complex64::new(-1.0, 0.0), b);
    BackendDiff {
        max_norm: a.max_diff(b),
        l2: difference.l2_norm(&problem.grid, &problem.time),
    }
}

/// Runs the configured command, writing its artifacts into `out_dir`
/// (created if missing). Returns the paths written.
pub fn execute(config: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let problem = &config.problem;

    let write_solve_artifacts =
        |solution: &FieldSeries, history: &[DeformationSolveRecord]| -> Result<Vec<PathBuf>> {
            let solution_path = out_dir.join("solution.csv");
            write_solution_csv(&solution_path, solution, &problem.grid)?;
            let history_path = out_dir.join("history.json");
            write_history_json(&history_path, history, problem)?;
            let report_path = out_dir.join("report.json");
            write_pretty_json(&report_path, &convergence_report(history))?;
            Ok(vec![solution_path, history_path, report_path])
        };

    match config.command {
        Command::Run | Command::Schrodingerise => {
            let (solution, history) = ham_solve(problem, &config.ham)?;
            written.extend(write_solve_artifacts(&solution, &history)?);
            diagnostic(json!({
                "level": "info",
                "event": "solve_complete",
                "command": config.command.name(),
                "problem": config.problem_tag,
                "orders_solved": history.len(),
                "final_residual": history.last().map(|r| r.residual_norm_after),
            }));
        }
        Command::SweepC0 => {
            let mut curve = residual_curve(problem, &config.ham, &config.sweep_values)?;
            curve.problem_tag = config.problem_tag.clone();
            let curve_path = out_dir.join("curve.csv");
            write_curve_csv(&curve_path, &curve)?;
            written.push(curve_path);
            let best = select_c0(&curve)?;
            let best_config = HamConfig {
                c0: best,
                ..config.ham.clone()
            };
            let (solution, history) = ham_solve(problem, &best_config)?;
            written.extend(write_solve_artifacts(&solution, &history)?);
            diagnostic(json!({
                "level": "info",
                "event": "sweep_complete",
                "problem": config.problem_tag,
                "points": curve.samples.len(),
                "selected_c0": best,
            }));
        }
        Command::CompareBackends => {
            let classical_config = HamConfig {
                backend: Backend::Classical,
                ..config.ham.clone()
            };
            let emulated_config = HamConfig {
                backend: Backend::Schrodingerise(config.schrod),
                ..config.ham.clone()
            };
            let (classical, history) = ham_solve(problem, &classical_config)?;
            let (emulated, _) = ham_solve(problem, &emulated_config)?;
            written.extend(write_solve_artifacts(&classical, &history)?);
            let diff = backend_diff(&classical, &emulated, problem);
            let diff_path = out_dir.join("diff.json");
            write_pretty_json(&diff_path, &diff)?;
            written.push(diff_path);
            diagnostic(json!({
                "level": "info",
                "event": "compare_complete",
                "problem": config.problem_tag,
                "max_norm": diff.max_norm,
                "l2": diff.l2,
            }));
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn parse(doc: &str) -> Result<RunConfig> {
        parse_config(doc)
    }

    #[test]
    fn minimal_document_fills_defaults() {
        let config = parse(r#"{"problem": "burgers"}"#).unwrap();
        assert_eq!(config.command, Command::Run);
        assert_eq!(config.ham.c0, -1.0);
        assert_eq!(config.ham.order, 10);
        assert_eq!(config.ham.iterations, 2);
        assert_eq!(config.ham.divergence_guard, 10.0);
        assert!(matches!(config.ham.backend, Backend::Classical));
        assert_eq!(config.problem.grid.n, 128);
        assert_eq!(config.problem.time.n_steps, 1000);
        assert_eq!(config.sweep_values.len(), 40);
        assert_eq!(config.sweep_values[0], -2.0);
        // The default auxiliary operator is the nonlinearity's linear part.
        assert!(config.ham.linear_op.is_linear());
        assert_eq!(config.ham.linear_op.terms.len(), 1);
        assert_eq!(config.problem_tag, "burgers");
    }

    #[test]
    fn zero_control_parameter_is_reported_with_its_pointer() {
        let err = parse(r#"{"problem": "heat", "ham": {"c0": 0}}"#).unwrap_err();
        match err {
            Error::Validation(violations) => {
                assert!(violations.iter().any(|v| v.starts_with("/ham/c0")), "{violations:?}");
            }
            other => panic!("expected a validation error, got {other}"),
        }
    }

    #[test]
    fn unknown_keys_are_parse_errors_naming_the_key() {
        let err = parse(r#"{"problem": "heat", "ham": {"cO": -1.0}}"#).unwrap_err();
        match err {
            Error::Parse { pointer, message } => {
                assert_eq!(pointer, "/ham/cO");
                assert!(message.contains("cO"), "{message}");
            }
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(parse("{"), Err(Error::Parse { .. })));
    }

    #[test]
    fn missing_problem_is_a_parse_error() {
        assert!(matches!(parse("{}"), Err(Error::Parse { .. })));
    }

    #[test]
    fn builtin_resolution_overrides_apply() {
        let config = parse(
            r#"{"problem": {"builtin": "heat", "n": 32, "n_steps": 100, "t_final": 0.25}}"#,
        )
        .unwrap();
        assert_eq!(config.problem.grid.n, 32);
        assert_eq!(config.problem.time.n_steps, 100);
        assert_eq!(config.problem.time.t_final, 0.25);
        assert_eq!(config.problem_tag, "heat");
    }

    #[test]
    fn unknown_builtins_are_validation_failures() {
        let err = parse(r#"{"problem": "burgerz"}"#).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    fn inline_heat_doc() -> String {
        let n = 8;
        let initial: Vec<String> = (0..n)
            .map(|i| {
                let x = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                format!("{}", x.sin())
            })
            .collect();
        format!(
            r#"{{
              "problem": {{
                "x_min": 0.0, "x_max": 6.283185307179586, "n": {n},
                "periodic": true, "t_final": 0.1, "n_steps": 10,
                "initial_re": [{}],
                "nonlinearity": [{{"coefficient": 0.1, "factors": [{{"derivative": 2}}]}}]
              }},
              "ham": {{"order": 1, "iterations": 0}}
            }}"#,
            initial.join(", ")
        )
    }

    #[test]
    fn inline_problems_assemble() {
        let config = parse(&inline_heat_doc()).unwrap();
        assert_eq!(config.problem.grid.n, 8);
        assert_eq!(config.problem_tag, "inline");
        assert!(config.problem.grid.periodic);
        assert_eq!(config.ham.linear_op.terms.len(), 1);
    }

    #[test]
    fn inline_length_mismatches_are_validation_failures() {
        let doc = r#"{
          "problem": {
            "x_min": 0.0, "x_max": 1.0, "n": 8,
            "periodic": true, "t_final": 0.1, "n_steps": 10,
            "initial_re": [0.0, 1.0],
            "nonlinearity": [{"coefficient": 1.0, "factors": [{"derivative": 2}]}]
          }
        }"#;
        let err = parse(doc).unwrap_err();
        match err {
            Error::Validation(v) => {
                assert!(v.iter().any(|m| m.contains("initial_re")), "{v:?}")
            }
            other => panic!("expected validation, got {other}"),
        }
    }

    #[test]
    fn conflicting_command_declarations_are_rejected() {
        let doc = r#"{"command": "run", "problem": "heat"}"#;
        let err = parse_config_for_command(doc, Some(Command::SweepC0)).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        // Silent documents take the invocation's command.
        let config =
            parse_config_for_command(r#"{"problem": "heat"}"#, Some(Command::SweepC0)).unwrap();
        assert_eq!(config.command, Command::SweepC0);
    }

    #[test]
    fn explicit_emulation_backend_requires_the_schrod_block() {
        let err =
            parse(r#"{"problem": "heat", "ham": {"backend": "schrodingerise"}}"#).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
        let ok = parse(
            r#"{"problem": "heat",
                "ham": {"backend": "schrodingerise"},
                "schrod": {"n_p": 256}}"#,
        )
        .unwrap();
        assert!(matches!(ok.ham.backend, Backend::Schrodingerise(_)));
        assert_eq!(ok.schrod.n_p, 256);
    }

    #[test]
    fn every_violation_is_listed_together() {
        let err = parse(r#"{"problem": "heat", "ham": {"c0": 0, "order": 0}}"#).unwrap_err();
        match err {
            Error::Validation(v) => assert_eq!(v.len(), 2, "{v:?}"),
            other => panic!("expected validation, got {other}"),
        }
    }

    #[test]
    fn sweep_blocks_validate_and_expand() {
        let err = parse(r#"{"problem": "heat", "sweep": {"values": [0.0]}}"#).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        let config = parse(
            r#"{"problem": "heat", "sweep": {"points": 3, "min": -1.0, "max": -0.5}}"#,
        )
        .unwrap();
        assert_eq!(config.sweep_values, vec![-1.0, -0.75, -0.5]);
        let both = parse(
            r#"{"problem": "heat", "sweep": {"values": [-1.0], "points": 3}}"#,
        );
        assert!(matches!(both, Err(Error::Parse { .. })));
    }

    #[test]
    fn schrod_block_values_are_checked() {
        let err = parse(r#"{"problem": "heat", "schrod": {"n_p": 100}}"#).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    fn small_run_doc(command: &str) -> String {
        format!(
            r#"{{
              "command": "{command}",
              "problem": {{"builtin": "heat", "n": 16, "n_steps": 20, "t_final": 0.2}},
              "ham": {{"order": 1, "iterations": 0}},
              "schrod": {{"n_p": 256}},
              "sweep": {{"values": [-1.2, -1.0]}}
            }}"#
        )
    }

    #[test]
    fn run_command_writes_the_contracted_files() {
        let dir = tempdir().unwrap();
        let config = parse(&small_run_doc("run")).unwrap();
        let written = execute(&config, dir.path()).unwrap();
        assert_eq!(written.len(), 3);
        let csv = fs::read_to_string(dir.path().join("solution.csv")).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,x,value_re,value_im");
        assert_eq!(lines.len(), 1 + 21 * 16);
        let history: Vec<serde_json::Value> =
            serde_json::from_str(&fs::read_to_string(dir.path().join("history.json")).unwrap())
                .unwrap();
        assert_eq!(history.len(), 1);
        assert_eq!(history[0]["m"], 1);
        assert!(history[0]["residual_norm_after"].as_f64().unwrap().is_finite());
        assert!(history[0]["f_m_norm"].as_f64().unwrap() > 0.0);
        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap())
                .unwrap();
        assert!(report["verdict"].is_string());
    }

    #[test]
    fn sweep_command_writes_curve_and_best_solution() {
        let dir = tempdir().unwrap();
        let config = parse(&small_run_doc("sweep-c0")).unwrap();
        execute(&config, dir.path()).unwrap();
        let curve = fs::read_to_string(dir.path().join("curve.csv")).unwrap();
        let lines: Vec<&str> = curve.lines().collect();
        assert_eq!(lines[0], "c0,residual_norm");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("-1.2,") || lines[1].starts_with("-1.2000"));
        assert!(dir.path().join("solution.csv").exists());
        assert!(dir.path().join("history.json").exists());
    }

    #[test]
    fn compare_command_reports_a_small_backend_gap() {
        let dir = tempdir().unwrap();
        let config = parse(&small_run_doc("compare-backends")).unwrap();
        execute(&config, dir.path()).unwrap();
        let diff: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("diff.json")).unwrap())
                .unwrap();
        let max_norm = diff["max_norm"].as_f64().unwrap();
        let l2 = diff["l2"].as_f64().unwrap();
        assert!(max_norm > 0.0 && max_norm < 5e-2, "{max_norm}");
        assert!(l2.is_finite() && l2 < 5e-2, "{l2}");
    }

    #[test]
    fn identical_configs_produce_byte_identical_artifacts() {
        let dir_a = tempdir().unwrap();
        let dir_b = tempdir().unwrap();
        let config = parse(&small_run_doc("run")).unwrap();
        execute(&config, dir_a.path()).unwrap();
        execute(&config, dir_b.path()).unwrap();
        for name in ["solution.csv", "history.json", "report.json"] {
            let a = fs::read(dir_a.path().join(name)).unwrap();
            let b = fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }

    #[test]
    fn outputs_field_is_surfaced() {
        let config =
            parse(r#"{"problem": "heat", "outputs": "artifacts/heat"}"#).unwrap();
        assert_eq!(config.outputs, Some(PathBuf::from("artifacts/heat")));
    }
}
