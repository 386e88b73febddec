//! JSON problem files.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use starlanczos::star_lanczos::BetaMode;
use starlanczos::{parse, Grid, TimeExpr};

use crate::CliError;

/// Reports a problem file may request.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Output {
    /// Inverse as a JSON envelope.
    Envelope,
    /// Kernel samples of the inverse as a triangular CSV.
    Kernel,
    Tridiagonal,
    Moments,
    Evolution,
    Green,
}

/// How `invert` builds the inverse.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Auto,
    Left,
    Right,
    Polynomial,
    Separable,
    Numeric,
    Resolvent,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    interval: (f64, f64),
    n_points: usize,
    matrix: Vec<Vec<String>>,
    #[serde(default)]
    w: Option<Vec<f64>>,
    #[serde(default)]
    v: Option<Vec<f64>>,
    #[serde(default)]
    lanczos_n: Option<usize>,
    #[serde(default)]
    beta_mode: Option<BetaMode>,
    #[serde(default)]
    outputs: Vec<Output>,
    #[serde(default)]
    basis: Vec<String>,
    #[serde(default)]
    method: Method,
    #[serde(default)]
    eval_at: Option<(f64, f64)>,
}

/// A validated problem.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub interval: (f64, f64),
    pub n_points: usize,
    pub matrix: Vec<Vec<TimeExpr>>,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    pub lanczos_n: Option<usize>,
    pub beta_mode: BetaMode,
    pub outputs: Vec<Output>,
    /// Functions of `tp` spanning the left factors of a separable kernel.
    pub basis: Vec<TimeExpr>,
    pub method: Method,
    pub eval_at: Option<(f64, f64)>,
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn grid(&self, n_points: Option<usize>) -> Result<Grid, CliError> {
        let n = n_points.unwrap_or(self.n_points);
        Grid::new(self.interval.0, self.interval.1, n).map_err(|e| CliError::Validation(e.to_string()))
    }

    /// The single kernel of a 1×1 problem.
    pub fn kernel(&self) -> Result<&TimeExpr, CliError> {
        match self.matrix.as_slice() {
            [row] if row.len() == 1 => Ok(&row[0]),
            _ => Err(field("matrix", "expected a 1×1 matrix holding one kernel")),
        }
    }

    /// Requested reports, or `default` when the file names none.
    pub fn wants(&self, o: Output, default: &[Output]) -> bool {
        if self.outputs.is_empty() {
            default.contains(&o)
        } else {
            self.outputs.contains(&o)
        }
    }
}

fn field(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{path}: {msg}"))
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<ProblemSpec, CliError> {
    let path = path.as_ref();
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    parse_problem(&text, 1e-12)
}

/// Parses and validates problem text; `bilinear_tol` bounds `|wᴴv − 1|`.
pub fn parse_problem(text: &str, bilinear_tol: f64) -> Result<ProblemSpec, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawProblem = serde_path_to_error::deserialize(de).map_err(|e| {
        let p = e.path().to_string();
        let p = if p == "." { "problem".to_string() } else { p };
        field(&p, e.inner())
    })?;

    let (a, b) = raw.interval;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(field("interval", format!("need finite a < b, got ({a}, {b})")));
    }
    if raw.n_points < 2 {
        return Err(field("n_points", "need at least 2 points"));
    }

    let d = raw.matrix.len();
    if d == 0 {
        return Err(field("matrix", "empty"));
    }
    let mut matrix = Vec::with_capacity(d);
    for (i, row) in raw.matrix.iter().enumerate() {
        if row.len() != d {
            return Err(field(&format!("matrix[{i}]"), format!("row has {} entries, expected {d}", row.len())));
        }
        let mut out = Vec::with_capacity(d);
        for (j, s) in row.iter().enumerate() {
            out.push(parse(s).map_err(|e| field(&format!("matrix[{i}][{j}]"), e))?);
        }
        matrix.push(out);
    }
    let basis = raw
        .basis
        .iter()
        .enumerate()
        .map(|(i, s)| parse(s).map_err(|e| field(&format!("basis[{i}]"), e)))
        .collect::<Result<Vec<_>, _>>()?;

    let e1 = {
        let mut e = vec![0.0; d];
        e[0] = 1.0;
        e
    };
    let w = raw.w.unwrap_or_else(|| e1.clone());
    let v = raw.v.unwrap_or(e1);
    for (name, x) in [("w", &w), ("v", &v)] {
        if x.len() != d {
            return Err(field(name, format!("length {} does not match the matrix dimension {d}", x.len())));
        }
        if let Some(k) = x.iter().position(|c| !c.is_finite()) {
            return Err(field(&format!("{name}[{k}]"), "not finite"));
        }
    }
    let wv: f64 = w.iter().zip(&v).map(|(x, y)| x * y).sum();
    if (wv - 1.0).abs() > bilinear_tol {
        return Err(field("w", format!("wᴴv = {wv} but must equal 1")));
    }
    if let Some(n) = raw.lanczos_n {
        if n == 0 || n > d {
            return Err(field("lanczos_n", format!("must lie in 1..={d}, got {n}")));
        }
    }
    if let Some((tp, t)) = raw.eval_at {
        if !(a..=b).contains(&tp) || !(a..=b).contains(&t) || tp < t {
            return Err(field("eval_at", "need a ≤ t ≤ tp ≤ b"));
        }
    }
    let mut outputs = raw.outputs;
    outputs.sort();
    outputs.dedup();

    Ok(ProblemSpec {
        interval: (a, b),
        n_points: raw.n_points,
        matrix,
        w,
        v,
        lanczos_n: raw.lanczos_n,
        beta_mode: raw.beta_mode.unwrap_or(BetaMode::Resolvent),
        outputs,
        basis,
        method: raw.method,
        eval_at: raw.eval_at,
    })
}
