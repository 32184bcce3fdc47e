use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use super::OpArgs;
use crate::bv::{FieldSpec, SyntheticField};
use crate::catalog::{catalog, CatalogParams};
use crate::classify::{best_witness, SpectralPair};
use crate::operator::{Operator, OperatorSpec};

#[derive(Debug, Clone)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: msg.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::input(e.to_string())
    }
}

/// Deserializes `text`, reporting line and column on failure.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| {
        CliError::input(format!(
            "{origin}: malformed JSON at line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

pub(super) fn check_len(what: &str, v: &[f64], n: usize) -> Result<(), CliError> {
    if v.len() != n {
        return Err(CliError::input(format!("--{what} needs {n} components, got {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::input(format!("--{what} has non-finite components")));
    }
    Ok(())
}

/// The operator from `--catalog` (with parameters) or `--operator FILE`,
/// plus a JSON description of where it came from.
pub fn load_operator(args: &OpArgs) -> Result<(Operator, Value), CliError> {
    match (&args.catalog, &args.operator) {
        (Some(name), None) => {
            let r = match &args.r {
                Some(text) => {
                    let rows: Vec<Vec<f64>> = parse_json(text, "--r")?;
                    let m = rows.len();
                    let n = rows.first().map_or(0, Vec::len);
                    if m == 0 || n == 0 || rows.iter().any(|r| r.len() != n) {
                        return Err(CliError::input("--r must be a non-empty rectangular matrix"));
                    }
                    Some(DMatrix::from_row_iterator(m, n, rows.into_iter().flatten()))
                }
                None => None,
            };
            let params = CatalogParams {
                n: args.n.or(r.as_ref().map(|r| r.ncols())),
                dim_v: args.dim_v,
                k: args.k,
                r,
            };
            let op = catalog(name, &params)?;
            let src = json!({
                "catalog": name,
                "n": params.n,
                "k": args.k,
                "dimV": args.dim_v,
                "R": args.r.as_ref().map(|_| params.r.as_ref().map(|r| {
                    r.row_iter().map(|row| row.iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>()
                })),
            });
            Ok((op, src))
        }
        (None, Some(path)) => {
            let spec: OperatorSpec = parse_json(&read(path)?, &path.display().to_string())?;
            let op = Operator::from_spec(&spec)?;
            Ok((op, json!({ "file": path.display().to_string() })))
        }
        (None, None) => Err(CliError::input("give an operator with --catalog NAME or --operator FILE")),
        (Some(_), Some(_)) => Err(CliError::input("--catalog and --operator are exclusive")),
    }
}

pub fn load_field(path: &Path) -> Result<(SyntheticField, Value), CliError> {
    let origin = path.display().to_string();
    let spec: FieldSpec = parse_json(&read(path)?, &origin)?;
    let field = SyntheticField::from_spec(&spec)?;
    let src = serde_json::to_value(&spec).expect("field spec serializes");
    Ok((field, json!({ "file": origin, "spec": src })))
}

/// (ξ, e) with its least-squares witness; rejects pairs outside the spectrum.
pub fn spectral_pair_for(op: &Operator, xi: &[f64], e: &[f64], tol: f64) -> Result<SpectralPair, CliError> {
    check_len("xi", xi, op.n())?;
    let (w, residual) = best_witness(op, xi, e)?;
    if !(residual <= tol) {
        return Err(CliError::input(format!(
            "(ξ, e) = ({xi:?}, {e:?}) is not a spectral pair: residual {residual:e} > {tol:e}"
        )));
    }
    Ok(SpectralPair {
        xi: xi.to_vec(),
        coordinate: e.to_vec(),
        witness: w.iter().copied().collect(),
        residual,
    })
}
