//! Command-line front end. Every report is a versioned JSON envelope echoing
//! the seed, budget and tolerances; the process exit code is 0 on success,
//! 1 on input errors and 2 when a verification fails.

mod input;
mod report;
mod table;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bv::{verify_hyperplane_slicing, verify_jump_density, verify_line_slicing, Part};
use crate::classify::{
    classify, extract_spectral_pair, hyperplane_nullspace, rank_one_cone_search,
    rank_zero_covectors, Budget, Tolerances,
};
use crate::linearize::{check_linearization_properties, linearize};
use crate::operator::Operator;
use crate::slicing::{build_slice, check_slice_properties, polarize};

pub use input::{load_field, load_operator, parse_json, spectral_pair_for, CliError};
pub use report::{render_text, sig6, write_atomic, Envelope, SCHEMA, SCHEMA_VERSION};
pub use table::{catalog_table, expected_table, ExpectedRow, Mismatch, TableReport, TableRow};

pub const SEED_ENV: &str = "SYMLAB_SEED";

#[derive(Debug, Parser)]
#[command(name = "symlab", version, about = "Classify constant-coefficient operators and verify slicing identities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Seed for all randomized searches (default: $SYMLAB_SEED, else 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the report here (atomically) instead of stdout.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json", global = true)]
    pub format: Format,
    #[arg(long, global = true)]
    pub sphere_samples: Option<usize>,
    #[arg(long, global = true)]
    pub random_directions: Option<usize>,
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    #[arg(long, global = true)]
    pub canceling_samples: Option<usize>,
    #[arg(long, global = true)]
    pub tol_rank: Option<f64>,
    #[arg(long, global = true)]
    pub tol_ellipticity: Option<f64>,
    #[arg(long, global = true)]
    pub tol_pair: Option<f64>,
    /// Absolute tolerance for slicing identities.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol_identity: f64,
    /// Relative tolerance for the jump-density formula.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol_jump: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OpArgs {
    /// Catalog operator name.
    #[arg(long, conflicts_with = "operator")]
    pub catalog: Option<String>,
    /// Operator spec JSON file.
    #[arg(long)]
    pub operator: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long = "dimv")]
    pub dim_v: Option<usize>,
    /// Matrix R for div_form as a JSON array of rows.
    #[arg(long)]
    pub r: Option<String>,
}

#[derive(Debug, Clone, Subcommand)]
#[command(rename_all = "kebab-case")]
pub enum Command {
    /// Ellipticity, complex ellipticity, cancellation and mixing.
    Classify {
        #[command(flatten)]
        op: OpArgs,
    },
    /// Rank-one spectrum: cone search, or the hyperplane nullspace at --xi.
    #[command(allow_negative_numbers = true)]
    Spectrum {
        #[command(flatten)]
        op: OpArgs,
        #[arg(long, num_args = 1..)]
        xi: Option<Vec<f64>>,
    },
    /// Slice operator at a spectral pair, optionally polarized with (η, f).
    #[command(allow_negative_numbers = true)]
    Slice {
        #[command(flatten)]
        op: OpArgs,
        #[arg(long, num_args = 1.., required = true)]
        xi: Vec<f64>,
        #[arg(long, num_args = 1.., required = true)]
        e: Vec<f64>,
        #[arg(long, num_args = 1.., requires = "f")]
        eta: Option<Vec<f64>>,
        #[arg(long, num_args = 1.., requires = "eta")]
        f: Option<Vec<f64>>,
    },
    /// First-order linearization of a higher-order operator.
    #[command(allow_negative_numbers = true)]
    Linearize {
        #[command(flatten)]
        op: OpArgs,
        #[arg(long, num_args = 1..)]
        xi: Option<Vec<f64>>,
    },
    /// Line slicing identities (and the jump density for single-step fields).
    #[command(allow_negative_numbers = true)]
    VerifySlicing {
        #[command(flatten)]
        op: OpArgs,
        #[arg(long)]
        field: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        xi: Vec<f64>,
        #[arg(long, num_args = 1.., required = true)]
        e: Vec<f64>,
        #[arg(long, default_value_t = 256)]
        lines: usize,
    },
    /// Hyperplane slicing through the slice operator (n = 2, first order).
    #[command(allow_negative_numbers = true)]
    VerifyHyperplane {
        #[command(flatten)]
        op: OpArgs,
        #[arg(long)]
        field: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        xi: Vec<f64>,
        #[arg(long, num_args = 1.., required = true)]
        e: Vec<f64>,
        #[arg(long, default_value_t = 256)]
        stations: usize,
    },
    /// Classify the whole catalog and compare with the built-in expected table.
    CatalogTable,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Classify { .. } => "classify",
            Command::Spectrum { .. } => "spectrum",
            Command::Slice { .. } => "slice",
            Command::Linearize { .. } => "linearize",
            Command::VerifySlicing { .. } => "verify-slicing",
            Command::VerifyHyperplane { .. } => "verify-hyperplane",
            Command::CatalogTable => "catalog-table",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunTolerances {
    #[serde(flatten)]
    pub classify: Tolerances,
    pub identity: f64,
    pub jump_density: f64,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub budget: Budget,
    pub tolerances: RunTolerances,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let c = cli.common;
        let seed = match c.seed {
            Some(s) => s,
            None => match std::env::var(SEED_ENV) {
                Ok(v) => v.trim().parse().map_err(|_| {
                    CliError::input(format!("{SEED_ENV}={v:?} is not an unsigned integer"))
                })?,
                Err(_) => 0,
            },
        };
        let mut budget = Budget::default();
        budget.sphere_samples = c.sphere_samples.or(budget.sphere_samples);
        budget.random_directions = c.random_directions.unwrap_or(budget.random_directions);
        budget.restarts = c.restarts.unwrap_or(budget.restarts);
        budget.canceling_samples = c.canceling_samples.unwrap_or(budget.canceling_samples);
        let d = Tolerances::default();
        let tolerances = RunTolerances {
            classify: Tolerances {
                rank: c.tol_rank.unwrap_or(d.rank),
                ellipticity: c.tol_ellipticity.unwrap_or(d.ellipticity),
                pair: c.tol_pair.unwrap_or(d.pair),
            },
            identity: c.tol_identity,
            jump_density: c.tol_jump,
        };
        let all = [
            tolerances.classify.rank,
            tolerances.classify.ellipticity,
            tolerances.classify.pair,
            tolerances.identity,
            tolerances.jump_density,
        ];
        if all.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(CliError::input("tolerances must be positive and finite"));
        }
        Ok(RunConfig {
            command: cli.command,
            seed,
            budget,
            tolerances,
            output: c.output,
            format: c.format,
        })
    }
}

/// Output of one command before it is wrapped in the envelope.
pub struct Outcome {
    pub input: Value,
    pub result: Value,
    pub failures: Vec<String>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn check_abs(failures: &mut Vec<String>, what: &str, err: f64, tol: f64) {
    if !(err <= tol) {
        failures.push(format!("{what}: error {err:e} exceeds {tol:e}"));
    }
}

fn op_input(op: &Operator, source: Value) -> Value {
    json!({ "operator": source, "spec": to_value(&op.to_spec()) })
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let tol = &cfg.tolerances.classify;
    let seed = cfg.seed;
    let budget = &cfg.budget;
    let mut failures = Vec::new();
    let (input, result) = match &cfg.command {
        Command::Classify { op } => {
            let (op, src) = load_operator(op)?;
            let report = classify(&op, budget, tol, seed)?;
            for c in &report.consistency {
                if c.applicable && !c.ok {
                    failures.push(format!("consistency check failed: {}", c.name));
                }
            }
            (op_input(&op, src), to_value(&report))
        }
        Command::Spectrum { op, xi } => {
            let (op, src) = load_operator(op)?;
            let result = match xi {
                Some(xi) => {
                    input::check_len("xi", xi, op.n())?;
                    let nsp = hyperplane_nullspace(&op, xi, seed, tol.rank)?;
                    let basis: Vec<Vec<f64>> =
                        nsp.basis().column_iter().map(|c| c.iter().copied().collect()).collect();
                    let pairs: Vec<Value> = basis
                        .iter()
                        .map(|w| to_value(&extract_spectral_pair(&op, w, xi, tol.pair)))
                        .collect();
                    json!({
                        "xi": xi,
                        "nullspace_dim": nsp.dim(),
                        "nullspace_basis": basis,
                        "pairs": pairs,
                        "rank_zero_dim": rank_zero_covectors(&op, tol.rank).dim(),
                    })
                }
                None => to_value(&rank_one_cone_search(&op, budget, tol, seed)?),
            };
            (op_input(&op, src), result)
        }
        Command::Slice { op, xi, e, eta, f } => {
            let (op, src) = load_operator(op)?;
            let pair = spectral_pair_for(&op, xi, e, tol.pair)?;
            let slice = build_slice(&op, &pair)?;
            let report = check_slice_properties(&op, &pair, budget, tol, seed)?;
            if !report.ok {
                failures.push("slice properties do not hold".into());
            }
            let polar = match (eta, f) {
                (Some(eta), Some(f)) => {
                    let pair2 = spectral_pair_for(&op, eta, f, tol.pair)?;
                    match polarize(&op, &pair, &pair2, tol) {
                        Ok(p) => {
                            check_abs(&mut failures, "polarized pair (+)", p.plus.residual, tol.pair);
                            check_abs(&mut failures, "polarized pair (−)", p.minus.residual, tol.pair);
                            to_value(&p)
                        }
                        Err(err) => {
                            failures.push(format!("polarization: {err}"));
                            Value::Null
                        }
                    }
                }
                _ => Value::Null,
            };
            let result = json!({
                "pair": to_value(&pair),
                "restricted": to_value(&slice.restricted.to_spec()),
                "properties": to_value(&report),
                "polarization": polar,
            });
            (op_input(&op, src), result)
        }
        Command::Linearize { op, xi } => {
            let (op, src) = load_operator(op)?;
            let lin = linearize(&op)?;
            let report = check_linearization_properties(&op, budget, tol, seed)?;
            if !report.ok {
                failures.push("linearization properties do not hold".into());
            }
            let at_xi = match xi {
                Some(xi) => {
                    input::check_len("xi", xi, op.n())?;
                    let a = hyperplane_nullspace(&op, xi, seed, tol.rank)?;
                    let d = hyperplane_nullspace(&lin.d_op, xi, seed, tol.rank)?;
                    json!({
                        "xi": xi,
                        "nullspace_dim": a.dim(),
                        "linearized_nullspace_dim": d.dim(),
                        "linearized_rank_zero_dim": rank_zero_covectors(&lin.d_op, tol.rank).dim(),
                    })
                }
                None => Value::Null,
            };
            let result = json!({
                "linearized": to_value(&lin.d_op.to_spec()),
                "w_block": [lin.w_block.start, lin.w_block.end],
                "curl_block": [lin.curl_block.start, lin.curl_block.end],
                "properties": to_value(&report),
                "at_xi": at_xi,
            });
            (op_input(&op, src), result)
        }
        Command::VerifySlicing { op, field, xi, e, lines } => {
            let (op, src) = load_operator(op)?;
            let (fld, fsrc) = load_field(field)?;
            let pair = spectral_pair_for(&op, xi, e, tol.pair)?;
            let report = verify_line_slicing(&op, &fld, &pair, &fld.domain, *lines)?;
            let id = cfg.tolerances.identity;
            for (name, err) in [
                ("a", report.abs_err.a),
                ("c", report.abs_err.c),
                ("j", report.abs_err.j),
                ("total", report.abs_err.total),
            ] {
                check_abs(&mut failures, &format!("line slicing, part {name}"), err, id);
            }
            if let Some(tv) = &report.tv_abs_err {
                check_abs(&mut failures, "total variation", tv.max(), id);
            }
            let jump = match verify_jump_density(&op, &fld, &fld.domain) {
                Ok(j) => {
                    if !(j.rel_err <= cfg.tolerances.jump_density) {
                        failures.push(format!(
                            "jump density: relative error {:e} exceeds {:e}",
                            j.rel_err, cfg.tolerances.jump_density
                        ));
                    }
                    to_value(&j)
                }
                Err(_) => Value::Null,
            };
            let masses = json!({
                "a": fld_mass(&op, &fld, Part::A)?,
                "c": fld_mass(&op, &fld, Part::C)?,
                "j": fld_mass(&op, &fld, Part::J)?,
            });
            let input = json!({
                "operator": src,
                "spec": to_value(&op.to_spec()),
                "field": fsrc,
                "pair": to_value(&pair),
            });
            let result = json!({
                "line_slicing": to_value(&report),
                "jump_density": jump,
                "measure_of_box": masses,
            });
            (input, result)
        }
        Command::VerifyHyperplane { op, field, xi, e, stations } => {
            let (op, src) = load_operator(op)?;
            let (fld, fsrc) = load_field(field)?;
            let pair = spectral_pair_for(&op, xi, e, tol.pair)?;
            let report = verify_hyperplane_slicing(&op, &fld, &pair, &fld.domain, *stations)?;
            let id = cfg.tolerances.identity;
            for (name, err) in ["a", "c", "j", "total"].iter().zip(report.abs_err) {
                check_abs(&mut failures, &format!("hyperplane slicing, part {name}"), err, id);
            }
            let input = json!({
                "operator": src,
                "spec": to_value(&op.to_spec()),
                "field": fsrc,
                "pair": to_value(&pair),
            });
            (input, to_value(&report))
        }
        Command::CatalogTable => {
            let report = catalog_table(budget, tol, seed)?;
            for m in &report.mismatches {
                failures.push(m.to_string());
            }
            (json!({ "expected_rows": report.rows.len() }), to_value(&report))
        }
    };
    Ok(Outcome {
        input,
        result,
        failures,
    })
}

fn fld_mass(op: &Operator, fld: &crate::bv::SyntheticField, part: Part) -> Result<Vec<f64>, CliError> {
    let rep = crate::bv::apply_operator_analytic(op, fld)?;
    Ok(rep.evaluate(&fld.domain, part).iter().copied().collect())
}

/// Runs one command and writes its report; returns the process exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    let outcome = match execute(cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return e.code;
        }
    };
    let env = Envelope {
        schema: SCHEMA,
        schema_version: SCHEMA_VERSION,
        command: cfg.command.name(),
        seed: cfg.seed,
        budget: &cfg.budget,
        tolerances: &cfg.tolerances,
        ok: outcome.failures.is_empty(),
        failures: outcome.failures,
        input: outcome.input,
        result: outcome.result,
    };
    let body = match cfg.format {
        Format::Json => env.to_json(),
        Format::Text => render_text(&env),
    };
    let written = match &cfg.output {
        Some(path) => write_atomic(path, body.as_bytes())
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return e.code;
    }
    if env.ok {
        0
    } else {
        for f in &env.failures {
            eprintln!("verification failed: {f}");
        }
        2
    }
}

/// Parses `args` (including the program name) and runs; clap usage errors
/// exit with code 1, help and version with 0.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match RunConfig::from_cli(cli) {
        Ok(cfg) => run(&cfg),
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
