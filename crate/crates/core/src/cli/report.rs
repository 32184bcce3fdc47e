use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use super::RunTolerances;
use crate::classify::Budget;

pub const SCHEMA: &str = "symlab-report";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Envelope<'a> {
    pub schema: &'static str,
    pub schema_version: u32,
    pub command: &'static str,
    pub seed: u64,
    pub budget: &'a Budget,
    pub tolerances: &'a RunTolerances,
    pub ok: bool,
    pub failures: Vec<String>,
    pub input: Value,
    pub result: Value,
}

impl Envelope<'_> {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("envelope serializes");
        s.push('\n');
        s
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Six significant digits, trailing zeros dropped.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let e = x.abs().log10().floor() as i32;
    if (-4..6).contains(&e) {
        let dec = (5 - e).max(0) as usize;
        trim(format!("{x:.dec$}"))
    } else {
        let s = format!("{x:.5e}");
        let (m, exp) = s.split_once('e').expect("exponent");
        format!("{}e{exp}", trim(m.to_string()))
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(match n.as_f64() {
            Some(x) if n.is_f64() => sig6(x),
            _ => n.to_string(),
        }),
        Value::String(s) => Some(s.clone()),
        Value::Array(a) if a.iter().all(|x| !x.is_array() && !x.is_object()) => Some(format!(
            "[{}]",
            a.iter().map(|x| scalar(x).unwrap_or_default()).collect::<Vec<_>>().join(", ")
        )),
        _ => None,
    }
}

fn render(out: &mut String, key: &str, v: &Value, depth: usize) {
    let pad = "  ".repeat(depth);
    if let Some(s) = scalar(v) {
        out.push_str(&format!("{pad}{key}: {s}\n"));
        return;
    }
    out.push_str(&format!("{pad}{key}:\n"));
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                render(out, k, x, depth + 1);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                render(out, &format!("[{i}]"), x, depth + 1);
            }
        }
        _ => unreachable!(),
    }
}

fn table_text(out: &mut String, result: &Value) {
    let cols = ["operator", "order", "elliptic", "complex_elliptic", "canceling", "mixing", "match"];
    let rows = result["rows"].as_array().cloned().unwrap_or_default();
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r["label"].as_str().unwrap_or("").to_string(),
                r["order"].to_string(),
                scalar(&r["elliptic"]).unwrap_or_default(),
                scalar(&r["complex_elliptic"]).unwrap_or_default(),
                scalar(&r["canceling"]).unwrap_or_default(),
                scalar(&r["mixing"]).unwrap_or_default(),
                if r["matches"].as_bool() == Some(true) { "ok" } else { "MISMATCH" }.into(),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..cols.len())
        .map(|i| cells.iter().map(|c| c[i].chars().count()).chain([cols[i].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: Vec<String>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}", w = *w))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
            + "\n"
    };
    out.push_str(&line(cols.iter().map(|c| c.to_string()).collect()));
    for c in cells {
        out.push_str(&line(c));
    }
}

/// Human-readable report: the reproducibility header, then the result tree
/// (or the table for catalog-table), numbers to 6 significant digits.
pub fn render_text(env: &Envelope) -> String {
    let mut out = String::new();
    out.push_str(&format!("{} v{}: {}\n", env.schema, env.schema_version, env.command));
    out.push_str(&format!("seed: {}\n", env.seed));
    let head = serde_json::to_value(env).expect("envelope serializes");
    render(&mut out, "budget", &head["budget"], 0);
    render(&mut out, "tolerances", &head["tolerances"], 0);
    out.push_str(&format!("status: {}\n", if env.ok { "ok" } else { "FAILED" }));
    for f in &env.failures {
        out.push_str(&format!("  failure: {f}\n"));
    }
    if env.command == "catalog-table" {
        table_text(&mut out, &env.result);
    } else {
        render(&mut out, "input", &env.input, 0);
        render(&mut out, "result", &env.result, 0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(std::f64::consts::PI), "3.14159");
        assert_eq!(sig6(-123456.7), "-123457");
        assert_eq!(sig6(1.5e-12), "1.5e-12");
        assert_eq!(sig6(0.000123456789), "0.000123457");
        assert_eq!(sig6(2.0e9), "2e9");
        assert_eq!(sig6(0.0), "0");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
