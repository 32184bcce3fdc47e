use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::input::{parse_json, CliError};
use crate::catalog::{catalog, CatalogParams};
use crate::classify::{classify, Budget, Tolerances, Tri};
use crate::subspace::numeric_rank;

const EXPECTED: &str = include_str!("expected_table.json");

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedRow {
    pub name: String,
    pub n: usize,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default, rename = "dimV")]
    pub dim_v: Option<usize>,
    #[serde(default, rename = "R")]
    pub r: Option<Vec<Vec<f64>>>,
    pub elliptic: Option<Tri>,
    pub complex_elliptic: Option<Tri>,
    pub canceling: Option<Tri>,
    pub mixing: Option<MixingCell>,
    pub source: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MixingCell {
    Verified,
    NotFound,
}

#[derive(Deserialize)]
struct ExpectedTable {
    #[allow(dead_code)]
    columns: Vec<String>,
    rows: Vec<ExpectedRow>,
}

pub fn expected_table() -> Vec<ExpectedRow> {
    let t: ExpectedTable = parse_json(EXPECTED, "embedded expected table").expect("embedded table parses");
    t.rows
}

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub label: String,
    pub name: String,
    pub n: usize,
    pub order: usize,
    #[serde(rename = "dimV")]
    pub dim_v: usize,
    #[serde(rename = "dimW")]
    pub dim_w: usize,
    #[serde(rename = "R_rank", skip_serializing_if = "Option::is_none")]
    pub r_rank: Option<usize>,
    pub elliptic: Tri,
    pub complex_elliptic: Tri,
    pub canceling: Tri,
    pub mixing: MixingCell,
    pub mixing_pairs: usize,
    pub ellipticity_constant: f64,
    pub complex_ellipticity_constant: f64,
    pub consistency_ok: bool,
    pub matches: bool,
    pub source: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Mismatch {
    pub row: String,
    pub column: &'static str,
    pub expected: String,
    pub got: String,
    pub source: String,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: expected {}, got {} (claim: {})",
            self.row, self.column, self.expected, self.got, self.source
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TableReport {
    pub rows: Vec<TableRow>,
    pub mismatches: Vec<Mismatch>,
}

fn label(e: &ExpectedRow) -> String {
    let mut s = format!("{} n={}", e.name, e.n);
    if let Some(k) = e.k {
        s.push_str(&format!(" k={k}"));
    }
    if let Some(d) = e.dim_v {
        s.push_str(&format!(" N={d}"));
    }
    if let Some(r) = &e.r {
        let rows: Vec<String> = r
            .iter()
            .map(|row| row.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" "))
            .collect();
        s.push_str(&format!(" R=[{}]", rows.join("; ")));
    }
    s
}

/// Classifies every row of the expected table and records mismatches.
pub fn catalog_table(budget: &Budget, tol: &Tolerances, seed: u64) -> Result<TableReport, CliError> {
    let mut rows = Vec::new();
    let mut mismatches = Vec::new();
    for e in expected_table() {
        let r = e.r.as_ref().map(|rows| {
            DMatrix::from_row_iterator(rows.len(), rows[0].len(), rows.iter().flatten().copied())
        });
        let params = CatalogParams {
            n: Some(e.n),
            dim_v: e.dim_v,
            k: e.k,
            r: r.clone(),
        };
        let op = catalog(&e.name, &params)?;
        let rep = classify(&op, budget, tol, seed)?;
        let mixing = if rep.mixing.is_verified() {
            MixingCell::Verified
        } else {
            MixingCell::NotFound
        };
        let before = mismatches.len();
        let mut cmp = |column: &'static str, want: Option<String>, got: String| {
            if let Some(want) = want {
                if want != got {
                    mismatches.push(Mismatch {
                        row: label(&e),
                        column,
                        expected: want,
                        got,
                        source: e.source.clone(),
                    });
                }
            }
        };
        let tri = |t: Option<Tri>| t.map(|t| format!("{t:?}"));
        cmp("elliptic", tri(e.elliptic), format!("{:?}", rep.elliptic.verdict));
        cmp("complex_elliptic", tri(e.complex_elliptic), format!("{:?}", rep.complex_elliptic.verdict));
        cmp("canceling", tri(e.canceling), format!("{:?}", rep.canceling.verdict));
        cmp("mixing", e.mixing.map(|m| format!("{m:?}")), format!("{mixing:?}"));
        rows.push(TableRow {
            label: label(&e),
            name: e.name.clone(),
            n: op.n(),
            order: op.order(),
            dim_v: op.dim_v(),
            dim_w: op.dim_w(),
            r_rank: r.as_ref().map(|r| numeric_rank(r, tol.rank)),
            elliptic: rep.elliptic.verdict,
            complex_elliptic: rep.complex_elliptic.verdict,
            canceling: rep.canceling.verdict,
            mixing,
            mixing_pairs: rep.mixing.pairs().len(),
            ellipticity_constant: rep.elliptic.c_estimate,
            complex_ellipticity_constant: rep.complex_elliptic.c_estimate,
            consistency_ok: rep.consistency.iter().all(|c| c.ok),
            matches: mismatches.len() == before,
            source: e.source.clone(),
        });
    }
    Ok(TableReport { rows, mismatches })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_table_is_well_formed() {
        let rows = expected_table();
        assert_eq!(rows.len(), 20);
        for r in &rows {
            assert!(!r.source.is_empty());
            catalog(
                &r.name,
                &CatalogParams {
                    n: Some(r.n),
                    dim_v: r.dim_v,
                    k: r.k,
                    r: r.r.as_ref().map(|m| {
                        DMatrix::from_row_iterator(m.len(), m[0].len(), m.iter().flatten().copied())
                    }),
                },
            )
            .unwrap();
        }
    }
}
