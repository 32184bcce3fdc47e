use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{ellipticity_constant, Budget, Tolerances, Tri};
use crate::error::{Error, Result};
use crate::linalg::singular_values;
use crate::operator::Operator;
use crate::sampling::{direction_schedule, rng, unit_vec};
use crate::subspace::{column_space, subspace_intersect, Subspace};

#[derive(Debug, Clone, Serialize)]
pub struct CancelingResult {
    pub verdict: Tri,
    pub intersection_dim: usize,
    pub intersection_basis: Vec<Vec<f64>>,
    pub samples_used: usize,
    pub warning: Option<String>,
}

/// ⋂_ξ im 𝔸^k(ξ) over the direction schedule, stopping at {0} or after the
/// intersection has been unchanged for `stable_window` samples.
pub fn is_canceling(op: &Operator, budget: &Budget, tol: &Tolerances, seed: u64) -> Result<CancelingResult> {
    let dirs = direction_schedule(op.n(), budget.canceling_samples, seed);
    let mut inter: Option<Subspace> = None;
    let mut stable = 0;
    let mut used = 0;
    let mut verdict = Tri::Inconclusive;
    for xi in &dirs {
        used += 1;
        let im = column_space(&op.symbol(xi)?, tol.rank);
        let next = match &inter {
            None => im,
            Some(s) => subspace_intersect(s, &im, tol.rank)?,
        };
        if inter.as_ref().map(|s| s.dim()) == Some(next.dim()) {
            stable += 1;
        } else {
            stable = 0;
        }
        inter = Some(next);
        let cur = inter.as_ref().expect("just set");
        if cur.is_zero() {
            verdict = Tri::Yes;
            break;
        }
        if stable >= budget.stable_window {
            verdict = Tri::No;
            break;
        }
    }
    let inter = inter.unwrap_or_else(|| Subspace::zero(op.dim_w()));
    let warning = {
        let quick = Budget {
            sphere_samples: Some(256),
            refine_starts: 3,
            refine_iters: 200,
            ..budget.clone()
        };
        let e = ellipticity_constant(op, &quick, tol)?;
        (e.verdict != Tri::Yes)
            .then(|| "operator does not appear elliptic; canceling verdict may be meaningless".to_string())
    };
    Ok(CancelingResult {
        verdict,
        intersection_dim: inter.dim(),
        intersection_basis: inter
            .vectors()
            .iter()
            .map(|v| v.iter().copied().collect())
            .collect(),
        samples_used: used,
        warning,
    })
}

/// W_A = span of the symbol images over the direction schedule.
pub fn essential_range(op: &Operator, budget: &Budget, tol: &Tolerances, seed: u64) -> Result<Subspace> {
    let mut span = Subspace::zero(op.dim_w());
    let mut stable = 0;
    for xi in direction_schedule(op.n(), budget.canceling_samples, seed) {
        let im = column_space(&op.symbol(&xi)?, tol.rank);
        let next = span.span(&im)?;
        if next.dim() == span.dim() {
            stable += 1;
        } else {
            stable = 0;
        }
        span = next;
        if span.is_full() || stable >= budget.stable_window {
            break;
        }
    }
    Ok(span)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalarReduction {
    /// n×n matrix of the selected rows.
    pub r: Vec<Vec<f64>>,
    pub rows: Vec<usize>,
    /// Lower domination constant (always 1: the selected rows are rows of 𝔸).
    pub lower: f64,
    /// Upper constant c with |𝔸(ξ)| ≤ c|𝔸_R(ξ)|.
    pub c: f64,
    pub samples: usize,
    pub max_lower_violation: f64,
    pub max_upper_ratio: f64,
    pub verified: bool,
}

/// For a first-order scalar operator with symbol Pξ (P is M×n), selects n
/// independent rows R of P in order and checks |Rξ| ≤ |Pξ| ≤ c|Rξ|.
pub fn reduce_scalar_operator(op: &Operator, samples: usize, seed: u64) -> Result<ScalarReduction> {
    if op.order() != 1 || op.dim_v() != 1 {
        return Err(Error::Unsupported(
            "scalar reduction needs a first-order operator on scalar fields".into(),
        ));
    }
    let n = op.n();
    let mut p = DMatrix::zeros(op.dim_w(), n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        p.set_column(j, &op.symbol(&e)?.column(0));
    }
    let max_row = (0..p.nrows()).map(|i| p.row(i).norm()).fold(0.0, f64::max);
    let mut ortho: Vec<DVector<f64>> = Vec::new();
    let mut rows = Vec::new();
    for i in 0..p.nrows() {
        if rows.len() == n {
            break;
        }
        let mut r = p.row(i).transpose();
        for q in &ortho {
            r -= q * q.dot(&r);
        }
        for q in &ortho {
            r -= q * q.dot(&r);
        }
        if r.norm() > 1e-9 * max_row {
            ortho.push(r.normalize());
            rows.push(i);
        }
    }
    if rows.len() < n {
        return Err(Error::NotElliptic(format!(
            "only {} independent rows among {} (need {n})",
            rows.len(),
            p.nrows()
        )));
    }
    let r = DMatrix::from_rows(&rows.iter().map(|&i| p.row(i).into_owned()).collect::<Vec<_>>());
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotElliptic("selected rows are singular".into()))?;
    let coef = &p * r_inv;
    let c = singular_values(&coef)[0];

    let mut g = rng(seed, 0x5ca1);
    let mut max_lower_violation: f64 = 0.0;
    let mut max_upper_ratio: f64 = 0.0;
    for _ in 0..samples {
        let xi = DVector::from_vec(unit_vec(&mut g, n));
        let full = (&p * &xi).norm();
        let red = (&r * &xi).norm();
        max_lower_violation = max_lower_violation.max(red - full);
        max_upper_ratio = max_upper_ratio.max(full / red);
    }
    let verified = max_lower_violation <= 1e-12 * max_row && max_upper_ratio <= c * (1.0 + 1e-12);
    Ok(ScalarReduction {
        r: (0..n).map(|i| r.row(i).iter().copied().collect()).collect(),
        rows,
        lower: 1.0,
        c,
        samples,
        max_lower_violation,
        max_upper_ratio,
        verified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog, div_form, CatalogParams};

    #[test]
    fn canceling_examples() {
        let b = Budget::default();
        let t = Tolerances::default();
        let g = catalog("gradient", &CatalogParams::n(2)).unwrap();
        assert_eq!(is_canceling(&g, &b, &t, 0).unwrap().verdict, Tri::Yes);
        let l = catalog("laplacian", &CatalogParams::n(2)).unwrap();
        let r = is_canceling(&l, &b, &t, 0).unwrap();
        assert_eq!(r.verdict, Tri::No);
        assert_eq!(r.intersection_dim, 1);
        let dc = catalog("divcurl", &CatalogParams::n(2)).unwrap();
        assert_eq!(is_canceling(&dc, &b, &t, 0).unwrap().verdict, Tri::No);
    }

    #[test]
    fn essential_range_examples() {
        let b = Budget::default();
        let t = Tolerances::default();
        for (name, dim) in [("gradient", 2), ("symgrad", 3), ("divcurl", 2), ("delbar", 2)] {
            let op = catalog(name, &CatalogParams::n(2)).unwrap();
            assert_eq!(essential_range(&op, &b, &t, 0).unwrap().dim(), dim, "{name}");
        }
    }

    #[test]
    fn scalar_reduction_examples() {
        let g = catalog("gradient", &CatalogParams::n(2)).unwrap();
        let s = reduce_scalar_operator(&g, 1000, 0).unwrap();
        assert_eq!(s.rows, vec![0, 1]);
        assert!((s.c - 1.0).abs() < 1e-14 && s.verified);

        let three = div_form(&DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0])).unwrap();
        let s = reduce_scalar_operator(&three, 1000, 0).unwrap();
        assert_eq!(s.rows, vec![0, 1]);
        assert!(s.c <= 2f64.sqrt() * 3f64.sqrt() && s.verified);
        assert!((s.c - 3f64.sqrt()).abs() < 1e-12);

        let bad = div_form(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0, 0.0])).unwrap();
        assert!(matches!(reduce_scalar_operator(&bad, 10, 0), Err(Error::NotElliptic(_))));
    }
}
