//! First-order linearization dA = (cl 𝔸^k ∘ D, curl_{k−1}) of an order-k
//! operator, acting on V⊗E_{k−1}-valued fields.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::classify::{
    complex_ellipticity_constant, ellipticity_constant, extract_spectral_pair,
    hyperplane_nullspace, mixing_check, Budget, MixingResult, SpectralPair, Tolerances,
};
use crate::error::Result;
use crate::linalg::lstsq;
use crate::operator::{curl_rows, curl_symbol, sym_mul, Operator};
use crate::sampling::{rng, unit_vec};
use crate::tensor::{sym_dim, SymCoords};

const CHECK_SEED: u64 = 0x11ea_5eed;

#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    pub parent: Operator,
    pub d_op: Operator,
    pub w_block: Range<usize>,
    pub curl_block: Range<usize>,
}

impl LinearizedOperator {
    pub fn domain_dim(&self) -> usize {
        self.d_op.dim_v()
    }

    pub fn target_dim(&self) -> usize {
        self.d_op.dim_w()
    }

    /// max ‖d𝔸(ξ)[v⊗^{k−1}ξ] − (𝔸^k(ξ)v, 0)‖ / (‖A‖·|v|·|ξ|^k) over seeded samples.
    pub fn sss_residual(&self, samples: usize, seed: u64) -> Result<f64> {
        let (n, nv, k) = (self.parent.n(), self.parent.dim_v(), self.parent.order());
        let scale = self.parent.norm();
        let mut r = rng(seed, 0x555);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let xi = unit_vec(&mut r, n);
            let v = unit_vec(&mut r, nv);
            let u = SymCoords::pure(&v, &xi, k - 1)?.coeffs;
            let lhs = self.d_op.symbol(&xi)? * u;
            let mut rhs = DVector::zeros(self.target_dim());
            let a = self.parent.symbol(&xi)? * DVector::from_column_slice(&v);
            rhs.rows_mut(0, self.parent.dim_w()).copy_from(&a);
            worst = worst.max((lhs - rhs).norm() / scale);
        }
        Ok(worst)
    }
}

/// d𝔸(ξ)[U] = (cl𝔸^k[U ⊙ ξ], curl_{k−1}(ξ)[U]); k = 1 returns A itself.
pub fn linearize(op: &Operator) -> Result<LinearizedOperator> {
    let (n, nv, m, k) = (op.n(), op.dim_v(), op.dim_w(), op.order());
    if k == 1 {
        return Ok(LinearizedOperator {
            parent: op.clone(),
            d_op: op.clone(),
            w_block: 0..m,
            curl_block: m..m,
        });
    }
    let dom = sym_dim(n, k - 1) * nv;
    let rows = m + curl_rows(n, k - 1, nv);
    let cl = op.linearized_symbol();
    let mut symbols = Vec::with_capacity(n);
    for j in 0..n {
        let mut ej = vec![0.0; n];
        ej[j] = 1.0;
        let curl = curl_symbol(n, k - 1, nv, &ej)?;
        let mut s = DMatrix::zeros(rows, dom);
        for c in 0..dom {
            let mut unit = DVector::zeros(dom);
            unit[c] = 1.0;
            let prod = sym_mul(&SymCoords::new(n, k - 1, nv, unit)?, &ej)?;
            s.view_mut((0, c), (m, 1)).copy_from(&(&cl * prod.coeffs));
        }
        s.view_mut((m, 0), (rows - m, dom)).copy_from(&curl);
        symbols.push(s);
    }
    let mut d_op = Operator::first_order(symbols)?;
    if let Some(name) = op.name() {
        d_op = d_op.with_name(format!("d({name})"));
    }
    Ok(LinearizedOperator {
        parent: op.clone(),
        d_op,
        w_block: 0..m,
        curl_block: m..rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PairTransfer {
    pub xi: Vec<f64>,
    /// Parent pair extended to d_op (or d_op pair projected to the parent).
    pub transferred: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearizationReport {
    pub domain_dim: usize,
    pub target_dim: usize,
    pub sss_residual: f64,
    pub elliptic_agree: bool,
    pub complex_elliptic_agree: bool,
    pub parent_mixing: MixingResult,
    pub d_mixing: MixingResult,
    pub forward: Vec<PairTransfer>,
    pub backward: Vec<PairTransfer>,
    pub ok: bool,
}

/// Extends a parent pair (ξ, E) to d_op: finds (w, h) in the hyperplane
/// nullspace of d_op at ξ whose W-part is w, then extracts the pair.
pub fn extend_pair(lin: &LinearizedOperator, pair: &SpectralPair, tol: &Tolerances, seed: u64) -> Result<Option<SpectralPair>> {
    let nsp = hyperplane_nullspace(&lin.d_op, &pair.xi, seed, tol.rank)?;
    if nsp.is_zero() {
        return Ok(None);
    }
    let m = lin.parent.dim_w();
    let q = nsp.basis();
    let qw = q.rows(0, m).into_owned();
    let w = DVector::from_column_slice(&pair.witness);
    let c = lstsq(&qw, &w, 1e-12);
    if (&qw * &c - &w).norm() > 1e-8 * w.norm() {
        return Ok(None);
    }
    let full = q * c;
    Ok(extract_spectral_pair(&lin.d_op, full.as_slice(), &pair.xi, tol.pair))
}

pub fn check_linearization_properties(
    op: &Operator,
    budget: &Budget,
    tol: &Tolerances,
    seed: u64,
) -> Result<LinearizationReport> {
    let lin = linearize(op)?;
    let sss = lin.sss_residual(100, CHECK_SEED)?;
    let e_a = ellipticity_constant(op, budget, tol)?.verdict;
    let e_d = ellipticity_constant(&lin.d_op, budget, tol)?.verdict;
    let c_a = complex_ellipticity_constant(op, budget, tol)?.verdict;
    let c_d = complex_ellipticity_constant(&lin.d_op, budget, tol)?.verdict;
    let parent_mixing = mixing_check(op, budget, tol, seed)?;
    let d_mixing = mixing_check(&lin.d_op, budget, tol, seed)?;

    let mut forward = Vec::new();
    for p in parent_mixing.pairs() {
        let ext = extend_pair(&lin, p, tol, seed)?;
        forward.push(PairTransfer {
            xi: p.xi.clone(),
            transferred: ext.is_some(),
            residual: ext.map_or(f64::INFINITY, |e| e.residual),
        });
    }
    let m = op.dim_w();
    let mut backward = Vec::new();
    for p in d_mixing.pairs() {
        let w = &p.witness[..m];
        if w.iter().all(|x| x.abs() <= 1e-12 * crate::sampling::norm(&p.witness)) {
            // Pure curl-block witness: its projection to W* is trivial.
            backward.push(PairTransfer {
                xi: p.xi.clone(),
                transferred: true,
                residual: 0.0,
            });
            continue;
        }
        let back = extract_spectral_pair(op, w, &p.xi, tol.pair);
        backward.push(PairTransfer {
            xi: p.xi.clone(),
            transferred: back.is_some(),
            residual: back.map_or(f64::INFINITY, |b| b.residual),
        });
    }
    let ok = sss <= 1e-12
        && e_a == e_d
        && c_a == c_d
        && forward.iter().chain(&backward).all(|t| t.transferred);
    Ok(LinearizationReport {
        domain_dim: lin.domain_dim(),
        target_dim: lin.target_dim(),
        sss_residual: sss,
        elliptic_agree: e_a == e_d,
        complex_elliptic_agree: c_a == c_d,
        parent_mixing,
        d_mixing,
        forward,
        backward,
        ok,
    })
}

/// Mixing check for order-k operators. The hyperplane nullspace already uses
/// pure powers spanning E_k(π_ξ), so this is the general search.
pub fn mixing_check_higher_order(
    op: &Operator,
    budget: &Budget,
    tol: &Tolerances,
    seed: u64,
) -> Result<MixingResult> {
    mixing_check(op, budget, tol, seed)
}
