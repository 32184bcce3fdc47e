use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Budget, Tolerances};
use crate::error::{Error, Result};
use crate::linalg::{lstsq, svd};
use crate::operator::Operator;
use crate::sampling::{direction_schedule, dot, gaussian_vec, nelder_mead, norm, rng, unit_vec};
use crate::subspace::{
    column_space, hyperplane_basis, nullspace, numeric_rank, singular_values_desc,
    subspace_intersect, subspace_orthocomplement, Subspace,
};
use crate::tensor::MonomialBasis;

const FIT_SEED: u64 = 0x0f17_5eed;
const CHECK_SEED: u64 = 0xc4ec_5eed;

/// A realized element (ξ, E) of the spectrum with its witness w.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralPair {
    pub xi: Vec<f64>,
    /// e ∈ V* for first-order operators, E ∈ V*⊗E_{k−1} (monomial coords,
    /// index β·N + ℓ) otherwise.
    pub coordinate: Vec<f64>,
    pub witness: Vec<f64>,
    pub residual: f64,
}

impl SpectralPair {
    pub fn is_trivial(&self) -> bool {
        norm(&self.coordinate) == 0.0 || norm(&self.witness) == 0.0 || norm(&self.xi) == 0.0
    }
}

/// B_w with (B_w)_{jℓ} = wᵀ A_{e_j} e_ℓ, i.e. the bilinear form w ∘ f̄_A.
pub fn b_matrix(op: &Operator, w: &[f64]) -> Result<DMatrix<f64>> {
    if op.order() != 1 {
        return Err(Error::Unsupported(
            "rank_A is only defined for first-order operators".into(),
        ));
    }
    if w.len() != op.dim_w() {
        return Err(Error::DimensionMismatch {
            expected: op.dim_w(),
            got: w.len(),
        });
    }
    let wv = DVector::from_column_slice(w);
    let mut b = DMatrix::zeros(op.n(), op.dim_v());
    for j in 0..op.n() {
        let mut e = vec![0.0; op.n()];
        e[j] = 1.0;
        let row = op.symbol(&e)?.transpose() * &wv;
        b.set_row(j, &row.transpose());
    }
    Ok(b)
}

pub fn rank_a_first_order(op: &Operator, w: &[f64], tol: f64) -> Result<usize> {
    let b = b_matrix(op, w)?;
    if b.norm() <= 1e-14 * op.norm() * norm(w) {
        return Ok(0);
    }
    Ok(numeric_rank(&b, tol))
}

/// Rank-zero covectors W_A^⊥ = ker (cl 𝔸^k)ᵀ.
pub fn rank_zero_covectors(op: &Operator, tol: f64) -> Subspace {
    nullspace(&op.linearized_symbol().transpose(), tol)
}

/// N(ξ) = ⋂_{η ∈ π_ξ} ker 𝔸^k(η)*, via pure powers spanning E_k(π_ξ).
pub fn hyperplane_nullspace(op: &Operator, xi: &[f64], seed: u64, tol: f64) -> Result<Subspace> {
    let n = op.n();
    if xi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: xi.len(),
        });
    }
    if norm(xi) == 0.0 {
        return Err(Error::InvalidParams("ξ must be nonzero".into()));
    }
    if n == 1 {
        return Ok(Subspace::full(op.dim_w()));
    }
    let plane = hyperplane_basis(xi)?;
    let k = op.order();
    let local = MonomialBasis::new(n - 1, k)?;
    let d = local.len();
    let etas = if k == 1 {
        (0..n - 1)
            .map(|i| plane.column(i).iter().copied().collect::<Vec<f64>>())
            .collect()
    } else {
        let mut found = None;
        for attempt in 0..5u64 {
            let mut r = rng(seed, 0x4e55_0000 + attempt);
            let zs: Vec<Vec<f64>> = (0..d).map(|_| unit_vec(&mut r, n - 1)).collect();
            let powers =
                DMatrix::from_columns(&zs.iter().map(|z| local.pure_power(z)).collect::<Vec<_>>());
            if numeric_rank(&powers, 1e-9) == d {
                found = Some(
                    zs.iter()
                        .map(|z| {
                            (&plane * DVector::from_column_slice(z))
                                .iter()
                                .copied()
                                .collect::<Vec<f64>>()
                        })
                        .collect::<Vec<_>>(),
                );
                break;
            }
        }
        found.ok_or_else(|| {
            Error::Degenerate("pure powers failed to span E_k of the hyperplane".into())
        })?
    };
    let mut images = DMatrix::zeros(op.dim_w(), etas.len() * op.dim_v());
    for (i, eta) in etas.iter().enumerate() {
        let s = op.symbol(eta)?;
        images
            .view_mut((0, i * op.dim_v()), (op.dim_w(), op.dim_v()))
            .copy_from(&s);
    }
    Ok(nullspace(&images.transpose(), tol))
}

/// Coefficients of (η, v) ↦ ⟨ξ,η⟩⟨E, v⊗^{k−1}η⟩ in V⊗E_k coordinates:
/// c_{α,ℓ} = Σ_{j: α_j ≥ 1} ξ_j E_{α−e_j, ℓ}.
fn spectrum_functional(op: &Operator, xi: &[f64], coord: &[f64]) -> Result<DVector<f64>> {
    let n = op.n();
    let k = op.order();
    let nv = op.dim_v();
    let lower = MonomialBasis::new(n, k - 1)?;
    if coord.len() != lower.len() * nv {
        return Err(Error::DimensionMismatch {
            expected: lower.len() * nv,
            got: coord.len(),
        });
    }
    let upper = op.basis();
    let mut c = DVector::zeros(upper.len() * nv);
    for (ai, alpha) in upper.indices().iter().enumerate() {
        for j in 0..n {
            if let Some(beta) = alpha.lowered(j) {
                let bi = lower.index_of(&beta).expect("order k-1");
                for l in 0..nv {
                    c[ai * nv + l] += xi[j] * coord[bi * nv + l];
                }
            }
        }
    }
    Ok(c)
}

/// Least-squares witness for (ξ, E): minimizes ‖(cl)ᵀw − c(ξ,E)‖ and returns
/// (w, relative residual). The residual is 0 for a trivial functional.
pub fn best_witness(op: &Operator, xi: &[f64], coord: &[f64]) -> Result<(DVector<f64>, f64)> {
    if xi.len() != op.n() {
        return Err(Error::DimensionMismatch {
            expected: op.n(),
            got: xi.len(),
        });
    }
    let c = spectrum_functional(op, xi, coord)?;
    let cn = c.norm();
    if cn == 0.0 {
        return Ok((DVector::zeros(op.dim_w()), 0.0));
    }
    let clt = op.linearized_symbol().transpose();
    let w = lstsq(&clt, &c, 1e-12);
    let res = (&clt * &w - &c).norm() / cn;
    Ok((w, res))
}

/// Relative distance of (ξ, E) from being realized by any witness.
pub fn pair_residual(op: &Operator, xi: &[f64], coord: &[f64]) -> Result<f64> {
    Ok(best_witness(op, xi, coord)?.1)
}

struct Sample {
    eta: Vec<f64>,
    v: Vec<f64>,
}

fn samples(op: &Operator, xi: &[f64], count: usize, seed: u64) -> Vec<Sample> {
    let mut r = rng(seed, 0x5a3f);
    let xin = norm(xi);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let eta = unit_vec(&mut r, op.n());
        if op.n() > 1 && (dot(&eta, xi) / xin).abs() < 0.2 {
            continue;
        }
        let v = unit_vec(&mut r, op.dim_v());
        out.push(Sample { eta, v });
    }
    out
}

/// max |⟨w,𝔸(η)v⟩ − ⟨ξ,η⟩⟨E, v⊗^{k−1}η⟩| / (‖w‖·‖A‖) over fresh unit samples.
pub fn validate_pair(op: &Operator, pair: &SpectralPair, seed: u64, count: usize) -> Result<f64> {
    let k = op.order();
    let lower = MonomialBasis::new(op.n(), k - 1)?;
    let w = DVector::from_column_slice(&pair.witness);
    let scale = w.norm() * op.norm();
    if scale == 0.0 {
        return Ok(if norm(&pair.coordinate) == 0.0 { 0.0 } else { f64::INFINITY });
    }
    let coord = DVector::from_column_slice(&pair.coordinate);
    let mut worst: f64 = 0.0;
    let mut r = rng(seed, 0x7a1d);
    for _ in 0..count {
        let eta = unit_vec(&mut r, op.n());
        let v = unit_vec(&mut r, op.dim_v());
        let lhs = w.dot(&(op.symbol(&eta)? * DVector::from_column_slice(&v)));
        let rhs = dot(&pair.xi, &eta) * coord.dot(&lower.tensor_power(&v, &eta));
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    Ok(worst)
}

/// Fits E from ⟨w,𝔸(η)v⟩ = ⟨ξ,η⟩⟨E, v⊗^{k−1}η⟩ and validates on fresh samples.
/// Returns `None` when the fit does not validate or the coordinate is zero.
pub fn extract_spectral_pair(op: &Operator, w: &[f64], xi: &[f64], tol: f64) -> Option<SpectralPair> {
    if w.len() != op.dim_w() || xi.len() != op.n() || norm(w) == 0.0 || norm(xi) == 0.0 {
        return None;
    }
    let k = op.order();
    let lower = MonomialBasis::new(op.n(), k - 1).ok()?;
    let unknowns = lower.len() * op.dim_v();
    let count = 4 * unknowns + 8;
    let wv = DVector::from_column_slice(w);
    let mut a = DMatrix::zeros(count, unknowns);
    let mut b = DVector::zeros(count);
    for (i, s) in samples(op, xi, count, FIT_SEED).iter().enumerate() {
        let row = lower.tensor_power(&s.v, &s.eta) * dot(xi, &s.eta);
        a.set_row(i, &row.transpose());
        b[i] = wv.dot(&(op.symbol(&s.eta).ok()? * DVector::from_column_slice(&s.v)));
    }
    let e = lstsq(&a, &b, 1e-13);
    let scale = wv.norm() * op.norm();
    if e.norm() <= 1e-10 * scale {
        return None;
    }
    let mut pair = SpectralPair {
        xi: xi.to_vec(),
        coordinate: e.iter().copied().collect(),
        witness: w.to_vec(),
        residual: 0.0,
    };
    pair.residual = validate_pair(op, &pair, CHECK_SEED, 32).ok()?;
    (pair.residual <= tol).then_some(pair)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConeSearch {
    /// Greedily selected pairs whose witnesses, with W_A^⊥, are independent.
    pub pairs: Vec<SpectralPair>,
    pub rank_zero_basis: Vec<Vec<f64>>,
    /// dim span(selected witnesses ∪ W_A^⊥).
    pub witness_span_dim: usize,
    /// dim span ⋃_ξ N(ξ) over the sampled directions.
    pub union_dim: usize,
    /// dim ⋂_ξ span{𝔸^k(η)v : η ∈ π_ξ} over the sampled directions.
    pub dual_intersection_dim: usize,
    pub directions_used: usize,
    pub sigma2_restarts: usize,
}

pub fn rank_one_cone_search(
    op: &Operator,
    budget: &Budget,
    tol: &Tolerances,
    seed: u64,
) -> Result<ConeSearch> {
    let m = op.dim_w();
    let zero = rank_zero_covectors(op, tol.rank);
    let range_star = subspace_orthocomplement(&zero);
    let proj_a = range_star.projector();
    let mut selected_span = zero.clone();
    let mut pairs = Vec::new();
    let mut union = Subspace::zero(m);
    let mut dual = Subspace::full(m);
    let mut used = 0;

    for xi in direction_schedule(op.n(), budget.random_directions, seed) {
        if selected_span.is_full() {
            break;
        }
        used += 1;
        let nsp = hyperplane_nullspace(op, &xi, seed, tol.rank)?;
        union = union.span(&nsp)?;
        dual = subspace_intersect(&dual, &subspace_orthocomplement(&nsp), tol.rank)?;
        if nsp.is_zero() {
            continue;
        }
        let cand = column_space(&(&proj_a * nsp.basis()), 1e-8);
        for w in cand.vectors() {
            if selected_span.contains(&w, 1e-8) {
                continue;
            }
            if let Some(pair) = extract_spectral_pair(op, w.as_slice(), &xi, tol.pair) {
                selected_span = selected_span.with_vector(&w)?;
                pairs.push(pair);
            }
        }
    }

    let mut restarts = 0;
    if !selected_span.is_full() && op.order() == 1 && op.n().min(op.dim_v()) >= 2 {
        restarts = sigma2_search(op, budget, tol, seed, &range_star, &mut selected_span, &mut pairs)?;
    }

    Ok(ConeSearch {
        pairs,
        rank_zero_basis: zero.vectors().iter().map(|v| v.iter().copied().collect()).collect(),
        witness_span_dim: selected_span.dim(),
        union_dim: union.dim(),
        dual_intersection_dim: dual.dim(),
        directions_used: used,
        sigma2_restarts: restarts,
    })
}

/// Minimizes σ₂(B_w)/σ₁(B_w) over unit w ∈ W_A from random starts.
fn sigma2_search(
    op: &Operator,
    budget: &Budget,
    tol: &Tolerances,
    seed: u64,
    range_star: &Subspace,
    selected_span: &mut Subspace,
    pairs: &mut Vec<SpectralPair>,
) -> Result<usize> {
    let q = range_star.basis();
    let r = q.ncols();
    if r == 0 {
        return Ok(0);
    }
    let ratio = |c: &[f64]| -> f64 {
        let w = q * DVector::from_column_slice(c);
        match b_matrix(op, w.as_slice()) {
            Ok(b) => {
                let sv = singular_values_desc(&b);
                if sv[0] == 0.0 {
                    1.0
                } else {
                    sv[1] / sv[0]
                }
            }
            Err(_) => f64::INFINITY,
        }
    };
    let mut rg = rng(seed, 0x5192);
    let mut used = 0;
    for _ in 0..budget.restarts {
        if selected_span.is_full() {
            break;
        }
        used += 1;
        let c0 = gaussian_vec(&mut rg, r);
        let mut best = nelder_mead(|c| ratio(c), &c0, 0.2, 200, 0.0);
        if best.f > 1e-3 {
            continue;
        }
        best = nelder_mead(|c| ratio(c), &best.x, 1e-3, 400, 0.0);
        if best.f > 1e-8 {
            continue;
        }
        let w = q * DVector::from_column_slice(&best.x);
        let w = w.normalize();
        if selected_span.contains(&w, 1e-8) {
            continue;
        }
        let b = b_matrix(op, w.as_slice())?;
        let d = svd(&b);
        let xi: Vec<f64> = d.u.column(0).iter().copied().collect();
        if let Some(pair) = extract_spectral_pair(op, w.as_slice(), &xi, tol.pair) {
            *selected_span = selected_span.with_vector(&w)?;
            pairs.push(pair);
        }
    }
    Ok(used)
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status")]
pub enum MixingVerdict {
    Verified {
        pairs: Vec<SpectralPair>,
        rank_zero_basis: Vec<Vec<f64>>,
    },
    NotFoundWithinBudget {
        /// Dimension of the span of rank-one witnesses found (W_A^⊥ excluded).
        span_dim: usize,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct MixingResult {
    pub verdict: MixingVerdict,
    pub rank_zero_dim: usize,
    pub union_dim: usize,
    pub dual_intersection_dim: usize,
    pub de_morgan_consistent: bool,
    pub directions_used: usize,
    pub sigma2_restarts: usize,
}

impl MixingResult {
    pub fn is_verified(&self) -> bool {
        matches!(self.verdict, MixingVerdict::Verified { .. })
    }

    pub fn pairs(&self) -> &[SpectralPair] {
        match &self.verdict {
            MixingVerdict::Verified { pairs, .. } => pairs,
            MixingVerdict::NotFoundWithinBudget { .. } => &[],
        }
    }
}

pub fn mixing_check(op: &Operator, budget: &Budget, tol: &Tolerances, seed: u64) -> Result<MixingResult> {
    let search = rank_one_cone_search(op, budget, tol, seed)?;
    let m = op.dim_w();
    let rank_zero_dim = search.rank_zero_basis.len();
    let verdict = if search.witness_span_dim == m {
        MixingVerdict::Verified {
            pairs: search.pairs,
            rank_zero_basis: search.rank_zero_basis,
        }
    } else {
        MixingVerdict::NotFoundWithinBudget {
            span_dim: search.witness_span_dim - rank_zero_dim,
        }
    };
    Ok(MixingResult {
        verdict,
        rank_zero_dim,
        union_dim: search.union_dim,
        dual_intersection_dim: search.dual_intersection_dim,
        de_morgan_consistent: search.dual_intersection_dim + search.union_dim == m,
        directions_used: search.directions_used,
        sigma2_restarts: search.sigma2_restarts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog, CatalogParams};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn rank_a_symgrad_units() {
        let op = catalog("symgrad", &CatalogParams::n(2)).unwrap();
        assert_eq!(rank_a_first_order(&op, &[1.0, 0.0, 0.0], 1e-9).unwrap(), 1);
        assert_eq!(rank_a_first_order(&op, &[0.0, 1.0, 0.0], 1e-9).unwrap(), 2);
        let lap = catalog("laplacian", &CatalogParams::n(2)).unwrap();
        assert!(rank_a_first_order(&lap, &[1.0], 1e-9).is_err());
    }

    #[test]
    fn nullspace_gradient_axis() {
        let op = catalog("gradient", &CatalogParams::n(2)).unwrap();
        let ns = hyperplane_nullspace(&op, &[1.0, 0.0], 0, 1e-9).unwrap();
        assert_eq!(ns.dim(), 1);
        assert!(ns.contains(&DVector::from_column_slice(&[1.0, 0.0]), 1e-12));
    }

    #[test]
    fn nullspace_scr_d2_axis() {
        let op = catalog("scrDk", &CatalogParams::nk(2, 2)).unwrap();
        let ns = hyperplane_nullspace(&op, &[1.0, 0.0], 0, 1e-9).unwrap();
        assert_eq!(ns.dim(), 1);
        assert!(ns.contains(&DVector::from_column_slice(&[1.0, 0.0]), 1e-12));
    }

    #[test]
    fn nullspace_scr_d2_diagonal() {
        // Images over the diagonal's normal line are multiples of (1,1), so the
        // annihilator is the antidiagonal covector, and it is rank-one because
        // η₁² − η₂² = (η₁ + η₂)(η₁ − η₂).
        let op = catalog("scrDk", &CatalogParams::nk(2, 2)).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let ns = hyperplane_nullspace(&op, &[s, s], 3, 1e-9).unwrap();
        assert_eq!(ns.dim(), 1);
        let w = ns.vectors()[0].clone();
        assert!((w[0] + w[1]).abs() < 1e-12);
        assert!(extract_spectral_pair(&op, w.as_slice(), &[s, s], 1e-8).is_some());
    }

    #[test]
    fn extract_symgrad_diagonal() {
        let op = catalog("symgrad", &CatalogParams::n(2)).unwrap();
        let p = extract_spectral_pair(&op, &[1.0, 0.0, 0.0], &[1.0, 0.0], 1e-8).unwrap();
        assert!(p.residual <= 1e-12);
        assert!((p.coordinate[0] - 1.0).abs() < 1e-10 && p.coordinate[1].abs() < 1e-10);
    }

    #[test]
    fn extract_deviatoric_none() {
        let op = catalog("deviatoric", &CatalogParams::n(2)).unwrap();
        assert!(extract_spectral_pair(&op, &[0.3, 1.0, -0.2], &[0.6, 0.8], 1e-8).is_none());
    }

    #[test]
    fn witness_for_gradient_pair() {
        let op = catalog("gradient", &CatalogParams::n(2).with_dim_v(2)).unwrap();
        let (w, res) = best_witness(&op, &[0.6, 0.8], &[1.0, -2.0]).unwrap();
        assert!(res < 1e-12);
        let p = SpectralPair {
            xi: vec![0.6, 0.8],
            coordinate: vec![1.0, -2.0],
            witness: w.iter().copied().collect(),
            residual: 0.0,
        };
        assert!(validate_pair(&op, &p, 9, 20).unwrap() < 1e-12);
    }

    #[test]
    fn mixing_symgrad_uses_three_directions() {
        let op = catalog("symgrad", &CatalogParams::n(2)).unwrap();
        let m = mixing_check(&op, &Budget::default(), &tol(), 0).unwrap();
        assert!(m.is_verified());
        assert_eq!(m.pairs().len(), 3);
        assert!(m.de_morgan_consistent);
        assert_eq!(m.directions_used, 3);
    }

    #[test]
    fn mixing_laplacian_not_found() {
        let op = catalog("laplacian", &CatalogParams::n(2)).unwrap();
        let m = mixing_check(&op, &Budget::default(), &tol(), 0).unwrap();
        assert!(matches!(
            m.verdict,
            MixingVerdict::NotFoundWithinBudget { span_dim: 0 }
        ));
        assert_eq!(m.dual_intersection_dim, 1);
    }
}
