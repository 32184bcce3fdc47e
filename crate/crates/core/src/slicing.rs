//! Slices of first-order operators along a spectral pair (ξ, e): the source
//! space V_e, the target space W_ξ^e, and the restricted operator on π_ξ.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::classify::{
    best_witness, complex_ellipticity_constant, ellipticity_constant, mixing_check, pair_residual,
    rank_one_cone_search, validate_pair, Budget, EllipticityResult, MixingResult, SpectralPair,
    Tolerances, Tri,
};
use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::sampling::{dot, norm, rng, unit_vec};
use crate::subspace::{hyperplane_basis, nullspace, subspace_orthocomplement, subspace_span, Subspace};

const CHECK_SEED: u64 = 0x511c_e5ed;

#[derive(Debug, Clone)]
pub struct SliceOperator {
    pub parent: Operator,
    pub pair: SpectralPair,
    pub ve: Subspace,
    /// X_ξ^e, the covectors whose bilinear form lies in Y_ξ^e.
    pub xxe: Subspace,
    pub wxe: Subspace,
    /// p^e : V → V_e.
    pub proj_e: DMatrix<f64>,
    /// p_ξ^e : W → W_ξ^e.
    pub proj_xe: DMatrix<f64>,
    /// Orthonormal basis of π_ξ (n×(n−1)), the coordinates of `restricted`.
    pub plane: DMatrix<f64>,
    /// B_ξ^e in n−1 variables, from V_e coordinates to W_ξ^e coordinates.
    pub restricted: Operator,
}

impl SliceOperator {
    /// Symbol of A_ξ^e = p_ξ^e ∘ 𝔸(η) ∘ p^e in the parent's coordinates.
    pub fn sub_symbol(&self, eta: &[f64]) -> Result<DMatrix<f64>> {
        Ok(&self.proj_xe * self.parent.symbol(eta)? * &self.proj_e)
    }

    /// Maps a pair of the restricted operator back into the parent.
    pub fn lift_pair(&self, p: &SpectralPair) -> SpectralPair {
        let xi = &self.plane * DVector::from_column_slice(&p.xi);
        let e = self.ve.basis() * DVector::from_column_slice(&p.coordinate);
        let w = self.wxe.basis() * DVector::from_column_slice(&p.witness);
        SpectralPair {
            xi: xi.iter().copied().collect(),
            coordinate: e.iter().copied().collect(),
            witness: w.iter().copied().collect(),
            residual: p.residual,
        }
    }
}

/// G with G[(j·N+ℓ), i] = (A_{e_j})_{iℓ}; column i is B_{e_i} flattened.
fn form_map(op: &Operator) -> Result<DMatrix<f64>> {
    let (n, nv, m) = (op.n(), op.dim_v(), op.dim_w());
    let mut g = DMatrix::zeros(n * nv, m);
    for j in 0..n {
        let mut ej = vec![0.0; n];
        ej[j] = 1.0;
        let s = op.symbol(&ej)?;
        for i in 0..m {
            for l in 0..nv {
                g[(j * nv + l, i)] = s[(i, l)];
            }
        }
    }
    Ok(g)
}

/// Y_ξ^e in flattened n×N coordinates: span{ξ⊗e} if dim V = 1, otherwise
/// ℝ^n⊗e + ξ⊗V*.
fn y_space(n: usize, nv: usize, xi: &[f64], e: &[f64], tol: f64) -> Result<Subspace> {
    let outer = |a: &[f64], b: &[f64]| {
        let mut v = DVector::zeros(n * nv);
        for j in 0..n {
            for l in 0..nv {
                v[j * nv + l] = a[j] * b[l];
            }
        }
        v
    };
    let mut vecs = Vec::new();
    if nv == 1 {
        vecs.push(outer(xi, e));
    } else {
        for j in 0..n {
            let mut ej = vec![0.0; n];
            ej[j] = 1.0;
            vecs.push(outer(&ej, e));
        }
        for l in 0..nv {
            let mut el = vec![0.0; nv];
            el[l] = 1.0;
            vecs.push(outer(xi, &el));
        }
    }
    subspace_span(&vecs, n * nv, tol)
}

pub fn build_slice(op: &Operator, pair: &SpectralPair) -> Result<SliceOperator> {
    if op.order() != 1 {
        return Err(Error::Unsupported("slices are built for first-order operators".into()));
    }
    let (n, nv) = (op.n(), op.dim_v());
    if n < 2 {
        return Err(Error::Unsupported("slicing needs n ≥ 2".into()));
    }
    if pair.xi.len() != n || pair.coordinate.len() != nv {
        return Err(Error::DimensionMismatch {
            expected: n + nv,
            got: pair.xi.len() + pair.coordinate.len(),
        });
    }
    if norm(&pair.xi) == 0.0 || norm(&pair.coordinate) == 0.0 {
        return Err(Error::TrivialPair);
    }
    let tol = 1e-9;
    let xi: Vec<f64> = pair.xi.iter().map(|x| x / norm(&pair.xi)).collect();
    let e: Vec<f64> = pair.coordinate.iter().map(|x| x / norm(&pair.coordinate)).collect();

    let ve = if nv == 1 {
        Subspace::full(1)
    } else {
        nullspace(&DMatrix::from_row_slice(1, nv, &e), tol)
    };
    let y = y_space(n, nv, &xi, &e, tol)?;
    let y_perp = subspace_orthocomplement(&y);
    let g = form_map(op)?;
    let xxe = nullspace(&(y_perp.basis().transpose() * &g), tol);
    let wxe = subspace_orthocomplement(&xxe);
    if wxe.is_zero() {
        return Err(Error::Degenerate("W_ξ^e is trivial".into()));
    }
    let plane = hyperplane_basis(&xi)?;
    let qv = ve.basis();
    let qw = wxe.basis();
    let symbols: Vec<DMatrix<f64>> = (0..n - 1)
        .map(|i| {
            let eta: Vec<f64> = plane.column(i).iter().copied().collect();
            Ok(qw.transpose() * op.symbol(&eta)? * qv)
        })
        .collect::<Result<_>>()?;
    let mut restricted = Operator::first_order(symbols)?;
    if let Some(name) = op.name() {
        restricted = restricted.with_name(format!("{name}|slice"));
    }
    Ok(SliceOperator {
        parent: op.clone(),
        pair: pair.clone(),
        proj_e: ve.projector(),
        proj_xe: wxe.projector(),
        ve,
        xxe,
        wxe,
        plane,
        restricted,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SliceReport {
    pub dim_ve: usize,
    pub dim_xxe: usize,
    pub dim_wxe: usize,
    pub dimension_audit: bool,
    /// max ‖p_ξ^e 𝔸(η)v‖/‖A‖ over (ℝ^n × ℓ_e) + (ℓ_ξ × V).
    pub vanishing_residual: f64,
    /// max ‖(p_ξ^e − I) 𝔸(η)v‖/‖A‖ over π_ξ × V_e.
    pub restriction_residual: f64,
    /// max ‖A_ξ^e(η) − A_ξ^e(p_π η)‖/‖A‖.
    pub invariance_residual: f64,
    /// max ‖restricted(z) − Q_Wᵀ A_ξ^e(plane·z) Q_V‖/‖A‖.
    pub intrinsic_residual: f64,
    pub elliptic: EllipticityResult,
    pub complex_elliptic: Option<EllipticityResult>,
    pub mixing: Option<MixingResult>,
    /// Largest parent residual among lifted slice pairs.
    pub containment_residual: Option<f64>,
    pub lifted_pairs: usize,
    pub ok: bool,
}

fn max_over<F: FnMut(&mut rand_chacha::ChaCha8Rng) -> Result<f64>>(count: usize, stream: u64, mut f: F) -> Result<f64> {
    let mut r = rng(CHECK_SEED, stream);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        worst = worst.max(f(&mut r)?);
    }
    Ok(worst)
}

pub fn check_slice_properties(
    op: &Operator,
    pair: &SpectralPair,
    budget: &Budget,
    tol: &Tolerances,
    seed: u64,
) -> Result<SliceReport> {
    let s = build_slice(op, pair)?;
    let (n, nv) = (op.n(), op.dim_v());
    let scale = op.norm();
    let xi: Vec<f64> = pair.xi.iter().map(|x| x / norm(&pair.xi)).collect();
    let e: Vec<f64> = pair.coordinate.iter().map(|x| x / norm(&pair.coordinate)).collect();
    let pw = &s.proj_xe;

    let vanishing = max_over(100, 1, |r| {
        let v = DVector::from_vec(unit_vec(r, nv));
        let mut out = (pw * op.symbol(&xi)? * v).norm();
        if nv > 1 {
            let eta = unit_vec(r, n);
            out = out.max((pw * op.symbol(&eta)? * DVector::from_column_slice(&e)).norm());
        }
        Ok(out / scale)
    })?;
    let restriction = max_over(100, 2, |r| {
        let z = DVector::from_vec(unit_vec(r, n - 1));
        let eta: Vec<f64> = (&s.plane * z).iter().copied().collect();
        let v = s.ve.basis() * DVector::from_vec(unit_vec(r, s.ve.dim()));
        let a = op.symbol(&eta)? * v;
        Ok((pw * &a - a).norm() / scale)
    })?;
    let invariance = max_over(100, 3, |r| {
        let eta = unit_vec(r, n);
        let c = dot(&eta, &xi);
        let projected: Vec<f64> = eta.iter().zip(&xi).map(|(a, b)| a - c * b).collect();
        Ok((s.sub_symbol(&eta)? - s.sub_symbol(&projected)?).norm() / scale)
    })?;
    let intrinsic = max_over(20, 4, |r| {
        let z = unit_vec(r, n - 1);
        let eta: Vec<f64> = (&s.plane * DVector::from_column_slice(&z)).iter().copied().collect();
        let expect = s.wxe.basis().transpose() * s.sub_symbol(&eta)? * s.ve.basis();
        Ok((s.restricted.symbol(&z)? - expect).norm() / scale)
    })?;

    let elliptic = ellipticity_constant(&s.restricted, budget, tol)?;
    let parent_complex = complex_ellipticity_constant(op, budget, tol)?;
    let complex_elliptic = if parent_complex.verdict == Tri::Yes {
        Some(complex_ellipticity_constant(&s.restricted, budget, tol)?)
    } else {
        None
    };
    let parent_mixing = mixing_check(op, budget, tol, seed)?;
    let mut containment = None;
    let mut lifted = 0;
    let mixing = if parent_mixing.is_verified() {
        let m = mixing_check(&s.restricted, budget, tol, seed)?;
        let mut worst: f64 = 0.0;
        for p in m.pairs() {
            let lp = s.lift_pair(p);
            worst = worst.max(validate_pair(op, &lp, CHECK_SEED, 64)?);
            lifted += 1;
        }
        containment = Some(worst);
        Some(m)
    } else {
        None
    };

    let dimension_audit = s.xxe.dim() + s.wxe.dim() == op.dim_w();
    let ok = dimension_audit
        && vanishing <= 1e-10
        && restriction <= 1e-10
        && invariance <= 1e-10
        && intrinsic <= 1e-10
        && (parent_elliptic_yes(op, budget, tol)? <= (elliptic.verdict == Tri::Yes))
        && complex_elliptic.as_ref().is_none_or(|c| c.verdict == Tri::Yes)
        && mixing.as_ref().is_none_or(|m| m.is_verified())
        && containment.is_none_or(|c| c <= tol.pair);
    Ok(SliceReport {
        dim_ve: s.ve.dim(),
        dim_xxe: s.xxe.dim(),
        dim_wxe: s.wxe.dim(),
        dimension_audit,
        vanishing_residual: vanishing,
        restriction_residual: restriction,
        invariance_residual: invariance,
        intrinsic_residual: intrinsic,
        elliptic,
        complex_elliptic,
        mixing,
        containment_residual: containment,
        lifted_pairs: lifted,
        ok,
    })
}

fn parent_elliptic_yes(op: &Operator, budget: &Budget, tol: &Tolerances) -> Result<bool> {
    Ok(ellipticity_constant(op, budget, tol)?.verdict == Tri::Yes)
}

/// A pair (η, f) of the parent with η ∈ π_ξ and f ∈ (V_e)*, found on the slice.
pub fn find_transversal_pair(
    op: &Operator,
    pair: &SpectralPair,
    budget: &Budget,
    tol: &Tolerances,
    seed: u64,
) -> Result<SpectralPair> {
    let s = build_slice(op, pair)?;
    let search = rank_one_cone_search(&s.restricted, budget, tol, seed)?;
    for p in &search.pairs {
        let mut lp = s.lift_pair(p);
        lp.residual = validate_pair(op, &lp, CHECK_SEED, 64)?;
        if lp.residual <= tol.pair {
            return Ok(lp);
        }
    }
    Err(Error::NotFound(
        "no rank-one pair on the slice; this contradicts the polarization guarantee".into(),
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct Polarization {
    pub t: f64,
    pub v: Vec<f64>,
    pub plus: SpectralPair,
    pub minus: SpectralPair,
}

fn residual_pm(op: &Operator, xp: &[f64], xm: &[f64], e: &[f64], f: &[f64], t: f64) -> Result<f64> {
    let ep: Vec<f64> = e.iter().zip(f).map(|(a, b)| a + t * b).collect();
    let em: Vec<f64> = e.iter().zip(f).map(|(a, b)| a - t * b).collect();
    Ok(pair_residual(op, xp, &ep)?.max(pair_residual(op, xm, &em)?))
}

/// Finds v = t·f with (ξ+η, e+v) and (ξ−η, e−v) both in the spectrum.
pub fn polarize(
    op: &Operator,
    pair1: &SpectralPair,
    pair2: &SpectralPair,
    tol: &Tolerances,
) -> Result<Polarization> {
    if op.order() != 1 {
        return Err(Error::Unsupported("polarization is first order".into()));
    }
    let (xi, e) = (&pair1.xi, &pair1.coordinate);
    let (eta, f) = (&pair2.xi, &pair2.coordinate);
    if xi.len() != op.n() || eta.len() != op.n() || e.len() != op.dim_v() || f.len() != op.dim_v() {
        return Err(Error::DimensionMismatch {
            expected: op.n() + op.dim_v(),
            got: eta.len() + f.len(),
        });
    }
    if pair1.is_trivial() || pair2.is_trivial() {
        return Err(Error::TrivialPair);
    }
    if dot(xi, eta).abs() > 1e-10 * norm(xi) * norm(eta) {
        return Err(Error::InvalidParams("η must lie in π_ξ".into()));
    }
    if op.dim_v() > 1 && dot(e, f).abs() > 1e-10 * norm(e) * norm(f) {
        return Err(Error::InvalidParams("f must lie in (V_e)*".into()));
    }
    let xp: Vec<f64> = xi.iter().zip(eta).map(|(a, b)| a + b).collect();
    let xm: Vec<f64> = xi.iter().zip(eta).map(|(a, b)| a - b).collect();

    let mut cands = vec![0.0];
    for j in -6..=6 {
        let t = 10f64.powi(j);
        cands.push(t);
        cands.push(-t);
    }
    let mut scored: Vec<(f64, f64)> = cands
        .iter()
        .map(|&t| Ok((t, residual_pm(op, &xp, &xm, e, f, t)?)))
        .collect::<Result<_>>()?;
    // Densify around the best grid points with a golden-section pass.
    scored.sort_by(|a, b| a.1.total_cmp(&b.1));
    let seeds: Vec<f64> = scored.iter().take(4).map(|s| s.0).collect();
    for t0 in seeds {
        let width = if t0 == 0.0 { 1e-6 } else { t0.abs() * 9.0 };
        let (mut lo, mut hi) = (t0 - width, t0 + width);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if residual_pm(op, &xp, &xm, e, f, a)? < residual_pm(op, &xp, &xm, e, f, b)? {
                hi = b;
            } else {
                lo = a;
            }
        }
        let t = 0.5 * (lo + hi);
        scored.push((t, residual_pm(op, &xp, &xm, e, f, t)?));
    }
    let best = scored
        .iter()
        .filter(|s| s.1 <= tol.pair)
        .min_by(|a, b| a.0.abs().total_cmp(&b.0.abs()))
        .copied()
        .ok_or_else(|| {
            Error::NotFound("no polarizing t found; this contradicts the polarization guarantee".into())
        })?;
    let t = best.0;
    let make = |x: &[f64], sign: f64| -> Result<SpectralPair> {
        let coord: Vec<f64> = e.iter().zip(f).map(|(a, b)| a + sign * t * b).collect();
        let (w, _) = best_witness(op, x, &coord)?;
        let mut p = SpectralPair {
            xi: x.to_vec(),
            coordinate: coord,
            witness: w.iter().copied().collect(),
            residual: 0.0,
        };
        p.residual = validate_pair(op, &p, CHECK_SEED, 64)?;
        Ok(p)
    };
    Ok(Polarization {
        t,
        v: f.iter().map(|x| t * x).collect(),
        plus: make(&xp, 1.0)?,
        minus: make(&xm, -1.0)?,
    })
}
