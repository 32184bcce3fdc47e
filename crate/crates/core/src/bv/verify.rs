//! Slicing identities checked on synthetic fields: both sides are computed
//! exactly except for the transverse midpoint quadrature.

use nalgebra::DVector;
use serde::Serialize;

use super::field::{apply_operator_analytic, same_direction, SyntheticField};
use super::geometry::{slab_area, BoxN};
use super::profile::{BvProfile1D, Part};
use crate::classify::SpectralPair;
use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::sampling::{dot, norm};
use crate::slicing::build_slice;
use crate::subspace::hyperplane_basis;
use crate::tensor::{MonomialBasis, SymCoords};

const ALIGN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct PartValues {
    pub a: f64,
    pub c: f64,
    pub j: f64,
    pub total: f64,
}

impl PartValues {
    fn from_fn<F: FnMut(Part) -> f64>(mut f: F) -> Self {
        PartValues {
            a: f(Part::A),
            c: f(Part::C),
            j: f(Part::J),
            total: f(Part::All),
        }
    }

    fn diff(&self, o: &PartValues) -> PartValues {
        PartValues {
            a: (self.a - o.a).abs(),
            c: (self.c - o.c).abs(),
            j: (self.j - o.j).abs(),
            total: (self.total - o.total).abs(),
        }
    }

    pub fn max(&self) -> f64 {
        self.a.max(self.c).max(self.j).max(self.total)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LineSlicingReport {
    pub lines: usize,
    pub lhs: PartValues,
    pub rhs: PartValues,
    pub abs_err: PartValues,
    pub tv_lhs: Option<PartValues>,
    pub tv_rhs: PartValues,
    pub tv_abs_err: Option<PartValues>,
    pub warnings: Vec<String>,
}

/// Midpoint grid over the projection of `b` onto the columns of `plane`:
/// returns (points in ℝ^n, cell measure).
fn transverse_grid(b: &BoxN, plane: &nalgebra::DMatrix<f64>, per_axis: usize) -> (Vec<Vec<f64>>, f64) {
    let n = b.n();
    let d = plane.ncols();
    if d == 0 {
        return (vec![vec![0.0; n]], 1.0);
    }
    let ranges: Vec<(f64, f64)> = (0..d)
        .map(|i| {
            let col: Vec<f64> = plane.column(i).iter().copied().collect();
            b.projection(&col)
        })
        .collect();
    let cell: f64 = ranges.iter().map(|(l, h)| (h - l) / per_axis as f64).product();
    let mut pts = Vec::new();
    let total = per_axis.pow(d as u32);
    for idx in 0..total {
        let mut rem = idx;
        let mut y = DVector::zeros(n);
        for (i, (l, h)) in ranges.iter().enumerate() {
            let c = rem % per_axis;
            rem /= per_axis;
            let z = l + (h - l) * (c as f64 + 0.5) / per_axis as f64;
            y += plane.column(i) * z;
        }
        pts.push(y.iter().copied().collect());
    }
    (pts, cell)
}

fn alignment_warnings(field: &SyntheticField, dir: &[f64], what: &str) -> Vec<String> {
    field
        .terms
        .iter()
        .enumerate()
        .filter(|(_, t)| {
            (!t.profile.jumps.is_empty() || !t.profile.cantor.is_empty())
                && dot(&t.nu, dir).abs() <= ALIGN_TOL
        })
        .map(|(i, _)| {
            format!("term {i}: singular set contains the {what} direction; slicing is degenerate there")
        })
        .collect()
}

/// The section t ↦ ⟨e, u(y + t·dir)⟩ of a first-order reading of `field`, as
/// a profile whose derivative measure is exact. Values agree with the section
/// up to an additive constant; terms constant along the line are dropped.
pub fn section(field: &SyntheticField, y: &[f64], dir: &[f64], e: &[f64]) -> Result<BvProfile1D> {
    if y.len() != field.n || dir.len() != field.n || e.len() != field.dim_v {
        return Err(Error::DimensionMismatch {
            expected: field.n,
            got: y.len(),
        });
    }
    let mut out = BvProfile1D::default();
    for t in &field.terms {
        let kappa = dot(&t.nu, dir);
        let c = dot(e, &t.b);
        if kappa == 0.0 || c == 0.0 {
            continue;
        }
        out = out.plus(&t.profile.reparametrized(dot(&t.nu, y), kappa).scaled(c));
    }
    Ok(out)
}

/// ⟨w, A^σ u⟩(B) against |ξ|·∫_{π_ξ} D^σ u^E_{y,ξ̂}(B_y) dy for each part σ,
/// plus the total-variation version. For k ≥ 2 the sections are those of
/// ∇^{k−1}u paired with E.
pub fn verify_line_slicing(
    op: &Operator,
    field: &SyntheticField,
    pair: &SpectralPair,
    b: &BoxN,
    lines: usize,
) -> Result<LineSlicingReport> {
    let n = op.n();
    let k = op.order();
    if lines == 0 {
        return Err(Error::InvalidParams("need at least one line".into()));
    }
    if b.n() != n || pair.xi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.n().min(pair.xi.len()),
        });
    }
    let lifted = field.lifted(k)?;
    if pair.coordinate.len() != lifted.dim_v {
        return Err(Error::DimensionMismatch {
            expected: lifted.dim_v,
            got: pair.coordinate.len(),
        });
    }
    if pair.witness.len() < op.dim_w() {
        return Err(Error::DimensionMismatch {
            expected: op.dim_w(),
            got: pair.witness.len(),
        });
    }
    let xin = norm(&pair.xi);
    if xin == 0.0 {
        return Err(Error::TrivialPair);
    }
    let xi: Vec<f64> = pair.xi.iter().map(|x| x / xin).collect();
    let w = &pair.witness[..op.dim_w()];

    let rep = apply_operator_analytic(op, field)?;
    let lhs = PartValues::from_fn(|p| rep.paired(w, b, p));
    let tv_lhs = [Part::A, Part::C, Part::J, Part::All]
        .iter()
        .map(|&p| rep.paired_variation(w, b, p))
        .collect::<Result<Vec<f64>>>()
        .ok()
        .map(|v| PartValues {
            a: v[0],
            c: v[1],
            j: v[2],
            total: v[3],
        });

    // Section data per term: coefficient ⟨E, b'_p⟩, slope κ_p = ξ̂·ν_p.
    let coeffs: Vec<f64> = lifted.terms.iter().map(|t| dot(&pair.coordinate, &t.b)).collect();
    let mut groups: Vec<(Vec<f64>, BvProfile1D)> = Vec::new();
    for (t, c) in lifted.terms.iter().zip(&coeffs) {
        let scaled = t.profile.scaled(*c);
        match groups.iter_mut().find(|(nu, _)| same_direction(nu, &t.nu)) {
            Some((_, p)) => *p = p.plus(&scaled),
            None => groups.push((t.nu.clone(), scaled)),
        }
    }

    let plane = if n > 1 {
        hyperplane_basis(&xi)?
    } else {
        nalgebra::DMatrix::zeros(1, 0)
    };
    let (points, cell) = transverse_grid(b, &plane, lines);
    let mut rhs = PartValues::default();
    let mut tv_rhs = PartValues::default();
    for y in &points {
        let Some((t0, t1)) = b.clip_line(y, &xi) else {
            continue;
        };
        for (nu, prof) in &groups {
            let kappa = dot(nu, &xi);
            if kappa.abs() <= 1e-14 {
                continue;
            }
            let s0 = dot(nu, y);
            let (sa, sb) = (s0 + kappa * t0, s0 + kappa * t1);
            let (lo, hi) = (sa.min(sb), sa.max(sb));
            let sgn = kappa.signum();
            rhs.a += sgn * prof.measure(lo, hi, Part::A) * cell;
            rhs.c += sgn * prof.measure(lo, hi, Part::C) * cell;
            rhs.j += sgn * prof.measure(lo, hi, Part::J) * cell;
            tv_rhs.a += prof.variation(lo, hi, Part::A) * cell;
            tv_rhs.c += prof.variation(lo, hi, Part::C) * cell;
            tv_rhs.j += prof.variation(lo, hi, Part::J) * cell;
        }
    }
    for v in [&mut rhs, &mut tv_rhs] {
        v.a *= xin;
        v.c *= xin;
        v.j *= xin;
        v.total = v.a + v.c + v.j;
    }
    Ok(LineSlicingReport {
        lines,
        abs_err: lhs.diff(&rhs),
        tv_abs_err: tv_lhs.map(|t| t.diff(&tv_rhs)),
        lhs,
        rhs,
        tv_lhs,
        tv_rhs,
        warnings: alignment_warnings(field, &xi, "slicing"),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct JumpDensityReport {
    pub measured: Vec<f64>,
    pub expected: Vec<f64>,
    /// Jump datum Δ = ⟨F⁺ − F⁻, ν^{⊗(k−1)}⟩ with F = ∇^{k−1}u.
    pub datum: Vec<f64>,
    pub area: f64,
    pub rel_err: f64,
}

/// Compares the jump part of A u against 𝔸^k(ν)[Δ]·H^{n−1}(J ∩ B) for a
/// single-step field.
pub fn verify_jump_density(op: &Operator, field: &SyntheticField, b: &BoxN) -> Result<JumpDensityReport> {
    let [term] = field.terms.as_slice() else {
        return Err(Error::InvalidField("expected a single-term field".into()));
    };
    let prof = &term.profile;
    if prof.jumps.len() != 1 || !prof.ac.is_empty() || !prof.cantor.is_empty() {
        return Err(Error::InvalidField("expected a single step profile".into()));
    }
    let jump = prof.jumps[0];
    let k = op.order();
    let nu = &term.nu;
    // F⁺ − F⁻ in monomial coordinates, contracted with ν^{⊗(k−1)}
    let f_jump = SymCoords::pure(&term.b, nu, k - 1)?.coeffs * jump.h;
    let lower = MonomialBasis::new(field.n, k - 1)?;
    let mut datum = DVector::zeros(field.dim_v);
    for (bi, beta) in lower.indices().iter().enumerate() {
        let wgt = beta.multinomial() * beta.monomial(nu);
        for l in 0..field.dim_v {
            datum[l] += wgt * f_jump[bi * field.dim_v + l];
        }
    }
    let area = slab_area(b, nu, jump.t);
    let expected = op.symbol(nu)? * &datum * area;
    let measured = apply_operator_analytic(op, field)?.evaluate(b, Part::J);
    let scale = expected.norm();
    let diff = (&measured - &expected).norm();
    let rel_err = if scale > 0.0 {
        diff / scale
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(JumpDensityReport {
        measured: measured.iter().copied().collect(),
        expected: expected.iter().copied().collect(),
        datum: datum.iter().copied().collect(),
        area,
        rel_err,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HyperplaneSlicingReport {
    pub stations: usize,
    /// p_ξ^e[A^σ u](B) per part, in W coordinates.
    pub lhs: Vec<Vec<f64>>,
    pub rhs: Vec<Vec<f64>>,
    /// Max abs error per part, ordered a, c, j, total.
    pub abs_err: [f64; 4],
    /// ‖p_ξ^e 𝔸(ν)b‖ for terms whose normal is parallel to ξ.
    pub normal_terms_through_projection: Vec<f64>,
    pub warnings: Vec<String>,
}

/// p_ξ^e[A u](B) against ∫_{ℓ_ξ} B_ξ^e v_z(B_z) dz, v_z(y) = p^e u(z + y), n = 2.
pub fn verify_hyperplane_slicing(
    op: &Operator,
    field: &SyntheticField,
    pair: &SpectralPair,
    b: &BoxN,
    stations: usize,
) -> Result<HyperplaneSlicingReport> {
    if op.order() != 1 || op.n() != 2 {
        return Err(Error::Unsupported(
            "hyperplane slicing is implemented for first-order operators in two variables".into(),
        ));
    }
    if stations == 0 {
        return Err(Error::InvalidParams("need at least one station".into()));
    }
    let slice = build_slice(op, pair)?;
    let rep = apply_operator_analytic(op, field)?;
    let xin = norm(&pair.xi);
    let xi: Vec<f64> = pair.xi.iter().map(|x| x / xin).collect();
    let eta: Vec<f64> = slice.plane.column(0).iter().copied().collect();
    let b1 = slice.restricted.symbol(&[1.0])?;
    let qv = slice.ve.basis();
    let qw = slice.wxe.basis();

    let parts = [Part::A, Part::C, Part::J];
    let lhs: Vec<DVector<f64>> = parts
        .iter()
        .map(|&p| &slice.proj_xe * rep.evaluate(b, p))
        .collect();

    let (lo, hi) = b.projection(&xi);
    let dz = (hi - lo) / stations as f64;
    let vcoef: Vec<DVector<f64>> = field
        .terms
        .iter()
        .map(|t| qv.transpose() * DVector::from_column_slice(&t.b))
        .collect();
    let mut rhs = vec![DVector::zeros(op.dim_w()); 3];
    for i in 0..stations {
        let z = lo + dz * (i as f64 + 0.5);
        let base: Vec<f64> = xi.iter().map(|x| z * x).collect();
        let Some((y0, y1)) = b.clip_line(&base, &eta) else {
            continue;
        };
        for (pi, part) in parts.iter().enumerate() {
            let mut dv = DVector::zeros(qv.ncols());
            for (t, c) in field.terms.iter().zip(&vcoef) {
                let lambda = dot(&t.nu, &eta);
                if lambda.abs() <= 1e-14 {
                    continue;
                }
                let s0 = dot(&t.nu, &base);
                let (sa, sb) = (s0 + lambda * y0, s0 + lambda * y1);
                let m = t.profile.measure(sa.min(sb), sa.max(sb), *part);
                dv += c * (lambda.signum() * m);
            }
            rhs[pi] += qw * (&b1 * dv) * dz;
        }
    }
    let total_l: DVector<f64> = lhs.iter().sum();
    let total_r: DVector<f64> = rhs.iter().sum();
    let mut abs_err = [0.0; 4];
    for i in 0..3 {
        abs_err[i] = (&lhs[i] - &rhs[i]).amax();
    }
    abs_err[3] = (&total_l - &total_r).amax();
    let normal_terms = rep
        .terms
        .iter()
        .filter(|t| (dot(&t.nu, &xi).abs() - 1.0).abs() <= 1e-12)
        .map(|t| (&slice.proj_xe * &t.weight).norm())
        .collect();
    let to_vec = |v: &DVector<f64>| v.iter().copied().collect::<Vec<f64>>();
    let mut lhs_out: Vec<Vec<f64>> = lhs.iter().map(to_vec).collect();
    lhs_out.push(to_vec(&total_l));
    let mut rhs_out: Vec<Vec<f64>> = rhs.iter().map(to_vec).collect();
    rhs_out.push(to_vec(&total_r));
    Ok(HyperplaneSlicingReport {
        stations,
        lhs: lhs_out,
        rhs: rhs_out,
        abs_err,
        normal_terms_through_projection: normal_terms,
        warnings: alignment_warnings(field, &eta, "slice"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog, CatalogParams};
    use crate::classify::best_witness;

    fn pair(op: &Operator, xi: &[f64], e: &[f64]) -> SpectralPair {
        let (w, res) = best_witness(op, xi, e).unwrap();
        SpectralPair {
            xi: xi.to_vec(),
            coordinate: e.to_vec(),
            witness: w.iter().copied().collect(),
            residual: res,
        }
    }

    #[test]
    fn section_matches_field() {
        let prof = BvProfile1D::density(0.0, 1.0, &[1.0, -2.0])
            .plus(&BvProfile1D::step(0.3, 1.5))
            .plus(&BvProfile1D::cantor_on(0.5, 0.9, -0.7));
        let f = SyntheticField::new(
            2,
            2,
            vec![
                super::super::FieldTerm { nu: vec![0.6, 0.8], b: vec![1.0, 2.0], profile: prof.clone() },
                super::super::FieldTerm { nu: vec![-0.8, 0.6], b: vec![0.5, -1.0], profile: prof },
            ],
            BoxN::unit(2),
        )
        .unwrap();
        let (y, d, e) = ([0.2, 0.1], [0.28, 0.96], [0.3, -0.4]);
        let sec = section(&f, &y, &d, &e).unwrap();
        let at = |t: f64| {
            let x = [y[0] + t * d[0], y[1] + t * d[1]];
            let u = f.eval(1, &x);
            e[0] * u[0] + e[1] * u[1]
        };
        let (t0, c0) = (0.05, sec.value(0.05));
        for i in 0..100 {
            let t = 0.05 + 0.9 * i as f64 / 99.0;
            assert!((sec.value(t) - c0 - (at(t) - at(t0))).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_step_lines() {
        let op = catalog("gradient", &CatalogParams::n(2)).unwrap();
        let f = SyntheticField::single(&[1.0, 0.0], &[1.0], BvProfile1D::step(0.5, 1.0), BoxN::unit(2)).unwrap();
        let r = verify_line_slicing(&op, &f, &pair(&op, &[1.0, 0.0], &[1.0]), &BoxN::unit(2), 16).unwrap();
        assert!((r.lhs.j - 1.0).abs() < 1e-15 && (r.rhs.j - 1.0).abs() < 1e-15);
        assert!(r.abs_err.max() < 1e-12);
    }

    #[test]
    fn oblique_lines_converge() {
        let op = catalog("gradient", &CatalogParams::n(2)).unwrap();
        let f = SyntheticField::single(&[1.0, 0.0], &[1.0], BvProfile1D::step(0.4, 1.0), BoxN::unit(2)).unwrap();
        let p = pair(&op, &[0.6, 0.8], &[1.0]);
        let coarse = verify_line_slicing(&op, &f, &p, &BoxN::unit(2), 16).unwrap();
        let fine = verify_line_slicing(&op, &f, &p, &BoxN::unit(2), 256).unwrap();
        assert!(fine.abs_err.j < coarse.abs_err.j.max(1e-14));
        // midpoint rule on an indicator in the transverse variable: first order
        assert!(fine.abs_err.j < 2.0 / 256.0, "{coarse:?} {fine:?}");
    }

    #[test]
    fn jump_density_gradient() {
        let op = catalog("gradient", &CatalogParams::n(2)).unwrap();
        let f = SyntheticField::single(&[1.0, 0.0], &[1.0], BvProfile1D::step(0.5, 2.0), BoxN::unit(2)).unwrap();
        let r = verify_jump_density(&op, &f, &BoxN::unit(2)).unwrap();
        assert!((r.measured[0] - 2.0).abs() < 1e-15);
        assert!(r.rel_err <= 1e-12);
    }

    #[test]
    fn hyperplane_symgrad() {
        let op = catalog("symgrad", &CatalogParams::n(2)).unwrap();
        let prof = BvProfile1D::step(0.5, 1.0).plus(&BvProfile1D::density(0.0, 1.0, &[0.0, 1.0]));
        let f = SyntheticField::single(&[0.0, 1.0], &[0.0, 1.0], prof, BoxN::unit(2)).unwrap();
        let r = verify_hyperplane_slicing(&op, &f, &pair(&op, &[1.0, 0.0], &[1.0, 0.0]), &BoxN::unit(2), 64)
            .unwrap();
        assert!(r.abs_err.iter().all(|e| *e < 1e-12), "{r:?}");
    }
}
