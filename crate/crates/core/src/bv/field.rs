//! Synthetic fields u(x) = Σ_p b_p G_p(x·ν_p) with known BV structure, and
//! the analytic decomposition of A u.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::geometry::{area_pieces, section_area, unit_normal, BoxN};
use super::profile::{integrate_abs, poly_against_cantor, BvProfile1D, Part, ProfileSpec};
use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::tensor::SymCoords;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldTerm {
    pub nu: Vec<f64>,
    pub b: Vec<f64>,
    /// Derivative measure of the (k−1)-th derivative of the scalar profile.
    pub profile: BvProfile1D,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticField {
    pub n: usize,
    pub dim_v: usize,
    pub terms: Vec<FieldTerm>,
    pub domain: BoxN,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub nu: Vec<f64>,
    pub b: Vec<f64>,
    pub profile: ProfileSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub n: usize,
    #[serde(rename = "dimV")]
    pub dim_v: usize,
    pub terms: Vec<TermSpec>,
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
}

impl SyntheticField {
    pub fn new(n: usize, dim_v: usize, terms: Vec<FieldTerm>, domain: BoxN) -> Result<Self> {
        if n == 0 || n > 3 {
            return Err(Error::InvalidField("fields are supported for 1 ≤ n ≤ 3".into()));
        }
        if dim_v == 0 {
            return Err(Error::InvalidField("dimV must be positive".into()));
        }
        if domain.n() != n {
            return Err(Error::InvalidField(format!(
                "box has {} axes, expected {n}",
                domain.n()
            )));
        }
        for t in &terms {
            if t.nu.len() != n || t.b.len() != dim_v {
                return Err(Error::InvalidField(format!(
                    "term needs nu of length {n} and b of length {dim_v}"
                )));
            }
            unit_normal(&t.nu)?;
        }
        Ok(SyntheticField {
            n,
            dim_v,
            terms,
            domain,
        })
    }

    pub fn single(nu: &[f64], b: &[f64], profile: BvProfile1D, domain: BoxN) -> Result<Self> {
        Self::new(
            nu.len(),
            b.len(),
            vec![FieldTerm {
                nu: nu.to_vec(),
                b: b.to_vec(),
                profile,
            }],
            domain,
        )
    }

    pub fn from_spec(spec: &FieldSpec) -> Result<Self> {
        let terms = spec
            .terms
            .iter()
            .map(|t| {
                Ok(FieldTerm {
                    nu: t.nu.clone(),
                    b: t.b.clone(),
                    profile: BvProfile1D::from_spec(&t.profile)?,
                })
            })
            .collect::<Result<_>>()?;
        Self::new(spec.n, spec.dim_v, terms, BoxN::new(&spec.bounds)?)
    }

    pub fn to_spec(&self) -> FieldSpec {
        FieldSpec {
            n: self.n,
            dim_v: self.dim_v,
            terms: self
                .terms
                .iter()
                .map(|t| TermSpec {
                    nu: t.nu.clone(),
                    b: t.b.clone(),
                    profile: t.profile.to_spec(),
                })
                .collect(),
            bounds: self
                .domain
                .lo
                .iter()
                .zip(&self.domain.hi)
                .map(|(l, h)| [*l, *h])
                .collect(),
        }
    }

    /// u(x) for an order-k reading: Σ_p b_p G_p(x·ν_p), G_p^{(k−1)} = g_p.
    pub fn eval(&self, k: usize, x: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim_v);
        for t in &self.terms {
            let s: f64 = t.nu.iter().zip(x).map(|(a, b)| a * b).sum();
            let g = t.profile.antiderivative_value(k - 1, s);
            out += DVector::from_column_slice(&t.b) * g;
        }
        out
    }

    /// ∇^{k−1}u as a field with values in V⊗E_{k−1}: b_p ↦ b_p ⊗ ν_p^{k−1}.
    /// For k = 1 this is the field itself.
    pub fn lifted(&self, k: usize) -> Result<SyntheticField> {
        if k <= 1 {
            return Ok(self.clone());
        }
        let terms: Vec<FieldTerm> = self
            .terms
            .iter()
            .map(|t| {
                Ok(FieldTerm {
                    nu: t.nu.clone(),
                    b: SymCoords::pure(&t.b, &t.nu, k - 1)?.coeffs.iter().copied().collect(),
                    profile: t.profile.clone(),
                })
            })
            .collect::<Result<_>>()?;
        let dim = terms.first().map_or(self.dim_v, |t: &FieldTerm| t.b.len());
        SyntheticField::new(self.n, dim, terms, self.domain.clone())
    }
}

/// One term of A u: weight 𝔸^k(ν)[b] times the pushforward of Dg along x·ν.
#[derive(Debug, Clone)]
pub struct MeasureTerm {
    pub nu: Vec<f64>,
    pub weight: DVector<f64>,
    pub profile: BvProfile1D,
}

#[derive(Debug, Clone)]
pub struct MeasureRep {
    pub dim_w: usize,
    pub terms: Vec<MeasureTerm>,
}

/// μ(B) for the measure φ ↦ ∫ φ dDg(x·ν) on ℝ^n: ∫ area(s) dDg^σ(s).
pub fn slab_measure(profile: &BvProfile1D, b: &BoxN, nu: &[f64], part: Part) -> f64 {
    let pieces = area_pieces(b, nu);
    let mut total = 0.0;
    if matches!(part, Part::A | Part::All) {
        for p in &profile.ac {
            for (lo, hi, area) in &pieces {
                let (l, r) = (p.a.max(*lo), p.b.min(*hi));
                if r > l {
                    total += area.mul(&p.density).integrate(l, r);
                }
            }
        }
    }
    if matches!(part, Part::J | Part::All) {
        for j in &profile.jumps {
            total += j.h * section_area(b, nu, j.t);
        }
    }
    if matches!(part, Part::C | Part::All) {
        for c in &profile.cantor {
            for (lo, hi, area) in &pieces {
                total += c.amplitude * poly_against_cantor(area, c, *lo, *hi);
            }
        }
    }
    total
}

/// |μ|(B) where μ is as in [`slab_measure`].
pub fn slab_variation(profile: &BvProfile1D, b: &BoxN, nu: &[f64], part: Part) -> f64 {
    let g = profile.normalized();
    let pieces = area_pieces(b, nu);
    let mut total = 0.0;
    if matches!(part, Part::A | Part::All) {
        for p in &g.ac {
            for (lo, hi, area) in &pieces {
                let (l, r) = (p.a.max(*lo), p.b.min(*hi));
                if r > l {
                    // area ≥ 0, so |area·q| = area·|q|
                    total += integrate_abs(&area.mul(&p.density), l, r);
                }
            }
        }
    }
    if matches!(part, Part::J | Part::All) {
        for j in &g.jumps {
            total += j.h.abs() * section_area(b, nu, j.t);
        }
    }
    if matches!(part, Part::C | Part::All) {
        for c in &g.cantor {
            for (lo, hi, area) in &pieces {
                total += c.amplitude.abs() * poly_against_cantor(area, c, *lo, *hi);
            }
        }
    }
    total
}

impl MeasureRep {
    /// (A^σ u)(B) as a W-vector.
    pub fn evaluate(&self, b: &BoxN, part: Part) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim_w);
        for t in &self.terms {
            out += &t.weight * slab_measure(&t.profile, b, &t.nu, part);
        }
        out
    }

    /// ⟨w, A^σ u⟩(B).
    pub fn paired(&self, w: &[f64], b: &BoxN, part: Part) -> f64 {
        let wv = DVector::from_column_slice(w);
        self.terms
            .iter()
            .map(|t| wv.dot(&t.weight) * slab_measure(&t.profile, b, &t.nu, part))
            .sum()
    }

    /// |⟨w, A^σ u⟩|(B). Terms sharing a direction are combined first; distinct
    /// directions are assumed mutually singular, which holds for the singular
    /// parts and is checked for the absolutely continuous part.
    pub fn paired_variation(&self, w: &[f64], b: &BoxN, part: Part) -> Result<f64> {
        let wv = DVector::from_column_slice(w);
        let mut groups: Vec<(Vec<f64>, BvProfile1D)> = Vec::new();
        for t in &self.terms {
            let scaled = t.profile.scaled(wv.dot(&t.weight));
            match groups.iter_mut().find(|(nu, _)| same_direction(nu, &t.nu)) {
                Some((_, p)) => *p = p.plus(&scaled),
                None => groups.push((t.nu.clone(), scaled)),
            }
        }
        if matches!(part, Part::A | Part::All) {
            let with_ac = groups
                .iter()
                .filter(|(nu, p)| !p.normalized().ac.is_empty() && slab_variation(p, b, nu, Part::A) > 0.0)
                .count();
            if with_ac > 1 {
                return Err(Error::Unsupported(
                    "variation of absolutely continuous parts along several directions".into(),
                ));
            }
        }
        Ok(groups.iter().map(|(nu, p)| slab_variation(p, b, nu, part)).sum())
    }
}

pub(crate) fn same_direction(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12)
}

/// A u = Σ_p 𝔸^k(ν_p)[b_p] ⊗ (Dg_p pushed along x·ν_p).
pub fn apply_operator_analytic(op: &Operator, field: &SyntheticField) -> Result<MeasureRep> {
    if op.n() != field.n || op.dim_v() != field.dim_v {
        return Err(Error::DimensionMismatch {
            expected: op.n() * 100 + op.dim_v(),
            got: field.n * 100 + field.dim_v,
        });
    }
    let terms = field
        .terms
        .iter()
        .map(|t| {
            Ok(MeasureTerm {
                nu: t.nu.clone(),
                weight: op.symbol(&t.nu)? * DVector::from_column_slice(&t.b),
                profile: t.profile.clone(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(MeasureRep {
        dim_w: op.dim_w(),
        terms,
    })
}

/// Density of A^a u at x: Σ_p g_p'(x·ν_p) 𝔸^k(ν_p)[b_p].
pub fn ac_density(rep: &MeasureRep, x: &[f64]) -> DVector<f64> {
    let mut out = DVector::zeros(rep.dim_w);
    for t in &rep.terms {
        let s: f64 = t.nu.iter().zip(x).map(|(a, b)| a * b).sum();
        let d: f64 = t
            .profile
            .ac
            .iter()
            .filter(|p| p.a <= s && s <= p.b)
            .map(|p| p.density.eval(s))
            .sum();
        out += &t.weight * d;
    }
    out
}

/// Central difference weights for the a-th derivative, O(h²), as (offset, weight·h^a).
fn stencil(a: usize) -> Vec<(f64, f64)> {
    match a {
        0 => vec![(0.0, 1.0)],
        1 => vec![(-1.0, -0.5), (1.0, 0.5)],
        2 => vec![(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)],
        3 => vec![(-2.0, -0.5), (-1.0, 1.0), (1.0, -1.0), (2.0, 0.5)],
        _ => {
            // repeated second differences times a first or zeroth difference
            let mut base = stencil(a % 2);
            for _ in 0..a / 2 {
                let mut next = Vec::new();
                for (o, w) in &base {
                    for (o2, w2) in stencil(2) {
                        next.push((o + o2, w * w2));
                    }
                }
                base = next;
            }
            base
        }
    }
}

/// Max relative error between an O(h²) finite-difference A u and the analytic
/// a-density at the sample points. Profiles must be absolutely continuous.
pub fn finite_difference_crosscheck(
    op: &Operator,
    field: &SyntheticField,
    points: &[Vec<f64>],
    h: f64,
) -> Result<f64> {
    if field.terms.iter().any(|t| !t.profile.is_absolutely_continuous()) {
        return Err(Error::InvalidField("finite differences need smooth profiles".into()));
    }
    if field.terms.iter().any(|t| t.profile.max_degree() > 6) {
        return Err(Error::InvalidField("densities must have degree ≤ 6".into()));
    }
    let rep = apply_operator_analytic(op, field)?;
    let k = op.order();
    let reach = h * (k as f64).max(2.0);
    let mut worst: f64 = 0.0;
    for x in points {
        if x.len() != field.n || !field.domain.contains(x, reach) {
            return Err(Error::InvalidParams(format!(
                "point {x:?} is too close to the box boundary for step {h}"
            )));
        }
        let mut fd = DVector::zeros(op.dim_w());
        for (alpha, coeff) in op.basis().indices().iter().zip(op.coeffs()) {
            let mut offsets: Vec<(Vec<f64>, f64)> = vec![(vec![0.0; field.n], 1.0)];
            for (i, &a) in alpha.entries().iter().enumerate() {
                let mut next = Vec::new();
                for (off, w) in &offsets {
                    for (o, w2) in stencil(a) {
                        let mut off2 = off.clone();
                        off2[i] += o * h;
                        next.push((off2, w * w2 / h.powi(a as i32)));
                    }
                }
                offsets = next;
            }
            let mut deriv = DVector::zeros(field.dim_v);
            for (off, w) in offsets {
                let y: Vec<f64> = x.iter().zip(&off).map(|(a, b)| a + b).collect();
                deriv += field.eval(k, &y) * w;
            }
            fd += coeff * deriv;
        }
        let exact = ac_density(&rep, x);
        let err = (fd - &exact).norm() / exact.norm().max(1.0);
        worst = worst.max(err);
    }
    Ok(worst)
}
