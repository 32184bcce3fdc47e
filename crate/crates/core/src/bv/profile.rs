//! One-dimensional BV profiles: absolutely continuous pieces with polynomial
//! density, atoms, and scaled middle-thirds Cantor measures.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::binomial;

/// Polynomial in the power basis, lowest degree first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.0.is_empty() || other.0.is_empty() {
            return Poly::default();
        }
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    pub fn add_scaled(&mut self, other: &Poly, s: f64) {
        if self.0.len() < other.0.len() {
            self.0.resize(other.0.len(), 0.0);
        }
        for (i, c) in other.0.iter().enumerate() {
            self.0[i] += s * c;
        }
    }

    pub fn scaled(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    pub fn antiderivative(&self) -> Poly {
        let mut out = vec![0.0];
        out.extend(self.0.iter().enumerate().map(|(i, c)| c / (i + 1) as f64));
        Poly(out)
    }

    pub fn derivative(&self) -> Poly {
        Poly(self.0.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect())
    }

    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        let p = self.antiderivative();
        p.eval(b) - p.eval(a)
    }

    /// q(t) = p(α + βt).
    pub fn compose_affine(&self, alpha: f64, beta: f64) -> Poly {
        let mut out = Poly(vec![0.0]);
        let lin = Poly(vec![alpha, beta]);
        for c in self.0.iter().rev() {
            out = out.mul(&lin);
            out.add_scaled(&Poly(vec![*c]), 1.0);
        }
        out
    }

    /// Interpolating polynomial through (xs, ys) (Newton form, small degree).
    pub fn interpolate(xs: &[f64], ys: &[f64]) -> Poly {
        let n = xs.len();
        let mut coef = ys.to_vec();
        for j in 1..n {
            for i in (j..n).rev() {
                coef[i] = (coef[i] - coef[i - 1]) / (xs[i] - xs[i - j]);
            }
        }
        let mut out = Poly(vec![coef[n - 1]]);
        for i in (0..n - 1).rev() {
            out = out.mul(&Poly(vec![-xs[i], 1.0]));
            out.add_scaled(&Poly(vec![coef[i]]), 1.0);
        }
        out
    }
}

/// ∫_a^b |p| by splitting at sign changes located on a fine grid.
pub fn integrate_abs(p: &Poly, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let cells = 64 + 8 * p.0.len();
    let mut cuts = vec![a];
    let mut prev = p.eval(a);
    for i in 1..=cells {
        let x = a + (b - a) * i as f64 / cells as f64;
        let fx = p.eval(x);
        if fx == 0.0 && x < b {
            cuts.push(x);
        } else if prev * fx < 0.0 {
            let (mut lo, mut hi) = (cuts.last().copied().unwrap().max(x - (b - a) / cells as f64), x);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if (p.eval(mid) < 0.0) == (p.eval(lo) < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            cuts.push(0.5 * (lo + hi));
        }
        prev = fx;
    }
    cuts.push(b);
    cuts.windows(2).map(|w| p.integrate(w[0], w[1]).abs()).sum()
}

fn snap_triadic(x: f64) -> Option<(u64, u32)> {
    let mut scale = 1.0;
    for m in 0..=15u32 {
        let y = x * scale;
        let p = y.round();
        if (y - p).abs() <= 1e-9 {
            return Some((p as u64, m));
        }
        scale *= 3.0;
    }
    None
}

/// The middle-thirds Cantor function on ℝ (0 left of 0, 1 right of 1).
/// Triadic rationals p/3^m are evaluated from their exact digits.
pub fn cantor_function(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    if let Some((p, m)) = snap_triadic(x) {
        let mut digits = Vec::with_capacity(m as usize);
        let mut q = p;
        for _ in 0..m {
            digits.push(q % 3);
            q /= 3;
        }
        digits.reverse();
        let mut out = 0.0;
        let mut bit = 0.5;
        for d in digits {
            match d {
                0 => {}
                1 => return out + bit,
                _ => out += bit,
            }
            bit *= 0.5;
        }
        return out;
    }
    let mut y = x;
    let mut out = 0.0;
    let mut bit = 0.5;
    for _ in 0..60 {
        y *= 3.0;
        let d = y.floor();
        y -= d;
        if d >= 2.0 {
            out += bit;
        } else if d >= 1.0 {
            return out + bit;
        }
        bit *= 0.5;
    }
    out
}

const MAX_MOMENT: usize = 24;

/// M_j = ∫ x^j dC over the standard Cantor measure.
pub fn cantor_moments() -> &'static [f64] {
    static M: OnceLock<Vec<f64>> = OnceLock::new();
    M.get_or_init(|| {
        let mut m = vec![1.0];
        for j in 1..=MAX_MOMENT {
            let s: f64 = (0..j)
                .map(|i| binomial(j, i) as f64 * 2f64.powi((j - i) as i32) * m[i])
                .sum();
            m.push(s / (2.0 * (3f64.powi(j as i32) - 1.0)));
        }
        m
    })
}

/// [∫_{[0,x]} t^i dC(t)]_{i ≤ deg} by self-similarity.
pub fn cantor_partial_moments(deg: usize, x: f64) -> Vec<f64> {
    assert!(deg <= MAX_MOMENT, "moment degree too large");
    partial(deg, x, 0)
}

fn partial(deg: usize, x: f64, depth: usize) -> Vec<f64> {
    let full = cantor_moments();
    if x <= 0.0 {
        return vec![0.0; deg + 1];
    }
    if x >= 1.0 {
        return full[..=deg].to_vec();
    }
    if depth >= 45 {
        let c = cantor_function(x);
        return (0..=deg).map(|i| c * x.powi(i as i32)).collect();
    }
    let third = |j: usize| 0.5 * 3f64.powi(-(j as i32));
    let sx = snap_triadic(x).map_or(x, |(p, m)| p as f64 / 3f64.powi(m as i32));
    if sx < 1.0 / 3.0 {
        let v = partial(deg, 3.0 * sx, depth + 1);
        (0..=deg).map(|j| third(j) * v[j]).collect()
    } else if sx <= 2.0 / 3.0 {
        (0..=deg).map(|j| third(j) * full[j]).collect()
    } else {
        let v = partial(deg, 3.0 * sx - 2.0, depth + 1);
        (0..=deg)
            .map(|j| {
                let tail: f64 = (0..=j)
                    .map(|i| binomial(j, i) as f64 * 2f64.powi((j - i) as i32) * v[i])
                    .sum();
                third(j) * (full[j] + tail)
            })
            .collect()
    }
}

/// Polynomial density on [a, b].
#[derive(Debug, Clone, PartialEq)]
pub struct AcPiece {
    pub a: f64,
    pub b: f64,
    pub density: Poly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub t: f64,
    pub h: f64,
}

/// amplitude × (middle-thirds Cantor measure pushed to [a, b]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CantorPiece {
    pub a: f64,
    pub b: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    A,
    J,
    C,
    All,
}

impl Part {
    pub const PARTS: [Part; 3] = [Part::A, Part::J, Part::C];

    fn has(self, p: Part) -> bool {
        self == Part::All || self == p
    }
}

/// The derivative measure Dg of a BV function g on ℝ, with
/// g(s) = Dg((−∞, s]) as the right-continuous representative.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BvProfile1D {
    pub ac: Vec<AcPiece>,
    pub jumps: Vec<Jump>,
    pub cantor: Vec<CantorPiece>,
}

/// JSON form: `{"ac": [[a,b,c0,c1,..]], "jumps": [[t,h]], "cantor": [[a,b,A]]}`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    #[serde(default)]
    pub ac: Vec<Vec<f64>>,
    #[serde(default)]
    pub jumps: Vec<[f64; 2]>,
    #[serde(default)]
    pub cantor: Vec<[f64; 3]>,
}

fn finite(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite())
}

impl BvProfile1D {
    pub fn from_spec(spec: &ProfileSpec) -> Result<Self> {
        let mut ac = Vec::new();
        for row in &spec.ac {
            if row.len() < 3 || !finite(row) || row[0] >= row[1] {
                return Err(Error::InvalidField(
                    "ac entries are [a, b, c0, c1, ...] with a < b".into(),
                ));
            }
            ac.push(AcPiece {
                a: row[0],
                b: row[1],
                density: Poly(row[2..].to_vec()),
            });
        }
        let mut jumps = Vec::new();
        for &[t, h] in &spec.jumps {
            if !finite(&[t, h]) {
                return Err(Error::InvalidField("jump entries must be finite".into()));
            }
            jumps.push(Jump { t, h });
        }
        let mut cantor = Vec::new();
        for &[a, b, amp] in &spec.cantor {
            if !finite(&[a, b, amp]) || a >= b {
                return Err(Error::InvalidField("cantor entries are [a, b, A] with a < b".into()));
            }
            cantor.push(CantorPiece { a, b, amplitude: amp });
        }
        Ok(BvProfile1D { ac, jumps, cantor })
    }

    pub fn to_spec(&self) -> ProfileSpec {
        ProfileSpec {
            ac: self
                .ac
                .iter()
                .map(|p| {
                    let mut row = vec![p.a, p.b];
                    row.extend(&p.density.0);
                    row
                })
                .collect(),
            jumps: self.jumps.iter().map(|j| [j.t, j.h]).collect(),
            cantor: self.cantor.iter().map(|c| [c.a, c.b, c.amplitude]).collect(),
        }
    }

    pub fn step(t: f64, h: f64) -> Self {
        BvProfile1D {
            jumps: vec![Jump { t, h }],
            ..Default::default()
        }
    }

    pub fn cantor_on(a: f64, b: f64, amplitude: f64) -> Self {
        BvProfile1D {
            cantor: vec![CantorPiece { a, b, amplitude }],
            ..Default::default()
        }
    }

    pub fn density(a: f64, b: f64, coeffs: &[f64]) -> Self {
        BvProfile1D {
            ac: vec![AcPiece {
                a,
                b,
                density: Poly(coeffs.to_vec()),
            }],
            ..Default::default()
        }
    }

    pub fn is_absolutely_continuous(&self) -> bool {
        self.jumps.is_empty() && self.cantor.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.ac.iter().map(|p| p.density.0.len().saturating_sub(1)).max().unwrap_or(0)
    }

    /// Smallest interval containing the support of Dg.
    pub fn support(&self) -> Option<(f64, f64)> {
        let pts = self
            .ac
            .iter()
            .flat_map(|p| [p.a, p.b])
            .chain(self.jumps.iter().map(|j| j.t))
            .chain(self.cantor.iter().flat_map(|c| [c.a, c.b]));
        pts.fold(None, |acc, x| match acc {
            None => Some((x, x)),
            Some((lo, hi)) => Some((f64::min(lo, x), f64::max(hi, x))),
        })
    }

    pub fn scaled(&self, s: f64) -> Self {
        BvProfile1D {
            ac: self
                .ac
                .iter()
                .map(|p| AcPiece {
                    density: p.density.scaled(s),
                    ..p.clone()
                })
                .collect(),
            jumps: self.jumps.iter().map(|j| Jump { t: j.t, h: s * j.h }).collect(),
            cantor: self
                .cantor
                .iter()
                .map(|c| CantorPiece {
                    amplitude: s * c.amplitude,
                    ..*c
                })
                .collect(),
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.ac.extend(other.ac.iter().cloned());
        out.jumps.extend(other.jumps.iter().copied());
        out.cantor.extend(other.cantor.iter().copied());
        out
    }

    /// Pushforward under s ↦ α + βs composed with the profile, i.e. the
    /// derivative measure of t ↦ g(α + βt). Requires β ≠ 0.
    pub fn reparametrized(&self, alpha: f64, beta: f64) -> Self {
        assert!(beta != 0.0, "degenerate reparametrization");
        let sgn = beta.signum();
        let inv = |s: f64| (s - alpha) / beta;
        let ordered = |a: f64, b: f64| {
            let (x, y) = (inv(a), inv(b));
            if x <= y {
                (x, y, false)
            } else {
                (y, x, true)
            }
        };
        let mut out = BvProfile1D::default();
        for p in &self.ac {
            let (a, b, _) = ordered(p.a, p.b);
            // density in t: β·p(α + βt), and the orientation sign cancels |β|.
            out.ac.push(AcPiece {
                a,
                b,
                density: p.density.compose_affine(alpha, beta).scaled(beta),
            });
        }
        for j in &self.jumps {
            out.jumps.push(Jump {
                t: inv(j.t),
                h: sgn * j.h,
            });
        }
        for c in &self.cantor {
            // A reflected Cantor measure is again the Cantor measure.
            let (a, b, _) = ordered(c.a, c.b);
            out.cantor.push(CantorPiece {
                a,
                b,
                amplitude: sgn * c.amplitude,
            });
        }
        out
    }

    /// Dg^σ([l, r]) for a closed interval.
    pub fn measure(&self, l: f64, r: f64, part: Part) -> f64 {
        if r < l {
            return 0.0;
        }
        let mut total = 0.0;
        if part.has(Part::A) {
            for p in &self.ac {
                let (lo, hi) = (p.a.max(l), p.b.min(r));
                if hi > lo {
                    total += p.density.integrate(lo, hi);
                }
            }
        }
        if part.has(Part::J) {
            total += self
                .jumps
                .iter()
                .filter(|j| l <= j.t && j.t <= r)
                .map(|j| j.h)
                .sum::<f64>();
        }
        if part.has(Part::C) {
            for c in &self.cantor {
                let len = c.b - c.a;
                let cl = cantor_function((l - c.a) / len);
                let cr = cantor_function((r - c.a) / len);
                total += c.amplitude * (cr - cl);
            }
        }
        total
    }

    /// Dg^σ(B) for B a finite union of disjoint closed intervals.
    pub fn measure_union(&self, intervals: &[(f64, f64)], part: Part) -> f64 {
        intervals.iter().map(|&(l, r)| self.measure(l, r, part)).sum()
    }

    /// g(s) = Dg((−∞, s]).
    pub fn value(&self, s: f64) -> f64 {
        self.measure(f64::NEG_INFINITY, s, Part::All)
    }

    /// g(s−) = Dg((−∞, s)).
    pub fn value_left(&self, s: f64) -> f64 {
        self.value(s) - self.jumps.iter().filter(|j| j.t == s).map(|j| j.h).sum::<f64>()
    }

    /// G(s) = ∫ (s − r)_+^m / m! dDg(r), the m-fold antiderivative of g
    /// vanishing to the left of the support (m = 0 gives g).
    pub fn antiderivative_value(&self, m: usize, s: f64) -> f64 {
        if m == 0 {
            return self.value(s);
        }
        let fact: f64 = (1..=m).map(|i| i as f64).product();
        // kernel (s − r)^m / m! as a polynomial in r
        let kernel = Poly(
            (0..=m)
                .map(|i| {
                    binomial(m, i) as f64 * s.powi((m - i) as i32) * (-1f64).powi(i as i32) / fact
                })
                .collect(),
        );
        let mut total = 0.0;
        for p in &self.ac {
            let hi = p.b.min(s);
            if hi > p.a {
                total += kernel.mul(&p.density).integrate(p.a, hi);
            }
        }
        for j in &self.jumps {
            if j.t <= s {
                total += j.h * kernel.eval(j.t);
            }
        }
        for c in &self.cantor {
            total += c.amplitude * poly_against_cantor(&kernel, c, c.a, s);
        }
        total
    }

    /// Merges overlapping ac pieces, coincident atoms and Cantor pieces on the
    /// same interval, so that |Dg| can be read off component-wise.
    pub fn normalized(&self) -> Self {
        let mut cuts: Vec<f64> = self.ac.iter().flat_map(|p| [p.a, p.b]).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut ac = Vec::new();
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let mut q = Poly::default();
            for p in self.ac.iter().filter(|p| p.a <= mid && mid <= p.b) {
                q.add_scaled(&p.density, 1.0);
            }
            if q.0.iter().any(|c| *c != 0.0) {
                ac.push(AcPiece {
                    a: w[0],
                    b: w[1],
                    density: q,
                });
            }
        }
        let mut jumps: Vec<Jump> = Vec::new();
        let mut sorted = self.jumps.clone();
        sorted.sort_by(|x, y| x.t.total_cmp(&y.t));
        for j in sorted {
            match jumps.last_mut() {
                Some(last) if (last.t - j.t).abs() <= 1e-14 * (1.0 + j.t.abs()) => last.h += j.h,
                _ => jumps.push(j),
            }
        }
        let mut cantor: Vec<CantorPiece> = Vec::new();
        for c in &self.cantor {
            match cantor.iter_mut().find(|x| x.a == c.a && x.b == c.b) {
                Some(x) => x.amplitude += c.amplitude,
                None => cantor.push(*c),
            }
        }
        BvProfile1D { ac, jumps, cantor }
    }

    /// |Dg^σ|([l, r]); distinct Cantor intervals are treated as mutually singular.
    pub fn variation(&self, l: f64, r: f64, part: Part) -> f64 {
        if r < l {
            return 0.0;
        }
        let g = self.normalized();
        let mut total = 0.0;
        if part.has(Part::A) {
            for p in &g.ac {
                let (lo, hi) = (p.a.max(l), p.b.min(r));
                total += integrate_abs(&p.density, lo, hi);
            }
        }
        if part.has(Part::J) {
            total += g.jumps.iter().filter(|j| l <= j.t && j.t <= r).map(|j| j.h.abs()).sum::<f64>();
        }
        if part.has(Part::C) {
            for c in &g.cantor {
                let len = c.b - c.a;
                total += c.amplitude.abs()
                    * (cantor_function((r - c.a) / len) - cantor_function((l - c.a) / len));
            }
        }
        total
    }
}

/// ∫_{[l,r]} p(s) dC_{[a,b]}(s) for the unit-amplitude Cantor measure on [a, b].
pub fn poly_against_cantor(p: &Poly, c: &CantorPiece, l: f64, r: f64) -> f64 {
    let len = c.b - c.a;
    let (xl, xr) = ((l - c.a) / len, (r - c.a) / len);
    if xr <= 0.0 || xl >= 1.0 || xr <= xl {
        return 0.0;
    }
    // p(a + len·x) as a polynomial in x
    let q = p.compose_affine(c.a, len);
    let deg = q.0.len().saturating_sub(1);
    let hi = cantor_partial_moments(deg, xr);
    let lo = cantor_partial_moments(deg, xl);
    q.0.iter().enumerate().map(|(i, k)| k * (hi[i] - lo[i])).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cantor_values() {
        assert_eq!(cantor_function(1.0 / 3.0), 0.5);
        assert_eq!(cantor_function(2.0 / 3.0), 0.5);
        assert!((cantor_function(0.25) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(cantor_function(1.0 / 9.0), 0.25);
        assert_eq!(cantor_function(7.0 / 9.0), 0.75);
        assert!((cantor_function(0.75) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn cantor_self_similar() {
        for m in 1..8 {
            let d = 3f64.powi(m);
            for p in 0..=(3i64.pow(m as u32)) {
                let x = p as f64 / d;
                let c = cantor_function(x);
                if x <= 1.0 / 3.0 {
                    assert!((c - 0.5 * cantor_function(3.0 * x)).abs() < 1e-15);
                } else if x >= 2.0 / 3.0 {
                    assert!((c - 0.5 - 0.5 * cantor_function(3.0 * x - 2.0)).abs() < 1e-15);
                } else {
                    assert_eq!(c, 0.5);
                }
            }
        }
    }

    #[test]
    fn cantor_moment_values() {
        let m = cantor_moments();
        assert_eq!(m[0], 1.0);
        assert!((m[1] - 0.5).abs() < 1e-15);
        assert!((m[2] - 0.375).abs() < 1e-15);
        let half = cantor_partial_moments(2, 0.5);
        assert!((half[0] - 0.5).abs() < 1e-15);
        assert!((half[1] - 1.0 / 12.0).abs() < 1e-14);
    }

    #[test]
    fn spec_examples() {
        let c = BvProfile1D::cantor_on(0.0, 1.0, 1.0);
        assert_eq!(c.measure(0.0, 1.0 / 3.0, Part::C), 0.5);
        let j = BvProfile1D::step(0.5, 2.0);
        assert_eq!(j.measure(0.0, 0.4, Part::J), 0.0);
        assert_eq!(j.measure(0.0, 0.6, Part::J), 2.0);
        let a = BvProfile1D::density(0.0, 1.0, &[1.0]);
        assert_eq!(a.measure(0.25, 0.75, Part::A), 0.5);
    }

    #[test]
    fn values_and_antiderivatives() {
        let g = BvProfile1D::step(0.5, 1.0);
        assert_eq!(g.value(0.5), 1.0);
        assert_eq!(g.value_left(0.5), 0.0);
        assert!((g.antiderivative_value(1, 0.75) - 0.25).abs() < 1e-15);
        let c = BvProfile1D::cantor_on(0.0, 1.0, 1.0);
        // ∫_0^1 (1 − r) dC = 1/2
        assert!((c.antiderivative_value(1, 1.0) - 0.5).abs() < 1e-14);
        let a = BvProfile1D::density(0.0, 2.0, &[2.0]);
        assert!((a.antiderivative_value(1, 1.5) - 2.25).abs() < 1e-14);
    }

    #[test]
    fn reparametrize_flips() {
        let g = BvProfile1D::step(0.5, 2.0).plus(&BvProfile1D::density(0.0, 1.0, &[0.0, 1.0]));
        let r = g.reparametrized(1.0, -1.0);
        // t ↦ g(1 − t): atom moves to 0.5 with flipped sign
        assert_eq!(r.jumps[0].t, 0.5);
        assert_eq!(r.jumps[0].h, -2.0);
        assert!((r.measure(0.0, 1.0, Part::A) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn variation_cancels() {
        let g = BvProfile1D::step(0.5, 2.0).plus(&BvProfile1D::step(0.5, -3.0));
        assert_eq!(g.variation(0.0, 1.0, Part::J), 1.0);
        let a = BvProfile1D::density(0.0, 1.0, &[-1.0, 2.0]);
        assert!((a.variation(0.0, 1.0, Part::A) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn interpolation() {
        let p = Poly::interpolate(&[0.0, 1.0, 2.0], &[1.0, 3.0, 7.0]);
        assert!((p.eval(3.0) - 13.0).abs() < 1e-12);
    }
}
