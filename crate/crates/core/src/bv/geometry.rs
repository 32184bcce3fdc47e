//! Axis-aligned boxes and their sections by hyperplanes {x·ν = s}.

use nalgebra::DVector;

use super::profile::Poly;
use crate::error::{Error, Result};
use crate::subspace::householder_frame;

#[derive(Debug, Clone, PartialEq)]
pub struct BoxN {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxN {
    pub fn new(bounds: &[[f64; 2]]) -> Result<Self> {
        if bounds.is_empty() || bounds.len() > 3 {
            return Err(Error::InvalidField("boxes need 1 ≤ n ≤ 3 axes".into()));
        }
        if bounds.iter().any(|[l, h]| !(l.is_finite() && h.is_finite()) || l > h) {
            return Err(Error::InvalidField("box bounds must be finite with lo ≤ hi".into()));
        }
        Ok(BoxN {
            lo: bounds.iter().map(|b| b[0]).collect(),
            hi: bounds.iter().map(|b| b[1]).collect(),
        })
    }

    pub fn unit(n: usize) -> Self {
        BoxN {
            lo: vec![0.0; n],
            hi: vec![1.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.lo.len()
    }

    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        (0..1usize << n)
            .map(|mask| {
                (0..n)
                    .map(|i| if mask >> i & 1 == 1 { self.hi[i] } else { self.lo[i] })
                    .collect()
            })
            .collect()
    }

    /// Range of x·d over the box.
    pub fn projection(&self, d: &[f64]) -> (f64, f64) {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for i in 0..self.n() {
            let (a, b) = (self.lo[i] * d[i], self.hi[i] * d[i]);
            lo += a.min(b);
            hi += a.max(b);
        }
        (lo, hi)
    }

    pub fn contains(&self, x: &[f64], margin: f64) -> bool {
        x.iter()
            .enumerate()
            .all(|(i, v)| *v >= self.lo[i] + margin && *v <= self.hi[i] - margin)
    }

    /// Parameter interval {t : p + t·d ∈ box}, or `None` if empty.
    pub fn clip_line(&self, p: &[f64], d: &[f64]) -> Option<(f64, f64)> {
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for i in 0..self.n() {
            if d[i] == 0.0 {
                if p[i] < self.lo[i] || p[i] > self.hi[i] {
                    return None;
                }
            } else {
                let a = (self.lo[i] - p[i]) / d[i];
                let b = (self.hi[i] - p[i]) / d[i];
                t0 = t0.max(a.min(b));
                t1 = t1.min(a.max(b));
            }
        }
        (t0 <= t1).then_some((t0, t1))
    }
}

fn clip_polygon(poly: &[[f64; 2]], a: [f64; 2], c: f64) -> Vec<[f64; 2]> {
    // keep points with a·p + c ≥ 0
    let f = |p: &[f64; 2]| a[0] * p[0] + a[1] * p[1] + c;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        let (fp, fq) = (f(&p), f(&q));
        if fp >= 0.0 {
            out.push(p);
        }
        if (fp >= 0.0) != (fq >= 0.0) {
            let t = fp / (fp - fq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// H^{n−1}({x·ν = s} ∩ box) for unit ν, by clipping (n = 1: counting measure).
pub fn section_area(b: &BoxN, nu: &[f64], s: f64) -> f64 {
    let n = b.n();
    match n {
        1 => {
            let x = s / nu[0];
            if x >= b.lo[0] && x <= b.hi[0] {
                1.0
            } else {
                0.0
            }
        }
        2 => {
            let p = [s * nu[0], s * nu[1]];
            let d = [-nu[1], nu[0]];
            b.clip_line(&p, &d).map_or(0.0, |(t0, t1)| t1 - t0)
        }
        _ => {
            let h = householder_frame(nu).expect("unit normal");
            let (u, v) = (h.column(1), h.column(2));
            let p0: Vec<f64> = nu.iter().map(|x| s * x).collect();
            let r: f64 = (0..n)
                .map(|i| (b.hi[i] - p0[i]).abs().max((b.lo[i] - p0[i]).abs()).powi(2))
                .sum::<f64>()
                .sqrt()
                * 2.0
                + 1.0;
            let mut poly = vec![[-r, -r], [r, -r], [r, r], [-r, r]];
            for i in 0..n {
                // p0_i + α u_i + β v_i ≥ lo_i and ≤ hi_i
                poly = clip_polygon(&poly, [u[i], v[i]], p0[i] - b.lo[i]);
                poly = clip_polygon(&poly, [-u[i], -v[i]], b.hi[i] - p0[i]);
                if poly.len() < 3 {
                    return 0.0;
                }
            }
            let mut area = 0.0;
            for i in 0..poly.len() {
                let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
                area += p[0] * q[1] - q[0] * p[1];
            }
            0.5 * area.abs()
        }
    }
}

/// Same quantity from the vertex formula for the box–half-space volume,
/// V(s) = Σ_v (−1)^{|v|} (s − v·ν)_+^n / (n! Π ν_i); axes with ν_i = 0 factor out.
pub fn slab_area(b: &BoxN, nu: &[f64], s: f64) -> f64 {
    let active: Vec<usize> = (0..b.n()).filter(|&i| nu[i] != 0.0).collect();
    let flat: f64 = (0..b.n())
        .filter(|i| nu[*i] == 0.0)
        .map(|i| b.hi[i] - b.lo[i])
        .product();
    let m = active.len();
    if m == 1 {
        let i = active[0];
        let x = s / nu[i];
        return if x >= b.lo[i] && x <= b.hi[i] { flat } else { 0.0 };
    }
    let prod: f64 = active.iter().map(|&i| nu[i]).product();
    let fact: f64 = (1..m).map(|i| i as f64).product();
    let mut total = 0.0;
    for mask in 0..1usize << m {
        let mut dot = 0.0;
        let mut sign = 1.0;
        for (bit, &i) in active.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                dot += b.hi[i] * nu[i];
                sign = -sign;
            } else {
                dot += b.lo[i] * nu[i];
            }
        }
        let d = s - dot;
        if d > 0.0 {
            total += sign * d.powi(m as i32 - 1);
        }
    }
    flat * total / (fact * prod)
}

/// Section area as a piecewise polynomial in s: (lo, hi, polynomial) pieces
/// between consecutive vertex projections.
pub fn area_pieces(b: &BoxN, nu: &[f64]) -> Vec<(f64, f64, Poly)> {
    let n = b.n();
    let mut cuts: Vec<f64> = b
        .vertices()
        .iter()
        .map(|v| v.iter().zip(nu).map(|(x, y)| x * y).sum())
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + b.abs()));
    if cuts.len() == 1 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let xs: Vec<f64> = (0..n)
            .map(|i| {
                let th = std::f64::consts::PI * (2 * i + 1) as f64 / (2 * n) as f64;
                0.5 * (lo + hi) - 0.5 * (hi - lo) * th.cos()
            })
            .collect();
        let ys: Vec<f64> = xs.iter().map(|&s| section_area(b, nu, s)).collect();
        out.push((lo, hi, Poly::interpolate(&xs, &ys)));
    }
    out
}

pub fn unit_normal(nu: &[f64]) -> Result<DVector<f64>> {
    let v = DVector::from_column_slice(nu);
    if (v.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidField(format!(
            "direction {nu:?} must be a unit vector"
        )));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_sections() {
        let b = BoxN::unit(2);
        assert!((section_area(&b, &[1.0, 0.0], 0.5) - 1.0).abs() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((section_area(&b, &[s, s], s) - 2f64.sqrt()).abs() < 1e-14);
        assert!((slab_area(&b, &[s, s], s) - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(section_area(&b, &[1.0, 0.0], 1.5), 0.0);
    }

    #[test]
    fn cube_sections() {
        let b = BoxN::unit(3);
        assert!((section_area(&b, &[0.0, 0.0, 1.0], 0.3) - 1.0).abs() < 1e-14);
        let c = 1.0 / 3f64.sqrt();
        // the hexagonal mid-section of the unit cube has area 3√3/4
        let mid = 1.5 * c;
        assert!((section_area(&b, &[c, c, c], mid) - 3.0 * 3f64.sqrt() / 4.0).abs() < 1e-13);
        assert!((slab_area(&b, &[c, c, c], mid) - 3.0 * 3f64.sqrt() / 4.0).abs() < 1e-13);
    }

    #[test]
    fn pieces_integrate_to_volume() {
        let b = BoxN::new(&[[0.0, 2.0], [-1.0, 1.0], [0.5, 1.0]]).unwrap();
        let nu = [0.48, 0.6, 0.64];
        let vol: f64 = area_pieces(&b, &nu).iter().map(|(l, h, p)| p.integrate(*l, *h)).sum();
        assert!((vol - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_box_is_null() {
        let b = BoxN::new(&[[0.3, 0.3], [0.0, 1.0]]).unwrap();
        assert_eq!(section_area(&b, &[0.0, 1.0], 0.5), 0.0);
        assert!(area_pieces(&b, &[1.0, 0.0]).is_empty());
    }
}
