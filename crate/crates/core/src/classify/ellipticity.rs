use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::{Budget, Tolerances, Tri};
use crate::error::Result;
use crate::linalg::{sigma_min, svd};
use crate::operator::Operator;
use crate::sampling::{nelder_mead, norm, sphere_points};

#[derive(Debug, Clone, Serialize)]
pub struct EllipticityResult {
    pub verdict: Tri,
    pub complex: bool,
    /// Smallest σ_min found on the unit sphere (the ellipticity constant estimate).
    pub c_estimate: f64,
    /// c_estimate divided by the operator norm; compared against the tolerance.
    pub relative: f64,
    /// Minimizer ξ (real part and, for the complex search, imaginary part).
    pub xi_re: Vec<f64>,
    pub xi_im: Option<Vec<f64>>,
    /// Unit vector v with |𝔸(ξ)v| = σ_min.
    pub v_re: Vec<f64>,
    pub v_im: Option<Vec<f64>>,
    pub samples: usize,
    pub tolerance: f64,
}

/// σ_min of 𝔸^k(x/|x|) (0 when M < N).
pub fn sigma_min_real(op: &Operator, x: &[f64]) -> f64 {
    let nx = norm(x);
    if nx == 0.0 {
        return 0.0;
    }
    if op.dim_w() < op.dim_v() {
        return 0.0;
    }
    let xi: Vec<f64> = x.iter().map(|v| v / nx).collect();
    let s = op.symbol(&xi).expect("length checked by caller");
    sigma_min(&s)
}

/// σ_min of 𝔸^k(ξ) for ξ = (x[..n] + i x[n..]) / |x|.
pub fn sigma_min_complex(op: &Operator, x: &[f64]) -> f64 {
    let nx = norm(x);
    if nx == 0.0 || op.dim_w() < op.dim_v() {
        return 0.0;
    }
    let xi = to_complex(x, op.n(), nx);
    let s = op.symbol_complex(&xi).expect("length checked by caller");
    sigma_min(&s)
}

fn to_complex(x: &[f64], n: usize, scale: f64) -> Vec<Complex64> {
    (0..n)
        .map(|j| Complex64::new(x[j] / scale, x[n + j] / scale))
        .collect()
}

pub fn ellipticity_constant(
    op: &Operator,
    budget: &Budget,
    tol: &Tolerances,
) -> Result<EllipticityResult> {
    search(op, budget, tol, false)
}

pub fn complex_ellipticity_constant(
    op: &Operator,
    budget: &Budget,
    tol: &Tolerances,
) -> Result<EllipticityResult> {
    search(op, budget, tol, true)
}

fn search(op: &Operator, budget: &Budget, tol: &Tolerances, complex: bool) -> Result<EllipticityResult> {
    let n = op.n();
    let d = if complex { 2 * n } else { n };
    let f = |x: &[f64]| {
        if complex {
            sigma_min_complex(op, x)
        } else {
            sigma_min_real(op, x)
        }
    };
    let count = if d == 1 { 0 } else { budget.sphere_samples_for(n) };
    let points = sphere_points(d, count);
    let mut scored: Vec<(f64, usize)> = points.iter().enumerate().map(|(i, p)| (f(p), i)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let scale = op.norm();
    let mut best_x = points[scored[0].1].clone();
    let mut best_f = scored[0].0;
    if best_f / scale >= tol.ellipticity && d > 1 {
        for &(_, i) in scored.iter().take(budget.refine_starts) {
            let mut x = points[i].clone();
            let mut fx = f(&x);
            for step in [0.05, 1e-3, 1e-5] {
                let r = nelder_mead(
                    |y| f(y),
                    &x,
                    step,
                    budget.refine_iters,
                    0.0,
                );
                if r.f <= fx {
                    let nr = norm(&r.x);
                    x = r.x.iter().map(|v| v / nr).collect();
                    fx = r.f;
                }
            }
            if fx < best_f {
                best_f = fx;
                best_x = x;
            }
            if best_f / scale < tol.ellipticity {
                break;
            }
        }
    }

    let relative = best_f / scale;
    let verdict = if relative < tol.ellipticity {
        Tri::No
    } else if relative > 10.0 * tol.ellipticity {
        Tri::Yes
    } else {
        Tri::Inconclusive
    };
    let nb = norm(&best_x);
    let best_x: Vec<f64> = best_x.iter().map(|v| v / nb).collect();
    let (xi_re, xi_im, v_re, v_im) = if complex {
        let xi = to_complex(&best_x, n, 1.0);
        let s = op.symbol_complex(&xi)?;
        let v = smallest_right_vector_complex(&s);
        (
            xi.iter().map(|z| z.re).collect(),
            Some(xi.iter().map(|z| z.im).collect()),
            v.iter().map(|z| z.re).collect(),
            Some(v.iter().map(|z| z.im).collect()),
        )
    } else {
        let s = op.symbol(&best_x)?;
        let v = smallest_right_vector(&s);
        (best_x.clone(), None, v.iter().copied().collect(), None)
    };
    Ok(EllipticityResult {
        verdict,
        complex,
        c_estimate: best_f,
        relative,
        xi_re,
        xi_im,
        v_re,
        v_im,
        samples: points.len(),
        tolerance: tol.ellipticity,
    })
}

fn smallest_right_vector(s: &DMatrix<f64>) -> DVector<f64> {
    let d = svd(s);
    d.v.column(s.ncols() - 1).into_owned()
}

fn smallest_right_vector_complex(s: &DMatrix<Complex64>) -> DVector<Complex64> {
    let d = svd(s);
    d.v.column(s.ncols() - 1).into_owned()
}
