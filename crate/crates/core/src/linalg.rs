//! Dense SVD on nalgebra matrices, computed with faer.

use faer::Mat;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Full SVD A = U diag(s) Vᵀ with U m×m, V n×n and s descending.
#[derive(Debug, Clone)]
pub struct Svd<T: nalgebra::Scalar> {
    pub u: DMatrix<T>,
    pub s: Vec<f64>,
    pub v: DMatrix<T>,
}

pub trait SvdScalar: nalgebra::ComplexField<RealField = f64> + Copy {
    fn svd(a: &DMatrix<Self>) -> Svd<Self>;
    fn singular_values(a: &DMatrix<Self>) -> Vec<f64>;
}

impl SvdScalar for f64 {
    fn svd(a: &DMatrix<f64>) -> Svd<f64> {
        let (m, n) = a.shape();
        if m == 0 || n == 0 {
            return Svd {
                u: DMatrix::identity(m, m),
                s: Vec::new(),
                v: DMatrix::identity(n, n),
            };
        }
        let f = Mat::<f64>::from_fn(m, n, |i, j| a[(i, j)]);
        let svd = f.svd().expect("svd did not converge");
        let (u, s, v) = (svd.U(), svd.S(), svd.V());
        Svd {
            u: DMatrix::from_fn(m, m, |i, j| u[(i, j)]),
            s: (0..m.min(n)).map(|i| s[i]).collect(),
            v: DMatrix::from_fn(n, n, |i, j| v[(i, j)]),
        }
    }

    fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
        let (m, n) = a.shape();
        if m == 0 || n == 0 {
            return Vec::new();
        }
        let f = Mat::<f64>::from_fn(m, n, |i, j| a[(i, j)]);
        f.singular_values().expect("svd did not converge")
    }
}

impl SvdScalar for Complex64 {
    fn svd(a: &DMatrix<Complex64>) -> Svd<Complex64> {
        let (m, n) = a.shape();
        if m == 0 || n == 0 {
            return Svd {
                u: DMatrix::identity(m, m),
                s: Vec::new(),
                v: DMatrix::identity(n, n),
            };
        }
        let f = Mat::<Complex64>::from_fn(m, n, |i, j| a[(i, j)]);
        let svd = f.svd().expect("svd did not converge");
        let (u, s, v) = (svd.U(), svd.S(), svd.V());
        Svd {
            u: DMatrix::from_fn(m, m, |i, j| u[(i, j)]),
            s: (0..m.min(n)).map(|i| s[i].re).collect(),
            v: DMatrix::from_fn(n, n, |i, j| v[(i, j)]),
        }
    }

    fn singular_values(a: &DMatrix<Complex64>) -> Vec<f64> {
        let (m, n) = a.shape();
        if m == 0 || n == 0 {
            return Vec::new();
        }
        let f = Mat::<Complex64>::from_fn(m, n, |i, j| a[(i, j)]);
        f.singular_values().expect("svd did not converge")
    }
}

pub fn svd<T: SvdScalar>(a: &DMatrix<T>) -> Svd<T> {
    T::svd(a)
}

/// Singular values in descending order.
pub fn singular_values<T: SvdScalar>(a: &DMatrix<T>) -> Vec<f64> {
    let mut s = T::singular_values(a);
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Smallest singular value counting missing ones as zero (0 when m < n).
pub fn sigma_min<T: SvdScalar>(a: &DMatrix<T>) -> f64 {
    if a.nrows() < a.ncols() {
        return 0.0;
    }
    singular_values(a).last().copied().unwrap_or(0.0)
}

/// Minimum-norm least-squares solution, singular values ≤ rcond·σ_max dropped.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> DVector<f64> {
    let d = svd(a);
    let smax = d.s.first().copied().unwrap_or(0.0);
    let mut x = DVector::zeros(a.ncols());
    for (i, &s) in d.s.iter().enumerate() {
        if s > rcond * smax && s > 0.0 {
            let coef = d.u.column(i).dot(b) / s;
            x += d.v.column(i) * coef;
        }
    }
    x
}
