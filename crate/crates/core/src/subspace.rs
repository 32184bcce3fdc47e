//! Finite-dimensional subspace arithmetic on top of the SVD.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{singular_values, svd, SvdScalar};

pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// A subspace of R^d stored by an orthonormal basis (columns of `basis`).
#[derive(Debug, Clone, Serialize)]
pub struct Subspace {
    ambient_dim: usize,
    basis: DMatrix<f64>,
    tol: f64,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            basis: DMatrix::zeros(ambient_dim, 0),
            tol: DEFAULT_RANK_TOL,
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            basis: DMatrix::identity(ambient_dim, ambient_dim),
            tol: DEFAULT_RANK_TOL,
        }
    }

    /// Wraps a matrix whose columns are already orthonormal.
    pub fn from_orthonormal(basis: DMatrix<f64>, tol: f64) -> Self {
        Subspace {
            ambient_dim: basis.nrows(),
            basis,
            tol,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn vectors(&self) -> Vec<DVector<f64>> {
        (0..self.dim())
            .map(|j| self.basis.column(j).into_owned())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient_dim
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.transpose() * v)
    }

    /// ‖v − P v‖ / ‖v‖ (0 for v = 0).
    pub fn residual(&self, v: &DVector<f64>) -> f64 {
        let nv = v.norm();
        if nv == 0.0 {
            return 0.0;
        }
        (v - self.project(v)).norm() / nv
    }

    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> bool {
        self.residual(v) <= tol
    }

    /// Whether every basis vector of `other` lies in `self`.
    pub fn contains_subspace(&self, other: &Subspace, tol: f64) -> bool {
        other.vectors().iter().all(|v| self.contains(v, tol))
    }

    pub fn same_as(&self, other: &Subspace, tol: f64) -> bool {
        self.dim() == other.dim()
            && self.contains_subspace(other, tol)
            && other.contains_subspace(self, tol)
    }

    pub fn span(&self, other: &Subspace) -> Result<Subspace> {
        check_ambient(self.ambient_dim, other.ambient_dim)?;
        let mut vecs = self.vectors();
        vecs.extend(other.vectors());
        subspace_span(&vecs, self.ambient_dim, self.tol)
    }

    pub fn with_vector(&self, v: &DVector<f64>) -> Result<Subspace> {
        check_ambient(self.ambient_dim, v.len())?;
        let mut vecs = self.vectors();
        vecs.push(v.clone());
        subspace_span(&vecs, self.ambient_dim, self.tol)
    }
}

fn check_ambient(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Orthonormal basis of the numerical span of `vectors` in R^ambient_dim.
pub fn subspace_span(vectors: &[DVector<f64>], ambient_dim: usize, tol: f64) -> Result<Subspace> {
    for v in vectors {
        check_ambient(ambient_dim, v.len())?;
    }
    if vectors.is_empty() || ambient_dim == 0 {
        return Ok(Subspace {
            ambient_dim,
            basis: DMatrix::zeros(ambient_dim, 0),
            tol,
        });
    }
    let a = DMatrix::from_columns(vectors);
    Ok(column_space(&a, tol))
}

/// Column space of a matrix, singular values below tol·σ_max discarded.
pub fn column_space(a: &DMatrix<f64>, tol: f64) -> Subspace {
    let rows = a.nrows();
    if a.ncols() == 0 || rows == 0 {
        return Subspace {
            ambient_dim: rows,
            basis: DMatrix::zeros(rows, 0),
            tol,
        };
    }
    let d = svd(a);
    let smax = d.s.first().copied().unwrap_or(0.0);
    let cols: Vec<DVector<f64>> = (0..d.s.len())
        .filter(|&i| smax > 0.0 && d.s[i] > tol * smax)
        .map(|i| d.u.column(i).into_owned())
        .collect();
    let basis = if cols.is_empty() {
        DMatrix::zeros(rows, 0)
    } else {
        DMatrix::from_columns(&cols)
    };
    Subspace {
        ambient_dim: rows,
        basis,
        tol,
    }
}

/// Intersection via principal angles: directions with cosine ≥ 1 − tol.
pub fn subspace_intersect(a: &Subspace, b: &Subspace, tol: f64) -> Result<Subspace> {
    check_ambient(a.ambient_dim, b.ambient_dim)?;
    if a.dim() == 0 || b.dim() == 0 {
        return Ok(Subspace::zero(a.ambient_dim));
    }
    let c = a.basis.transpose() * &b.basis;
    let d = svd(&c);
    let cols: Vec<DVector<f64>> = (0..d.s.len())
        .filter(|&i| d.s[i] >= 1.0 - tol)
        .map(|i| &a.basis * d.u.column(i))
        .collect();
    subspace_span(&cols, a.ambient_dim, DEFAULT_RANK_TOL)
}

pub fn subspace_orthocomplement(s: &Subspace) -> Subspace {
    if s.dim() == 0 {
        return Subspace::full(s.ambient_dim);
    }
    let mut out = nullspace(&s.basis.transpose(), DEFAULT_RANK_TOL);
    out.tol = s.tol;
    out
}

pub fn numeric_rank<T: SvdScalar>(m: &DMatrix<T>, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = singular_values(m);
    let smax = sv[0];
    if smax <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// Singular values in descending order, padded with zeros to the column count.
pub fn singular_values_desc<T: SvdScalar>(m: &DMatrix<T>) -> Vec<f64> {
    let mut sv = singular_values(m);
    sv.resize(m.ncols().max(sv.len()), 0.0);
    sv
}

/// Orthonormal basis of the numerical kernel of `m`.
pub fn nullspace(m: &DMatrix<f64>, tol: f64) -> Subspace {
    let cols = m.ncols();
    if cols == 0 {
        return Subspace::zero(0);
    }
    if m.nrows() == 0 {
        return Subspace {
            ambient_dim: cols,
            basis: DMatrix::identity(cols, cols),
            tol,
        };
    }
    let d = svd(m);
    let smax = d.s.first().copied().unwrap_or(0.0);
    // Columns of V past the singular values belong to the kernel outright.
    let kernel: Vec<DVector<f64>> = (0..cols)
        .filter(|&i| i >= d.s.len() || smax <= 0.0 || d.s[i] <= tol * smax)
        .map(|i| d.v.column(i).into_owned())
        .collect();
    let basis = if kernel.is_empty() {
        DMatrix::zeros(cols, 0)
    } else {
        DMatrix::from_columns(&kernel)
    };
    Subspace {
        ambient_dim: cols,
        basis,
        tol,
    }
}

/// Orthogonal H with H e₁ = ξ/|ξ|; columns 2..n span the hyperplane ξ^⊥.
pub fn householder_frame(xi: &[f64]) -> Result<DMatrix<f64>> {
    let n = xi.len();
    let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0 || norm == 0.0 {
        return Err(Error::InvalidParams("direction must be nonzero".into()));
    }
    let mut u = DVector::from_iterator(n, xi.iter().map(|x| -x / norm));
    u[0] += 1.0;
    let un = u.norm_squared();
    let mut h = DMatrix::identity(n, n);
    if un > 1e-30 {
        h -= (&u * u.transpose()) * (2.0 / un);
    }
    Ok(h)
}

/// Orthonormal basis of ξ^⊥ as an n×(n−1) matrix.
pub fn hyperplane_basis(xi: &[f64]) -> Result<DMatrix<f64>> {
    let h = householder_frame(xi)?;
    let n = xi.len();
    Ok(h.columns(1, n - 1).into_owned())
}
