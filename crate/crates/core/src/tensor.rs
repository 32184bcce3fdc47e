//! Multi-index combinatorics and monomial coordinates on symmetric tensors.

use std::collections::HashMap;

use nalgebra::{ComplexField, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Self {
        MultiIndex(entries)
    }

    pub fn unit(n: usize, j: usize) -> Self {
        let mut e = vec![0; n];
        e[j] = 1;
        MultiIndex(e)
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }

    /// `self - e_j`, or `None` when the j-th entry is zero.
    pub fn lowered(&self, j: usize) -> Option<MultiIndex> {
        if self.0[j] == 0 {
            return None;
        }
        let mut e = self.0.clone();
        e[j] -= 1;
        Some(MultiIndex(e))
    }

    pub fn raised(&self, j: usize) -> MultiIndex {
        let mut e = self.0.clone();
        e[j] += 1;
        MultiIndex(e)
    }

    /// ξ^α for any scalar field.
    pub fn monomial<T: ComplexField + Copy>(&self, xi: &[T]) -> T {
        let mut acc = T::one();
        for (x, &a) in xi.iter().zip(&self.0) {
            for _ in 0..a {
                acc *= *x;
            }
        }
        acc
    }

    /// Multinomial coefficient |α|! / α!.
    pub fn multinomial(&self) -> f64 {
        let mut acc = factorial(self.order());
        for &a in &self.0 {
            acc /= factorial(a);
        }
        acc
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

pub fn factorial(m: usize) -> f64 {
    (1..=m).fold(1.0, |acc, i| acc * i as f64)
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Number of monomials of degree `k` in `n` variables.
pub fn sym_dim(n: usize, k: usize) -> usize {
    if n == 0 {
        return usize::from(k == 0);
    }
    binomial(n + k - 1, k)
}

/// All multi-indices of order `k` in `n` variables, lexicographic with the
/// largest first component first.
pub fn multiindex_enumerate(n: usize, k: usize) -> Result<Vec<MultiIndex>> {
    if n == 0 {
        return Err(Error::InvalidDimension("n must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(sym_dim(n, k));
    let mut cur = vec![0; n];
    fill(&mut cur, 0, k, &mut out);
    Ok(out)
}

fn fill(cur: &mut Vec<usize>, pos: usize, rest: usize, out: &mut Vec<MultiIndex>) {
    let n = cur.len();
    if pos == n - 1 {
        cur[pos] = rest;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for a in (0..=rest).rev() {
        cur[pos] = a;
        fill(cur, pos + 1, rest - a, out);
    }
    cur[pos] = 0;
}

/// Enumeration plus reverse lookup for one (n, k).
#[derive(Debug, Clone)]
pub struct MonomialBasis {
    n: usize,
    order: usize,
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
}

impl MonomialBasis {
    pub fn new(n: usize, order: usize) -> Result<Self> {
        let indices = multiindex_enumerate(n, order)?;
        let lookup = indices
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        Ok(MonomialBasis {
            n,
            order,
            indices,
            lookup,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn get(&self, i: usize) -> &MultiIndex {
        &self.indices[i]
    }

    pub fn index_of(&self, alpha: &MultiIndex) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    /// Coordinates of ⊗^m ξ, i.e. (ξ^α)_α.
    pub fn pure_power<T: ComplexField + Copy>(&self, xi: &[T]) -> DVector<T> {
        DVector::from_iterator(self.len(), self.indices.iter().map(|a| a.monomial(xi)))
    }

    /// Coordinates of v ⊗^m ξ in V⊗E_m, laid out α-major: index α·N + ℓ.
    pub fn tensor_power<T: ComplexField + Copy>(&self, v: &[T], xi: &[T]) -> DVector<T> {
        let dv = v.len();
        let mut out = DVector::zeros(self.len() * dv);
        for (ai, a) in self.indices.iter().enumerate() {
            let m = a.monomial(xi);
            for (l, vl) in v.iter().enumerate() {
                out[ai * dv + l] = m * *vl;
            }
        }
        out
    }
}

/// A V-valued symmetric tensor of order `m` stored in monomial coordinates,
/// index α·dim_v + ℓ.
#[derive(Debug, Clone, PartialEq)]
pub struct SymCoords {
    pub n: usize,
    pub m: usize,
    pub dim_v: usize,
    pub coeffs: DVector<f64>,
}

impl SymCoords {
    pub fn new(n: usize, m: usize, dim_v: usize, coeffs: DVector<f64>) -> Result<Self> {
        let expected = sym_dim(n, m) * dim_v;
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: coeffs.len(),
            });
        }
        Ok(SymCoords {
            n,
            m,
            dim_v,
            coeffs,
        })
    }

    pub fn pure(v: &[f64], xi: &[f64], m: usize) -> Result<Self> {
        let basis = MonomialBasis::new(xi.len(), m)?;
        Ok(SymCoords {
            n: xi.len(),
            m,
            dim_v: v.len(),
            coeffs: basis.tensor_power(v, xi),
        })
    }

    /// Full contraction with (η, …, η): Σ_α c_α η^α per V-component.
    pub fn evaluate(&self, eta: &[f64]) -> Result<DVector<f64>> {
        let basis = MonomialBasis::new(self.n, self.m)?;
        let mut out = DVector::zeros(self.dim_v);
        for (ai, a) in basis.indices().iter().enumerate() {
            let m = a.monomial(eta);
            for l in 0..self.dim_v {
                out[l] += m * self.coeffs[ai * self.dim_v + l];
            }
        }
        Ok(out)
    }
}
