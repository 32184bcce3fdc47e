//! Homogeneous constant-coefficient operators A = Σ_{|α|=k} A_α ∂^α.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{sym_dim, MonomialBasis, MultiIndex, SymCoords};

#[derive(Debug, Clone)]
pub struct Operator {
    n: usize,
    dim_v: usize,
    dim_w: usize,
    order: usize,
    basis: MonomialBasis,
    coeffs: Vec<DMatrix<f64>>,
    name: Option<String>,
}

/// Symbol value together with the point it was evaluated at.
#[derive(Debug, Clone)]
pub struct SymbolMatrix<T: nalgebra::Scalar> {
    pub value: DMatrix<T>,
    pub at: Vec<T>,
}

impl Operator {
    /// Builds an operator from sparse (α, A_α) entries; missing α are zero.
    pub fn new(
        n: usize,
        dim_v: usize,
        dim_w: usize,
        order: usize,
        entries: Vec<(MultiIndex, DMatrix<f64>)>,
    ) -> Result<Self> {
        if n == 0 || dim_v == 0 || dim_w == 0 {
            return Err(Error::InvalidDimension(format!(
                "n, dimV, dimW must be positive (got {n}, {dim_v}, {dim_w})"
            )));
        }
        if order == 0 {
            return Err(Error::InvalidOperator("order must be at least 1".into()));
        }
        let basis = MonomialBasis::new(n, order)?;
        let mut coeffs = vec![DMatrix::zeros(dim_w, dim_v); basis.len()];
        for (alpha, m) in entries {
            if alpha.n() != n || alpha.order() != order {
                return Err(Error::InvalidOperator(format!(
                    "multi-index {alpha} does not have length {n} and order {order}"
                )));
            }
            if m.nrows() != dim_w || m.ncols() != dim_v {
                return Err(Error::InvalidOperator(format!(
                    "coefficient at {alpha} is {}x{}, expected {dim_w}x{dim_v}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            let i = basis.index_of(&alpha).expect("order checked");
            coeffs[i] += m;
        }
        Self::from_dense(n, dim_v, dim_w, order, coeffs)
    }

    /// Builds from coefficients listed in monomial-enumeration order.
    pub fn from_dense(
        n: usize,
        dim_v: usize,
        dim_w: usize,
        order: usize,
        coeffs: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        if n == 0 || dim_v == 0 || dim_w == 0 || order == 0 {
            return Err(Error::InvalidDimension(format!(
                "n, dimV, dimW, order must be positive (got {n}, {dim_v}, {dim_w}, {order})"
            )));
        }
        let basis = MonomialBasis::new(n, order)?;
        if coeffs.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: coeffs.len(),
            });
        }
        for c in &coeffs {
            if c.nrows() != dim_w || c.ncols() != dim_v {
                return Err(Error::InvalidOperator("coefficient shape mismatch".into()));
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidOperator("non-finite coefficient".into()));
            }
        }
        if coeffs.iter().all(|c| c.iter().all(|&x| x == 0.0)) {
            return Err(Error::InvalidOperator(
                "all coefficients vanish (A ≡ 0)".into(),
            ));
        }
        Ok(Operator {
            n,
            dim_v,
            dim_w,
            order,
            basis,
            coeffs,
            name: None,
        })
    }

    /// First-order operator whose symbol at e_j is `symbols[j]`.
    pub fn first_order(symbols: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = symbols.len();
        let (m, nv) = symbols
            .first()
            .map(|s| (s.nrows(), s.ncols()))
            .ok_or_else(|| Error::InvalidDimension("n must be at least 1".into()))?;
        Self::from_dense(n, nv, m, 1, symbols)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim_v(&self) -> usize {
        self.dim_v
    }

    pub fn dim_w(&self) -> usize {
        self.dim_w
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> Option<&DMatrix<f64>> {
        self.basis.index_of(alpha).map(|i| &self.coeffs[i])
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }

    /// 𝔸^k(ξ) = Σ_α ξ^α A_α.
    pub fn symbol(&self, xi: &[f64]) -> Result<DMatrix<f64>> {
        self.check_len(xi.len())?;
        let mut out = DMatrix::zeros(self.dim_w, self.dim_v);
        for (alpha, a) in self.basis.indices().iter().zip(&self.coeffs) {
            let m = alpha.monomial(xi);
            if m != 0.0 {
                out += a * m;
            }
        }
        Ok(out)
    }

    pub fn symbol_complex(&self, xi: &[Complex64]) -> Result<DMatrix<Complex64>> {
        self.check_len(xi.len())?;
        let mut out = DMatrix::zeros(self.dim_w, self.dim_v);
        for (alpha, a) in self.basis.indices().iter().zip(&self.coeffs) {
            let m = alpha.monomial(xi);
            out += a.map(|x| Complex64::new(x, 0.0)) * m;
        }
        Ok(out)
    }

    pub fn symbol_eval(&self, xi: &[f64]) -> Result<SymbolMatrix<f64>> {
        Ok(SymbolMatrix {
            value: self.symbol(xi)?,
            at: xi.to_vec(),
        })
    }

    /// cl 𝔸^k as an M × (N·dim E_k) matrix; the column block of α is A_α.
    pub fn linearized_symbol(&self) -> DMatrix<f64> {
        let nv = self.dim_v;
        let mut out = DMatrix::zeros(self.dim_w, nv * self.basis.len());
        for (i, a) in self.coeffs.iter().enumerate() {
            out.view_mut((0, i * nv), (self.dim_w, nv)).copy_from(a);
        }
        out
    }

    /// Frobenius norm of the coefficient tensor; the scale used for residuals.
    pub fn norm(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, t: f64) -> Result<Self> {
        let coeffs = self.coeffs.iter().map(|c| c * t).collect();
        let mut op = Self::from_dense(self.n, self.dim_v, self.dim_w, self.order, coeffs)?;
        op.name = self.name.clone();
        Ok(op)
    }

    /// The operator ζ ↦ 𝔸^k(Lζ) in L.ncols() variables (L is n × n').
    pub fn compose_linear(&self, l: &DMatrix<f64>) -> Result<Self> {
        if l.nrows() != self.n || l.ncols() == 0 {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: l.nrows(),
            });
        }
        let m = l.ncols();
        let target = MonomialBasis::new(m, self.order)?;
        let mut coeffs = vec![DMatrix::zeros(self.dim_w, self.dim_v); target.len()];
        for (alpha, a) in self.basis.indices().iter().zip(&self.coeffs) {
            if a.iter().all(|&x| x == 0.0) {
                continue;
            }
            // Expand Π_i (Σ_j L_ij ζ_j)^{α_i}.
            let mut poly: BTreeMap<Vec<usize>, f64> = BTreeMap::from([(vec![0; m], 1.0)]);
            for (i, &ai) in alpha.entries().iter().enumerate() {
                for _ in 0..ai {
                    let mut next: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
                    for (mono, c) in &poly {
                        for j in 0..m {
                            let lij = l[(i, j)];
                            if lij == 0.0 {
                                continue;
                            }
                            let mut e = mono.clone();
                            e[j] += 1;
                            *next.entry(e).or_insert(0.0) += c * lij;
                        }
                    }
                    poly = next;
                }
            }
            for (mono, c) in poly {
                let idx = target
                    .index_of(&MultiIndex(mono))
                    .expect("degree preserved");
                coeffs[idx] += a * c;
            }
        }
        Self::from_dense(m, self.dim_v, self.dim_w, self.order, coeffs)
    }

    /// Restricts the target to the column span of `q` (W → q^T W) and the
    /// domain to the column span of `p`.
    pub fn compress(&self, q: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<Self> {
        if q.nrows() != self.dim_w || p.nrows() != self.dim_v {
            return Err(Error::InvalidDimension("compression basis shape".into()));
        }
        let coeffs = self.coeffs.iter().map(|a| q.transpose() * a * p).collect();
        Self::from_dense(self.n, p.ncols(), q.ncols(), self.order, coeffs)
    }

    pub fn to_spec(&self) -> OperatorSpec {
        let coeffs = self
            .basis
            .indices()
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, a)| a.iter().any(|&x| x != 0.0))
            .map(|(alpha, a)| CoeffSpec {
                alpha: alpha.entries().to_vec(),
                matrix: (0..a.nrows())
                    .map(|i| a.row(i).iter().copied().collect())
                    .collect(),
            })
            .collect();
        OperatorSpec {
            n: self.n,
            dim_v: self.dim_v,
            dim_w: self.dim_w,
            order: self.order,
            coeffs,
            name: self.name.clone(),
        }
    }

    pub fn from_spec(spec: &OperatorSpec) -> Result<Self> {
        let mut entries = Vec::with_capacity(spec.coeffs.len());
        for c in &spec.coeffs {
            if c.matrix.len() != spec.dim_w {
                return Err(Error::InvalidOperator(format!(
                    "coefficient at {:?} has {} rows, expected {}",
                    c.alpha,
                    c.matrix.len(),
                    spec.dim_w
                )));
            }
            let mut flat = Vec::with_capacity(spec.dim_w * spec.dim_v);
            for row in &c.matrix {
                if row.len() != spec.dim_v {
                    return Err(Error::InvalidOperator(format!(
                        "coefficient at {:?} has a row of length {}, expected {}",
                        c.alpha,
                        row.len(),
                        spec.dim_v
                    )));
                }
                flat.extend_from_slice(row);
            }
            entries.push((
                MultiIndex(c.alpha.clone()),
                DMatrix::from_row_slice(spec.dim_w, spec.dim_v, &flat),
            ));
        }
        let op = Self::new(spec.n, spec.dim_v, spec.dim_w, spec.order, entries)?;
        Ok(match &spec.name {
            Some(name) => op.with_name(name.clone()),
            None => op,
        })
    }
}

/// Serialized operator, e.g.
/// `{"n":2,"dimV":1,"dimW":2,"order":1,"coeffs":[{"alpha":[1,0],"matrix":[[1],[0]]}]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub n: usize,
    #[serde(rename = "dimV")]
    pub dim_v: usize,
    #[serde(rename = "dimW")]
    pub dim_w: usize,
    pub order: usize,
    pub coeffs: Vec<CoeffSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CoeffSpec {
    pub alpha: Vec<usize>,
    pub matrix: Vec<Vec<f64>>,
}

/// (M ⊙ ξ)_α = (1/k) Σ_{j: α_j ≥ 1} α_j ξ_j M_{α−e_j}, per V-component.
pub fn sym_mul(m: &SymCoords, xi: &[f64]) -> Result<SymCoords> {
    if xi.len() != m.n {
        return Err(Error::DimensionMismatch {
            expected: m.n,
            got: xi.len(),
        });
    }
    let k = m.m + 1;
    let lower = MonomialBasis::new(m.n, m.m)?;
    let upper = MonomialBasis::new(m.n, k)?;
    let dv = m.dim_v;
    let mut out = nalgebra::DVector::zeros(upper.len() * dv);
    for (ai, alpha) in upper.indices().iter().enumerate() {
        for j in 0..m.n {
            if let Some(beta) = alpha.lowered(j) {
                let bi = lower.index_of(&beta).expect("order k-1");
                let w = alpha.entries()[j] as f64 * xi[j] / k as f64;
                for l in 0..dv {
                    out[ai * dv + l] += w * m.coeffs[bi * dv + l];
                }
            }
        }
    }
    SymCoords::new(m.n, k, dv, out)
}

/// Matrix of U ↦ (∂_i U_{β+e_j} − ∂_j U_{β+e_i}) at symbol level, rows ordered
/// by (i<j, β, ℓ), columns in V⊗E_m coordinates.
pub fn curl_symbol(n: usize, m: usize, dim_v: usize, xi: &[f64]) -> Result<DMatrix<f64>> {
    if m == 0 {
        return Err(Error::InvalidParams("curl needs tensor order m ≥ 1".into()));
    }
    if xi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: xi.len(),
        });
    }
    let cols = MonomialBasis::new(n, m)?;
    let betas = MonomialBasis::new(n, m - 1)?;
    let mut out = DMatrix::zeros(curl_rows(n, m, dim_v), cols.len() * dim_v);
    let mut r = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            for beta in betas.indices() {
                let cj = cols.index_of(&beta.raised(j)).expect("order m");
                let ci = cols.index_of(&beta.raised(i)).expect("order m");
                for l in 0..dim_v {
                    out[(r, cj * dim_v + l)] += xi[i];
                    out[(r, ci * dim_v + l)] -= xi[j];
                    r += 1;
                }
            }
        }
    }
    Ok(out)
}

pub fn curl_rows(n: usize, m: usize, dim_v: usize) -> usize {
    if m == 0 {
        return 0;
    }
    n * n.saturating_sub(1) / 2 * sym_dim(n, m - 1) * dim_v
}
