//! Named operators from the applications and counterexamples.
//!
//! Coordinate conventions:
//! - `Dk` and `gradient` take values in V⊗E_k with index α·N + ℓ, so their
//!   linearized symbol is the identity.
//! - Symmetric tensors (`symgrad`, `Ek`, `deviatoric`) are stored by their
//!   unweighted entries T_{i₁…i_m}, i₁ ≤ … ≤ i_m, in multi-index order.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::tensor::{MonomialBasis, MultiIndex};

pub const CATALOG_NAMES: &[&str] = &[
    "gradient",
    "Dk",
    "symgrad",
    "Ek",
    "scrDk",
    "div_form",
    "deviatoric",
    "divcurl",
    "laplacian",
    "delbar",
];

#[derive(Debug, Clone, Default)]
pub struct CatalogParams {
    pub n: Option<usize>,
    pub dim_v: Option<usize>,
    pub k: Option<usize>,
    pub r: Option<DMatrix<f64>>,
}

impl CatalogParams {
    pub fn n(n: usize) -> Self {
        CatalogParams {
            n: Some(n),
            ..Default::default()
        }
    }

    pub fn nk(n: usize, k: usize) -> Self {
        CatalogParams {
            n: Some(n),
            k: Some(k),
            ..Default::default()
        }
    }

    pub fn with_dim_v(mut self, dim_v: usize) -> Self {
        self.dim_v = Some(dim_v);
        self
    }

    fn need_n(&self, name: &str) -> Result<usize> {
        match self.n {
            Some(n) if n >= 1 => Ok(n),
            Some(_) => Err(Error::InvalidParams(format!("{name}: n must be ≥ 1"))),
            None => Err(Error::InvalidParams(format!("{name}: missing n"))),
        }
    }

    fn need_k(&self, name: &str) -> Result<usize> {
        match self.k {
            Some(k) if k >= 1 => Ok(k),
            Some(_) => Err(Error::InvalidParams(format!("{name}: k must be ≥ 1"))),
            None => Err(Error::InvalidParams(format!("{name}: missing k"))),
        }
    }
}

pub fn catalog(name: &str, params: &CatalogParams) -> Result<Operator> {
    let op = match name {
        "gradient" => {
            let n = params.need_n(name)?;
            dk(n, params.dim_v.unwrap_or(1), 1)?
        }
        "Dk" => dk(
            params.need_n(name)?,
            params.dim_v.unwrap_or(1),
            params.need_k(name)?,
        )?,
        "symgrad" => ek(params.need_n(name)?, 1)?,
        "Ek" => ek(params.need_n(name)?, params.need_k(name)?)?,
        "scrDk" => scr_dk(params.need_n(name)?, params.need_k(name)?)?,
        "div_form" => {
            let r = params
                .r
                .as_ref()
                .ok_or_else(|| Error::InvalidParams("div_form: missing R".into()))?;
            if let Some(n) = params.n {
                if n != r.ncols() {
                    return Err(Error::InvalidParams(format!(
                        "div_form: R has {} columns but n = {n}",
                        r.ncols()
                    )));
                }
            }
            div_form(r)?
        }
        "deviatoric" => deviatoric(params.need_n(name)?)?,
        "divcurl" => divcurl(params.need_n(name)?)?,
        "laplacian" => laplacian(params.need_n(name)?)?,
        "delbar" => {
            if let Some(n) = params.n {
                if n != 2 {
                    return Err(Error::InvalidParams("delbar: n must be 2".into()));
                }
            }
            delbar()?
        }
        _ => {
            return Err(Error::UnknownCatalog {
                name: name.to_string(),
                valid: CATALOG_NAMES.join(", "),
            })
        }
    };
    if let Some(nv) = params.dim_v {
        if op.dim_v() != nv {
            return Err(Error::InvalidParams(format!(
                "{name}: dimV is fixed to {} for this operator (got {nv})",
                op.dim_v()
            )));
        }
    }
    Ok(op.with_name(name))
}

/// D^k u = (∂^α u_ℓ), values in V⊗E_k.
pub fn dk(n: usize, dim_v: usize, k: usize) -> Result<Operator> {
    let basis = MonomialBasis::new(n, k)?;
    let m = basis.len() * dim_v;
    let entries = basis
        .indices()
        .iter()
        .enumerate()
        .map(|(ai, alpha)| {
            let mut a = DMatrix::zeros(m, dim_v);
            for l in 0..dim_v {
                a[(ai * dim_v + l, l)] = 1.0;
            }
            (alpha.clone(), a)
        })
        .collect();
    Operator::new(n, dim_v, m, 1.max(k), entries)
}

/// E^k u = sym ∇u on symmetric k-tensor fields; k = 1 is the symmetric gradient.
pub fn ek(n: usize, k: usize) -> Result<Operator> {
    let dom = MonomialBasis::new(n, k)?;
    let tgt = MonomialBasis::new(n, k + 1)?;
    let mut symbols = vec![DMatrix::zeros(tgt.len(), dom.len()); n];
    for (gi, gamma) in tgt.indices().iter().enumerate() {
        for (j, sym) in symbols.iter_mut().enumerate() {
            if let Some(beta) = gamma.lowered(j) {
                let bi = dom.index_of(&beta).expect("order k");
                sym[(gi, bi)] += gamma.entries()[j] as f64 / (k + 1) as f64;
            }
        }
    }
    Operator::first_order(symbols)
}

/// 𝒟^k u = (∂₁^k u, …, ∂_n^k u).
pub fn scr_dk(n: usize, k: usize) -> Result<Operator> {
    let entries = (0..n)
        .map(|i| {
            let mut alpha = vec![0; n];
            alpha[i] = k;
            let mut a = DMatrix::zeros(n, 1);
            a[(i, 0)] = 1.0;
            (MultiIndex(alpha), a)
        })
        .collect();
    Operator::new(n, 1, n, k, entries)
}

/// 𝒜_R u = Div(Ru) on scalars; R is M × n and the symbol is Rξ.
pub fn div_form(r: &DMatrix<f64>) -> Result<Operator> {
    if r.ncols() == 0 || r.nrows() == 0 {
        return Err(Error::InvalidParams("div_form: R must be nonempty".into()));
    }
    Operator::first_order(
        (0..r.ncols())
            .map(|j| DMatrix::from_iterator(r.nrows(), 1, r.column(j).iter().copied()))
            .collect(),
    )
}

/// L u = E u − (div u / n) Id, target the full symmetric 2-tensors.
pub fn deviatoric(n: usize) -> Result<Operator> {
    let sg = ek(n, 1)?;
    let tgt = MonomialBasis::new(n, 2)?;
    let mut symbols: Vec<DMatrix<f64>> = (0..n)
        .map(|j| sg.symbol(&unit(n, j)).expect("length n"))
        .collect();
    for i in 0..n {
        let mut alpha = vec![0; n];
        alpha[i] = 2;
        let row = tgt.index_of(&MultiIndex(alpha)).expect("order 2");
        for (j, sym) in symbols.iter_mut().enumerate() {
            sym[(row, j)] -= 1.0 / n as f64;
        }
    }
    Operator::first_order(symbols)
}

/// (Div × curl) u: row 0 is Σ ∂_i u_i, then ∂_i u_j − ∂_j u_i for i < j.
pub fn divcurl(n: usize) -> Result<Operator> {
    let m = 1 + n * (n - 1) / 2;
    let mut symbols = vec![DMatrix::zeros(m, n); n];
    for (j, sym) in symbols.iter_mut().enumerate() {
        sym[(0, j)] = 1.0;
    }
    let mut r = 1;
    for i in 0..n {
        for j in (i + 1)..n {
            symbols[i][(r, j)] = 1.0;
            symbols[j][(r, i)] = -1.0;
            r += 1;
        }
    }
    Operator::first_order(symbols)
}

pub fn laplacian(n: usize) -> Result<Operator> {
    let entries = (0..n)
        .map(|i| {
            let mut alpha = vec![0; n];
            alpha[i] = 2;
            (MultiIndex(alpha), DMatrix::from_element(1, 1, 1.0))
        })
        .collect();
    Operator::new(n, 1, 1, 2, entries)
}

/// Cauchy–Riemann operator on u = u₁ + i u₂ written in real form:
/// (∂₁u₁ − ∂₂u₂, ∂₁u₂ + ∂₂u₁).
pub fn delbar() -> Result<Operator> {
    Operator::first_order(vec![
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
        DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
    ])
}

pub(crate) fn unit(n: usize, j: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[j] = 1.0;
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_coefficients() {
        let g = catalog("gradient", &CatalogParams::n(2)).unwrap();
        assert_eq!((g.order(), g.dim_w(), g.dim_v()), (1, 2, 1));
        assert_eq!(
            g.coeff(&MultiIndex(vec![1, 0])).unwrap().as_slice(),
            &[1.0, 0.0]
        );
        assert_eq!(
            g.coeff(&MultiIndex(vec![0, 1])).unwrap().as_slice(),
            &[0.0, 1.0]
        );
    }

    #[test]
    fn scr_d2_coefficients() {
        let op = catalog("scrDk", &CatalogParams::nk(2, 2)).unwrap();
        assert_eq!(op.dim_w(), 2);
        let a20 = op.coeff(&MultiIndex(vec![2, 0])).unwrap();
        let a11 = op.coeff(&MultiIndex(vec![1, 1])).unwrap();
        let a02 = op.coeff(&MultiIndex(vec![0, 2])).unwrap();
        assert_eq!(a20.as_slice(), &[1.0, 0.0]);
        assert_eq!(a11.norm(), 0.0);
        assert_eq!(a02.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn deviatoric_symbol_matches_formula() {
        let op = catalog("deviatoric", &CatalogParams::n(2)).unwrap();
        let xi = [0.7, -1.3];
        let a = [2.0, 0.5];
        let s = op.symbol(&xi).unwrap() * nalgebra::DVector::from_column_slice(&a);
        let dot = a[0] * xi[0] + a[1] * xi[1];
        // entries (11, 12, 22) of a⊙ξ − (a·ξ)/2 Id
        let expect = [
            a[0] * xi[0] - dot / 2.0,
            0.5 * (a[0] * xi[1] + a[1] * xi[0]),
            a[1] * xi[1] - dot / 2.0,
        ];
        for i in 0..3 {
            assert!((s[i] - expect[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn symgrad_off_diagonal() {
        let op = catalog("symgrad", &CatalogParams::n(2)).unwrap();
        let s = op.symbol(&[1.0, 0.0]).unwrap() * nalgebra::DVector::from_column_slice(&[0.0, 1.0]);
        assert_eq!(s.as_slice(), &[0.0, 0.5, 0.0]);
    }

    #[test]
    fn laplacian_value() {
        let op = catalog("laplacian", &CatalogParams::n(2)).unwrap();
        assert_eq!(op.symbol(&[1.0, 2.0]).unwrap()[(0, 0)], 5.0);
        assert_eq!(op.linearized_symbol().as_slice(), &[1.0, 0.0, 1.0]);
    }

    #[test]
    fn unknown_name_lists_valid() {
        let err = catalog("curl", &CatalogParams::n(2)).unwrap_err();
        assert!(err.to_string().contains("symgrad"));
    }

    #[test]
    fn missing_params() {
        assert!(catalog("Dk", &CatalogParams::n(2)).is_err());
        assert!(catalog("div_form", &CatalogParams::n(2)).is_err());
        assert!(catalog("symgrad", &CatalogParams::n(2).with_dim_v(3)).is_err());
    }
}
