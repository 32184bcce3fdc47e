//! Invariants of the multi-index, subspace, operator and linearization layers.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

use symlab::linearize::linearize;
use symlab::operator::{curl_rows, curl_symbol, sym_mul};
use symlab::sampling::{gaussian_vec, rng};
use symlab::subspace::{
    nullspace, numeric_rank, subspace_intersect, subspace_orthocomplement, subspace_span, Subspace,
};
use symlab::tensor::{binomial, multiindex_enumerate, sym_dim, MonomialBasis, MultiIndex, SymCoords};
use symlab::Operator;

fn random_matrix(seed: u64, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut g = rng(seed, 0);
    DMatrix::from_vec(rows, cols, gaussian_vec(&mut g, rows * cols))
}

fn random_op(seed: u64, n: usize, nv: usize, nw: usize, k: usize) -> Operator {
    let basis = MonomialBasis::new(n, k).unwrap();
    let entries = basis
        .indices()
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), random_matrix(seed.wrapping_mul(31).wrapping_add(i as u64), nw, nv)))
        .collect();
    Operator::new(n, nv, nw, k, entries).unwrap()
}

/// Matrix with prescribed singular values (zeros allowed) and random frames.
fn with_singular_values(seed: u64, rows: usize, cols: usize, s: &[f64]) -> DMatrix<f64> {
    let u = random_matrix(seed, rows, rows).qr().q();
    let v = random_matrix(seed + 1, cols, cols).qr().q();
    let mut d = DMatrix::zeros(rows, cols);
    for (i, x) in s.iter().enumerate().take(rows.min(cols)) {
        d[(i, i)] = *x;
    }
    u * d * v.transpose()
}

fn subspace_of(seed: u64, ambient: usize, count: usize) -> Subspace {
    let mut g = rng(seed, 1);
    let vs: Vec<DVector<f64>> = (0..count).map(|_| DVector::from_vec(gaussian_vec(&mut g, ambient))).collect();
    subspace_span(&vs, ambient, 1e-9).unwrap()
}

proptest! {
    #[test]
    fn enumeration_count_and_order(n in 1usize..6, k in 0usize..6) {
        let list = multiindex_enumerate(n, k).unwrap();
        prop_assert_eq!(list.len(), binomial(n + k - 1, k));
        prop_assert_eq!(list.len(), sym_dim(n, k));
        for w in list.windows(2) {
            prop_assert!(w[0].entries() > w[1].entries());
        }
        for a in &list {
            prop_assert_eq!(a.n(), n);
            prop_assert_eq!(a.order(), k);
        }
    }

    #[test]
    fn pure_power_coordinates_are_monomials(n in 1usize..4, m in 0usize..4, seed in any::<u64>()) {
        let xi = gaussian_vec(&mut rng(seed, 2), n);
        let c = SymCoords::pure(&[1.0], &xi, m).unwrap();
        let basis = MonomialBasis::new(n, m).unwrap();
        for (i, a) in basis.indices().iter().enumerate() {
            prop_assert!((c.coeffs[i] - a.monomial(&xi)).abs() <= 1e-12 * (1.0 + c.coeffs[i].abs()));
        }
    }

    #[test]
    fn span_is_idempotent(seed in any::<u64>(), ambient in 1usize..7, count in 0usize..7) {
        let s = subspace_of(seed, ambient, count);
        let again = subspace_span(&s.vectors(), ambient, 1e-9).unwrap();
        prop_assert!(again.same_as(&s, 1e-9));
        prop_assert!(s.dim() <= ambient);
        let gram = s.basis().transpose() * s.basis();
        prop_assert!((gram - DMatrix::identity(s.dim(), s.dim())).amax() <= 1e-12);
    }

    #[test]
    fn intersection_lies_in_both(seed in any::<u64>(), ambient in 2usize..7, ca in 1usize..6, cb in 1usize..6, shared in 0usize..3) {
        let common = subspace_of(seed ^ 0xabc, ambient, shared);
        let a = common.span(&subspace_of(seed, ambient, ca)).unwrap();
        let b = common.span(&subspace_of(seed.wrapping_add(7), ambient, cb)).unwrap();
        let i = subspace_intersect(&a, &b, 1e-9).unwrap();
        for v in i.vectors() {
            prop_assert!(a.residual(&v) <= 1e-9);
            prop_assert!(b.residual(&v) <= 1e-9);
        }
        prop_assert!(i.contains_subspace(&common, 1e-8));
    }

    #[test]
    fn orthocomplement_dimensions(seed in any::<u64>(), ambient in 1usize..7, count in 0usize..7) {
        let s = subspace_of(seed, ambient, count);
        let c = subspace_orthocomplement(&s);
        prop_assert_eq!(s.dim() + c.dim(), ambient);
        prop_assert!((s.basis().transpose() * c.basis()).amax() <= 1e-10);
        prop_assert!(subspace_orthocomplement(&c).same_as(&s, 1e-10));
    }

    #[test]
    fn rank_plus_nullity(seed in any::<u64>(), rows in 1usize..7, cols in 1usize..7, rank_frac in 0.0f64..1.0) {
        let r = ((rows.min(cols) as f64) * rank_frac).round() as usize;
        let mut g = rng(seed, 3);
        let s: Vec<f64> = (0..r).map(|_| g.random_range(0.5..2.0)).collect();
        let m = with_singular_values(seed, rows, cols, &s);
        prop_assert_eq!(numeric_rank(&m, 1e-9), r);
        let ns = nullspace(&m, 1e-9);
        prop_assert_eq!(r + ns.dim(), cols);
        let smax = s.iter().copied().fold(0.0, f64::max);
        prop_assert!((&m * ns.basis()).amax() <= 1e-9 * smax.max(1.0));
    }

    #[test]
    fn symbol_is_homogeneous(seed in any::<u64>(), n in 1usize..4, k in 1usize..4, t in -3.0f64..3.0) {
        let op = random_op(seed, n, 2, 3, k);
        let xi = gaussian_vec(&mut rng(seed, 4), n);
        let txi: Vec<f64> = xi.iter().map(|x| t * x).collect();
        let lhs = op.symbol(&txi).unwrap();
        let rhs = op.symbol(&xi).unwrap() * t.powi(k as i32);
        prop_assert!((&lhs - &rhs).amax() <= 1e-12 * (1.0 + rhs.amax()));
    }

    #[test]
    fn linearized_symbol_on_pure_tensors(seed in any::<u64>(), n in 1usize..4, k in 1usize..4, nv in 1usize..3) {
        let op = random_op(seed, n, nv, 2, k);
        let mut g = rng(seed, 5);
        let xi = gaussian_vec(&mut g, n);
        let v = gaussian_vec(&mut g, nv);
        let cl = op.linearized_symbol();
        let coords = SymCoords::pure(&v, &xi, k).unwrap().coeffs;
        let lhs = cl * coords;
        let rhs = op.symbol(&xi).unwrap() * DVector::from_vec(v);
        prop_assert!((&lhs - &rhs).amax() <= 1e-12 * op.norm() * (1.0 + rhs.amax()));
    }

    #[test]
    fn sym_mul_composes_pure_powers(n in 1usize..4, m in 1usize..4, xs in prop::collection::vec(-3i32..4, 3), vs in prop::collection::vec(-3i32..4, 2)) {
        let xi: Vec<f64> = xs[..n].iter().map(|&x| x as f64).collect();
        let v: Vec<f64> = vs.iter().map(|&x| x as f64).collect();
        let lower = SymCoords::pure(&v, &xi, m - 1).unwrap();
        let raised = sym_mul(&lower, &xi).unwrap();
        prop_assert_eq!(raised.coeffs, SymCoords::pure(&v, &xi, m).unwrap().coeffs);
    }

    #[test]
    fn curl_kernel_is_pure_powers(n in 1usize..4, m in 1usize..4, nv in 1usize..3, seed in any::<u64>()) {
        let xi = gaussian_vec(&mut rng(seed, 6), n);
        let c = curl_symbol(n, m, nv, &xi).unwrap();
        prop_assert_eq!(c.nrows(), curl_rows(n, m, nv));
        let ker = nullspace(&c, 1e-9);
        prop_assert_eq!(ker.dim(), nv);
        let pures: Vec<DVector<f64>> = (0..nv)
            .map(|l| {
                let mut e = vec![0.0; nv];
                e[l] = 1.0;
                SymCoords::pure(&e, &xi, m).unwrap().coeffs
            })
            .collect();
        let span = subspace_span(&pures, ker.ambient_dim(), 1e-12).unwrap();
        prop_assert!(ker.same_as(&span, 1e-9));
    }

    #[test]
    fn linearization_dimensions_and_identity(seed in any::<u64>(), n in 1usize..4, k in 1usize..4, nv in 1usize..3) {
        let op = random_op(seed, n, nv, 2, k);
        let lin = linearize(&op).unwrap();
        prop_assert_eq!(lin.domain_dim(), nv * binomial(n + k - 2, k - 1));
        let curl = if k == 1 { 0 } else { curl_rows(n, k - 1, nv) };
        prop_assert_eq!(lin.target_dim(), 2 + curl);
        prop_assert!(lin.sss_residual(20, seed).unwrap() <= 1e-12);
    }
}

#[test]
fn multiindex_examples() {
    let e = |v: Vec<usize>| MultiIndex(v);
    assert_eq!(multiindex_enumerate(2, 1).unwrap(), vec![e(vec![1, 0]), e(vec![0, 1])]);
    assert_eq!(
        multiindex_enumerate(2, 2).unwrap(),
        vec![e(vec![2, 0]), e(vec![1, 1]), e(vec![0, 2])]
    );
    assert_eq!(multiindex_enumerate(3, 2).unwrap().len(), 6);
    assert!(multiindex_enumerate(0, 2).is_err());
}
