//! Invariants of classification, spectral pairs and slicing on catalog operators.

use nalgebra::DMatrix;
use proptest::prelude::*;

use symlab::catalog::{catalog, CatalogParams};
use symlab::classify::{
    classify, ellipticity_constant, is_canceling, mixing_check, rank_a_first_order, validate_pair,
    Budget, Tolerances, Tri,
};
use symlab::sampling::{gaussian_vec, rng};
use symlab::slicing::{build_slice, check_slice_properties};
use symlab::Operator;

fn op(name: &str, n: usize) -> Operator {
    catalog(name, &CatalogParams::n(n)).unwrap()
}

fn rotation(seed: u64, n: usize) -> DMatrix<f64> {
    let mut g = rng(seed, 9);
    DMatrix::from_vec(n, n, gaussian_vec(&mut g, n * n)).qr().q()
}

fn first_order() -> impl Strategy<Value = (&'static str, usize)> {
    prop_oneof![
        Just(("gradient", 2)),
        Just(("gradient", 3)),
        Just(("symgrad", 2)),
        Just(("symgrad", 3)),
        Just(("divcurl", 2)),
        Just(("deviatoric", 2)),
        Just(("deviatoric", 3)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn verdicts_survive_scaling_and_rotation((name, n) in first_order(), t in 0.05f64..20.0, seed in any::<u64>()) {
        let budget = Budget::default();
        let tol = Tolerances::default();
        let a = op(name, n);
        let b = a.scaled(t).unwrap().compose_linear(&rotation(seed, n)).unwrap();
        prop_assert_eq!(
            ellipticity_constant(&a, &budget, &tol).unwrap().verdict,
            ellipticity_constant(&b, &budget, &tol).unwrap().verdict
        );
        prop_assert_eq!(
            is_canceling(&a, &budget, &tol, 0).unwrap().verdict,
            is_canceling(&b, &budget, &tol, 0).unwrap().verdict
        );
    }

    #[test]
    fn ellipticity_constant_scales_linearly((name, n) in first_order(), t in 0.1f64..10.0) {
        let budget = Budget::default();
        let tol = Tolerances::default();
        let a = ellipticity_constant(&op(name, n), &budget, &tol).unwrap();
        let b = ellipticity_constant(&op(name, n).scaled(t).unwrap(), &budget, &tol).unwrap();
        prop_assert!((b.c_estimate - t * a.c_estimate).abs() <= 1e-9 * (1.0 + t * a.c_estimate));
        prop_assert!((b.relative - a.relative).abs() <= 1e-9);
    }

    #[test]
    fn mixing_pairs_revalidate((name, n) in first_order(), seed in 0u64..1000) {
        let budget = Budget::default();
        let tol = Tolerances::default();
        let a = op(name, n);
        let m = mixing_check(&a, &budget, &tol, seed).unwrap();
        for p in m.pairs() {
            prop_assert!(validate_pair(&a, p, seed ^ 0x77, 64).unwrap() <= tol.pair);
            prop_assert!(rank_a_first_order(&a, &p.witness, tol.rank).unwrap() <= 1);
        }
    }

    #[test]
    fn slices_of_mixing_pairs_hold((name, n) in prop_oneof![Just(("symgrad", 2)), Just(("symgrad", 3)), Just(("gradient", 3))], seed in 0u64..1000) {
        let budget = Budget::default();
        let tol = Tolerances::default();
        let a = op(name, n);
        let m = mixing_check(&a, &budget, &tol, seed).unwrap();
        prop_assert!(m.is_verified());
        let p = &m.pairs()[0];
        let s = build_slice(&a, p).unwrap();
        prop_assert_eq!(s.xxe.dim() + s.wxe.dim(), a.dim_w());
        prop_assert_eq!(s.restricted.n(), n - 1);
        let rep = check_slice_properties(&a, p, &budget, &tol, seed).unwrap();
        prop_assert!(rep.ok, "{:?}", rep);
    }
}

#[test]
fn known_verdicts() {
    let budget = Budget::default();
    let tol = Tolerances::default();
    let rep = classify(&op("symgrad", 2), &budget, &tol, 0).unwrap();
    assert_eq!(rep.elliptic.verdict, Tri::Yes);
    assert!(rep.mixing.is_verified());
    assert!(rep.consistency.iter().all(|c| c.ok));
    let rep = classify(&op("laplacian", 2), &budget, &tol, 0).unwrap();
    assert_eq!(rep.elliptic.verdict, Tri::Yes);
    assert_eq!(rep.complex_elliptic.verdict, Tri::No);
    let rep = classify(&op("deviatoric", 2), &budget, &tol, 0).unwrap();
    assert!(!rep.mixing.is_verified());
}
