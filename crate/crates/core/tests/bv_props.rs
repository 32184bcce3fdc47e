//! Invariants of the one-dimensional profiles, box geometry and synthetic fields.

use proptest::prelude::*;

use symlab::bv::{
    cantor_function, section, section_area, slab_area, slab_measure, slab_variation,
    verify_line_slicing, BoxN, BvProfile1D, Part, SyntheticField,
};
use symlab::catalog::{catalog, CatalogParams};
use symlab::classify::best_witness;
use symlab::classify::SpectralPair;

fn unit(v: &[f64]) -> Vec<f64> {
    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / r).collect()
}

fn direction(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
        .prop_filter("nonzero, no zero components", |v| v.iter().all(|x| x.abs() > 1e-3))
        .prop_map(|v| unit(&v))
}

fn boxn(n: usize) -> impl Strategy<Value = BoxN> {
    prop::collection::vec((-1.0f64..1.0, 0.05f64..1.5), n).prop_map(|v| {
        let b: Vec<[f64; 2]> = v.iter().map(|(lo, w)| [*lo, lo + w]).collect();
        BoxN::new(&b).unwrap()
    })
}

/// Ac polynomial piece, two jumps and a Cantor piece, all inside [-2, 2].
fn profile() -> impl Strategy<Value = BvProfile1D> {
    (
        (-2.0f64..0.0, 0.1f64..2.0, prop::collection::vec(-2.0f64..2.0, 1..4)),
        prop::collection::vec((-2.0f64..2.0, -3.0f64..3.0), 0..3),
        (-2.0f64..1.0, 0.1f64..1.0, -2.0f64..2.0),
    )
        .prop_map(|((a, w, c), jumps, (ca, cw, amp))| {
            let mut p = BvProfile1D::density(a, a + w, &c);
            for (t, h) in jumps {
                p = p.plus(&BvProfile1D::step(t, h));
            }
            p.plus(&BvProfile1D::cantor_on(ca, ca + cw, amp))
        })
}

fn spectral_pair(op: &symlab::Operator, xi: &[f64], e: &[f64]) -> SpectralPair {
    let (w, residual) = best_witness(op, xi, e).unwrap();
    SpectralPair {
        xi: xi.to_vec(),
        coordinate: e.to_vec(),
        witness: w.iter().copied().collect(),
        residual,
    }
}

proptest! {
    #[test]
    fn clipping_matches_vertex_formula_2d(b in boxn(2), nu in direction(2), t in 0.0f64..1.0) {
        let (lo, hi) = b.projection(&nu);
        let s = lo + t * (hi - lo);
        let (x, y) = (section_area(&b, &nu, s), slab_area(&b, &nu, s));
        prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()), "{} vs {}", x, y);
    }

    #[test]
    fn clipping_matches_vertex_formula_3d(b in boxn(3), nu in direction(3), t in 0.0f64..1.0) {
        let (lo, hi) = b.projection(&nu);
        let s = lo + t * (hi - lo);
        let (x, y) = (section_area(&b, &nu, s), slab_area(&b, &nu, s));
        prop_assert!((x - y).abs() <= 1e-8 * (1.0 + x.abs()), "{} vs {}", x, y);
    }

    #[test]
    fn sections_outside_the_box_vanish(b in boxn(3), nu in direction(3), d in 0.01f64..3.0) {
        let (lo, hi) = b.projection(&nu);
        prop_assert_eq!(section_area(&b, &nu, lo - d), 0.0);
        prop_assert_eq!(section_area(&b, &nu, hi + d), 0.0);
    }

    #[test]
    fn cantor_self_similarity(x in 0.0f64..1.0) {
        let c = cantor_function(x);
        prop_assert!((cantor_function(x / 3.0) - c / 2.0).abs() <= 1e-12);
        prop_assert!((cantor_function(2.0 / 3.0 + x / 3.0) - 0.5 - c / 2.0).abs() <= 1e-12);
        prop_assert!(cantor_function(1.0 - x) + c - 1.0 <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&c));
    }

    #[test]
    fn cantor_is_monotone(x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        prop_assert!(cantor_function(a) <= cantor_function(b));
    }

    #[test]
    fn measure_is_additive(p in profile(), l in -3.0f64..3.0, w1 in 0.0f64..2.0, w2 in 0.0f64..2.0) {
        let (m, r) = (l + w1, l + w1 + w2);
        let atom: f64 = p.jumps.iter().filter(|j| j.t == m).map(|j| j.h).sum();
        for part in [Part::A, Part::J, Part::C, Part::All] {
            let whole = p.measure(l, r, part);
            let split = p.measure(l, m, part) + p.measure(m, r, part)
                - if matches!(part, Part::J | Part::All) { atom } else { 0.0 };
            prop_assert!((whole - split).abs() <= 1e-10, "{:?}", part);
        }
    }

    #[test]
    fn parts_decompose(p in profile(), l in -3.0f64..0.0, r in 0.0f64..3.0) {
        let sum: f64 = Part::PARTS.iter().map(|&q| p.measure(l, r, q)).sum();
        prop_assert!((p.measure(l, r, Part::All) - sum).abs() <= 1e-10);
        let tv: f64 = Part::PARTS.iter().map(|&q| p.variation(l, r, q)).sum();
        prop_assert!((p.variation(l, r, Part::All) - tv).abs() <= 1e-10);
        prop_assert!(p.measure(l, r, Part::All).abs() <= p.variation(l, r, Part::All) + 1e-10);
    }

    #[test]
    fn reparametrization_pushes_forward(p in profile(), alpha in -1.0f64..1.0, beta in prop_oneof![-3.0f64..-0.2, 0.2f64..3.0], l in -3.0f64..0.0, r in 0.0f64..3.0) {
        let q = p.reparametrized(alpha, beta);
        let (a, b) = ((l - alpha) / beta, (r - alpha) / beta);
        let (a, b) = (a.min(b), a.max(b));
        for part in [Part::A, Part::J, Part::C, Part::All] {
            let want = beta.signum() * p.measure(l, r, part);
            prop_assert!((q.measure(a, b, part) - want).abs() <= 1e-9 * (1.0 + want.abs()), "{:?}", part);
            prop_assert!((q.variation(a, b, part) - p.variation(l, r, part)).abs() <= 1e-9 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn slab_parts_decompose(p in profile(), b in boxn(2), nu in direction(2)) {
        let sum: f64 = Part::PARTS.iter().map(|&q| slab_measure(&p, &b, &nu, q)).sum();
        prop_assert!((slab_measure(&p, &b, &nu, Part::All) - sum).abs() <= 1e-9);
        let tv: f64 = Part::PARTS.iter().map(|&q| slab_variation(&p, &b, &nu, q)).sum();
        prop_assert!((slab_variation(&p, &b, &nu, Part::All) - tv).abs() <= 1e-9);
    }

    #[test]
    fn degenerate_box_has_no_mass(p in profile(), nu in direction(2), x0 in -1.0f64..1.0) {
        let b = BoxN::new(&[[x0, x0], [-1.0, 1.0]]).unwrap();
        prop_assert_eq!(slab_measure(&p, &b, &nu, Part::All), 0.0);
        prop_assert_eq!(slab_variation(&p, &b, &nu, Part::All), 0.0);
    }

    #[test]
    fn section_is_exact(p in profile(), nu in direction(2), dir in direction(2), y in prop::collection::vec(-1.0f64..1.0, 2), e in prop::collection::vec(-2.0f64..2.0, 2), t in -2.0f64..2.0) {
        let b = vec![0.7, -1.3];
        let field = SyntheticField::single(&nu, &b, p, BoxN::unit(2)).unwrap();
        let s = section(&field, &y, &dir, &e).unwrap();
        let at = |t: f64| {
            let x: Vec<f64> = y.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            field.eval(1, &x).iter().zip(&e).map(|(u, w)| u * w).sum::<f64>()
        };
        let lhs = s.value(t) - s.value(0.0);
        let rhs = at(t) - at(0.0);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()), "{} vs {}", lhs, rhs);
    }
}

/// Midpoint quadrature over the transverse lines converges at first order for
/// an oblique jump set: err(L)·L stays bounded and the fitted slope is ≥ 0.9.
#[test]
fn oblique_quadrature_is_first_order() {
    let op = catalog("gradient", &CatalogParams::n(2)).unwrap();
    let nu = unit(&[1.0, 0.37]);
    let field = SyntheticField::single(&nu, &[1.0], BvProfile1D::step(0.55, 1.0), BoxN::unit(2)).unwrap();
    let pair = spectral_pair(&op, &unit(&[0.6, 0.8]), &[1.0]);
    let sizes = [16usize, 32, 64, 128, 256, 512];
    let errs: Vec<f64> = sizes
        .iter()
        .map(|&l| verify_line_slicing(&op, &field, &pair, &BoxN::unit(2), l).unwrap().abs_err.j)
        .collect();
    for (l, e) in sizes.iter().zip(&errs) {
        assert!(e * (*l as f64) <= 2.0, "L={l} err={e}");
    }
    let xs: Vec<f64> = sizes.iter().map(|&l| (l as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.max(1e-300).ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 6.0, ys.iter().sum::<f64>() / 6.0);
    let slope = -xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!(slope >= 0.9, "slope {slope}, errors {errs:?}");
}
