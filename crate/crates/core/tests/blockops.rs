mod common;

use std::collections::BTreeMap;

use minvarx::blockops::{
    check_minimality_g, check_minimality_h, kappa, kappa_adjoint, lq_multi_lag, orthogonality_residual, parameterize,
    reconstruct, BlockMatrixG, CentralizerElement,
};
use minvarx::{enumerate_structures, StructureParams};
use nalgebra::DMatrix;
use proptest::prelude::*;

use common::{normal, rng};

/// A random invertible element of the centralizer.
fn random_s(seed: u64, s: &StructureParams) -> CentralizerElement {
    let mut r = rng(seed);
    let walls: BTreeMap<_, _> = CentralizerElement::wall_keys(s)
        .into_iter()
        .map(|key @ (r1, j, r2)| {
            let mut w = normal(&mut r, s.d(r1), s.d(r2));
            if r1 == r2 && j == 0 {
                w += DMatrix::identity(s.d(r1), s.d(r1)) * 3.0;
            }
            (key, w)
        })
        .collect();
    CentralizerElement::from_walls(s.clone(), walls).unwrap()
}

fn projector(k: &DMatrix<f64>) -> DMatrix<f64> {
    let gram = (k * k.transpose()).try_inverse().unwrap();
    k.transpose() * gram * k
}

fn case() -> impl Strategy<Value = (StructureParams, usize, u64)> {
    (1usize..=3, 1usize..=3, 0usize..=2, any::<u64>()).prop_flat_map(|(h, p, extra, seed)| {
        let all = enumerate_structures(h, p);
        (0..all.len()).prop_map(move |i| (all[i].clone(), h + extra, seed))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kappa_commutes_with_centralizer((s, m, seed) in case()) {
        let mut r = rng(seed);
        let g = common::g(&mut r, &s, m);
        let sm = random_s(seed ^ 0x55, &s);
        let f = s.jordan_matrix();
        let smat = sm.realize();
        prop_assert!((&smat * &f - &f * &smat).amax() < 1e-14);
        prop_assert_eq!(sm.param_count(), s.centralizer_dim());

        let sg = g.with_data(&smat * g.data()).unwrap();
        let lhs = kappa(&sg);
        let rhs = &smat * kappa(&g);
        let scale = rhs.amax().max(1.0);
        prop_assert!((lhs - rhs).amax() <= 1e-12 * scale);
    }

    #[test]
    fn kappa_adjoint_pairs((s, m, seed) in case()) {
        let mut r = rng(seed);
        let g = common::g(&mut r, &s, m);
        let n = normal(&mut r, s.n_min(), s.p() * m);
        let lhs = kappa(&g).dot(&n);
        let rhs = g.data().dot(&kappa_adjoint(&s, &n, m));
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn lq_normalizes((s, m, seed) in case()) {
        let mut r = rng(seed);
        let g = common::well_posed_g(&mut r, &s, m);
        let f = lq_multi_lag(&g).unwrap();
        let g0 = f.g_o.g0();
        let gram = &g0 * g0.transpose();
        prop_assert!((gram - DMatrix::identity(s.rank_alloc(), s.rank_alloc())).amax() < 1e-10);
        prop_assert!(orthogonality_residual(&f.g_o) < 1e-10);
        let smat = f.s.realize();
        prop_assert!((&smat * g.data() - f.g_o.data()).amax() < 1e-9 * g.data().amax().max(1.0));

        // a second pass, after fixing signs, changes nothing
        let pos = f.with_positive_signs();
        let again = lq_multi_lag(&pos.g_o).unwrap().with_positive_signs();
        prop_assert!((again.g_o.data() - pos.g_o.data()).amax() < 1e-10);
        for row in pos.g_o.g0().row_iter() {
            let lead = row.iter().find(|x| x.abs() > 1e-12).copied().unwrap_or(1.0);
            prop_assert!(lead > 0.0);
        }
    }

    #[test]
    fn lq_normalizes_badly_conditioned_g((s, m, seed) in case()) {
        let mut r = rng(seed);
        let g = common::g(&mut r, &s, m);
        let f = lq_multi_lag(&g).unwrap();
        prop_assert!(orthogonality_residual(&f.g_o) < 1e-10);
        // S grows like the inverse powers of G_{:,0}, so rounding scales with it
        let smat = f.s.realize();
        let scale = smat.amax() * g.data().amax().max(1.0);
        prop_assert!((&smat * g.data() - f.g_o.data()).amax() < 1e-12 * scale);
    }

    #[test]
    fn lq_keeps_kappa_row_space_under_centralizer((s, m, seed) in case()) {
        let mut r = rng(seed);
        let g = common::g(&mut r, &s, m);
        let sm = random_s(seed.wrapping_add(7), &s);
        let moved = g.with_data(sm.realize() * g.data()).unwrap();
        // the normal form may differ, the row space of κ may not
        let a = kappa(&lq_multi_lag(&g).unwrap().g_o);
        let b = kappa(&lq_multi_lag(&moved).unwrap().g_o);
        prop_assert!((projector(&a) - projector(&b)).amax() < 1e-8);
    }

    #[test]
    fn parameterization_round_trips((s, m, seed) in case()) {
        let mut r = rng(seed);
        let g = common::g(&mut r, &s, m);
        let g_o = lq_multi_lag(&g).unwrap().g_o;
        let param = parameterize(&g_o).unwrap();
        let back = reconstruct(&param).unwrap();
        prop_assert!((back.data() - g_o.data()).amax() < 1e-10);
        let json = serde_json::to_string(&param).unwrap();
        let again: minvarx::blockops::OrthoParam = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(again, param);
    }
}

#[test]
fn centralizer_round_trips_through_dense_form() {
    let s = StructureParams::from_dvec(&[2, 1, 1]).unwrap();
    let e = random_s(4, &s);
    let back = CentralizerElement::from_matrix(s.clone(), &e.realize(), 1e-12).unwrap();
    assert_eq!(back, e);
    assert!(e.is_invertible(1e-10));
    let id = CentralizerElement::identity(s.clone());
    assert_eq!(e.compose(&id).unwrap(), e);
    let prod = e.compose(&random_s(5, &s)).unwrap().realize();
    assert!((prod - e.realize() * random_s(5, &s).realize()).amax() < 1e-12);

    let mut not_commuting = DMatrix::identity(s.n_min(), s.n_min());
    not_commuting[(s.n_min() - 1, 0)] = 1.0;
    assert!(CentralizerElement::from_matrix(s, &not_commuting, 1e-12).is_err());
}

#[test]
fn minimality_checks() {
    let s = StructureParams::from_pairs(&[(2, 1), (1, 1)]).unwrap();
    let good = BlockMatrixG::new(s.clone(), DMatrix::from_row_slice(3, 2, &[0.3, 0.1, 1.0, 0.0, 0.0, 1.0])).unwrap();
    assert!(check_minimality_g(&good, 1e-10).passed);
    let bad = BlockMatrixG::new(s.clone(), DMatrix::from_row_slice(3, 2, &[0.3, 0.1, 1.0, 0.0, 2.0, 0.0])).unwrap();
    let rep = check_minimality_g(&bad, 1e-10);
    assert!(!rep.passed);
    assert_eq!((rep.rank, rep.required), (1, 2));
    assert!(lq_multi_lag(&bad).is_err());

    // H_{:,0} is the first column of each block
    let h = DMatrix::from_row_slice(2, 3, &[5.0, 1.0, 0.0, 5.0, 0.0, 1.0]);
    assert!(check_minimality_h(&h, &s, 1e-10).unwrap().passed);
    let h = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 2.0, 1.0, 4.0]);
    assert!(!check_minimality_h(&h, &s, 1e-10).unwrap().passed);
    assert!(check_minimality_h(&DMatrix::zeros(2, 4), &s, 1e-10).is_err());
}

#[test]
fn g_json_round_trip_is_exact() {
    let mut r = rng(11);
    let s = StructureParams::from_dvec(&[1, 2]).unwrap();
    let g = common::g(&mut r, &s, 3);
    let txt = serde_json::to_string(&g).unwrap();
    let back: BlockMatrixG = serde_json::from_str(&txt).unwrap();
    assert_eq!(back, g);
    assert_eq!(serde_json::to_string(&back).unwrap(), txt);
}
