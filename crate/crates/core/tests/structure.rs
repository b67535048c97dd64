use minvarx::{enumerate_structures, StructureParams};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// `pmk - (m + k) Σ j d_j + Σ_i (Σ_{j>=i} d_j)^2`
fn reduction_expanded(s: &StructureParams, k: usize, m: usize) -> i64 {
    let p = s.p() as i64;
    let weighted: i64 = s.dvec().iter().enumerate().map(|(j, &d)| (j as i64 + 1) * d as i64).sum();
    let squares: i64 = (1..=s.p()).map(|i| (s.tail_sum(i) as i64).pow(2)).sum();
    p * (m * k) as i64 - (m + k) as i64 * weighted + squares
}

/// Dimension of `{M : MF = FM}` from the null space of `M ↦ MF - FM`.
fn commutant_dim(f: &DMatrix<f64>) -> usize {
    let n = f.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    // vec(MF - FM) = (F' ⊗ I - I ⊗ F) vec(M)
    let op = f.transpose().kronecker(&eye) - eye.kronecker(f);
    let sv = op.singular_values();
    let tol = 1e-9 * sv.max().max(1.0);
    n * n - sv.iter().filter(|&&x| x > tol).count()
}

#[test]
fn enumeration_counts() {
    assert_eq!(enumerate_structures(2, 2).len(), 3);
    assert_eq!(enumerate_structures(10, 5).len(), 2002);
    assert_eq!(enumerate_structures(1, 1).len(), 1);
    for h in 1..=8 {
        for p in 1..=6 {
            assert_eq!(enumerate_structures(h, p).len(), binomial(h + p - 1, p), "h={h} p={p}");
            let up_to: usize = (1..=p).map(|q| enumerate_structures(h, q).len()).sum();
            assert_eq!(up_to + 1, binomial(h + p, p), "h={h} p={p}");
        }
    }
}

#[test]
fn enumeration_has_no_duplicates_and_descending_order() {
    let all = enumerate_structures(4, 3);
    for w in all.windows(2) {
        let a: Vec<usize> = w[0].dvec().iter().rev().copied().collect();
        let b: Vec<usize> = w[1].dvec().iter().rev().copied().collect();
        assert!(a > b, "{:?} before {:?}", w[0].dvec(), w[1].dvec());
    }
    assert_eq!(all.first().unwrap().dvec(), &[0, 0, 4]);
}

#[test]
fn small_examples() {
    let s = StructureParams::from_dvec(&[1, 0, 1]).unwrap();
    assert_eq!(s.pairs(), vec![(3, 1), (1, 1)]);
    assert_eq!(s.n_min(), 4);
    assert_eq!(s.centralizer_dim(), 6);
    assert_eq!(StructureParams::from_dvec(&[1, 1]).unwrap().centralizer_dim(), 5);
    assert_eq!(StructureParams::from_dvec(&[2, 2]).unwrap().n_min(), 6);
    assert_eq!(StructureParams::from_dvec(&[0, 1]).unwrap().param_reduction(2, 2).unwrap(), 2);

    let f = StructureParams::from_pairs(&[(2, 1), (1, 1)]).unwrap().jordan_matrix();
    let mut want = DMatrix::zeros(3, 3);
    want[(0, 1)] = 1.0;
    assert_eq!(f, want);
    let f = s.jordan_matrix();
    let mut want = DMatrix::zeros(4, 4);
    want[(0, 1)] = 1.0;
    want[(1, 2)] = 1.0;
    assert_eq!(f, want);
    assert_eq!(StructureParams::from_pairs(&[(1, 3)]).unwrap().jordan_matrix(), DMatrix::zeros(3, 3));
}

#[test]
fn extreme_reductions() {
    for p in 1..=4 {
        for h in 1..=4 {
            let full = StructureParams::from_pairs(&[(p, h)]).unwrap();
            assert_eq!(full.param_reduction(h, h).unwrap(), 0);
            for (k, m) in [(h, h + 1), (h + 2, h)] {
                let thin = StructureParams::from_pairs(&[(p, 1)]).unwrap();
                assert_eq!(thin.param_reduction(k, m).unwrap(), p * (m - 1) * (k - 1));
            }
        }
    }
}

#[test]
fn rejects_bad_vectors() {
    assert!(StructureParams::from_dvec(&[1, 0]).is_err());
    assert!(StructureParams::from_dvec(&[]).is_err());
    assert!(StructureParams::from_signed_dvec(&[-1, 1]).is_err());
    assert!(StructureParams::from_pairs(&[(1, 1), (2, 1)]).is_err());
    let s = StructureParams::from_dvec(&[1, 2]).unwrap();
    assert!(s.validate_for(2, 5).is_err());
    assert!(s.param_reduction(3, 2).is_err());
    assert!(s.validate_for(3, 3).is_ok());
}

fn any_structure() -> impl Strategy<Value = StructureParams> {
    (1usize..=6, 1usize..=5).prop_flat_map(|(h, p)| {
        let all = enumerate_structures(h, p);
        (0..all.len()).prop_map(move |i| all[i].clone())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn reduction_formulas_agree(s in any_structure(), k in 1usize..=8, m in 1usize..=8) {
        if s.rank_alloc() <= k.min(m) {
            prop_assert_eq!(s.param_reduction(k, m).unwrap() as i64, reduction_expanded(&s, k, m));
            prop_assert_eq!(s.free_params(k, m).unwrap() + s.param_reduction(k, m).unwrap(), s.p() * k * m);
        } else {
            prop_assert!(s.param_reduction(k, m).is_err());
        }
    }

    #[test]
    fn jordan_index_of_nilpotency(s in any_structure()) {
        let f = s.jordan_matrix();
        prop_assert_eq!(f.nrows(), s.n_min());
        let mut pw = DMatrix::identity(s.n_min(), s.n_min());
        for _ in 0..s.p() - 1 {
            pw = &pw * &f;
        }
        prop_assert!(pw.amax() > 0.5);
        prop_assert_eq!((&pw * &f).amax(), 0.0);
    }

    #[test]
    fn dvec_and_pairs_round_trip(s in any_structure()) {
        let back = StructureParams::from_pairs(&s.pairs()).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(StructureParams::from_dvec(s.dvec()).unwrap(), s.clone());
        prop_assert_eq!(s.to_string().parse::<StructureParams>().unwrap(), s.clone());
        let json = serde_json::to_string(&s).unwrap();
        prop_assert_eq!(serde_json::from_str::<StructureParams>(&json).unwrap(), s.clone());
        let mc: usize = s.pairs().iter().map(|&(r, l)| r * l).sum();
        prop_assert_eq!(s.mcmillan_degree(), mc);
    }
}

#[test]
fn centralizer_dim_matches_commutant() {
    for h in 1..=4 {
        for p in 1..=4 {
            for s in enumerate_structures(h, p) {
                if s.n_min() > 12 {
                    continue;
                }
                assert_eq!(s.centralizer_dim(), commutant_dim(&s.jordan_matrix()), "{s}");
            }
        }
    }
}
