mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use common::{dot, norm, random_spec, random_vec, to_nalgebra};
use l1gen::operator::{alternating_stages, OperatorSpec, Permutation, Spectrum};
use proptest::prelude::*;

fn dense_matvec(a: &nalgebra::DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (a * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn adjoint_identity(n in 2usize..64, extra in 0usize..64, right in 1usize..5, left in 0usize..3,
                        permute: bool, seed: u64) {
        let m = n + extra;
        let spec = random_spec(n, m, right, left, permute, 2, seed);
        let x = random_vec(n, seed ^ 11);
        let y = random_vec(m, seed ^ 12);
        let lhs = dot(&spec.matvec(&x).unwrap(), &y);
        let rhs = dot(&x, &spec.rmatvec(&y).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * norm(&x) * norm(&y) * spec.spectrum().max());
    }

    #[test]
    fn matches_dense_oracle(n in 1usize..40, extra in 0usize..40, right in 0usize..4, left in 0usize..3,
                            permute: bool, seed: u64) {
        let m = n + extra;
        let spec = random_spec(n, m, right, left, permute, 1, seed);
        let a = to_nalgebra(&spec.materialize_dense().unwrap());
        let x = random_vec(n, seed ^ 5);
        let y = random_vec(m, seed ^ 6);
        let scale = spec.spectrum().max();
        let ax = spec.matvec(&x).unwrap();
        for (u, v) in ax.iter().zip(dense_matvec(&a, &x)) {
            prop_assert!((u - v).abs() <= 1e-12 * scale * norm(&x));
        }
        let aty = spec.rmatvec(&y).unwrap();
        for (u, v) in aty.iter().zip(dense_matvec(&a.transpose(), &y)) {
            prop_assert!((u - v).abs() <= 1e-12 * scale * norm(&y));
        }
        let diag = spec.diag_ata();
        let gram = a.transpose() * &a;
        for (j, d) in diag.iter().enumerate() {
            prop_assert!((d - gram[(j, j)]).abs() <= 1e-12 * scale * scale);
        }
    }

    #[test]
    fn ata_inverse_round_trip(n in 1usize..128, right in 1usize..5, q in 0i32..4, seed: u64) {
        let spec = random_spec(n, 2 * n, right, 1, true, q, seed);
        let v = random_vec(n, seed ^ 3);
        let w = spec.apply_ata_inverse(&v).unwrap();
        let back = spec.rmatvec(&spec.matvec(&w).unwrap()).unwrap();
        let err: Vec<f64> = back.iter().zip(&v).map(|(a, b)| a - b).collect();
        prop_assert!(norm(&err) <= 1e-10 * norm(&v) * spec.spectrum().kappa_ata().sqrt().max(1.0));
    }

    #[test]
    fn orthogonal_factors_preserve_norm(n in 1usize..100, right in 0usize..6, seed: u64) {
        let spec = random_spec(n, n, right, 0, false, 0, seed);
        let v = random_vec(n, seed);
        let g = spec.apply_g(&v).unwrap();
        prop_assert!((norm(&g) - norm(&v)).abs() <= 1e-13 * norm(&v).max(1.0));
        let back = spec.apply_gt(&g).unwrap();
        for (a, b) in back.iter().zip(&v) {
            prop_assert!((a - b).abs() <= 1e-13);
        }
    }

    #[test]
    fn gram_sparsity_ignores_permutations(n in 4usize..24, right in 1usize..4, seed: u64) {
        let spectrum = Spectrum::uniform_decades(n, 1, 0.1, seed).unwrap();
        let stages = alternating_stages(n, 2.0 * PI / 10.0, right).unwrap();
        let plain = OperatorSpec::new(2 * n, stages.clone(), vec![], Permutation::identity(2 * n),
                                      Permutation::identity(2 * n), spectrum.clone()).unwrap();
        let shuffled = OperatorSpec::new(2 * n, stages, vec![], Permutation::seeded(2 * n, seed),
                                         Permutation::seeded(2 * n, seed ^ 9), spectrum).unwrap();
        prop_assert_eq!(plain.nnz_counts(1e-12).unwrap().1, shuffled.nnz_counts(1e-12).unwrap().1);
    }
}

#[test]
fn singular_values_match_spectrum() {
    let spec = random_spec(24, 40, 3, 2, true, 2, 17);
    let a = to_nalgebra(&spec.materialize_dense().unwrap());
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut want = spec.spectrum().values().to_vec();
    want.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (s, w) in sv.iter().zip(&want) {
        assert!((s - w).abs() <= 1e-10 * w.max(1.0), "{s} vs {w}");
    }
}

#[test]
fn concurrent_matvecs_agree() {
    let spec = Arc::new(random_spec(4096, 8192, 3, 1, true, 3, 4));
    let x = random_vec(4096, 1);
    let expected = spec.matvec(&x).unwrap();
    std::thread::scope(|s| {
        for _ in 0..8 {
            let spec = Arc::clone(&spec);
            let (x, expected) = (&x, &expected);
            s.spawn(move || {
                for _ in 0..10 {
                    assert_eq!(&spec.matvec(x).unwrap(), expected);
                }
            });
        }
    });
}

#[test]
fn sparsity_grows_with_stage_count() {
    let n = 64;
    let mut last = 0;
    for k in 1..=4 {
        let spec = OperatorSpec::new(
            2 * n,
            alternating_stages(n, 2.0 * PI / 10.0, k).unwrap(),
            vec![],
            Permutation::identity(2 * n),
            Permutation::identity(2 * n),
            Spectrum::uniform_decades(n, 1, 0.1, 1).unwrap(),
        )
        .unwrap();
        let gram_nnz = spec.nnz_counts(1e-12).unwrap().1;
        assert!(gram_nnz > last);
        last = gram_nnz;
    }
}
