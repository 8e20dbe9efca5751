use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use semitrotter::discretize::{build_backward_diff, build_forward_diff, build_laplacian};
use semitrotter::linalg::{
    commutator, hermitian_eig, matmul, spectral_norm, unitary_exp, Circulant,
};
use semitrotter::splitting::{suzuki_plan, trotter_step, Generator};
use semitrotter::symbolic::{random_symop, sym_commutator};
use semitrotter::{ComplexMatrix, Grid, C64};

fn matrix(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
        ComplexMatrix::from_vec(
            n,
            n,
            v.into_iter().map(|(re, im)| C64::new(re, im)).collect(),
        )
        .unwrap()
    })
}

fn hermitian(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    matrix(n).prop_map(|m| m.hermitian_part())
}

fn sized_hermitian() -> impl Strategy<Value = ComplexMatrix> {
    (1usize..=24).prop_flat_map(hermitian)
}

fn to_nalgebra(m: &ComplexMatrix) -> DMatrix<C64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn eigendecomposition_reconstructs(m in sized_hermitian()) {
        let e = hermitian_eig(&m).unwrap();
        let scale = m.max_abs().max(1.0);
        prop_assert!((&e.reconstruct() - &m).max_abs() <= 1e-12 * scale * m.rows() as f64);
        let v = &e.vectors;
        let gram = matmul(&v.adjoint(), v).unwrap();
        prop_assert!((&gram - &ComplexMatrix::identity(m.rows())).max_abs() < 1e-12);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn spectral_norm_matches_svd(m in (1usize..=20).prop_flat_map(matrix)) {
        let want = to_nalgebra(&m).singular_values().max();
        let got = spectral_norm(&m).unwrap();
        prop_assert!((got - want).abs() <= 1e-10 * want.max(1.0), "{} vs {}", got, want);
    }

    #[test]
    fn commutator_identities(x in hermitian(12), y in matrix(12), z in matrix(12)) {
        let xy = commutator(&x, &y).unwrap();
        let yx = commutator(&y, &x).unwrap();
        prop_assert_eq!(&xy, &-&yx);
        prop_assert!(commutator(&x, &x).unwrap().is_zero());
        let j = &(&commutator(&x, &commutator(&y, &z).unwrap()).unwrap()
            + &commutator(&y, &commutator(&z, &x).unwrap()).unwrap())
            + &commutator(&z, &xy).unwrap();
        let scale = x.frobenius_norm() * y.frobenius_norm() * z.frobenius_norm();
        prop_assert!(j.frobenius_norm() <= 1e-9 * scale);
    }

    #[test]
    fn unitary_exponential_semigroup(m in hermitian(10), s in -2.0f64..2.0, t in -2.0f64..2.0) {
        let us = unitary_exp(&m, s).unwrap();
        let ut = unitary_exp(&m, t).unwrap();
        let ust = unitary_exp(&m, s + t).unwrap();
        prop_assert!((&matmul(&us, &ut).unwrap() - &ust).max_abs() < 1e-11);
        let defect = &matmul(&us.adjoint(), &us).unwrap() - &ComplexMatrix::identity(10);
        prop_assert!(spectral_norm(&defect).unwrap() <= 1e-10);
    }

    #[test]
    fn circulant_apply_matches_dense(row in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..40), seed in any::<u64>()) {
        let row: Vec<C64> = row.into_iter().map(|(a, b)| C64::new(a, b)).collect();
        let n = row.len();
        let c = Circulant::new(row);
        let dense = c.to_matrix();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<C64> = (0..n).map(|_| C64::new(rand::Rng::gen_range(&mut rng, -1.0..1.0), 0.5)).collect();
        let want = dense.matvec(&x);
        let mut got = x.clone();
        c.apply(&mut got);
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).norm() < 1e-12 * n as f64);
        }
    }

    #[test]
    fn split_steps_are_unitary(
        a in hermitian(8),
        d in prop::collection::vec(-5.0f64..5.0, 8),
        dt in 0.01f64..0.5,
        k in 0usize..4,
    ) {
        let p = [1, 2, 4, 6][k];
        let b = ComplexMatrix::from_real_diag(&d);
        let u = trotter_step(&suzuki_plan(p).unwrap(), &a, &b, dt).unwrap();
        let defect = &matmul(&u.adjoint(), &u).unwrap() - &ComplexMatrix::identity(8);
        prop_assert!(spectral_norm(&defect).unwrap() <= 1e-10);
    }

    #[test]
    fn symbolic_commutator_identities(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, q, r) = (random_symop(&mut rng), random_symop(&mut rng), random_symop(&mut rng));
        prop_assert_eq!(sym_commutator(&p, &q), sym_commutator(&q, &p).scaled((-1).into()));
        prop_assert!(sym_commutator(&p, &p).is_zero());
        let jacobi = sym_commutator(&p, &sym_commutator(&q, &r))
            .plus(&sym_commutator(&q, &sym_commutator(&r, &p)))
            .plus(&sym_commutator(&r, &sym_commutator(&p, &q)));
        prop_assert!(jacobi.is_zero());
    }
}

#[test]
fn difference_operators_factor_exactly() {
    for n in [4, 6, 16, 64, 100] {
        let g = Grid::periodic_pi(n).unwrap();
        let (df, db) = (build_forward_diff(&g), build_backward_diff(&g));
        let d2 = build_laplacian(&g);
        assert_eq!(matmul(&db, &df).unwrap(), d2);
        assert_eq!(matmul(&df, &db).unwrap(), d2);
        assert_eq!(db, -&df.adjoint());
    }
}

#[test]
fn suzuki_plans_structure() {
    for (p, len) in [(2, 3), (4, 11), (6, 51), (8, 251), (10, 1251)] {
        let plan = suzuki_plan(p).unwrap();
        assert_eq!(plan.len(), len);
        assert!(plan.is_palindromic());
        for g in [Generator::A, Generator::B] {
            assert!((plan.coeff_sum(g) - 1.0).abs() <= 1e-13);
        }
    }
}
