mod common;

use common::*;
use gibbsfit::state_space::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn kmb_is_symmetric_and_positive(seed in any::<u64>(), d in 2usize..=6) {
        let mut r = rng(seed);
        let sigma = random_state(&mut r, d);
        let x = random_hermitian(&mut r, d);
        let y = random_hermitian(&mut r, d);
        let xy = kmb_inner(&sigma, &x, &y).unwrap();
        let yx = kmb_inner(&sigma, &y, &x).unwrap();
        prop_assert!((xy - yx).abs() <= 1e-12 * (1.0 + xy.abs()));
        prop_assert!(kmb_inner(&sigma, &x, &x).unwrap() > 0.0);
    }

    #[test]
    fn kmb_matches_quadrature(seed in any::<u64>(), d in 2usize..=6) {
        let mut r = rng(seed);
        let sigma = random_state(&mut r, d);
        let x = random_hermitian(&mut r, d);
        let y = random_hermitian(&mut r, d);
        let fast = kmb_inner(&sigma, &x, &y).unwrap();
        let slow = kmb_quadrature(&sigma, &x, &y);
        let scale = kmb_inner(&sigma, &x, &x).unwrap().sqrt() * kmb_inner(&sigma, &y, &y).unwrap().sqrt();
        prop_assert!((fast - slow).abs() < 1e-8 * slow.abs().max(scale), "{fast} vs {slow}");
    }

    #[test]
    fn relative_entropy_is_nonnegative(seed in any::<u64>(), d in 2usize..=5) {
        let mut r = rng(seed);
        let rho = random_state(&mut r, d);
        let sigma = random_state(&mut r, d);
        let s = relative_entropy(&rho, &sigma).unwrap();
        prop_assert!(s >= 0.0);
        prop_assert!(rho.distance(&sigma) < 1e-10 || s > 0.0);
        prop_assert!(relative_entropy(&rho, &rho).unwrap() < 1e-12);
    }

    #[test]
    fn relative_entropy_is_unitarily_covariant(seed in any::<u64>(), d in 2usize..=5) {
        let mut r = rng(seed);
        let rho = random_state(&mut r, d);
        let sigma = random_state(&mut r, d);
        let u = random_unitary(&mut r, d);
        let a = relative_entropy(&rho, &sigma).unwrap();
        let b = relative_entropy(&rho.conjugate_by(&u), &sigma.conjugate_by(&u)).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn spectrum_reconstructs(seed in any::<u64>(), d in 1usize..=6) {
        let mut r = rng(seed);
        let h = random_hermitian(&mut r, d);
        let spec = eig_hermitian(&h);
        let err = (spec.reconstruct() - h.to_matrix()).norm() / h.frobenius_norm().max(1e-300);
        prop_assert!(err < 1e-10);
        prop_assert!(spec.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn classical_fast_path_agrees_with_dense(seed in any::<u64>(), d in 2usize..=6) {
        let mut r = rng(seed);
        let p = DensityOperator::from_probabilities(random_distribution(&mut r, d)).unwrap();
        let q = DensityOperator::from_probabilities(random_distribution(&mut r, d)).unwrap();
        let x = random_diagonal(&mut r, d);
        let y = random_diagonal(&mut r, d);
        let (pd, qd, xd, yd) = (p.to_dense(), q.to_dense(), x.to_dense(), y.to_dense());
        prop_assert!(!pd.operator().is_diagonal());
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs());
        prop_assert!(close(kmb_inner(&p, &x, &y).unwrap(), kmb_inner(&pd, &xd, &yd).unwrap()));
        prop_assert!(close(relative_entropy(&p, &q).unwrap(), relative_entropy(&pd, &qd).unwrap()));
        prop_assert!(close(von_neumann_entropy(&p), von_neumann_entropy(&pd)));
        prop_assert!(close(expectation(&p, &x).unwrap(), expectation(&pd, &xd).unwrap()));
        prop_assert!(p.ln().max_abs_diff(&pd.ln()) < 1e-12);
    }
}
