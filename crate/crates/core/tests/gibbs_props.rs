mod common;

use std::f64::consts::PI;

use common::*;
use gibbsfit::gibbs::*;
use gibbsfit::inference::pythagoras_residual;
use gibbsfit::levels::{LevelOfDescription, Metric};
use gibbsfit::state_space::{relative_entropy, DensityOperator, HermitianOperator};
use nalgebra::{DMatrix, Matrix3};
use proptest::prelude::*;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn pythagoras_holds(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let rho = random_state(&mut r, d);
        let sigma = random_state(&mut r, d);
        let k = 1 + (seed as usize >> 7) % (d * d - 1);
        let level = random_level(&mut r, d, k, Metric::HilbertSchmidt);
        let res = pythagoras_residual(&rho, &sigma, &level).unwrap();
        prop_assert!(res < 1e-9, "residual {res:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn projection_is_idempotent(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let sigma = random_state(&mut r, d);
        let level = random_level(&mut r, d, 2, Metric::HilbertSchmidt);
        let omega = GibbsModel::new(&sigma, &level, random_lambda(&mut r, level.dim() - 1, 0.5)).unwrap();
        let again = project_state(omega.state(), &sigma, &level).unwrap();
        for (a, b) in again.lambda().iter().zip(omega.lambda()) {
            prop_assert!((a - b).abs() < 1e-8);
        }
        prop_assert!(again.state().distance(omega.state()) < 1e-9);
    }

    #[test]
    fn projection_composes(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let rho = random_state(&mut r, d);
        let sigma = random_state(&mut r, d);
        let tau = random_state(&mut r, d);
        let gens: Vec<_> = (0..3).map(|_| random_hermitian(&mut r, d).scale(0.5)).collect();
        let g = LevelOfDescription::new(d, gens[..1].to_vec(), Metric::HilbertSchmidt).unwrap();
        let f = LevelOfDescription::new(d, gens, Metric::HilbertSchmidt).unwrap();
        let direct = project_state(&rho, &sigma, &g).unwrap();
        let two_step = project_state(project_state(&rho, &sigma, &f).unwrap().state(), &sigma, &g).unwrap();
        prop_assert!(direct.state().distance(two_step.state()) < 1e-9);
        let via_sigma = project_state(&rho, &sigma, &g).unwrap();
        let re_ref = project_state(via_sigma.state(), &tau, &g).unwrap();
        let straight = project_state(&rho, &tau, &g).unwrap();
        prop_assert!(re_ref.state().distance(straight.state()) < 1e-9);
    }

    #[test]
    fn projection_is_unitarily_covariant(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let rho = random_state(&mut r, d);
        let sigma = random_state(&mut r, d);
        let u = random_unitary(&mut r, d);
        let gens: Vec<_> = (0..2).map(|_| random_hermitian(&mut r, d).scale(0.5)).collect();
        let rotated: Vec<_> = gens.iter().map(|g| g.conjugate_by(&u)).collect();
        let level = LevelOfDescription::new(d, gens, Metric::HilbertSchmidt).unwrap();
        let level_u = LevelOfDescription::new(d, rotated, Metric::HilbertSchmidt).unwrap();
        let a = project_state(&rho, &sigma, &level).unwrap().state().conjugate_by(&u);
        let b = project_state(&rho.conjugate_by(&u), &sigma.conjugate_by(&u), &level_u).unwrap();
        prop_assert!(a.distance(b.state()) < 1e-9);
    }

    #[test]
    fn derivatives_of_ln_z(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let sigma = random_state(&mut r, d);
        let level = random_level(&mut r, d, 3, Metric::HilbertSchmidt);
        let n = level.dim() - 1;
        let lambda = random_lambda(&mut r, n, 0.5);
        let omega = GibbsModel::new(&sigma, &level, lambda.clone()).unwrap();
        let h = 1e-5;
        for b in 0..n {
            let mut lp = lambda.clone();
            let mut lm = lambda.clone();
            lp[b] += h;
            lm[b] -= h;
            let p = GibbsModel::new(&sigma, &level, lp).unwrap();
            let m = GibbsModel::new(&sigma, &level, lm).unwrap();
            let grad = -(p.ln_z() - m.ln_z()) / (2.0 * h);
            prop_assert!(close(grad, omega.expectations()[b], 1e-4) || (grad - omega.expectations()[b]).abs() < 1e-9);
            for a in 0..n {
                let hess = -(p.expectations()[a] - m.expectations()[a]) / (2.0 * h);
                let c = omega.correlation()[(a, b)];
                prop_assert!(close(hess, c, 1e-4) || (hess - c).abs() < 1e-9, "{hess} vs {c}");
            }
        }
        let chol = omega.correlation().clone().cholesky();
        prop_assert!(chol.is_some());
    }

    #[test]
    fn correlation_matches_kmb_definition(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let sigma = random_state(&mut r, d);
        let level = random_level(&mut r, d, 3, Metric::HilbertSchmidt);
        let omega = GibbsModel::new(&sigma, &level, random_lambda(&mut r, level.dim() - 1, 0.5)).unwrap();
        let st = omega.state();
        for (a, x) in level.basis().iter().enumerate() {
            for (b, y) in level.basis().iter().enumerate() {
                let dx = x.shift(-omega.expectations()[a]);
                let dy = y.shift(-omega.expectations()[b]);
                let q = kmb_quadrature(st, &dx, &dy);
                prop_assert!((q - omega.correlation()[(a, b)]).abs() < 1e-8);
            }
        }
        prop_assert!((st.operator().trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn relative_entropy_is_locally_quadratic(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let sigma = random_state(&mut r, d);
        let level = random_level(&mut r, d, 2, Metric::HilbertSchmidt);
        let n = level.dim() - 1;
        let lambda = random_lambda(&mut r, n, 0.5);
        let v = random_lambda(&mut r, n, 1.0);
        let omega = GibbsModel::new(&sigma, &level, lambda.clone()).unwrap();
        let q = |eps: f64| {
            let l: Vec<f64> = lambda.iter().zip(&v).map(|(a, b)| a + eps * b).collect();
            let other = GibbsModel::new(&sigma, &level, l).unwrap();
            manifold_relative_entropy(&omega, &other).unwrap() / (eps * eps)
        };
        let eps = 1e-3;
        let richardson = 2.0 * q(eps / 2.0) - q(eps);
        let c = omega.correlation();
        let quad: f64 = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).map(|(a, b)| 0.5 * c[(a, b)] * v[a] * v[b]).sum();
        prop_assert!(close(richardson, quad, 1e-5), "{richardson} vs {quad}");
    }

    #[test]
    fn manifold_entropy_agrees_with_generic(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let sigma = random_state(&mut r, d);
        let level = random_level(&mut r, d, 3, Metric::HilbertSchmidt);
        let n = level.dim() - 1;
        let a = GibbsModel::new(&sigma, &level, random_lambda(&mut r, n, 0.5)).unwrap();
        let b = GibbsModel::new(&sigma, &level, random_lambda(&mut r, n, 0.5)).unwrap();
        let generic = relative_entropy(a.state(), b.state()).unwrap();
        prop_assert!((manifold_relative_entropy(&a, &b).unwrap() - generic).abs() < 1e-9);
    }

    #[test]
    fn first_law(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let sigma = random_state(&mut r, d);
        let level = random_level(&mut r, d, 2, Metric::HilbertSchmidt);
        let n = level.dim() - 1;
        let lambda = random_lambda(&mut r, n, 0.7);
        let v = random_lambda(&mut r, n, 1.0);
        let at = |eps: f64| {
            let l: Vec<f64> = lambda.iter().zip(&v).map(|(a, b)| a + eps * b).collect();
            GibbsModel::new(&sigma, &level, l).unwrap()
        };
        let h = 1e-4;
        let (p, m) = (at(h), at(-h));
        let ds = thermodynamic_entropy(&p) - thermodynamic_entropy(&m);
        let work: f64 = lambda
            .iter()
            .zip(p.expectations().iter().zip(m.expectations()))
            .map(|(l, (a, b))| l * (a - b))
            .sum();
        prop_assert!(close(ds, work, 1e-5) || (ds - work).abs() < 1e-11, "{ds} vs {work}");
    }
}

fn spherical_jacobian(r: f64, theta: f64, phi: f64) -> Matrix3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Matrix3::new(
        st * cp,
        r * ct * cp,
        -r * st * sp,
        st * sp,
        r * ct * sp,
        r * st * cp,
        ct,
        -r * st,
        0.0,
    )
}

#[test]
fn bloch_closed_forms_match_generic_machinery() {
    let u = DensityOperator::uniform(2);
    let full = LevelOfDescription::pauli();
    let phi = 0.7;
    for i in 1..=9 {
        let r = i as f64 / 10.0;
        for &theta in &[0.0, PI / 4.0, PI / 2.0] {
            let b = BlochVector::new(r, theta, phi).unwrap();
            let solved = project(&b.cartesian(), &u, &full).unwrap();
            for (a, c) in solved.lambda().iter().zip(b.lagrange()) {
                assert!((a - c).abs() < 1e-8, "lambda r={r} theta={theta}");
            }
            let c = solved.correlation();
            let cinv = c.clone().try_inverse().unwrap();
            let cinv3 = Matrix3::from_fn(|i, j| cinv[(i, j)]);
            let j = spherical_jacobian(r, theta, phi);
            let g = j.transpose() * cinv3 * j;
            let closed = bloch_metric(r, theta).unwrap();
            for k in 0..3 {
                assert!((g[(k, k)] - closed[k]).abs() < 1e-8, "metric {k} r={r} theta={theta}");
            }
            assert!(g[(0, 1)].abs() < 1e-8 && g[(0, 2)].abs() < 1e-8 && g[(1, 2)].abs() < 1e-8);
            let vol = volume_weight(&solved, VolumeCoords::Expectation).unwrap() * j.determinant().abs();
            assert!(
                (vol - bloch_volume_element(r, theta)).abs() < 1e-8,
                "volume r={r} theta={theta}"
            );
            let other = BlochVector::new(0.5, 1.0, 2.0).unwrap();
            let s_closed = bloch_relative_entropy(&b, &other).unwrap();
            let s_generic = relative_entropy(&b.state(), &other.state()).unwrap();
            assert!((s_closed - s_generic).abs() < 1e-8, "entropy r={r} theta={theta}");
        }
    }
}

#[test]
fn classical_and_dense_projection_agree() {
    let mut r = rng(7);
    for _ in 0..20 {
        let d = 5;
        let sigma = DensityOperator::from_probabilities(random_distribution(&mut r, d)).unwrap();
        let gens: Vec<HermitianOperator> = (0..3).map(|_| random_diagonal(&mut r, d).scale(0.5)).collect();
        let dense: Vec<HermitianOperator> = gens.iter().map(|g| g.to_dense()).collect();
        let lc = LevelOfDescription::new(d, gens, Metric::HilbertSchmidt).unwrap();
        let lq = LevelOfDescription::new(d, dense, Metric::HilbertSchmidt).unwrap();
        let target = random_lambda(&mut r, 3, 0.1);
        let mc = project(&target, &sigma, &lc).unwrap();
        let mq = project(&target, &sigma.to_dense(), &lq).unwrap();
        assert!(mc.state().operator().is_diagonal());
        assert!(!mq.state().operator().is_diagonal());
        assert!(mc.state().operator().max_abs_diff(mq.state().operator()) <= 1e-12);
        assert!((mc.ln_z() - mq.ln_z()).abs() <= 1e-12);
        let diff: DMatrix<f64> = mc.correlation() - mq.correlation();
        assert!(diff.amax() <= 1e-12);
    }
}
