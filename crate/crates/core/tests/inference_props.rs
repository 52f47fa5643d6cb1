mod common;

use common::*;
use gibbsfit::gibbs::{project_state, GibbsModel};
use gibbsfit::inference::*;
use gibbsfit::levels::{intersection, LevelOfDescription, Metric};
use gibbsfit::state_space::{expectation, kmb_inner, relative_entropy, DensityOperator, HermitianOperator};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn interpolation_is_linear_in_lagrange_coordinates(seed in any::<u64>(), d in 2usize..=4, t in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let tau = random_state(&mut r, d);
        let level = random_level(&mut r, d, 3, Metric::HilbertSchmidt);
        let n = level.dim() - 1;
        let l_sigma = random_lambda(&mut r, n, 0.5);
        let l_mu = random_lambda(&mut r, n, 0.5);
        let sigma = GibbsModel::new(&tau, &level, l_sigma.clone()).unwrap();
        let mu = GibbsModel::new(&tau, &level, l_mu.clone()).unwrap();
        let rho = interpolate_states(&mu, sigma.state(), t).unwrap();
        for ((a, s), m) in rho.lambda().iter().zip(&l_sigma).zip(&l_mu) {
            prop_assert!((a - (t * s + (1.0 - t) * m)).abs() < 1e-9);
        }
        let direct = interpolated_state(mu.state(), sigma.state(), t).unwrap();
        prop_assert!(direct.distance(rho.state()) < 1e-9);
    }

    #[test]
    fn evidence_recovers_constructed_distance(seed in any::<u64>(), d in 3usize..=8, chi2 in 1.0f64..500.0) {
        let mut r = rng(seed);
        let p = random_distribution(&mut r, d);
        let sigma = DensityOperator::from_probabilities(p.clone()).unwrap();
        let level = LevelOfDescription::full_classical(d, Metric::HilbertSchmidt).unwrap();
        let n = 10_000u64;
        // Pearson form of the quadratic at sigma on the full classical level
        let v: Vec<f64> = {
            let raw = random_lambda(&mut r, d, 1.0);
            let mean: f64 = raw.iter().sum::<f64>() / d as f64;
            raw.iter().map(|x| x - mean).collect()
        };
        let pearson: f64 = v.iter().zip(&p).map(|(x, q)| x * x / q).sum();
        let eps = (chi2 / (n as f64 * pearson)).sqrt();
        let f: Vec<f64> = p.iter().zip(&v).map(|(q, x)| q + eps * x).collect();
        let ops: Vec<HermitianOperator> = level.basis().to_vec();
        prop_assume!(f.iter().all(|&x| x > 0.0));
        let means: Vec<f64> = ops.iter().map(|b| b.diagonal_values().unwrap().iter().zip(&f).map(|(x, y)| x * y).sum()).collect();
        let data = ExperimentData::new(level, means, n).unwrap();
        let ev = estimate_alpha(&data, &sigma, DEFAULT_DIM_MIN).unwrap();
        let dim = d - 1;
        prop_assert!((ev.chi2 - chi2).abs() < 1e-9 * chi2);
        if chi2 > dim as f64 {
            prop_assert!((ev.t.unwrap() - dim as f64 / ev.chi2).abs() < 1e-12);
        } else {
            prop_assert!(ev.t.is_none());
        }
    }

    #[test]
    fn posterior_keeps_gibbs_form(seed in any::<u64>(), d in 2usize..=3) {
        let mut r = rng(seed);
        let tau = random_state(&mut r, d);
        let gens: Vec<_> = (0..3).map(|_| random_hermitian(&mut r, d).scale(0.4)).collect();
        let h = LevelOfDescription::new(d, gens.clone(), Metric::HilbertSchmidt).unwrap();
        let f = LevelOfDescription::new(d, gens[..2].to_vec(), Metric::HilbertSchmidt).unwrap();
        let g = LevelOfDescription::new(d, vec![gens[0].clone(), random_hermitian(&mut r, d).scale(0.4)], Metric::HilbertSchmidt).unwrap();
        let sigma = GibbsModel::new(&tau, &h, random_lambda(&mut r, h.dim() - 1, 0.3)).unwrap();
        let truth = random_state(&mut r, d);
        let means: Vec<f64> = f.basis().iter().map(|b| expectation(&truth, b).unwrap()).collect();
        let data = ExperimentData::new(f, means, 500).unwrap();
        let prior = EntropicPrior::new(50.0, sigma.state().clone(), g).unwrap();
        let est = posterior_estimate(&data, &prior, AlphaPolicy::Fixed(50.0)).unwrap();
        let back = project_state(est.rho_hat.state(), &tau, &h).unwrap();
        prop_assert!(back.state().distance(est.rho_hat.state()) < 1e-9);
        prop_assert!((est.t - 50.0 / 550.0).abs() < 1e-15);
        prop_assert!(est.cov_measured.symmetric_eigenvalues().iter().all(|&e| e >= -1e-14));
        if let Some(c) = &est.cov_unmeasured {
            prop_assert!(c.symmetric_eigenvalues().iter().all(|&e| e >= -1e-14));
        }
    }

    #[test]
    fn entropic_product_is_entropic(seed in any::<u64>(), d in 2usize..=3) {
        let mut r = rng(seed);
        let sigma = random_state(&mut r, d);
        let level = random_level(&mut r, d, 2, Metric::HilbertSchmidt);
        let n_par = level.dim() - 1;
        let mu = GibbsModel::new(&sigma, &level, random_lambda(&mut r, n_par, 0.5)).unwrap();
        let (alpha, n) = (30.0, 170.0);
        let rho = interpolate_states(&mu, &sigma, alpha / (alpha + n)).unwrap();
        let mut offsets = Vec::new();
        for _ in 0..6 {
            let omega = GibbsModel::new(&sigma, &level, random_lambda(&mut r, n_par, 0.5)).unwrap();
            let lhs = -n * relative_entropy(omega.state(), mu.state()).unwrap()
                - alpha * relative_entropy(omega.state(), &sigma).unwrap();
            let rhs = -(alpha + n) * relative_entropy(omega.state(), rho.state()).unwrap();
            offsets.push(lhs - rhs);
        }
        for o in &offsets {
            prop_assert!((o - offsets[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn verdict_is_monotone(ln_n in 1.0f64..20.0) {
        let rank = |v: Verdict| match v {
            Verdict::KeepCoarse => 0,
            Verdict::Inconclusive => 1,
            Verdict::Refine => 2,
        };
        let mut last = 0;
        for i in 0..400 {
            let x = i as f64 * 0.1;
            let now = rank(verdict(x, ln_n));
            prop_assert!(now >= last);
            last = now;
        }
    }

    #[test]
    fn pythagoras_residual_vanishes_on_manifold(seed in any::<u64>(), d in 2usize..=3) {
        let mut r = rng(seed);
        let sigma = random_state(&mut r, d);
        let level = random_level(&mut r, d, 2, Metric::HilbertSchmidt);
        let omega = GibbsModel::new(&sigma, &level, random_lambda(&mut r, level.dim() - 1, 0.5)).unwrap();
        prop_assert!(pythagoras_residual(omega.state(), &sigma, &level).unwrap() < 1e-12);
    }
}

fn wolf_setup() -> (LevelOfDescription, LevelOfDescription, ExperimentData) {
    let g = LevelOfDescription::new(6, wolf_generators(), Metric::HilbertSchmidt).unwrap();
    let f = LevelOfDescription::full_classical(6, Metric::HilbertSchmidt).unwrap();
    let data = ExperimentData::from_counts(f.clone(), WOLF_COUNTS.to_vec()).unwrap();
    (g, f, data)
}

#[test]
fn log_ratio_matches_independent_evaluation() {
    let (g, f, data) = wolf_setup();
    let u = DensityOperator::uniform(6);
    let freq = DensityOperator::from_probabilities(data.frequencies().unwrap()).unwrap();
    for (coarse, fine) in [
        (&g, &f),
        (&LevelOfDescription::trivial(6, Metric::HilbertSchmidt).unwrap(), &g),
    ] {
        for &(alpha, odds) in &[(376.0, 1.0), (50.0, 3.0)] {
            let rep = compare_levels(coarse, fine, &data, &u, Some(alpha), odds).unwrap();
            let pf = project_state(&freq, &u, fine).unwrap();
            let pc = project_state(&freq, &u, coarse).unwrap();
            let s_ind = relative_entropy(pf.state(), pc.state()).unwrap();
            let n = 20000.0;
            let s = (fine.dim() - coarse.dim()) as f64;
            let oracle = f64::ln(odds) + 0.5 * s * (n / alpha).ln() - (n - alpha) * s_ind;
            assert!((rep.log_ratio.unwrap() - oracle).abs() < 1e-8 * oracle.abs().max(1.0));
        }
    }
}

#[test]
fn posterior_converges_to_maximum_likelihood() {
    let mut r = rng(11);
    let d = 4;
    let sigma = random_state(&mut r, d);
    let f = random_level(&mut r, d, 3, Metric::HilbertSchmidt);
    let g = f.clone();
    let truth = random_state(&mut r, d);
    let means: Vec<f64> = f.basis().iter().map(|b| expectation(&truth, b).unwrap()).collect();
    let n = 1000u64;
    let data = ExperimentData::new(f.clone(), means, n).unwrap();
    let ml = data.project_onto(&sigma, &intersection(&f, &g).unwrap()).unwrap();
    let mut last = f64::INFINITY;
    for t in [0.5, 0.1, 0.01, 0.001] {
        let alpha = t * n as f64 / (1.0 - t);
        let prior = EntropicPrior::new(alpha, sigma.clone(), g.clone()).unwrap();
        let est = posterior_estimate(&data, &prior, AlphaPolicy::Fixed(alpha)).unwrap();
        let dist = est.rho_hat.state().distance(ml.state());
        assert!(dist < last, "t = {t}: {dist} >= {last}");
        last = dist;
    }
    assert!(last < 1e-3);
}

#[test]
fn unmeasured_directions_get_prior_width() {
    let sigma = DensityOperator::uniform(2);
    let full = LevelOfDescription::pauli();
    let ising = LevelOfDescription::new(2, vec![HermitianOperator::pauli_z()], Metric::HilbertSchmidt).unwrap();
    let data = ExperimentData::new(ising, vec![0.4], 1000).unwrap();
    let prior = EntropicPrior::new(100.0, sigma, full).unwrap();
    let est = posterior_estimate(&data, &prior, AlphaPolicy::Fixed(100.0)).unwrap();
    assert_eq!(est.measured.dim(), 2);
    let un = est.unmeasured.as_ref().unwrap();
    assert_eq!(un.dim(), 3);
    let rho = est.rho_hat.state();
    let centred = |x: &HermitianOperator| x.shift(-expectation(rho, x).unwrap());
    let z = centred(&est.measured.basis()[0]);
    assert!((est.cov_measured[(0, 0)] - kmb_inner(rho, &z, &z).unwrap() / 1100.0).abs() < 1e-14);
    let cu = est.cov_unmeasured.as_ref().unwrap();
    for (i, a) in un.basis().iter().enumerate() {
        for (j, b) in un.basis().iter().enumerate() {
            let c = kmb_inner(rho, &centred(a), &centred(b)).unwrap() / 100.0;
            assert!((cu[(i, j)] - c).abs() < 1e-14);
        }
        assert!(kmb_inner(rho, &z, &centred(a)).unwrap().abs() < 1e-12);
    }
}

#[test]
fn evidence_policy_without_fallback_errors() {
    let sigma = DensityOperator::uniform(6);
    let (g, f, _) = wolf_setup();
    let data = ExperimentData::new(f, vec![0.0; 5], 100).unwrap();
    let prior = EntropicPrior::new(1.0, sigma, g).unwrap();
    let err = posterior_estimate(&data, &prior, AlphaPolicy::default()).unwrap_err();
    assert!(matches!(err, gibbsfit::Error::EvidenceInapplicable { .. }));
    let ok = posterior_estimate(
        &data,
        &prior,
        AlphaPolicy::Evidence {
            fallback: Some(5.0),
            dim_min: DEFAULT_DIM_MIN,
        },
    )
    .unwrap();
    assert_eq!(ok.alpha_source, AlphaSource::Fallback);
    assert!(!ok.warnings.is_empty());
}
