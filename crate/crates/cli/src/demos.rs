//! Bundled worked examples: a loaded die, a tilted qubit and a thermal source.

use gibbsfit::gibbs::{bloch_metric, qubit_level};
use gibbsfit::inference::{
    compare_levels, estimate_alpha, posterior_estimate, pythagoras_residual, resolve_alpha, significance,
    DEFAULT_DIM_MIN,
};
use gibbsfit::state_space::relative_entropy;
use gibbsfit::{
    AlphaPolicy, DensityOperator, EntropicPrior, ExperimentData, HermitianOperator, LevelOfDescription, Metric, C64,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io::{load_classical_str, InputDigest};
use crate::report::{CompareRow, LevelInfo, QubitBody, QubitRow, SelfTestBody, ThermalBody, WolfBody};

pub const WOLF_COUNTS: &str = include_str!("../data/wolf_counts.csv");
pub const WOLF_OBSERVABLES: &str = include_str!("../data/wolf_observables.csv");

pub const QUBIT_N: u64 = 20000;
pub const QUBIT_R: f64 = 0.73;
pub const QUBIT_TILTS_DEG: [f64; 3] = [1.0, 2.0, 3.0];

pub const THERMAL_LEVELS: usize = 25;
pub const THERMAL_SPACING_K: f64 = 10.0;
pub const THERMAL_T_PRIOR: f64 = 100.0;
pub const THERMAL_T_DATA: f64 = 110.0;
pub const THERMAL_N: u64 = 12000;
pub const THERMAL_CHI2: f64 = 96.0;

/// Maximum Pythagoras residual accepted by the self-test.
pub const SELF_TEST_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DemoName {
    Wolf,
    Qubit,
    Thermal,
}

pub struct DemoOutput<B> {
    pub body: B,
    pub warnings: Vec<String>,
    pub inputs: Vec<InputDigest>,
}

pub fn wolf(sig_level: f64) -> Result<DemoOutput<WolfBody>> {
    let inputs = vec![
        InputDigest::of("builtin:wolf_counts.csv", WOLF_COUNTS.as_bytes()),
        InputDigest::of("builtin:wolf_observables.csv", WOLF_OBSERVABLES.as_bytes()),
    ];
    let ds = load_classical_str(WOLF_COUNTS, Some(WOLF_OBSERVABLES), inputs.clone())?;
    let sigma = &ds.sigma;
    let n = ds.data.n();
    let o = ds.resolve_level("trivial")?;
    let g = ds.resolve_level("G1,G2")?;
    let f = ds.experimental();

    let mu = ds.data.project_onto(sigma, &f.level)?;
    let chi2 = 2.0 * n as f64 * relative_entropy(mu.state(), sigma)?;
    let sig = significance(chi2, (f.level.dim() - 1) as u32, n, sig_level)?;

    let pi_g = ds.data.project_onto(sigma, &g.level)?;
    let (alpha, _, evidence, warnings) = resolve_alpha(&ds.data, sigma, AlphaPolicy::default())?;
    let evidence = evidence.expect("evidence policy");

    let mut rows = Vec::new();
    for (a, b) in [(&o, &g), (&g, &f), (&o, &f)] {
        let report = compare_levels(&a.level, &b.level, &ds.data, sigma, Some(alpha), 1.0)?;
        rows.push(CompareRow {
            coarse: a.name.clone(),
            fine: b.name.clone(),
            report,
        });
    }
    Ok(DemoOutput {
        body: WolfBody {
            n,
            frequencies: ds.data.frequencies().expect("counts"),
            significance: sig,
            model: LevelInfo::of(&g),
            model_expectations: pi_g.generator_expectations(),
            model_lagrange: pi_g.generator_lagrange(),
            evidence,
            alpha,
            rows,
        },
        warnings,
        inputs,
    })
}

/// `N r atanh(r) dtheta^2 / 2`, the small-angle accuracy gain per added parameter.
pub fn qubit_metric_gain(n: u64, r: f64, tilt_rad: f64) -> Result<f64> {
    let c_inv = bloch_metric(r, tilt_rad)?[1];
    Ok(n as f64 * c_inv * tilt_rad * tilt_rad / 2.0)
}

pub fn qubit(r: f64, tilts_deg: &[f64], n: u64) -> Result<DemoOutput<QubitBody>> {
    if !(r > 0.0 && r < 1.0) {
        return Err(CliError::data(format!("--r must lie in (0, 1), got {r}")));
    }
    let ising = qubit_level(&[2]);
    let heisenberg = qubit_level(&[0, 1, 2]);
    let sigma = DensityOperator::uniform(2);
    let mut rows = Vec::with_capacity(tilts_deg.len());
    for &deg in tilts_deg {
        if !(0.0..=180.0).contains(&deg) {
            return Err(CliError::data(format!(
                "tilt angle must lie in [0, 180] degrees, got {deg}"
            )));
        }
        let th = deg.to_radians();
        let means = [r * th.sin(), 0.0, r * th.cos()];
        let data = ExperimentData::from_generator_means(heisenberg.clone(), &means, n)?;
        let report = compare_levels(&ising, &heisenberg, &data, &sigma, None, 1.0)?;
        let s = report.s as f64;
        rows.push(QubitRow {
            tilt_deg: deg,
            c_inv_theta_theta: bloch_metric(r, th)?[1],
            metric_per_param: qubit_metric_gain(n, r, th)?,
            exact_per_param: 2.0 * n as f64 * report.entropy_gain / s,
            report,
        });
    }
    Ok(DemoOutput {
        body: QubitBody { r, n, rows },
        warnings: Vec::new(),
        inputs: Vec::new(),
    })
}

fn canonical(energies: &[f64], temperature: f64) -> Vec<f64> {
    let w: Vec<f64> = energies.iter().map(|e| (-e / temperature).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// Frequencies with the mean energy of `p_data` whose Pearson distance to `p_prior`
/// is `chi2 / n`, built by adding a zero-mean, zero-energy alternating perturbation.
fn thermal_frequencies(energies: &[f64], p_prior: &[f64], p_data: &[f64], chi2: f64, n: u64) -> Result<Vec<f64>> {
    let w: Vec<f64> = (0..energies.len())
        .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    // v = p (w - a - b E) orthogonal to 1 and E under p
    let m = |f: &dyn Fn(usize) -> f64| -> f64 { (0..energies.len()).map(|i| p_data[i] * f(i)).sum() };
    let (m0, m1, m2) = (1.0, m(&|i| energies[i]), m(&|i| energies[i] * energies[i]));
    let (w0, w1) = (m(&|i| w[i]), m(&|i| w[i] * energies[i]));
    let det = m0 * m2 - m1 * m1;
    let a = (w0 * m2 - w1 * m1) / det;
    let b = (m0 * w1 - m1 * w0) / det;
    let v: Vec<f64> = (0..energies.len())
        .map(|i| p_data[i] * (w[i] - a - b * energies[i]))
        .collect();
    // sum (p_data - p_prior + eps v)^2 / p_prior = chi2 / n
    let (mut qa, mut qb, mut qc) = (0.0, 0.0, -chi2 / n as f64);
    for i in 0..energies.len() {
        let dp = p_data[i] - p_prior[i];
        qa += v[i] * v[i] / p_prior[i];
        qb += 2.0 * dp * v[i] / p_prior[i];
        qc += dp * dp / p_prior[i];
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 || qc > 0.0 {
        return Err(CliError::data(
            "thermal construction: requested chi2 is below the mean-energy shift alone",
        ));
    }
    let eps = (-qb + disc.sqrt()) / (2.0 * qa);
    let f: Vec<f64> = p_data.iter().zip(&v).map(|(p, x)| p + eps * x).collect();
    if f.iter().any(|&x| x <= 0.0) {
        return Err(CliError::data("thermal construction: perturbation leaves the simplex"));
    }
    Ok(f)
}

pub fn thermal() -> Result<DemoOutput<ThermalBody>> {
    let n = THERMAL_N;
    let energies: Vec<f64> = (0..THERMAL_LEVELS).map(|i| THERMAL_SPACING_K * i as f64).collect();
    let p_prior = canonical(&energies, THERMAL_T_PRIOR);
    let p_data = canonical(&energies, THERMAL_T_DATA);
    let freq = thermal_frequencies(&energies, &p_prior, &p_data, THERMAL_CHI2, n)?;

    let sigma = DensityOperator::from_probabilities(p_prior.clone())?;
    let f_level = LevelOfDescription::full_classical(THERMAL_LEVELS, Metric::HilbertSchmidt)?;
    let data = ExperimentData::from_generator_means(f_level, &freq[..THERMAL_LEVELS - 1], n)?;
    let h = HermitianOperator::diagonal(energies.clone());
    let g_level = LevelOfDescription::new(THERMAL_LEVELS, vec![h.clone()], Metric::HilbertSchmidt)?;

    let evidence = estimate_alpha(&data, &sigma, DEFAULT_DIM_MIN)?;
    let chi2_kl = 2.0 * n as f64 * freq.iter().zip(&p_prior).map(|(f, p)| f * (f / p).ln()).sum::<f64>();

    let prior = EntropicPrior::new(1.0, sigma.clone(), g_level.clone())?;
    let est = posterior_estimate(&data, &prior, AlphaPolicy::default())?;
    let beta_prior = 1.0 / THERMAL_T_PRIOR;
    let beta_hat = beta_prior + est.rho_hat.generator_lagrange()[0];
    let mean_energy = est.rho_hat.generator_expectations()[0];
    let (_, coeffs) = est.measured.expand(&h)?;
    let var: f64 = (0..coeffs.len())
        .map(|i| {
            (0..coeffs.len())
                .map(|j| coeffs[i] * est.cov_measured[(i, j)] * coeffs[j])
                .sum::<f64>()
        })
        .sum();
    let beta_data = beta_prior + est.mu_proj.embed(&g_level)?.generator_lagrange()[0];

    Ok(DemoOutput {
        body: ThermalBody {
            n,
            levels: THERMAL_LEVELS,
            frequencies: freq,
            chi2_quadratic: evidence.chi2,
            chi2_entropy: chi2_kl,
            evidence,
            t: est.t,
            alpha: est.alpha_used,
            beta_prior,
            beta_data,
            beta_hat,
            temperature_hat: 1.0 / beta_hat,
            mean_energy,
            mean_energy_std: var.sqrt(),
        },
        warnings: est.warnings,
        inputs: Vec::new(),
    })
}

fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> HermitianOperator {
    let a = DMatrix::from_fn(d, d, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let h = (&a + a.adjoint()) * C64::new(0.5, 0.0);
    HermitianOperator::from_matrix(h).expect("hermitian by construction")
}

fn random_state(rng: &mut ChaCha8Rng, d: usize) -> DensityOperator {
    let a = DMatrix::from_fn(d, d, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let m = &a * a.adjoint();
    let tr = m.trace().re;
    let mixed = m / C64::new(tr, 0.0) * C64::new(0.85, 0.0) + DMatrix::identity(d, d) * C64::new(0.15 / d as f64, 0.0);
    DensityOperator::new(HermitianOperator::from_matrix(mixed).expect("hermitian")).expect("state")
}

/// Pythagoras residuals on random `(rho, sigma, level)` instances.
pub fn self_test(seed: u64, cases: usize) -> Result<SelfTestBody> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for c in 0..cases {
        let d = 2 + c % 3;
        let rho = random_state(&mut rng, d);
        let sigma = random_state(&mut rng, d);
        let k = rng.gen_range(1..d * d);
        let gens = (0..k).map(|_| random_hermitian(&mut rng, d).scale(0.5)).collect();
        let level = LevelOfDescription::new(d, gens, Metric::HilbertSchmidt)?;
        worst = worst.max(pythagoras_residual(&rho, &sigma, &level)?);
    }
    Ok(SelfTestBody {
        seed,
        cases,
        max_pythagoras_residual: worst,
        passed: worst < SELF_TEST_TOL,
    })
}
