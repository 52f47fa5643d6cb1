//! Statistical inference on Gibbs manifolds.
//!
//! For `N` samples with sample means `f` on an experimental level `F`, the
//! likelihood of a model `rho` is asymptotically entropic,
//! `prob(f | rho) ~ exp[-N S(mu || rho)]`, and `2 N S` follows a chi-squared
//! distribution. An entropic prior `exp[-alpha S(omega || sigma)]` is conjugate to
//! it, which gives closed-form posterior estimates, an evidence procedure for
//! `alpha`, and a Bayes-factor comparison between nested levels.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::gibbs::{
    chi_squared_means, correlation_matrix, manifold_relative_entropy, project, project_state, GibbsModel,
};
use crate::levels::{complement, intersection, is_sublevel, LevelOfDescription};
use crate::state_space::{expectation, relative_entropy, DensityOperator, HermitianOperator};

/// Default tail probability below which a deviation counts as significant.
pub const DEFAULT_SIGNIFICANCE: f64 = 1e-3;

/// Default minimum manifold dimension for the evidence procedure to be trusted.
pub const DEFAULT_DIM_MIN: usize = 10;

/// Half-width, as a factor on `ln N`, of the inconclusive band of the rule of thumb.
pub const VERDICT_BAND: f64 = 1.5;

/// `ln` of the chi-squared density with `k` degrees of freedom.
pub fn chi2_ln_pdf(x: f64, k: u32) -> f64 {
    let h = 0.5 * k as f64;
    if x < 0.0 {
        return f64::NEG_INFINITY;
    }
    if x == 0.0 {
        return match k {
            1 => f64::INFINITY,
            2 => 0.5f64.ln(),
            _ => f64::NEG_INFINITY,
        };
    }
    (h - 1.0) * x.ln() - 0.5 * x - h * std::f64::consts::LN_2 - ln_gamma(h)
}

pub fn chi2_pdf(x: f64, k: u32) -> f64 {
    chi2_ln_pdf(x, k).exp()
}

/// `ln Q(a, y)`, the regularised upper incomplete gamma function.
fn ln_gamma_q(a: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let log_prefactor = a * y.ln() - y - ln_gamma(a);
    if y < a + 1.0 {
        // series for P
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..10_000 {
            ap += 1.0;
            term *= y / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        let p = (log_prefactor + sum.ln()).exp();
        (-p).ln_1p()
    } else {
        // modified Lentz continued fraction for Q
        let tiny = 1e-300;
        let mut b = y + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        log_prefactor + h.ln()
    }
}

/// `ln P(chi2 > x)`, accurate deep into the tail.
pub fn chi2_ln_tail(x: f64, k: u32) -> f64 {
    ln_gamma_q(0.5 * k as f64, 0.5 * x.max(0.0))
}

pub fn chi2_tail(x: f64, k: u32) -> f64 {
    chi2_ln_tail(x, k).exp()
}

/// Outcome of a chi-squared significance test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignificanceReport {
    pub chi2: f64,
    pub k: u32,
    pub n: u64,
    pub pdf: f64,
    pub log10_pdf: f64,
    pub tail: f64,
    pub log10_tail: f64,
    pub level: f64,
    pub significant: bool,
    /// `chi2 / 2N`, the relative entropy the statistic corresponds to.
    pub entropy: f64,
    /// `k / 2N`, the typical entropy of a pure sampling fluctuation; concentration is `O(1/N)`.
    pub entropy_fluctuation: f64,
}

pub fn significance(chi2: f64, k: u32, n: u64, level: f64) -> Result<SignificanceReport> {
    if k == 0 {
        return Err(Error::InvalidArgument("degrees of freedom must be at least 1".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    if !(chi2 >= 0.0 && chi2.is_finite()) {
        return Err(Error::Domain(format!(
            "chi-squared must be finite and non-negative, got {chi2}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!(
            "significance level must lie in (0, 1), got {level}"
        )));
    }
    let ln_pdf = chi2_ln_pdf(chi2, k);
    let ln_tail = chi2_ln_tail(chi2, k);
    let ln10 = std::f64::consts::LN_10;
    Ok(SignificanceReport {
        chi2,
        k,
        n,
        pdf: ln_pdf.exp(),
        log10_pdf: ln_pdf / ln10,
        tail: ln_tail.exp(),
        log10_tail: ln_tail / ln10,
        level,
        significant: ln_tail < level.ln(),
        entropy: chi2 / (2.0 * n as f64),
        entropy_fluctuation: k as f64 / (2.0 * n as f64),
    })
}

/// Sample means of `N` measurements on an experimental level.
#[derive(Clone, Debug)]
pub struct ExperimentData {
    level: LevelOfDescription,
    f: Vec<f64>,
    n: u64,
    counts: Option<Vec<u64>>,
}

impl ExperimentData {
    /// Sample means of the level basis.
    pub fn new(level: LevelOfDescription, basis_means: Vec<f64>, n: u64) -> Result<Self> {
        if basis_means.len() != level.dim() - 1 {
            return Err(Error::LengthMismatch {
                expected: level.dim() - 1,
                found: basis_means.len(),
            });
        }
        if basis_means.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample mean".into()));
        }
        Ok(Self {
            level,
            f: basis_means,
            n,
            counts: None,
        })
    }

    /// Sample means of the level's generators.
    pub fn from_generator_means(level: LevelOfDescription, means: &[f64], n: u64) -> Result<Self> {
        let f = level.basis_means(means)?;
        Self::new(level, f, n)
    }

    /// Outcome counts of a classical experiment; the level must be diagonal.
    pub fn from_counts(level: LevelOfDescription, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != level.dim_hilbert() {
            return Err(Error::LengthMismatch {
                expected: level.dim_hilbert(),
                found: counts.len(),
            });
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::InvalidArgument("counts sum to zero".into()));
        }
        let p: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        let f = level
            .basis()
            .iter()
            .map(|b| {
                let d = b
                    .diagonal_values()
                    .ok_or_else(|| Error::InvalidArgument("counts require diagonal observables".into()))?;
                Ok(d.iter().zip(&p).map(|(x, q)| x * q).sum())
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut data = Self::new(level, f, n)?;
        data.counts = Some(counts);
        Ok(data)
    }

    pub fn level(&self) -> &LevelOfDescription {
        &self.level
    }

    /// Sample means of the level basis.
    pub fn means(&self) -> &[f64] {
        &self.f
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }

    /// Relative frequencies, when counts are available.
    pub fn frequencies(&self) -> Option<Vec<f64>> {
        self.counts
            .as_ref()
            .map(|c| c.iter().map(|&x| x as f64 / self.n as f64).collect())
    }

    /// Sample means of any observables inside the experimental level.
    pub fn expectations_on(&self, ops: &[HermitianOperator]) -> Result<Vec<f64>> {
        ops.iter()
            .map(|x| {
                let (c, a) = self.level.expand(x)?;
                Ok(c + a.iter().zip(&self.f).map(|(u, v)| u * v).sum::<f64>())
            })
            .collect()
    }

    /// `pi^sigma_G(mu)` for `G` inside the experimental level.
    pub fn project_onto(&self, sigma: &DensityOperator, level: &LevelOfDescription) -> Result<GibbsModel> {
        project(&self.expectations_on(level.basis())?, sigma, level)
    }
}

/// The entropic distribution `Ent(alpha, sigma, G)`.
#[derive(Clone, Debug)]
pub struct EntropicPrior {
    alpha: f64,
    sigma: DensityOperator,
    level: LevelOfDescription,
}

impl EntropicPrior {
    pub fn new(alpha: f64, sigma: DensityOperator, level: LevelOfDescription) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        if sigma.dim() != level.dim_hilbert() {
            return Err(Error::DimensionMismatch {
                expected: level.dim_hilbert(),
                found: sigma.dim(),
            });
        }
        Ok(Self { alpha, sigma, level })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma(&self) -> &DensityOperator {
        &self.sigma
    }

    pub fn level(&self) -> &LevelOfDescription {
        &self.level
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(alpha, self.sigma.clone(), self.level.clone())
    }

    /// `(dim G - 1)/2 ln(2 pi / alpha)`, the log normaliser in Gaussian approximation.
    pub fn gaussian_log_norm(&self) -> f64 {
        0.5 * (self.level.dim() - 1) as f64 * (2.0 * std::f64::consts::PI / self.alpha).ln()
    }
}

/// `-alpha S(omega || sigma)`, or minus infinity if `omega` lies off the prior's manifold.
pub fn entropic_log_density(omega: &GibbsModel, prior: &EntropicPrior) -> f64 {
    let on_manifold =
        omega.sigma().approx_eq(&prior.sigma, 1e-12) && is_sublevel(omega.level(), &prior.level).unwrap_or(false);
    if !on_manifold {
        log::warn!("entropic density evaluated off its manifold");
        return f64::NEG_INFINITY;
    }
    let s = relative_entropy(omega.state(), &prior.sigma).expect("same dimension");
    -prior.alpha * s
}

/// `exp[(1 - t) ln a + t ln b]`, normalised.
pub fn interpolated_state(a: &DensityOperator, b: &DensityOperator, t: f64) -> Result<DensityOperator> {
    check_t(t)?;
    let k = a.ln().scale(1.0 - t).add_scaled(t, &b.ln());
    Ok(DensityOperator::exponential(&k).0)
}

fn check_t(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!(
            "interpolation weight must lie in [0, 1], got {t}"
        )));
    }
    Ok(())
}

/// The interpolated state `exp[(1 - t) ln mu + t ln sigma] / Z` as a point of the
/// manifold of `mu`. Requires `sigma` to lie on that manifold; the Lagrange
/// parameters then interpolate linearly.
pub fn interpolate_states(mu: &GibbsModel, sigma: &DensityOperator, t: f64) -> Result<GibbsModel> {
    check_t(t)?;
    let level = mu.level();
    let diff = sigma.ln().sub(&mu.sigma().ln());
    let (_, coeffs) = level.expand(&diff).map_err(|_| Error::ManifoldMismatch)?;
    let lambda = mu
        .lambda()
        .iter()
        .zip(&coeffs)
        .map(|(l, c)| (1.0 - t) * l - t * c)
        .collect();
    GibbsModel::new(mu.sigma(), level, lambda)
}

/// Output of the evidence procedure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceEstimate {
    pub chi2: f64,
    pub dim: usize,
    /// `dim / chi2`, when below one.
    pub t: Option<f64>,
    /// `N t / (1 - t)`, when defined.
    pub alpha: Option<f64>,
    /// The data deviate from the prior by more than a typical fluctuation.
    pub deviation_ok: bool,
    /// The experimental level is detailed enough for the estimate to be sharp.
    pub detail_ok: bool,
}

impl EvidenceEstimate {
    pub fn applicable(&self) -> bool {
        self.deviation_ok && self.detail_ok
    }
}

pub fn evidence_from_chi2(chi2: f64, dim: usize, n: u64, dim_min: usize) -> EvidenceEstimate {
    let deviation_ok = chi2 > dim as f64;
    let (t, alpha) = if deviation_ok {
        let t = dim as f64 / chi2;
        (Some(t), Some(n as f64 * t / (1.0 - t)))
    } else {
        (None, None)
    };
    EvidenceEstimate {
        chi2,
        dim,
        t,
        alpha,
        deviation_ok,
        detail_ok: dim >= dim_min,
    }
}

/// Evidence estimate of `alpha` from `chi2(pi^sigma_F(mu) || sigma)`, with the
/// metric at `sigma`. Depends only on the experimental level.
pub fn estimate_alpha(data: &ExperimentData, sigma: &DensityOperator, dim_min: usize) -> Result<EvidenceEstimate> {
    let level = data.level();
    let origin = GibbsModel::new(sigma, level, vec![0.0; level.dim() - 1])?;
    let chi2 = chi_squared_means(data.means(), &origin, data.n() as f64)?;
    Ok(evidence_from_chi2(chi2, level.dim() - 1, data.n(), dim_min))
}

/// How the prior confidence `alpha` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaPolicy {
    /// Evidence procedure, with an optional value used when it is inapplicable.
    Evidence {
        fallback: Option<f64>,
        dim_min: usize,
    },
    Fixed(f64),
}

impl Default for AlphaPolicy {
    fn default() -> Self {
        AlphaPolicy::Evidence {
            fallback: None,
            dim_min: DEFAULT_DIM_MIN,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSource {
    Evidence,
    User,
    Fallback,
}

/// Resolves `alpha` under a policy, returning warnings for a weak evidence estimate.
pub fn resolve_alpha(
    data: &ExperimentData,
    sigma: &DensityOperator,
    policy: AlphaPolicy,
) -> Result<(f64, AlphaSource, Option<EvidenceEstimate>, Vec<String>)> {
    match policy {
        AlphaPolicy::Fixed(a) => {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::Domain(format!("alpha must be positive, got {a}")));
            }
            Ok((a, AlphaSource::User, None, Vec::new()))
        }
        AlphaPolicy::Evidence { fallback, dim_min } => {
            let ev = estimate_alpha(data, sigma, dim_min)?;
            let mut warnings = Vec::new();
            match (ev.alpha, fallback) {
                (Some(a), _) if ev.detail_ok => Ok((a, AlphaSource::Evidence, Some(ev), warnings)),
                (_, Some(fb)) => {
                    warnings.push(format!(
                        "evidence procedure inapplicable (chi2 = {:.6}, dim = {}); using fallback alpha",
                        ev.chi2, ev.dim
                    ));
                    if !(fb > 0.0 && fb.is_finite()) {
                        return Err(Error::Domain(format!("alpha must be positive, got {fb}")));
                    }
                    Ok((fb, AlphaSource::Fallback, Some(ev), warnings))
                }
                (Some(a), None) => {
                    warnings.push(format!(
                        "experimental level has only {} parameters; evidence estimate of alpha is rough",
                        ev.dim
                    ));
                    Ok((a, AlphaSource::Evidence, Some(ev), warnings))
                }
                (None, None) => Err(Error::EvidenceInapplicable {
                    chi2: ev.chi2,
                    dim: ev.dim,
                }),
            }
        }
    }
}

/// Posterior point estimate with Gaussian error scales.
#[derive(Clone, Debug)]
pub struct PosteriorEstimate {
    /// The estimate as a point of the theoretical manifold.
    pub rho_hat: GibbsModel,
    /// `pi^sigma_{F ∩ G}(mu)`.
    pub mu_proj: GibbsModel,
    /// `alpha / (alpha + N)`.
    pub t: f64,
    pub alpha_used: f64,
    pub alpha_source: AlphaSource,
    pub evidence: Option<EvidenceEstimate>,
    /// `F ∩ G`, the measured directions.
    pub measured: LevelOfDescription,
    /// `C(rho_hat) / (alpha + N)` on the basis of `measured`.
    pub cov_measured: DMatrix<f64>,
    /// Directions of `G` not covered by the measurement, uncorrelated with the
    /// measured ones at `rho_hat`.
    pub unmeasured: Option<LevelOfDescription>,
    /// `C(rho_hat) / alpha` on the basis of `unmeasured`.
    pub cov_unmeasured: Option<DMatrix<f64>>,
    pub warnings: Vec<String>,
}

pub fn posterior_estimate(
    data: &ExperimentData,
    prior: &EntropicPrior,
    policy: AlphaPolicy,
) -> Result<PosteriorEstimate> {
    let f = data.level();
    let g = prior.level();
    if f.dim_hilbert() != g.dim_hilbert() {
        return Err(Error::AmbientMismatch {
            left: f.dim_hilbert(),
            right: g.dim_hilbert(),
        });
    }
    let sigma = prior.sigma();
    let measured = intersection(f, g)?;
    let origin = GibbsModel::new(sigma, &measured, vec![0.0; measured.dim() - 1])?;

    let (alpha, source, evidence, mut warnings, mu_proj) = if data.n() == 0 {
        let (alpha, source) = match policy {
            AlphaPolicy::Fixed(a) => (a, AlphaSource::User),
            AlphaPolicy::Evidence { fallback: Some(a), .. } => (a, AlphaSource::Fallback),
            AlphaPolicy::Evidence { fallback: None, .. } => (prior.alpha(), AlphaSource::User),
        };
        (
            alpha,
            source,
            None,
            vec!["no data; estimate equals the reference state".into()],
            origin.clone(),
        )
    } else {
        let (alpha, source, evidence, warnings) = resolve_alpha(data, sigma, policy)?;
        let mu_proj = data.project_onto(sigma, &measured)?;
        (alpha, source, evidence, warnings, mu_proj)
    };
    let n = data.n() as f64;
    let t = alpha / (alpha + n);
    let on_measured = interpolate_states(&mu_proj, sigma, t)?;
    let rho_hat = on_measured.embed(g)?;

    let cov_measured = correlation_matrix(rho_hat.state(), measured.basis())? / (alpha + n);
    let rest = complement(&measured, g, rho_hat.state())?;
    let (unmeasured, cov_unmeasured) = if rest.is_trivial() {
        (None, None)
    } else {
        let c = correlation_matrix(rho_hat.state(), rest.basis())? / alpha;
        (Some(rest), Some(c))
    };
    if rho_hat.state().is_clamped() {
        warnings.push("posterior estimate touches the eigenvalue floor".into());
    }
    Ok(PosteriorEstimate {
        rho_hat,
        mu_proj,
        t,
        alpha_used: alpha,
        alpha_source: source,
        evidence,
        measured,
        cov_measured,
        unmeasured,
        cov_unmeasured,
        warnings,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    KeepCoarse,
    Inconclusive,
    Refine,
}

/// Rule of thumb on `chi2 / s` against `ln N`.
pub fn verdict(per_param: f64, ln_n: f64) -> Verdict {
    if per_param < ln_n / VERDICT_BAND {
        Verdict::KeepCoarse
    } else if per_param > VERDICT_BAND * ln_n {
        Verdict::Refine
    } else {
        Verdict::Inconclusive
    }
}

/// Bayesian comparison of a coarse level against a finer one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `dim H - dim G`.
    pub s: usize,
    /// `chi2(pi_H(mu) || pi_G(mu))`, metric at `pi_G(mu)`.
    pub chi2_gain: f64,
    /// `S(pi_H(mu) || pi_G(mu))`.
    pub entropy_gain: f64,
    pub ln_n: f64,
    pub per_param: f64,
    /// `ln` of the posterior odds for the coarse level; positive favours it.
    pub log_ratio: Option<f64>,
    /// `(s/2) ln(N / alpha)`.
    pub log_occam: Option<f64>,
    pub prior_odds: f64,
    pub verdict: Verdict,
    pub alpha_used: Option<f64>,
}

/// Compares `coarse ⊂ fine ⊂ F`. Without `alpha` the verdict is still
/// given but the odds are not.
pub fn compare_levels(
    coarse: &LevelOfDescription,
    fine: &LevelOfDescription,
    data: &ExperimentData,
    sigma: &DensityOperator,
    alpha: Option<f64>,
    prior_odds: f64,
) -> Result<ComparisonReport> {
    if !is_sublevel(coarse, fine)? || !is_sublevel(fine, data.level())? {
        return Err(Error::NotSublevel);
    }
    if coarse.dim() >= fine.dim() {
        return Err(Error::InvalidArgument("the finer level adds no parameters".into()));
    }
    if data.n() == 0 {
        return Err(Error::InvalidArgument("comparison requires at least one sample".into()));
    }
    if !(prior_odds > 0.0 && prior_odds.is_finite()) {
        return Err(Error::Domain(format!("prior odds must be positive, got {prior_odds}")));
    }
    if let Some(a) = alpha {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Domain(format!("alpha must be positive, got {a}")));
        }
    }
    let s = fine.dim() - coarse.dim();
    let n = data.n() as f64;
    let f_fine = data.expectations_on(fine.basis())?;
    let mu_fine = project(&f_fine, sigma, fine)?;
    let mu_coarse = data.project_onto(sigma, coarse)?.embed(fine)?;
    let chi2_gain = chi_squared_means(&f_fine, &mu_coarse, n)?;
    let entropy_gain = manifold_relative_entropy(&mu_fine, &mu_coarse)?;
    let ln_n = n.ln();
    let per_param = chi2_gain / s as f64;
    let log_occam = alpha.map(|a| 0.5 * s as f64 * (n / a).ln());
    let log_ratio = alpha.map(|a| prior_odds.ln() + 0.5 * s as f64 * (n / a).ln() - (n - a) * entropy_gain);
    Ok(ComparisonReport {
        s,
        chi2_gain,
        entropy_gain,
        ln_n,
        per_param,
        log_ratio,
        log_occam,
        prior_odds,
        verdict: verdict(per_param, ln_n),
        alpha_used: alpha,
    })
}

/// `|S(rho || sigma) - S(rho || pi) - S(pi || sigma)|` with `pi = pi^sigma_H(rho)`.
pub fn pythagoras_residual(rho: &DensityOperator, sigma: &DensityOperator, level: &LevelOfDescription) -> Result<f64> {
    let pi = project_state(rho, sigma, level)?;
    let total = relative_entropy(rho, sigma)?;
    let a = relative_entropy(rho, pi.state())?;
    let b = relative_entropy(pi.state(), sigma)?;
    Ok((total - a - b).abs())
}

/// Sample means of `rho` on the basis of `level`.
pub fn basis_expectations(rho: &DensityOperator, level: &LevelOfDescription) -> Result<Vec<f64>> {
    level.basis().iter().map(|b| expectation(rho, b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levels::Metric;
    use approx::assert_abs_diff_eq;

    fn wolf() -> (LevelOfDescription, LevelOfDescription, ExperimentData) {
        let g = LevelOfDescription::new(
            6,
            vec![
                HermitianOperator::diagonal((1..=6).map(|i| i as f64 - 3.5).collect()),
                HermitianOperator::diagonal(vec![1.0, 1.0, -2.0, -2.0, 1.0, 1.0]),
            ],
            Metric::HilbertSchmidt,
        )
        .unwrap();
        let f = LevelOfDescription::full_classical(6, Metric::HilbertSchmidt).unwrap();
        let data = ExperimentData::from_counts(f.clone(), vec![3246, 3449, 2897, 2841, 3635, 3932]).unwrap();
        (g, f, data)
    }

    #[test]
    fn chi2_pdf_values() {
        assert_abs_diff_eq!(chi2_pdf(1.0, 2), 0.5 * (-0.5f64).exp(), epsilon = 1e-15);
        let lp = chi2_ln_pdf(271.0, 5) / std::f64::consts::LN_10;
        assert!((lp + 56.0).abs() < 1.0, "log10 pdf = {lp}");
        // peak at k - 2
        for k in [3u32, 5, 10, 30] {
            let m = (k - 2) as f64;
            assert!(chi2_pdf(m, k) > chi2_pdf(m - 0.01, k));
            assert!(chi2_pdf(m, k) > chi2_pdf(m + 0.01, k));
        }
    }

    #[test]
    fn chi2_tail_exponential_for_two_dof() {
        for x in [0.0, 1.0, 10.0, 100.0] {
            let t = chi2_tail(x, 2);
            assert!((t - (-x / 2.0).exp()).abs() <= 1e-14 * (-x / 2.0f64).exp(), "{x}");
        }
        assert!((chi2_ln_tail(2000.0, 2) + 1000.0).abs() < 1e-10);
    }

    #[test]
    fn chi2_tail_matches_statrs() {
        use statrs::function::gamma::gamma_ur;
        for k in [1u32, 2, 3, 5, 10, 24] {
            for x in [0.1, 1.0, 3.0, 7.5, 20.0, 60.0] {
                let ours = chi2_tail(x, k);
                let oracle = gamma_ur(0.5 * k as f64, 0.5 * x);
                assert!((ours - oracle).abs() <= 1e-12 + 1e-10 * oracle, "k={k} x={x}");
            }
        }
    }

    #[test]
    fn significance_examples() {
        assert!(!significance(0.0, 5, 100, DEFAULT_SIGNIFICANCE).unwrap().significant);
        assert!(!significance(5.0, 5, 100, DEFAULT_SIGNIFICANCE).unwrap().significant);
        let w = significance(271.0, 5, 20000, DEFAULT_SIGNIFICANCE).unwrap();
        assert!(w.significant);
        assert!((w.entropy - 271.0 / 40000.0).abs() < 1e-15);
    }

    #[test]
    fn evidence_arithmetic() {
        let e = evidence_from_chi2(96.0, 24, 12000, DEFAULT_DIM_MIN);
        assert_eq!(e.t, Some(0.25));
        assert_abs_diff_eq!(e.alpha.unwrap(), 4000.0, epsilon = 1e-9);
        assert!(e.applicable());
        let b = evidence_from_chi2(24.0, 24, 12000, DEFAULT_DIM_MIN);
        assert!(!b.deviation_ok && b.alpha.is_none());
        let w = evidence_from_chi2(271.0, 5, 20000, DEFAULT_DIM_MIN);
        assert!((w.t.unwrap() - 0.01845).abs() < 1e-5);
        assert!((w.alpha.unwrap() - 376.0).abs() < 1.0);
        assert!(w.deviation_ok && !w.detail_ok);
    }

    #[test]
    fn wolf_comparisons() {
        let (g, f, data) = wolf();
        let u = DensityOperator::uniform(6);
        let o = LevelOfDescription::trivial(6, Metric::HilbertSchmidt).unwrap();
        let og = compare_levels(&o, &g, &data, &u, Some(376.0), 1.0).unwrap();
        assert_eq!(og.s, 2);
        assert!((259.0..=265.0).contains(&og.chi2_gain), "{}", og.chi2_gain);
        assert_eq!(og.verdict, Verdict::Refine);
        let gf = compare_levels(&g, &f, &data, &u, Some(376.0), 1.0).unwrap();
        assert_eq!(gf.s, 3);
        assert!((8.0..=10.0).contains(&gf.chi2_gain), "{}", gf.chi2_gain);
        assert_eq!(gf.verdict, Verdict::KeepCoarse);
        assert!(gf.log_ratio.unwrap() > 0.0 && og.log_ratio.unwrap() < 0.0);
        assert!(matches!(
            compare_levels(&f, &g, &data, &u, None, 1.0),
            Err(Error::NotSublevel)
        ));
    }

    #[test]
    fn wolf_evidence_is_flagged() {
        let (_, _, data) = wolf();
        let e = estimate_alpha(&data, &DensityOperator::uniform(6), DEFAULT_DIM_MIN).unwrap();
        assert!((269.0..=273.0).contains(&e.chi2));
        assert!(!e.detail_ok);
    }

    #[test]
    fn posterior_without_data_is_reference() {
        let (g, f, _) = wolf();
        let u = DensityOperator::uniform(6);
        let data = ExperimentData::new(f, vec![0.0; 5], 0).unwrap();
        let prior = EntropicPrior::new(10.0, u.clone(), g).unwrap();
        let est = posterior_estimate(&data, &prior, AlphaPolicy::Fixed(10.0)).unwrap();
        assert_eq!(est.t, 1.0);
        assert!(est.rho_hat.state().approx_eq(&u, 1e-14));
    }

    #[test]
    fn posterior_approaches_maximum_likelihood() {
        let (g, _, data) = wolf();
        let u = DensityOperator::uniform(6);
        let prior = EntropicPrior::new(1.0, u.clone(), g.clone()).unwrap();
        let ml = data.project_onto(&u, &g).unwrap();
        let est = posterior_estimate(&data, &prior, AlphaPolicy::Fixed(1e-6)).unwrap();
        assert!(est.rho_hat.state().distance(ml.state()) < 1e-9);
        assert!(est.unmeasured.is_none());
    }

    #[test]
    fn interpolation_endpoints() {
        let (g, _, data) = wolf();
        let u = DensityOperator::uniform(6);
        let mu = data.project_onto(&u, &g).unwrap();
        assert!(interpolate_states(&mu, &u, 0.0)
            .unwrap()
            .state()
            .approx_eq(mu.state(), 1e-14));
        assert!(interpolate_states(&mu, &u, 1.0).unwrap().state().approx_eq(&u, 1e-14));
        assert!(interpolate_states(&mu, &u, 1.5).is_err());
        let direct = interpolated_state(mu.state(), &u, 0.3).unwrap();
        assert!(interpolate_states(&mu, &u, 0.3)
            .unwrap()
            .state()
            .approx_eq(&direct, 1e-13));
    }

    #[test]
    fn entropic_density() {
        let (g, _, data) = wolf();
        let u = DensityOperator::uniform(6);
        let prior = EntropicPrior::new(2.0, u.clone(), g.clone()).unwrap();
        let at_sigma = GibbsModel::new(&u, &g, vec![0.0, 0.0]).unwrap();
        assert_eq!(entropic_log_density(&at_sigma, &prior), 0.0);
        let mu = data.project_onto(&u, &g).unwrap();
        assert!(entropic_log_density(&mu, &prior) < 0.0);
        let other = GibbsModel::new(
            &u,
            &LevelOfDescription::full_classical(6, Metric::HilbertSchmidt).unwrap(),
            vec![0.1; 5],
        )
        .unwrap();
        assert_eq!(entropic_log_density(&other, &prior), f64::NEG_INFINITY);
        assert_abs_diff_eq!(
            prior.gaussian_log_norm(),
            (2.0 * std::f64::consts::PI / 2.0).ln(),
            epsilon = 1e-15
        );
    }
}
