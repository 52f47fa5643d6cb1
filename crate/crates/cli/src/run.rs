//! Pipeline orchestration: configuration, command execution and report emission.

use std::io::Write;
use std::path::{Path, PathBuf};

use gibbsfit::inference::{compare_levels, posterior_estimate, resolve_alpha, significance, PosteriorEstimate};
use gibbsfit::state_space::relative_entropy;
use gibbsfit::{AlphaPolicy, EntropicPrior, Error as CoreError, HermitianOperator};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::demos::{self, DemoName};
use crate::error::{CliError, Result, EXIT_SOLVER};
use crate::io::{load, Dataset};
use crate::report::{render, Body, CompareBody, EstimateBody, LevelInfo, ProjectBody, Report, SignificanceBody};

/// Number of random instances checked by `--self-test`.
pub const SELF_TEST_CASES: usize = 30;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Table,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Command {
    Project {
        level: String,
    },
    Significance {
        level: String,
    },
    Estimate {
        level: String,
    },
    Compare {
        coarse: String,
        fine: String,
        prior_odds: f64,
    },
    Demo {
        demo: DemoName,
        tilts_deg: Vec<f64>,
        r: f64,
    },
    Show {
        report: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub data: Option<PathBuf>,
    pub observables: Option<PathBuf>,
    /// `None` disables `alpha` where it is optional.
    pub alpha_policy: Option<AlphaPolicy>,
    pub significance_level: f64,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub self_test: bool,
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::data(format!("{name} must be positive and finite, got {x}")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.significance_level > 0.0 && self.significance_level < 1.0) {
            return Err(CliError::data(format!(
                "--sig-level must lie in (0, 1), got {}",
                self.significance_level
            )));
        }
        match self.alpha_policy {
            Some(AlphaPolicy::Fixed(a)) => positive("--alpha", a)?,
            Some(AlphaPolicy::Evidence { fallback: Some(a), .. }) => positive("--fallback-alpha", a)?,
            _ => {}
        }
        match &self.command {
            Command::Compare { prior_odds, .. } => positive("--prior-odds", *prior_odds)?,
            Command::Demo { tilts_deg, r, .. } => {
                if !(*r > 0.0 && *r < 1.0) {
                    return Err(CliError::data(format!("--r must lie in (0, 1), got {r}")));
                }
                if let Some(t) = tilts_deg.iter().find(|t| !(0.0..=180.0).contains(*t)) {
                    return Err(CliError::data(format!("--tilt-deg must lie in [0, 180], got {t}")));
                }
            }
            _ => {}
        }
        let needs_data = matches!(
            self.command,
            Command::Project { .. } | Command::Significance { .. } | Command::Estimate { .. } | Command::Compare { .. }
        );
        if needs_data && self.data.is_none() {
            return Err(CliError::data("--data is required for this command"));
        }
        Ok(())
    }

    fn dataset(&self) -> Result<Dataset> {
        let data = self.data.as_deref().expect("validated");
        load(data, self.observables.as_deref())
    }
}

fn project_cmd(cfg: &RunConfig, level: &str) -> Result<(Body, Dataset, Vec<String>)> {
    let ds = cfg.dataset()?;
    let l = ds.resolve_level(level)?;
    let mu = ds.data.project_onto(&ds.sigma, &l.level)?;
    let entropy = relative_entropy(mu.state(), &ds.sigma)?;
    let body = Body::Project(ProjectBody {
        level: LevelInfo::of(&l),
        n: ds.data.n(),
        expectations: mu.generator_expectations(),
        lagrange: mu.generator_lagrange(),
        ln_z: mu.ln_z(),
        entropy,
        chi2: 2.0 * ds.data.n() as f64 * entropy,
    });
    Ok((body, ds, Vec::new()))
}

fn significance_cmd(cfg: &RunConfig, level: &str) -> Result<(Body, Dataset, Vec<String>)> {
    let ds = cfg.dataset()?;
    let l = ds.resolve_level(level)?;
    if l.level.is_trivial() {
        return Err(CliError::data(
            "significance needs a level with at least one observable",
        ));
    }
    let mu = ds.data.project_onto(&ds.sigma, &l.level)?;
    let n = ds.data.n();
    let chi2 = 2.0 * n as f64 * relative_entropy(mu.state(), &ds.sigma)?;
    let report = significance(chi2, (l.level.dim() - 1) as u32, n, cfg.significance_level)?;
    Ok((
        Body::Significance(SignificanceBody {
            level: LevelInfo::of(&l),
            report,
        }),
        ds,
        Vec::new(),
    ))
}

fn vectorize(x: &HermitianOperator) -> DVector<f64> {
    let m = x.to_matrix();
    let d = m.nrows();
    DVector::from_iterator(2 * d * d, m.iter().map(|z| z.re).chain(m.iter().map(|z| z.im)))
}

/// Posterior standard errors of the generator expectations, combining the
/// measured covariance with the prior covariance of the unmeasured directions.
fn generator_std(est: &PosteriorEstimate, gens: &[HermitianOperator]) -> Result<Vec<f64>> {
    let d = est.rho_hat.state().dim();
    let measured = est.measured.basis();
    let unmeasured = est.unmeasured.as_ref().map_or(&[][..], |l| l.basis());
    let mut cols = vec![vectorize(&HermitianOperator::identity(d))];
    cols.extend(measured.iter().chain(unmeasured).map(vectorize));
    let a = DMatrix::from_columns(&cols);
    let svd = a.svd(true, true);
    let m = measured.len();
    gens.iter()
        .map(|g| {
            let x = svd
                .solve(&vectorize(g), 1e-12)
                .map_err(|e| CliError::data(format!("error propagation: {e}")))?;
            let quad = |c: &DMatrix<f64>, off: usize, k: usize| -> f64 {
                (0..k)
                    .map(|i| (0..k).map(|j| x[off + i] * c[(i, j)] * x[off + j]).sum::<f64>())
                    .sum()
            };
            let mut var = quad(&est.cov_measured, 1, m);
            if let Some(cu) = &est.cov_unmeasured {
                var += quad(cu, 1 + m, unmeasured.len());
            }
            Ok(var.max(0.0).sqrt())
        })
        .collect()
}

fn estimate_cmd(cfg: &RunConfig, level: &str) -> Result<(Body, Dataset, Vec<String>)> {
    let ds = cfg.dataset()?;
    let l = ds.resolve_level(level)?;
    let policy = cfg
        .alpha_policy
        .ok_or_else(|| CliError::data("estimate needs --alpha auto or a positive value"))?;
    let placeholder = match policy {
        AlphaPolicy::Fixed(a) | AlphaPolicy::Evidence { fallback: Some(a), .. } => a,
        AlphaPolicy::Evidence { fallback: None, .. } => {
            if ds.data.n() == 0 {
                return Err(CliError::data(
                    "the evidence procedure needs data; supply --alpha or --fallback-alpha",
                ));
            }
            1.0
        }
    };
    let prior = EntropicPrior::new(placeholder, ds.sigma.clone(), l.level.clone())?;
    let est = posterior_estimate(&ds.data, &prior, policy)?;
    let std_errors = generator_std(&est, l.level.generators())?;
    let body = Body::Estimate(EstimateBody {
        level: LevelInfo::of(&l),
        n: ds.data.n(),
        t: est.t,
        alpha: est.alpha_used,
        alpha_source: est.alpha_source,
        evidence: est.evidence.clone(),
        measured_dim: est.measured.dim(),
        unmeasured_dim: est.unmeasured.as_ref().map_or(0, |u| u.dim() - 1),
        expectations: est.rho_hat.generator_expectations(),
        std_errors,
        lagrange: est.rho_hat.generator_lagrange(),
        entropy_to_reference: relative_entropy(est.rho_hat.state(), &ds.sigma)?,
    });
    Ok((body, ds, est.warnings.clone()))
}

fn compare_cmd(cfg: &RunConfig, coarse: &str, fine: &str, prior_odds: f64) -> Result<(Body, Dataset, Vec<String>)> {
    let ds = cfg.dataset()?;
    let c = ds.resolve_level(coarse)?;
    let f = ds.resolve_level(fine)?;
    let mut warnings = Vec::new();
    let alpha = match cfg.alpha_policy {
        None => None,
        Some(AlphaPolicy::Fixed(a)) => Some(a),
        Some(policy) => match resolve_alpha(&ds.data, &ds.sigma, policy) {
            Ok((a, _, _, w)) => {
                warnings.extend(w);
                Some(a)
            }
            Err(e @ CoreError::EvidenceInapplicable { .. }) => {
                warnings.push(format!("{e}; posterior odds omitted"));
                None
            }
            Err(e) => return Err(e.into()),
        },
    };
    let report = compare_levels(&c.level, &f.level, &ds.data, &ds.sigma, alpha, prior_odds)?;
    let body = Body::Compare(CompareBody {
        coarse: LevelInfo::of(&c),
        fine: LevelInfo::of(&f),
        n: ds.data.n(),
        report,
    });
    Ok((body, ds, warnings))
}

/// Executes a validated configuration.
pub fn run(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let (body, inputs, warnings) = match &cfg.command {
        Command::Show { report } => {
            let text = std::fs::read_to_string(report).map_err(|source| CliError::Io {
                path: report.display().to_string(),
                source,
            })?;
            let r: Report = serde_json::from_str(&text)?;
            if r.format_version != crate::io::FORMAT_VERSION {
                return Err(CliError::data(format!(
                    "unsupported format_version {}",
                    r.format_version
                )));
            }
            return Ok(r);
        }
        Command::Demo { demo, tilts_deg, r } => match demo {
            DemoName::Wolf => {
                let o = demos::wolf(cfg.significance_level)?;
                (Body::Wolf(o.body), o.inputs, o.warnings)
            }
            DemoName::Qubit => {
                let o = demos::qubit(*r, tilts_deg, demos::QUBIT_N)?;
                (Body::Qubit(o.body), o.inputs, o.warnings)
            }
            DemoName::Thermal => {
                let o = demos::thermal()?;
                (Body::Thermal(o.body), o.inputs, o.warnings)
            }
        },
        cmd => {
            let (body, ds, warnings) = match cmd {
                Command::Project { level } => project_cmd(cfg, level)?,
                Command::Significance { level } => significance_cmd(cfg, level)?,
                Command::Estimate { level } => estimate_cmd(cfg, level)?,
                Command::Compare {
                    coarse,
                    fine,
                    prior_odds,
                } => compare_cmd(cfg, coarse, fine, *prior_odds)?,
                _ => unreachable!(),
            };
            (body, ds.digests, warnings)
        }
    };
    for w in &warnings {
        log::info!("{w}");
    }
    let mut report = Report::new(cfg.clone(), inputs, warnings, body);
    if cfg.self_test {
        report.self_test = Some(demos::self_test(cfg.seed, SELF_TEST_CASES)?);
    }
    Ok(report)
}

pub fn to_json(report: &Report) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

/// Writes the report to `out`, or to stdout when absent.
pub fn emit(report: &Report, format: OutputFormat, out: Option<&Path>) -> Result<()> {
    let text = match format {
        OutputFormat::Table => render(report),
        OutputFormat::Json => to_json(report)?,
    };
    match out {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

/// Runs, emits and maps the outcome to a process exit code.
pub fn execute(cfg: &RunConfig) -> i32 {
    let result = run(cfg).and_then(|r| {
        emit(&r, cfg.format, cfg.out.as_deref())?;
        Ok(r)
    });
    match result {
        Ok(r) if r.self_test.as_ref().is_some_and(|s| !s.passed) => {
            eprintln!("error: self-test failed");
            EXIT_SOLVER
        }
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
