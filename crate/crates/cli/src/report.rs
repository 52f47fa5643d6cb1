//! Serializable result tree with provenance, and its table rendering.

use gibbsfit::{AlphaSource, ComparisonReport, EvidenceEstimate, SignificanceReport, Verdict};
use serde::{Deserialize, Serialize};

use crate::format::{kv, opt6, sig6, vec6, Table};
use crate::io::{InputDigest, NamedLevel, FORMAT_VERSION};
use crate::run::RunConfig;

pub const TOOL: &str = "gibbsfit";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u32,
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub inputs: Vec<InputDigest>,
    pub warnings: Vec<String>,
    pub result: Body,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_test: Option<SelfTestBody>,
}

impl Report {
    pub fn new(config: RunConfig, inputs: Vec<InputDigest>, warnings: Vec<String>, result: Body) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            inputs,
            warnings,
            result,
            self_test: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Body {
    Project(ProjectBody),
    Significance(SignificanceBody),
    Estimate(EstimateBody),
    Compare(CompareBody),
    Wolf(WolfBody),
    Qubit(QubitBody),
    Thermal(ThermalBody),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelInfo {
    pub name: String,
    /// Dimension including the identity.
    pub dim: usize,
    pub generators: Vec<String>,
}

impl LevelInfo {
    pub fn of(l: &NamedLevel) -> Self {
        Self {
            name: l.name.clone(),
            dim: l.level.dim(),
            generators: l.generator_names.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectBody {
    pub level: LevelInfo,
    pub n: u64,
    pub expectations: Vec<f64>,
    pub lagrange: Vec<f64>,
    pub ln_z: f64,
    /// `S(pi(mu) || sigma)`.
    pub entropy: f64,
    /// `2 N S(pi(mu) || sigma)`.
    pub chi2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignificanceBody {
    pub level: LevelInfo,
    pub report: SignificanceReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateBody {
    pub level: LevelInfo,
    pub n: u64,
    pub t: f64,
    pub alpha: f64,
    pub alpha_source: AlphaSource,
    pub evidence: Option<EvidenceEstimate>,
    pub measured_dim: usize,
    pub unmeasured_dim: usize,
    pub expectations: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub lagrange: Vec<f64>,
    pub entropy_to_reference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareBody {
    pub coarse: LevelInfo,
    pub fine: LevelInfo,
    pub n: u64,
    pub report: ComparisonReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub coarse: String,
    pub fine: String,
    pub report: ComparisonReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WolfBody {
    pub n: u64,
    pub frequencies: Vec<f64>,
    pub significance: SignificanceReport,
    pub model: LevelInfo,
    pub model_expectations: Vec<f64>,
    pub model_lagrange: Vec<f64>,
    pub evidence: EvidenceEstimate,
    pub alpha: f64,
    pub rows: Vec<CompareRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitRow {
    pub tilt_deg: f64,
    pub c_inv_theta_theta: f64,
    /// `N C^-1_thth dtheta^2 / 2`.
    pub metric_per_param: f64,
    /// `2 N S(pi_H(mu) || pi_I(mu)) / s`.
    pub exact_per_param: f64,
    pub report: ComparisonReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitBody {
    pub r: f64,
    pub n: u64,
    pub rows: Vec<QubitRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalBody {
    pub n: u64,
    pub levels: usize,
    pub frequencies: Vec<f64>,
    /// Quadratic-form distance of the data to the prior, used by the evidence procedure.
    pub chi2_quadratic: f64,
    /// `2 N sum f ln(f / p)`.
    pub chi2_entropy: f64,
    pub evidence: EvidenceEstimate,
    pub t: f64,
    pub alpha: f64,
    pub beta_prior: f64,
    pub beta_data: f64,
    pub beta_hat: f64,
    pub temperature_hat: f64,
    pub mean_energy: f64,
    pub mean_energy_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfTestBody {
    pub seed: u64,
    pub cases: usize,
    pub max_pythagoras_residual: f64,
    pub passed: bool,
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::KeepCoarse => "keep coarse",
        Verdict::Inconclusive => "inconclusive",
        Verdict::Refine => "refine",
    }
}

fn source_name(s: AlphaSource) -> &'static str {
    match s {
        AlphaSource::Evidence => "evidence",
        AlphaSource::User => "user",
        AlphaSource::Fallback => "fallback",
    }
}

fn level_line(l: &LevelInfo) -> String {
    if l.generators.is_empty() {
        format!("{} (dim {})", l.name, l.dim)
    } else {
        format!("{} (dim {}: 1, {})", l.name, l.dim, l.generators.join(", "))
    }
}

fn significance_pairs(s: &SignificanceReport) -> Vec<(&'static str, String)> {
    vec![
        ("chi2", sig6(s.chi2)),
        ("degrees of freedom", s.k.to_string()),
        ("N", s.n.to_string()),
        ("chi2 pdf", sig6(s.pdf)),
        ("log10 chi2 pdf", sig6(s.log10_pdf)),
        ("log10 tail probability", sig6(s.log10_tail)),
        ("significance level", sig6(s.level)),
        ("significant", s.significant.to_string()),
        ("entropy chi2/2N", sig6(s.entropy)),
        ("fluctuation k/2N", sig6(s.entropy_fluctuation)),
    ]
}

fn evidence_pairs(e: &EvidenceEstimate) -> Vec<(&'static str, String)> {
    vec![
        ("evidence chi2", sig6(e.chi2)),
        ("evidence dim", e.dim.to_string()),
        ("evidence t", opt6(e.t)),
        ("evidence alpha", opt6(e.alpha)),
        ("deviation condition", e.deviation_ok.to_string()),
        ("detail condition", e.detail_ok.to_string()),
    ]
}

fn comparison_table(title: &str, rows: &[(String, String, &ComparisonReport)]) -> String {
    let mut t = Table::new(
        title,
        &["coarse", "fine", "s", "chi2", "chi2/s", "ln N", "ln odds", "verdict"],
    );
    for (a, b, r) in rows {
        t.row(vec![
            a.clone(),
            b.clone(),
            r.s.to_string(),
            sig6(r.chi2_gain),
            sig6(r.per_param),
            sig6(r.ln_n),
            opt6(r.log_ratio),
            verdict_name(r.verdict).into(),
        ]);
    }
    t.render()
}

/// Plain-text rendering of a report.
pub fn render(report: &Report) -> String {
    let mut out = String::new();
    match &report.result {
        Body::Project(b) => {
            out += &format!("level {}\n", level_line(&b.level));
            let mut t = Table::new("", &["generator", "expectation", "lagrange"]);
            for (i, name) in b.level.generators.iter().enumerate() {
                t.row(vec![name.clone(), sig6(b.expectations[i]), sig6(b.lagrange[i])]);
            }
            out += &t.render();
            out += &kv(
                "",
                &[
                    ("N", b.n.to_string()),
                    ("ln Z", sig6(b.ln_z)),
                    ("S(pi || sigma)", sig6(b.entropy)),
                    ("chi2 = 2 N S", sig6(b.chi2)),
                ],
            );
        }
        Body::Significance(b) => {
            out += &format!("level {}\n", level_line(&b.level));
            out += &kv("", &significance_pairs(&b.report));
        }
        Body::Estimate(b) => {
            out += &format!("level {}\n", level_line(&b.level));
            let mut t = Table::new("", &["generator", "estimate", "std error", "lagrange"]);
            for (i, name) in b.level.generators.iter().enumerate() {
                t.row(vec![
                    name.clone(),
                    sig6(b.expectations[i]),
                    sig6(b.std_errors[i]),
                    sig6(b.lagrange[i]),
                ]);
            }
            out += &t.render();
            let mut pairs = vec![
                ("N", b.n.to_string()),
                ("alpha", format!("{} ({})", sig6(b.alpha), source_name(b.alpha_source))),
                ("t = alpha/(alpha+N)", sig6(b.t)),
                ("measured directions", (b.measured_dim - 1).to_string()),
                ("unmeasured directions", b.unmeasured_dim.to_string()),
                ("S(estimate || sigma)", sig6(b.entropy_to_reference)),
            ];
            if let Some(e) = &b.evidence {
                pairs.extend(evidence_pairs(e));
            }
            out += &kv("", &pairs);
        }
        Body::Compare(b) => {
            out += &format!(
                "coarse {}\nfine   {}\nN      {}\n",
                level_line(&b.coarse),
                level_line(&b.fine),
                b.n
            );
            out += &comparison_table("", &[(b.coarse.name.clone(), b.fine.name.clone(), &b.report)]);
            out += &kv(
                "",
                &[
                    ("entropy gain", sig6(b.report.entropy_gain)),
                    ("ln Occam factor", opt6(b.report.log_occam)),
                    ("prior odds", sig6(b.report.prior_odds)),
                    ("alpha", opt6(b.report.alpha_used)),
                ],
            );
        }
        Body::Wolf(b) => {
            out += &format!("frequencies {}\n\n", vec6(&b.frequencies));
            out += &kv(
                "significance against the uniform die",
                &significance_pairs(&b.significance),
            );
            out += "\n";
            let mut t = Table::new(
                format!("fitted model {}", level_line(&b.model)),
                &["generator", "expectation", "lagrange"],
            );
            for (i, name) in b.model.generators.iter().enumerate() {
                t.row(vec![
                    name.clone(),
                    sig6(b.model_expectations[i]),
                    sig6(b.model_lagrange[i]),
                ]);
            }
            out += &t.render();
            out += "\n";
            let mut pairs = evidence_pairs(&b.evidence);
            pairs.push(("alpha used", sig6(b.alpha)));
            out += &kv("evidence procedure", &pairs);
            out += "\n";
            let rows: Vec<_> = b
                .rows
                .iter()
                .map(|r| (r.coarse.clone(), r.fine.clone(), &r.report))
                .collect();
            out += &comparison_table("model selection", &rows);
        }
        Body::Qubit(b) => {
            let mut t = Table::new(
                format!("r = {}, N = {}", sig6(b.r), b.n),
                &[
                    "tilt deg",
                    "C^-1 thth",
                    "metric chi2/s",
                    "exact 2NS/s",
                    "chi2/s",
                    "ln N",
                    "verdict",
                ],
            );
            for r in &b.rows {
                t.row(vec![
                    sig6(r.tilt_deg),
                    sig6(r.c_inv_theta_theta),
                    sig6(r.metric_per_param),
                    sig6(r.exact_per_param),
                    sig6(r.report.per_param),
                    sig6(r.report.ln_n),
                    verdict_name(r.report.verdict).into(),
                ]);
            }
            out += &t.render();
        }
        Body::Thermal(b) => {
            let mut pairs = vec![
                ("N", b.n.to_string()),
                ("energy levels", b.levels.to_string()),
                ("chi2 quadratic", sig6(b.chi2_quadratic)),
                ("chi2 2N sum f ln f/p", sig6(b.chi2_entropy)),
            ];
            pairs.extend(evidence_pairs(&b.evidence));
            pairs.extend([
                ("t", sig6(b.t)),
                ("alpha", sig6(b.alpha)),
                ("T prior (K)", sig6(1.0 / b.beta_prior)),
                ("T data (K)", sig6(1.0 / b.beta_data)),
                ("beta estimate (1/K)", sig6(b.beta_hat)),
                ("T estimate (K)", sig6(b.temperature_hat)),
                ("mean energy (K)", sig6(b.mean_energy)),
                ("mean energy std (K)", sig6(b.mean_energy_std)),
            ]);
            out += &kv("thermal source", &pairs);
        }
    }
    if let Some(s) = &report.self_test {
        out += "\n";
        out += &kv(
            "self-test",
            &[
                ("seed", s.seed.to_string()),
                ("cases", s.cases.to_string()),
                ("max Pythagoras residual", sig6(s.max_pythagoras_residual)),
                ("passed", s.passed.to_string()),
            ],
        );
    }
    for w in &report.warnings {
        out += &format!("warning: {w}\n");
    }
    out
}
