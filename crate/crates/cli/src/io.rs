//! Loading of classical CSV and quantum JSON inputs.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use gibbsfit::{DensityOperator, ExperimentData, HermitianOperator, LevelOfDescription, Metric};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Hermiticity tolerance for matrices read from JSON.
pub const INPUT_HERMITIAN_TOL: f64 = 1e-9;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(path: impl Into<String>, bytes: &[u8]) -> Self {
        Self {
            path: path.into(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    Classical,
    Quantum,
}

#[derive(Clone, Debug)]
pub struct Observable {
    pub name: String,
    pub op: HermitianOperator,
}

/// A level together with display names for its generators.
#[derive(Clone, Debug)]
pub struct NamedLevel {
    pub name: String,
    pub generator_names: Vec<String>,
    pub level: LevelOfDescription,
}

/// Reference state, observables and sample means of one experiment.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub kind: DataKind,
    pub sigma: DensityOperator,
    pub observables: Vec<Observable>,
    pub named_levels: BTreeMap<String, Vec<String>>,
    /// Names of the generators of the experimental level.
    pub measured_names: Vec<String>,
    pub data: ExperimentData,
    pub digests: Vec<InputDigest>,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn hs_level(d: usize, gens: Vec<HermitianOperator>) -> Result<LevelOfDescription> {
    Ok(LevelOfDescription::new(d, gens, Metric::HilbertSchmidt)?)
}

struct CountsTable {
    outcomes: Vec<String>,
    counts: Vec<u64>,
    weights: Option<Vec<f64>>,
}

fn parse_counts(text: &str) -> Result<CountsTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    let has_weight = match cols.as_slice() {
        ["outcome", "count"] => false,
        ["outcome", "count", "reference_weight"] => true,
        _ => {
            return Err(CliError::data(format!(
                "counts file header must be `outcome,count[,reference_weight]`, found `{}`",
                cols.join(",")
            )))
        }
    };
    let mut t = CountsTable {
        outcomes: Vec::new(),
        counts: Vec::new(),
        weights: has_weight.then(Vec::new),
    };
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = line + 2;
        let outcome = rec.get(0).unwrap_or_default().to_string();
        let raw = rec.get(1).unwrap_or_default();
        let count: i64 = raw
            .parse()
            .map_err(|_| CliError::data(format!("row {row}: count `{raw}` is not an integer")))?;
        if count < 0 {
            return Err(CliError::data(format!("row {row}: negative count {count}")));
        }
        if t.outcomes.contains(&outcome) {
            return Err(CliError::data(format!("row {row}: duplicate outcome `{outcome}`")));
        }
        if let Some(w) = t.weights.as_mut() {
            let raw = rec.get(2).unwrap_or_default();
            let x: f64 = raw
                .parse()
                .map_err(|_| CliError::data(format!("row {row}: reference weight `{raw}` is not a number")))?;
            if !(x > 0.0 && x.is_finite()) {
                return Err(CliError::data(format!("row {row}: reference weight must be positive")));
            }
            w.push(x);
        }
        t.outcomes.push(outcome);
        t.counts.push(count as u64);
    }
    if t.outcomes.len() < 2 {
        return Err(CliError::data("sample space needs at least two outcomes"));
    }
    if t.counts.iter().sum::<u64>() == 0 {
        return Err(CliError::data("counts sum to zero"));
    }
    Ok(t)
}

fn parse_observables(text: &str, outcomes: &[String]) -> Result<Vec<Observable>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("outcome") || headers.len() < 2 {
        return Err(CliError::data("observables file header must be `outcome,<name>,...`"));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let index: HashMap<&str, usize> = outcomes.iter().enumerate().map(|(i, o)| (o.as_str(), i)).collect();
    let mut values = vec![vec![f64::NAN; outcomes.len()]; names.len()];
    let mut seen = vec![false; outcomes.len()];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = line + 2;
        let outcome = rec.get(0).unwrap_or_default();
        let &i = index
            .get(outcome)
            .ok_or_else(|| CliError::data(format!("observables row {row}: unknown outcome `{outcome}`")))?;
        if seen[i] {
            return Err(CliError::data(format!(
                "observables row {row}: duplicate outcome `{outcome}`"
            )));
        }
        seen[i] = true;
        if rec.len() != names.len() + 1 {
            return Err(CliError::data(format!(
                "observables row {row}: expected {} columns",
                names.len() + 1
            )));
        }
        for (k, raw) in rec.iter().skip(1).enumerate() {
            let x: f64 = raw
                .parse()
                .map_err(|_| CliError::data(format!("observables row {row}: `{raw}` is not a number")))?;
            if !x.is_finite() {
                return Err(CliError::data(format!("observables row {row}: non-finite value")));
            }
            values[k][i] = x;
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(CliError::data(format!(
            "outcome `{}` is missing from the observables file",
            outcomes[i]
        )));
    }
    Ok(names
        .into_iter()
        .zip(values)
        .map(|(name, v)| Observable {
            name,
            op: HermitianOperator::diagonal(v),
        })
        .collect())
}

/// Classical data from in-memory CSV text.
pub fn load_classical_str(
    counts_csv: &str,
    observables_csv: Option<&str>,
    digests: Vec<InputDigest>,
) -> Result<Dataset> {
    let t = parse_counts(counts_csv)?;
    let d = t.outcomes.len();
    let observables = match observables_csv {
        Some(text) => parse_observables(text, &t.outcomes)?,
        None => Vec::new(),
    };
    let sigma = match &t.weights {
        Some(w) => {
            let total: f64 = w.iter().sum();
            DensityOperator::from_probabilities(w.iter().map(|x| x / total).collect())?
        }
        None => DensityOperator::uniform(d),
    };
    let full = LevelOfDescription::full_classical(d, Metric::HilbertSchmidt)?;
    let data = ExperimentData::from_counts(full, t.counts)?;
    let measured_names = t.outcomes[..d - 1].iter().map(|o| format!("P({o})")).collect();
    Ok(Dataset {
        kind: DataKind::Classical,
        sigma,
        observables,
        named_levels: BTreeMap::new(),
        measured_names,
        data,
        digests,
    })
}

/// Classical data from a counts CSV and an optional observables CSV.
pub fn load_classical(counts: &Path, observables: Option<&Path>) -> Result<Dataset> {
    let counts_bytes = read(counts)?;
    let mut digests = vec![InputDigest::of(counts.display().to_string(), &counts_bytes)];
    let counts_text = String::from_utf8(counts_bytes).map_err(|_| CliError::data("counts file is not UTF-8"))?;
    let obs_text = match observables {
        Some(p) => {
            let bytes = read(p)?;
            digests.push(InputDigest::of(p.display().to_string(), &bytes));
            Some(String::from_utf8(bytes).map_err(|_| CliError::data("observables file is not UTF-8"))?)
        }
        None => None,
    };
    load_classical_str(&counts_text, obs_text.as_deref(), digests)
}

#[derive(Deserialize)]
struct ComplexMatrix {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ReferenceSpec {
    Keyword(String),
    Matrix(ComplexMatrix),
}

#[derive(Deserialize)]
struct ObservableSpec {
    name: String,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuantumFile {
    #[serde(default)]
    format_version: Option<u32>,
    dim: usize,
    reference: ReferenceSpec,
    observables: Vec<ObservableSpec>,
    #[serde(default)]
    levels: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    sample_means: BTreeMap<String, f64>,
    #[serde(rename = "N")]
    n: u64,
}

fn to_matrix(rows: &[Vec<f64>], d: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(CliError::data(format!("{what}: expected a {d}x{d} matrix")));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(CliError::data(format!("{what}: non-finite entry")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

fn hermitian(re: &[Vec<f64>], im: &[Vec<f64>], d: usize, what: &str) -> Result<HermitianOperator> {
    let re = to_matrix(re, d, what)?;
    let im = to_matrix(im, d, what)?;
    HermitianOperator::from_real_imag(&re, &im, INPUT_HERMITIAN_TOL).map_err(|e| CliError::data(format!("{what}: {e}")))
}

/// Quantum data from in-memory JSON text.
pub fn load_quantum_str(text: &str, digests: Vec<InputDigest>) -> Result<Dataset> {
    let file: QuantumFile = serde_json::from_str(text)?;
    if let Some(v) = file.format_version {
        if v != FORMAT_VERSION {
            return Err(CliError::data(format!("unsupported format_version {v}")));
        }
    }
    let d = file.dim;
    if d < 2 {
        return Err(CliError::data("dim must be at least 2"));
    }
    let sigma = match file.reference {
        ReferenceSpec::Keyword(k) if k == "uniform" => DensityOperator::uniform(d),
        ReferenceSpec::Keyword(k) => return Err(CliError::data(format!("unknown reference keyword `{k}`"))),
        ReferenceSpec::Matrix(m) => DensityOperator::new(hermitian(&m.re, &m.im, d, "reference")?)
            .map_err(|e| CliError::data(format!("reference: {e}")))?,
    };
    let mut observables: Vec<Observable> = Vec::with_capacity(file.observables.len());
    for o in &file.observables {
        if observables.iter().any(|x| x.name == o.name) {
            return Err(CliError::data(format!("duplicate observable `{}`", o.name)));
        }
        observables.push(Observable {
            name: o.name.clone(),
            op: hermitian(&o.re, &o.im, d, &format!("observable `{}`", o.name))?,
        });
    }
    for (name, members) in &file.levels {
        for m in members {
            if !observables.iter().any(|o| &o.name == m) {
                return Err(CliError::data(format!("level `{name}` names unknown observable `{m}`")));
            }
        }
    }
    for name in file.sample_means.keys() {
        if !observables.iter().any(|o| &o.name == name) {
            return Err(CliError::data(format!(
                "sample mean given for unknown observable `{name}`"
            )));
        }
    }
    let measured: Vec<&Observable> = observables
        .iter()
        .filter(|o| file.sample_means.contains_key(&o.name))
        .collect();
    let means: Vec<f64> = measured.iter().map(|o| file.sample_means[&o.name]).collect();
    if means.iter().any(|x| !x.is_finite()) {
        return Err(CliError::data("non-finite sample mean"));
    }
    let level = hs_level(d, measured.iter().map(|o| o.op.clone()).collect())?;
    let data = ExperimentData::from_generator_means(level, &means, file.n)?;
    let measured_names = measured.iter().map(|o| o.name.clone()).collect();
    Ok(Dataset {
        kind: DataKind::Quantum,
        sigma,
        observables,
        named_levels: file.levels,
        measured_names,
        data,
        digests,
    })
}

pub fn load_quantum(path: &Path) -> Result<Dataset> {
    let bytes = read(path)?;
    let digests = vec![InputDigest::of(path.display().to_string(), &bytes)];
    let text = String::from_utf8(bytes).map_err(|_| CliError::data("input file is not UTF-8"))?;
    load_quantum_str(&text, digests)
}

/// Dispatches on the file extension: `.json` is quantum, anything else a counts CSV.
pub fn load(data: &Path, observables: Option<&Path>) -> Result<Dataset> {
    let is_json = data.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        if observables.is_some() {
            return Err(CliError::data("--observables applies to classical CSV data only"));
        }
        load_quantum(data)
    } else {
        load_classical(data, observables)
    }
}

fn full_names(d: usize) -> Vec<String> {
    let mut names: Vec<String> = (0..d - 1).map(|i| format!("E{i}{i}")).collect();
    for i in 0..d {
        for j in (i + 1)..d {
            names.push(format!("X{i}{j}"));
            names.push(format!("Y{i}{j}"));
        }
    }
    names
}

impl Dataset {
    pub fn dim_hilbert(&self) -> usize {
        self.sigma.dim()
    }

    /// The experimental level with its generator names.
    pub fn experimental(&self) -> NamedLevel {
        NamedLevel {
            name: "full".into(),
            generator_names: self.measured_names.clone(),
            level: self.data.level().clone(),
        }
    }

    /// Resolves `trivial`, `full` (the experimental level), `all` (every observable
    /// of the system), a named level, or a comma-separated list of observables.
    pub fn resolve_level(&self, spec: &str) -> Result<NamedLevel> {
        let d = self.dim_hilbert();
        let spec = spec.trim();
        match spec {
            "trivial" => {
                return Ok(NamedLevel {
                    name: spec.into(),
                    generator_names: Vec::new(),
                    level: LevelOfDescription::trivial(d, Metric::HilbertSchmidt)?,
                })
            }
            "full" => return Ok(self.experimental()),
            "all" => {
                return Ok(match self.kind {
                    DataKind::Classical => NamedLevel {
                        name: spec.into(),
                        generator_names: self.measured_names.clone(),
                        level: self.data.level().clone(),
                    },
                    DataKind::Quantum => NamedLevel {
                        name: spec.into(),
                        generator_names: full_names(d),
                        level: LevelOfDescription::full(d, Metric::HilbertSchmidt)?,
                    },
                })
            }
            _ => {}
        }
        let names: Vec<String> = match self.named_levels.get(spec) {
            Some(members) => members.clone(),
            None => spec.split(',').map(|s| s.trim().to_string()).collect(),
        };
        let mut gens = Vec::with_capacity(names.len());
        for n in &names {
            let o = self
                .observables
                .iter()
                .find(|o| &o.name == n)
                .ok_or_else(|| CliError::data(format!("unknown level or observable `{n}`")))?;
            gens.push(o.op.clone());
        }
        Ok(NamedLevel {
            name: spec.into(),
            generator_names: names,
            level: hs_level(d, gens)?,
        })
    }
}
