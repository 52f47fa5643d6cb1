//! Levels of description.
//!
//! A level of description is the real span of the identity and a chosen set of
//! observables. It is stored as an orthonormal basis of its centred part with
//! respect to an inner product on observables: either the normalised
//! Hilbert-Schmidt product `tr(XY)/d`, or the canonical-correlation product at a
//! reference state. The two agree at the uniform state.
//!
//! Union, intersection and complement follow the usual lattice rules, except that
//! distributivity fails for non-commuting spans; nothing here relies on it.

use nalgebra::{DMatrix, SVD};

use crate::error::{Error, Result};
use crate::state_space::{expectation, kmb_inner, DensityOperator, HermitianOperator, C64};

/// A candidate basis vector is dropped when its residual after
/// orthogonalisation falls below this fraction of its original norm.
pub const DROP_TOL: f64 = 1e-10;

/// Residual threshold for span membership and principal-angle detection.
pub const SPAN_TOL: f64 = 1e-8;

/// Inner product used to orthonormalise a level.
#[derive(Clone, Debug)]
pub enum Metric {
    /// `tr(XY) / d`, centring by the traceless part.
    HilbertSchmidt,
    /// Canonical correlation at the given state, centring by `X - <X>_sigma`.
    Kmb(DensityOperator),
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::HilbertSchmidt => "hilbert-schmidt",
            Metric::Kmb(_) => "kmb",
        }
    }

    /// The multiple of the identity removed by centring.
    pub fn center_value(&self, x: &HermitianOperator) -> f64 {
        match self {
            Metric::HilbertSchmidt => x.trace() / x.dim() as f64,
            Metric::Kmb(sigma) => expectation(sigma, x).expect("metric dimension"),
        }
    }

    pub fn inner(&self, x: &HermitianOperator, y: &HermitianOperator) -> f64 {
        match self {
            Metric::HilbertSchmidt => x.trace_product(y) / x.dim() as f64,
            Metric::Kmb(sigma) => kmb_inner(sigma, x, y).expect("metric dimension"),
        }
    }

    pub fn norm(&self, x: &HermitianOperator) -> f64 {
        self.inner(x, x).max(0.0).sqrt()
    }

    /// Same tag and, for the correlation product, the same reference state.
    pub fn same_context(&self, other: &Metric) -> bool {
        match (self, other) {
            (Metric::HilbertSchmidt, Metric::HilbertSchmidt) => true,
            (Metric::Kmb(a), Metric::Kmb(b)) => a.approx_eq(b, 1e-12),
            _ => false,
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Metric::HilbertSchmidt => None,
            Metric::Kmb(sigma) => Some(sigma.dim()),
        }
    }
}

/// `span{1, G_a}` with an orthonormal, centred basis.
#[derive(Clone, Debug)]
pub struct LevelOfDescription {
    dim_hilbert: usize,
    generators: Vec<HermitianOperator>,
    basis: Vec<HermitianOperator>,
    // basis[k] = sum_j coeffs[k][j] * (generators[j] - centers[j] * 1)
    coeffs: Vec<Vec<f64>>,
    centers: Vec<f64>,
    metric: Metric,
}

struct Orthonormalized {
    vectors: Vec<HermitianOperator>,
    coeffs: Vec<Vec<f64>>,
}

/// Modified Gram-Schmidt with one re-orthogonalisation pass. Candidates are
/// taken in order and first orthogonalised against `prefix`, which must be
/// orthonormal and centred. Coefficients are over the centred candidates and
/// ignore the prefix contribution.
fn gram_schmidt(metric: &Metric, prefix: &[HermitianOperator], candidates: &[HermitianOperator]) -> Orthonormalized {
    let n = candidates.len();
    let mut vectors: Vec<HermitianOperator> = Vec::new();
    let mut coeffs: Vec<Vec<f64>> = Vec::new();
    for (j, cand) in candidates.iter().enumerate() {
        let original = metric.norm(cand);
        if original == 0.0 {
            continue;
        }
        let mut v = cand.shift(-metric.center_value(cand));
        let mut c = vec![0.0; n];
        c[j] = 1.0;
        for _ in 0..2 {
            for b in prefix {
                let p = metric.inner(b, &v);
                v = v.add_scaled(-p, b);
            }
            for (b, bc) in vectors.iter().zip(&coeffs) {
                let p = metric.inner(b, &v);
                v = v.add_scaled(-p, b);
                for (ci, bi) in c.iter_mut().zip(bc) {
                    *ci -= p * bi;
                }
            }
        }
        let norm = metric.norm(&v);
        if norm < DROP_TOL * original {
            continue;
        }
        vectors.push(v.scale(1.0 / norm));
        coeffs.push(c.into_iter().map(|x| x / norm).collect());
    }
    Orthonormalized { vectors, coeffs }
}

impl LevelOfDescription {
    /// Orthonormalises the centred generators in input order, dropping linearly
    /// dependent ones. Generators proportional to the identity contribute nothing;
    /// if all are, the result is the trivial level.
    pub fn new(dim_hilbert: usize, generators: Vec<HermitianOperator>, metric: Metric) -> Result<Self> {
        if dim_hilbert == 0 {
            return Err(Error::InvalidArgument("zero-dimensional Hilbert space".into()));
        }
        if let Some(d) = metric.dim() {
            if d != dim_hilbert {
                return Err(Error::DimensionMismatch {
                    expected: dim_hilbert,
                    found: d,
                });
            }
        }
        for g in &generators {
            g.check_dim(dim_hilbert)?;
        }
        let centers = generators.iter().map(|g| metric.center_value(g)).collect();
        let ortho = gram_schmidt(&metric, &[], &generators);
        Ok(Self {
            dim_hilbert,
            generators,
            basis: ortho.vectors,
            coeffs: ortho.coeffs,
            centers,
            metric,
        })
    }

    /// `O = span{1}`.
    pub fn trivial(dim_hilbert: usize, metric: Metric) -> Result<Self> {
        Self::new(dim_hilbert, Vec::new(), metric)
    }

    /// All observables of a `d`-level quantum system (`d^2 - 1` generators).
    pub fn full(d: usize, metric: Metric) -> Result<Self> {
        let mut gens = Vec::with_capacity(d * d);
        for i in 0..d.saturating_sub(1) {
            let mut v = vec![0.0; d];
            v[i] = 1.0;
            gens.push(HermitianOperator::diagonal(v).to_dense());
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let mut x = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
                x[(i, j)] = C64::new(1.0, 0.0);
                x[(j, i)] = C64::new(1.0, 0.0);
                gens.push(HermitianOperator::from_matrix(x)?);
                let mut y = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
                y[(i, j)] = C64::new(0.0, -1.0);
                y[(j, i)] = C64::new(0.0, 1.0);
                gens.push(HermitianOperator::from_matrix(y)?);
            }
        }
        Self::new(d, gens, metric)
    }

    /// All diagonal observables on `d` outcomes (`d - 1` generators).
    pub fn full_classical(d: usize, metric: Metric) -> Result<Self> {
        let gens = (0..d.saturating_sub(1))
            .map(|i| {
                let mut v = vec![0.0; d];
                v[i] = 1.0;
                HermitianOperator::diagonal(v)
            })
            .collect();
        Self::new(d, gens, metric)
    }

    /// `span{1, sigma_x, sigma_y, sigma_z}` with the Pauli matrices as basis.
    pub fn pauli() -> Self {
        Self::new(2, HermitianOperator::pauli().to_vec(), Metric::HilbertSchmidt).expect("pauli level")
    }

    pub fn dim_hilbert(&self) -> usize {
        self.dim_hilbert
    }

    /// `dim G`, counting the identity.
    pub fn dim(&self) -> usize {
        1 + self.basis.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> &[HermitianOperator] {
        &self.basis
    }

    pub fn generators(&self) -> &[HermitianOperator] {
        &self.generators
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    /// Norm of the part of `x` outside `span{1, basis}`, relative to the norm of
    /// its centred part. Zero for multiples of the identity.
    pub fn residual(&self, x: &HermitianOperator) -> f64 {
        let m = &self.metric;
        let mut v = x.shift(-m.center_value(x));
        let start = m.norm(&v);
        if start <= 1e-14 * m.norm(x).max(f64::MIN_POSITIVE) {
            return 0.0;
        }
        for _ in 0..2 {
            for b in &self.basis {
                let p = m.inner(b, &v);
                v = v.add_scaled(-p, b);
            }
        }
        m.norm(&v) / start
    }

    pub fn contains(&self, x: &HermitianOperator) -> bool {
        self.residual(x) < SPAN_TOL
    }

    /// Writes `x = c 1 + sum_k a_k basis[k]`, returning `(c, a)`.
    pub fn expand(&self, x: &HermitianOperator) -> Result<(f64, Vec<f64>)> {
        x.check_dim(self.dim_hilbert)?;
        if !self.contains(x) {
            return Err(Error::NotSublevel);
        }
        let m = &self.metric;
        let c = m.center_value(x);
        let v = x.shift(-c);
        let a = self.basis.iter().map(|b| m.inner(b, &v)).collect();
        Ok((c, a))
    }

    /// Maps expectation values of the generators to expectation values of the basis.
    pub fn basis_means(&self, generator_means: &[f64]) -> Result<Vec<f64>> {
        if generator_means.len() != self.generators.len() {
            return Err(Error::LengthMismatch {
                expected: self.generators.len(),
                found: generator_means.len(),
            });
        }
        Ok(self
            .coeffs
            .iter()
            .map(|row| {
                row.iter()
                    .zip(generator_means.iter().zip(&self.centers))
                    .map(|(c, (m, z))| c * (m - z))
                    .sum()
            })
            .collect())
    }

    /// Re-expresses `sum_k lambda_k basis[k]` as `sum_j mu_j G_j` plus a multiple of
    /// the identity, returning `mu`. Dropped generators get zero.
    pub fn generator_lagrange(&self, lambda: &[f64]) -> Vec<f64> {
        let mut mu = vec![0.0; self.generators.len()];
        for (l, row) in lambda.iter().zip(&self.coeffs) {
            for (m, c) in mu.iter_mut().zip(row) {
                *m += l * c;
            }
        }
        mu
    }

    /// Mutual inclusion.
    pub fn same_span(&self, other: &Self) -> bool {
        self.dim_hilbert == other.dim_hilbert
            && self.dim() == other.dim()
            && self.basis.iter().all(|b| other.contains(b))
    }

    /// Identical basis operators, entrywise to `tol`.
    pub fn same_basis(&self, other: &Self, tol: f64) -> bool {
        self.dim_hilbert == other.dim_hilbert
            && self.basis.len() == other.basis.len()
            && self
                .basis
                .iter()
                .zip(&other.basis)
                .all(|(a, b)| a.max_abs_diff(b) <= tol)
    }

    fn check_ambient(&self, other: &Self) -> Result<()> {
        if self.dim_hilbert != other.dim_hilbert {
            return Err(Error::AmbientMismatch {
                left: self.dim_hilbert,
                right: other.dim_hilbert,
            });
        }
        Ok(())
    }
}

/// Coarse-graining order: `g ⊂ f`.
pub fn is_sublevel(g: &LevelOfDescription, f: &LevelOfDescription) -> Result<bool> {
    g.check_ambient(f)?;
    Ok(g.basis.iter().all(|b| f.contains(b)))
}

/// The canonical-correlation orthogonal complement of `f` inside `ambient` at
/// `sigma`. The result carries the correlation metric at `sigma`.
pub fn complement(
    f: &LevelOfDescription,
    ambient: &LevelOfDescription,
    sigma: &DensityOperator,
) -> Result<LevelOfDescription> {
    f.check_ambient(ambient)?;
    if sigma.dim() != f.dim_hilbert {
        return Err(Error::DimensionMismatch {
            expected: f.dim_hilbert,
            found: sigma.dim(),
        });
    }
    if !is_sublevel(f, ambient)? {
        return Err(Error::NotSublevel);
    }
    let metric = Metric::Kmb(sigma.clone());
    let inside = gram_schmidt(&metric, &[], &f.basis).vectors;
    let outside = gram_schmidt(&metric, &inside, &ambient.basis).vectors;
    LevelOfDescription::new(f.dim_hilbert, outside, metric)
}

/// Closed hull `g ∪ f`, in the metric of `g`.
pub fn union(g: &LevelOfDescription, f: &LevelOfDescription) -> Result<LevelOfDescription> {
    g.check_ambient(f)?;
    let gens = g.basis.iter().chain(&f.basis).cloned().collect();
    LevelOfDescription::new(g.dim_hilbert, gens, g.metric.clone())
}

/// `g ∩ f` via principal angles: directions of `g` whose distance to the span of
/// `f` is below [`SPAN_TOL`]. The result carries the metric of `g`.
pub fn intersection(g: &LevelOfDescription, f: &LevelOfDescription) -> Result<LevelOfDescription> {
    g.check_ambient(f)?;
    let metric = g.metric.clone();
    let f_here = LevelOfDescription::new(g.dim_hilbert, f.basis.clone(), metric.clone())?;
    let (qg, qf) = (&g.basis, &f_here.basis);
    if qg.is_empty() || qf.is_empty() {
        return LevelOfDescription::trivial(g.dim_hilbert, metric);
    }
    let overlap = DMatrix::from_fn(qg.len(), qf.len(), |i, j| metric.inner(&qg[i], &qf[j]));
    let svd = SVD::new(overlap, true, false);
    let u = svd.u.expect("left singular vectors");
    let mut common = Vec::new();
    for k in 0..u.ncols() {
        let mut w = HermitianOperator::zero(g.dim_hilbert);
        for (i, q) in qg.iter().enumerate() {
            w = w.add_scaled(u[(i, k)], q);
        }
        if f_here.residual(&w) < SPAN_TOL {
            common.push(w);
        }
    }
    LevelOfDescription::new(g.dim_hilbert, common, metric)
}

/// `span{1⊗1, G_a⊗1, 1⊗F_b, G_a⊗F_b}`. Two Hilbert-Schmidt levels give a
/// Hilbert-Schmidt level; otherwise the correlation metric at the product of the
/// reference states is used, with the uniform state standing in for a
/// Hilbert-Schmidt factor.
pub fn tensor(a: &LevelOfDescription, b: &LevelOfDescription) -> LevelOfDescription {
    let (da, db) = (a.dim_hilbert, b.dim_hilbert);
    let metric = match (&a.metric, &b.metric) {
        (Metric::HilbertSchmidt, Metric::HilbertSchmidt) => Metric::HilbertSchmidt,
        (ma, mb) => {
            let sa = match ma {
                Metric::Kmb(s) => s.clone(),
                Metric::HilbertSchmidt => DensityOperator::uniform(da),
            };
            let sb = match mb {
                Metric::Kmb(s) => s.clone(),
                Metric::HilbertSchmidt => DensityOperator::uniform(db),
            };
            Metric::Kmb(sa.kron(&sb))
        }
    };
    let ia = HermitianOperator::identity(da);
    let ib = HermitianOperator::identity(db);
    let mut gens = Vec::new();
    gens.extend(a.basis.iter().map(|x| x.kron(&ib)));
    gens.extend(b.basis.iter().map(|y| ia.kron(y)));
    for x in &a.basis {
        for y in &b.basis {
            gens.push(x.kron(y));
        }
    }
    LevelOfDescription::new(da * db, gens, metric).expect("tensor level")
}
