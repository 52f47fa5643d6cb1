//! Hermitian linear algebra on finite-dimensional Hilbert spaces.
//!
//! Observables are [`HermitianOperator`]s stored either as dense complex matrices or,
//! for classical systems, as real diagonals. States are [`DensityOperator`]s, which
//! cache their eigendecomposition at construction so that logarithms, powers and the
//! canonical-correlation inner product never re-diagonalise.

use nalgebra::{Complex, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Absolute tolerance for `A = A^H` at construction.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Smallest eigenvalue a density operator may carry.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Tolerance on trace and positivity when validating user-supplied states.
pub const STATE_TOL: f64 = 1e-9;

/// Below this gap in `ln p` the logarithmic mean switches to its series expansion.
const LOG_GAP_SERIES: f64 = 1e-9;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Dense(DMatrix<C64>),
    Diagonal(Vec<f64>),
}

/// A Hermitian operator on a `d`-dimensional Hilbert space.
///
/// Hermiticity is checked once, when the operator is built from a matrix; every
/// later operation preserves it. Arithmetic between operators of different
/// dimensions is a programming error and panics.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    repr: Repr,
}

impl HermitianOperator {
    /// Wraps a complex matrix, rejecting it if `max |A - A^H| > 1e-12`.
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        Self::from_matrix_with_tol(m, HERMITIAN_TOL)
    }

    /// As [`from_matrix`](Self::from_matrix) with a caller-chosen tolerance. The
    /// accepted matrix is replaced by its Hermitian part.
    pub fn from_matrix_with_tol(m: DMatrix<C64>, tol: f64) -> Result<Self> {
        let (rows, cols) = m.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(Error::InvalidArgument("zero-dimensional operator".into()));
        }
        let mut deviation = 0.0f64;
        for i in 0..rows {
            for j in i..cols {
                let d = (m[(i, j)] - m[(j, i)].conj()).norm();
                if !d.is_finite() {
                    return Err(Error::InvalidArgument("non-finite matrix entry".into()));
                }
                deviation = deviation.max(d);
            }
        }
        if deviation > tol {
            return Err(Error::NotHermitian { deviation });
        }
        let herm = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        Ok(Self {
            repr: Repr::Dense(herm),
        })
    }

    /// Builds `re + i*im` from real and imaginary parts.
    pub fn from_real_imag(re: &DMatrix<f64>, im: &DMatrix<f64>, tol: f64) -> Result<Self> {
        if re.shape() != im.shape() {
            return Err(Error::InvalidArgument(
                "real and imaginary parts differ in shape".into(),
            ));
        }
        let m = DMatrix::from_fn(re.nrows(), re.ncols(), |i, j| C64::new(re[(i, j)], im[(i, j)]));
        Self::from_matrix_with_tol(m, tol)
    }

    /// A real diagonal operator; the classical representation of an observable.
    pub fn diagonal(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "zero-dimensional operator");
        Self {
            repr: Repr::Diagonal(values),
        }
    }

    pub fn identity(d: usize) -> Self {
        Self::diagonal(vec![1.0; d])
    }

    pub fn zero(d: usize) -> Self {
        Self::diagonal(vec![0.0; d])
    }

    pub fn pauli_x() -> Self {
        let mut m = DMatrix::from_element(2, 2, ZERO);
        m[(0, 1)] = C64::new(1.0, 0.0);
        m[(1, 0)] = C64::new(1.0, 0.0);
        Self { repr: Repr::Dense(m) }
    }

    pub fn pauli_y() -> Self {
        let mut m = DMatrix::from_element(2, 2, ZERO);
        m[(0, 1)] = C64::new(0.0, -1.0);
        m[(1, 0)] = C64::new(0.0, 1.0);
        Self { repr: Repr::Dense(m) }
    }

    /// `sigma_z = diag(1, -1)`, kept dense so that it mixes freely with the other
    /// Pauli matrices.
    pub fn pauli_z() -> Self {
        Self::diagonal(vec![1.0, -1.0]).to_dense()
    }

    /// `(sigma_x, sigma_y, sigma_z)`.
    pub fn pauli() -> [Self; 3] {
        [Self::pauli_x(), Self::pauli_y(), Self::pauli_z()]
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Dense(m) => m.nrows(),
            Repr::Diagonal(v) => v.len(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.repr, Repr::Diagonal(_))
    }

    /// The diagonal entries, if the operator is stored in classical form.
    pub fn diagonal_values(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Diagonal(v) => Some(v),
            Repr::Dense(_) => None,
        }
    }

    pub fn to_matrix(&self) -> DMatrix<C64> {
        match &self.repr {
            Repr::Dense(m) => m.clone(),
            Repr::Diagonal(v) => {
                let mut m = DMatrix::from_element(v.len(), v.len(), ZERO);
                for (i, &x) in v.iter().enumerate() {
                    m[(i, i)] = C64::new(x, 0.0);
                }
                m
            }
        }
    }

    /// The same operator in dense storage.
    pub fn to_dense(&self) -> Self {
        Self {
            repr: Repr::Dense(self.to_matrix()),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        match &self.repr {
            Repr::Dense(m) => m[(i, j)],
            Repr::Diagonal(v) => {
                if i == j {
                    C64::new(v[i], 0.0)
                } else {
                    ZERO
                }
            }
        }
    }

    pub fn trace(&self) -> f64 {
        match &self.repr {
            Repr::Dense(m) => (0..m.nrows()).map(|i| m[(i, i)].re).sum(),
            Repr::Diagonal(v) => v.iter().sum(),
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        match &self.repr {
            Repr::Dense(m) => Self {
                repr: Repr::Dense(m * C64::new(a, 0.0)),
            },
            Repr::Diagonal(v) => Self::diagonal(v.iter().map(|x| a * x).collect()),
        }
    }

    /// `self + a * other`.
    pub fn add_scaled(&self, a: f64, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "operator dimension mismatch");
        match (&self.repr, &other.repr) {
            (Repr::Diagonal(x), Repr::Diagonal(y)) => Self::diagonal(x.iter().zip(y).map(|(p, q)| p + a * q).collect()),
            (Repr::Dense(x), Repr::Diagonal(y)) => {
                let mut m = x.clone();
                for (i, q) in y.iter().enumerate() {
                    m[(i, i)].re += a * q;
                }
                Self { repr: Repr::Dense(m) }
            }
            (Repr::Diagonal(_), Repr::Dense(_)) | (Repr::Dense(_), Repr::Dense(_)) => {
                let m = self.to_matrix() + other.to_matrix() * C64::new(a, 0.0);
                Self { repr: Repr::Dense(m) }
            }
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(-1.0, other)
    }

    /// `self + c * 1`.
    pub fn shift(&self, c: f64) -> Self {
        match &self.repr {
            Repr::Diagonal(v) => Self::diagonal(v.iter().map(|x| x + c).collect()),
            Repr::Dense(m) => {
                let mut m = m.clone();
                for i in 0..m.nrows() {
                    m[(i, i)].re += c;
                }
                Self { repr: Repr::Dense(m) }
            }
        }
    }

    /// `Re tr(XY)`, which is exact for Hermitian `X`, `Y`.
    pub fn trace_product(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "operator dimension mismatch");
        match (&self.repr, &other.repr) {
            (Repr::Diagonal(x), Repr::Diagonal(y)) => x.iter().zip(y).map(|(p, q)| p * q).sum(),
            (Repr::Diagonal(x), Repr::Dense(m)) | (Repr::Dense(m), Repr::Diagonal(x)) => {
                x.iter().enumerate().map(|(i, p)| p * m[(i, i)].re).sum()
            }
            (Repr::Dense(a), Repr::Dense(b)) => a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re).sum(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.trace_product(self).max(0.0).sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "operator dimension mismatch");
        match (&self.repr, &other.repr) {
            (Repr::Diagonal(x), Repr::Diagonal(y)) => x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max),
            _ => (self.to_matrix() - other.to_matrix())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max),
        }
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        match (&self.repr, &other.repr) {
            (Repr::Diagonal(x), Repr::Diagonal(y)) => {
                Self::diagonal(x.iter().flat_map(|p| y.iter().map(move |q| p * q)).collect())
            }
            _ => Self {
                repr: Repr::Dense(self.to_matrix().kronecker(&other.to_matrix())),
            },
        }
    }

    /// `U X U^H` for a unitary `U`; the result is stored dense.
    pub fn conjugate_by(&self, u: &DMatrix<C64>) -> Self {
        let m = u * self.to_matrix() * u.adjoint();
        let herm = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        Self {
            repr: Repr::Dense(herm),
        }
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if self.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

/// Eigendecomposition of a Hermitian operator.
///
/// Eigenvalues are sorted in descending order; the first component of each
/// eigenvector whose modulus exceeds `1e-12` is made real and positive.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<C64>,
}

impl Spectrum {
    /// `V diag(p) V^H`.
    pub fn reconstruct(&self) -> DMatrix<C64> {
        spectral_matrix(&self.eigenvalues, &self.eigenvectors)
    }
}

/// Unsorted eigendecomposition; `vectors == None` means the standard basis.
struct Eigen {
    values: Vec<f64>,
    vectors: Option<DMatrix<C64>>,
}

fn raw_eigen(h: &HermitianOperator) -> Eigen {
    match &h.repr {
        Repr::Diagonal(v) => Eigen {
            values: v.clone(),
            vectors: None,
        },
        Repr::Dense(m) => {
            let eig = SymmetricEigen::new(m.clone());
            Eigen {
                values: eig.eigenvalues.iter().copied().collect(),
                vectors: Some(eig.eigenvectors),
            }
        }
    }
}

fn spectral_matrix(values: &[f64], vectors: &DMatrix<C64>) -> DMatrix<C64> {
    let mut scaled = vectors.clone();
    for (j, &p) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(p);
    }
    let m = scaled * vectors.adjoint();
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn from_spectral(values: &[f64], vectors: Option<&DMatrix<C64>>) -> HermitianOperator {
    match vectors {
        None => HermitianOperator::diagonal(values.to_vec()),
        Some(v) => HermitianOperator {
            repr: Repr::Dense(spectral_matrix(values, v)),
        },
    }
}

/// Eigendecomposition with deterministic ordering and phases.
pub fn eig_hermitian(h: &HermitianOperator) -> Spectrum {
    let d = h.dim();
    let eig = raw_eigen(h);
    let vectors = eig.vectors.unwrap_or_else(|| DMatrix::identity(d, d));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.values[b].total_cmp(&eig.values[a]));
    let mut sorted = DMatrix::from_element(d, d, ZERO);
    let mut eigenvalues = Vec::with_capacity(d);
    for (col, &k) in order.iter().enumerate() {
        eigenvalues.push(eig.values[k]);
        let mut v = vectors.column(k).into_owned();
        if let Some(lead) = v.iter().copied().find(|c| c.norm() > 1e-12) {
            let phase = lead.conj() / lead.norm();
            v *= phase;
        }
        sorted.set_column(col, &v);
    }
    Spectrum {
        eigenvalues,
        eigenvectors: sorted,
    }
}

/// `V diag(f(p)) V^H`. Fails if `f` yields a non-finite value on the spectrum,
/// e.g. `ln` of a non-positive eigenvalue.
pub fn matrix_fn(h: &HermitianOperator, f: impl Fn(f64) -> f64) -> Result<HermitianOperator> {
    let eig = raw_eigen(h);
    let mapped: Vec<f64> = eig.values.iter().map(|&p| f(p)).collect();
    if let Some(bad) = eig.values.iter().zip(&mapped).find(|(_, y)| !y.is_finite()) {
        return Err(Error::Domain(format!(
            "function is not finite at eigenvalue {:e}",
            bad.0
        )));
    }
    Ok(from_spectral(&mapped, eig.vectors.as_ref()))
}

pub fn matrix_exp(h: &HermitianOperator) -> HermitianOperator {
    matrix_fn(h, f64::exp).expect("exp overflow")
}

pub fn matrix_ln(h: &HermitianOperator) -> Result<HermitianOperator> {
    matrix_fn(h, f64::ln)
}

/// Storage tag of a density operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Quantum,
    ClassicalDiagonal,
}

/// A strictly positive, unit-trace Hermitian operator.
///
/// Eigenvalues below [`EIGEN_FLOOR`] are raised to the floor and the state is
/// renormalised; [`is_clamped`](Self::is_clamped) reports when that happened.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    op: HermitianOperator,
    eigenvalues: Vec<f64>,
    eigenvectors: Option<DMatrix<C64>>,
    clamped: bool,
}

impl DensityOperator {
    /// Validates trace and positivity to [`STATE_TOL`], then normalises.
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let eig = raw_eigen(&op);
        let trace: f64 = eig.values.iter().sum();
        if !trace.is_finite() || (trace - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace is {trace}, expected 1")));
        }
        let min = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        if min >= EIGEN_FLOOR * trace {
            let values = eig.values.iter().map(|p| p / trace).collect();
            return Ok(Self {
                op: op.scale(1.0 / trace),
                eigenvalues: values,
                eigenvectors: eig.vectors,
                clamped: false,
            });
        }
        Ok(Self::from_spectral_parts(eig.values, eig.vectors))
    }

    /// A classical distribution over `p.len()` outcomes.
    pub fn from_probabilities(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidState("empty distribution".into()));
        }
        if let Some(x) = p.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidState(format!("non-finite weight {x}")));
        }
        Self::new(HermitianOperator::diagonal(p))
    }

    /// `1/d`, in classical storage.
    pub fn uniform(d: usize) -> Self {
        Self {
            op: HermitianOperator::diagonal(vec![1.0 / d as f64; d]),
            eigenvalues: vec![1.0 / d as f64; d],
            eigenvectors: None,
            clamped: false,
        }
    }

    /// `|psi><psi| / <psi|psi>`; the zero eigenvalues are clamped to the floor.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        if norm2 <= 0.0 || !norm2.is_finite() {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let d = psi.len();
        let m = DMatrix::from_fn(d, d, |i, j| psi[i] * psi[j].conj() / norm2);
        Self::new(HermitianOperator::from_matrix_with_tol(m, 1e-10)?)
    }

    /// Builds a state from a known eigendecomposition with non-negative weights.
    pub(crate) fn from_spectral_parts(values: Vec<f64>, vectors: Option<DMatrix<C64>>) -> Self {
        Self::build(values, vectors, true)
    }

    /// `exp(K) / tr exp(K)` together with `ln tr exp(K)`, shifting `K` by its largest
    /// eigenvalue before exponentiating.
    pub(crate) fn exponential(k: &HermitianOperator) -> (Self, f64) {
        let eig = raw_eigen(k);
        let top = eig.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = eig.values.iter().map(|x| (x - top).exp()).collect();
        let z: f64 = w.iter().sum();
        (Self::build(w, eig.vectors, false), top + z.ln())
    }

    fn build(values: Vec<f64>, vectors: Option<DMatrix<C64>>, warn: bool) -> Self {
        let total: f64 = values.iter().sum();
        let mut p: Vec<f64> = values.iter().map(|x| x / total).collect();
        let clamped = p.iter().any(|&x| x < EIGEN_FLOOR);
        if clamped {
            if warn {
                log::warn!("density operator clamped to eigenvalue floor {EIGEN_FLOOR:e}");
            } else {
                log::debug!("density operator clamped to eigenvalue floor {EIGEN_FLOOR:e}");
            }
            for x in p.iter_mut() {
                *x = x.max(EIGEN_FLOOR);
            }
            let total: f64 = p.iter().sum();
            for x in p.iter_mut() {
                *x /= total;
            }
        }
        let op = from_spectral(&p, vectors.as_ref());
        Self {
            op,
            eigenvalues: p,
            eigenvectors: vectors,
            clamped,
        }
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn kind(&self) -> StateKind {
        if self.op.is_diagonal() {
            StateKind::ClassicalDiagonal
        } else {
            StateKind::Quantum
        }
    }

    /// Whether construction raised eigenvalues to [`EIGEN_FLOOR`].
    pub fn is_clamped(&self) -> bool {
        self.clamped
    }

    /// Eigenvalues in storage order (diagonal order for classical states).
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn spectrum(&self) -> Spectrum {
        eig_hermitian(&self.op)
    }

    pub fn ln(&self) -> HermitianOperator {
        let logs: Vec<f64> = self.eigenvalues.iter().map(|p| p.ln()).collect();
        from_spectral(&logs, self.eigenvectors.as_ref())
    }

    /// `rho^nu`.
    pub fn power(&self, nu: f64) -> HermitianOperator {
        let pw: Vec<f64> = self.eigenvalues.iter().map(|p| p.powf(nu)).collect();
        from_spectral(&pw, self.eigenvectors.as_ref())
    }

    /// The same state in dense (quantum) storage.
    pub fn to_dense(&self) -> Self {
        let d = self.dim();
        Self {
            op: self.op.to_dense(),
            eigenvalues: self.eigenvalues.clone(),
            eigenvectors: Some(self.eigenvectors.clone().unwrap_or_else(|| DMatrix::identity(d, d))),
            clamped: self.clamped,
        }
    }

    pub fn kron(&self, other: &Self) -> Self {
        if self.op.is_diagonal() && other.op.is_diagonal() {
            let p = self
                .eigenvalues
                .iter()
                .flat_map(|a| other.eigenvalues.iter().map(move |b| a * b))
                .collect();
            return Self::from_spectral_parts(p, None);
        }
        let a = self.to_dense();
        let b = other.to_dense();
        let p = a
            .eigenvalues
            .iter()
            .flat_map(|x| b.eigenvalues.iter().map(move |y| x * y))
            .collect();
        let v = a
            .eigenvectors
            .as_ref()
            .unwrap()
            .kronecker(b.eigenvectors.as_ref().unwrap());
        Self::from_spectral_parts(p, Some(v))
    }

    /// `U rho U^H`.
    pub fn conjugate_by(&self, u: &DMatrix<C64>) -> Self {
        let d = self.dim();
        let base = self.eigenvectors.clone().unwrap_or_else(|| DMatrix::identity(d, d));
        Self::from_spectral_parts(self.eigenvalues.clone(), Some(u * base))
    }

    /// Frobenius norm of `self - other`.
    pub fn distance(&self, other: &Self) -> f64 {
        self.op.sub(&other.op).frobenius_norm()
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim() == other.dim() && self.op.max_abs_diff(&other.op) <= tol
    }

    /// `V^H X V` in this state's eigenbasis.
    pub(crate) fn in_eigenbasis(&self, x: &HermitianOperator) -> DMatrix<C64> {
        match &self.eigenvectors {
            None => x.to_matrix(),
            Some(v) => v.adjoint() * x.to_matrix() * v,
        }
    }

    pub(crate) fn eigenvectors(&self) -> Option<&DMatrix<C64>> {
        self.eigenvectors.as_ref()
    }
}

fn check_same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, found: b });
    }
    Ok(())
}

/// `tr(rho X)`.
pub fn expectation(rho: &DensityOperator, x: &HermitianOperator) -> Result<f64> {
    check_same_dim(rho.dim(), x.dim())?;
    Ok(rho.op.trace_product(x))
}

/// `-sum p ln p`, with `0 ln 0 = 0`.
pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    -rho.eigenvalues
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// `S(rho || sigma) = tr(rho ln rho - rho ln sigma)`.
pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    check_same_dim(rho.dim(), sigma.dim())?;
    let neg_entropy: f64 = rho.eigenvalues.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum();
    let cross = match (&rho.op.repr, &sigma.eigenvectors) {
        (Repr::Diagonal(p), None) => p.iter().zip(&sigma.eigenvalues).map(|(a, q)| a * q.ln()).sum::<f64>(),
        _ => {
            let rotated = sigma.in_eigenbasis(&rho.op);
            sigma
                .eigenvalues
                .iter()
                .enumerate()
                .map(|(k, q)| rotated[(k, k)].re * q.ln())
                .sum()
        }
    };
    Ok((neg_entropy - cross).max(0.0))
}

/// Logarithmic mean `(a - b) / (ln a - ln b)`, continued by its series near `a = b`.
pub fn log_mean(a: f64, b: f64) -> f64 {
    let d = a - b;
    if d == 0.0 {
        return a;
    }
    let u = (d / b).ln_1p();
    if u.abs() < LOG_GAP_SERIES {
        (a * b).sqrt() * (1.0 + u * u / 24.0)
    } else {
        d / u
    }
}

/// Precomputed eigenbasis and logarithmic-mean weights of a reference state, for
/// repeated evaluation of the canonical-correlation inner product.
pub struct KmbFrame<'a> {
    sigma: &'a DensityOperator,
    weights: DMatrix<f64>,
}

/// An observable expressed in the eigenbasis of a [`KmbFrame`].
pub enum FrameOperator {
    Diagonal(Vec<f64>),
    Dense(DMatrix<C64>),
}

impl FrameOperator {
    pub(crate) fn subtract_identity(&mut self, c: f64) {
        match self {
            FrameOperator::Diagonal(v) => v.iter_mut().for_each(|x| *x -= c),
            FrameOperator::Dense(m) => {
                for i in 0..m.nrows() {
                    m[(i, i)].re -= c;
                }
            }
        }
    }
}

impl<'a> KmbFrame<'a> {
    pub fn new(sigma: &'a DensityOperator) -> Self {
        let p = &sigma.eigenvalues;
        let d = p.len();
        let weights = DMatrix::from_fn(d, d, |i, j| if i == j { p[i] } else { log_mean(p[i], p[j]) });
        Self { sigma, weights }
    }

    pub fn transform(&self, x: &HermitianOperator) -> FrameOperator {
        match (&x.repr, self.sigma.eigenvectors()) {
            (Repr::Diagonal(v), None) => FrameOperator::Diagonal(v.clone()),
            _ => FrameOperator::Dense(self.sigma.in_eigenbasis(x)),
        }
    }

    /// `sum_ij w_ij Re(X_ij Y_ji)` for operators already in the frame.
    pub fn inner(&self, x: &FrameOperator, y: &FrameOperator) -> f64 {
        let w = &self.weights;
        match (x, y) {
            (FrameOperator::Diagonal(a), FrameOperator::Diagonal(b)) => {
                a.iter().zip(b).enumerate().map(|(i, (p, q))| w[(i, i)] * p * q).sum()
            }
            (FrameOperator::Diagonal(a), FrameOperator::Dense(m))
            | (FrameOperator::Dense(m), FrameOperator::Diagonal(a)) => {
                a.iter().enumerate().map(|(i, p)| w[(i, i)] * p * m[(i, i)].re).sum()
            }
            (FrameOperator::Dense(a), FrameOperator::Dense(b)) => {
                let d = a.nrows();
                let mut acc = 0.0;
                for j in 0..d {
                    for i in 0..d {
                        acc += w[(i, j)] * (a[(i, j)] * b[(i, j)].conj()).re;
                    }
                }
                acc
            }
        }
    }
}

/// Canonical-correlation inner product `∫_0^1 tr(sigma^nu X sigma^(1-nu) Y) dnu`.
pub fn kmb_inner(sigma: &DensityOperator, x: &HermitianOperator, y: &HermitianOperator) -> Result<f64> {
    check_same_dim(sigma.dim(), x.dim())?;
    check_same_dim(sigma.dim(), y.dim())?;
    let frame = KmbFrame::new(sigma);
    Ok(frame.inner(&frame.transform(x), &frame.transform(y)))
}
