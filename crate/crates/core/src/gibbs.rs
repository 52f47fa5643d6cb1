//! Gibbs manifolds.
//!
//! For a reference state `sigma` and a level with orthonormal basis `G_a`, the
//! manifold consists of the states
//!
//! ```text
//! rho(lambda) = exp[(ln sigma - <ln sigma>_sigma) - sum_a lambda_a G_a] / Z(lambda)
//! ```
//!
//! Lagrange parameters are indexed by the level basis, not by the raw generators.
//! The projection onto the manifold minimises `S(rho || sigma)` subject to given
//! expectation values; it is computed by damped Newton iteration on the convex dual
//! `ln Z(lambda) + lambda . g_target`, whose Hessian is the correlation matrix.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::levels::{LevelOfDescription, Metric};
use crate::state_space::{expectation, DensityOperator, HermitianOperator, KmbFrame};

/// Relative convergence tolerance on the expectation values.
pub const TOL_G: f64 = 1e-10;
/// Newton iteration cap.
pub const MAX_ITER: usize = 200;
/// `|lambda|_inf` beyond which the target is treated as unreachable.
pub const LAMBDA_MAX: f64 = 1e3;
/// Largest Bloch length accepted as an interior point.
pub const BLOCH_R_MAX: f64 = 1.0 - 1e-9;

const POLISH_STEPS: usize = 2;
const MAX_HALVINGS: usize = 60;

/// A point on a Gibbs manifold with its partition function, expectation values and
/// correlation matrix evaluated eagerly.
#[derive(Clone, Debug)]
pub struct GibbsModel {
    sigma: DensityOperator,
    level: LevelOfDescription,
    lambda: Vec<f64>,
    ln_z: f64,
    state: DensityOperator,
    g: Vec<f64>,
    c: DMatrix<f64>,
}

fn log_base(sigma: &DensityOperator) -> HermitianOperator {
    let ln = sigma.ln();
    let mean = expectation(sigma, &ln).expect("same dimension");
    ln.shift(-mean)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_lambda_len(level: &LevelOfDescription, n: usize) -> Result<()> {
    let expected = level.dim() - 1;
    if n != expected {
        return Err(Error::LengthMismatch { expected, found: n });
    }
    Ok(())
}

fn check_sigma(sigma: &DensityOperator, level: &LevelOfDescription) -> Result<()> {
    if sigma.dim() != level.dim_hilbert() {
        return Err(Error::DimensionMismatch {
            expected: level.dim_hilbert(),
            found: sigma.dim(),
        });
    }
    Ok(())
}

/// Canonical correlations `<delta A_a, delta A_b>_rho` for a list of observables.
pub fn correlation_matrix(rho: &DensityOperator, ops: &[HermitianOperator]) -> Result<DMatrix<f64>> {
    for x in ops {
        x.check_dim(rho.dim())?;
    }
    let frame = KmbFrame::new(rho);
    let centred: Vec<_> = ops
        .iter()
        .map(|x| {
            let mut f = frame.transform(x);
            f.subtract_identity(expectation(rho, x).expect("checked"));
            f
        })
        .collect();
    let n = ops.len();
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = frame.inner(&centred[i], &centred[j]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(c)
}

/// Solves `C x = b` for symmetric positive-definite `C`.
fn solve_spd(c: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let chol = c.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.solve(&DVector::from_column_slice(b)).iter().copied().collect())
}

/// Newton step with a spectral fallback when the correlation matrix is numerically
/// singular (close to the boundary of the state space).
fn newton_direction(c: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    if let Ok(x) = solve_spd(c, b) {
        if x.iter().all(|v| v.is_finite()) {
            return x;
        }
    }
    let eig = SymmetricEigen::new(c.clone());
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let floor = (top * 1e-14).max(f64::MIN_POSITIVE);
    let rhs = eig.eigenvectors.transpose() * DVector::from_column_slice(b);
    let scaled = DVector::from_iterator(
        rhs.len(),
        rhs.iter().zip(eig.eigenvalues.iter()).map(|(r, e)| r / e.max(floor)),
    );
    (&eig.eigenvectors * scaled).iter().copied().collect()
}

impl GibbsModel {
    /// The manifold point with Lagrange parameters `lambda` on the basis of `level`.
    pub fn new(sigma: &DensityOperator, level: &LevelOfDescription, lambda: Vec<f64>) -> Result<Self> {
        check_sigma(sigma, level)?;
        check_lambda_len(level, lambda.len())?;
        if lambda.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite Lagrange parameter".into()));
        }
        Ok(Self::assemble(sigma, level, &log_base(sigma), lambda))
    }

    fn assemble(
        sigma: &DensityOperator,
        level: &LevelOfDescription,
        base: &HermitianOperator,
        lambda: Vec<f64>,
    ) -> Self {
        let mut k = base.clone();
        for (l, b) in lambda.iter().zip(level.basis()) {
            k = k.add_scaled(-l, b);
        }
        let (state, ln_z) = DensityOperator::exponential(&k);
        let g: Vec<f64> = level
            .basis()
            .iter()
            .map(|b| expectation(&state, b).expect("same dimension"))
            .collect();
        let c = correlation_matrix(&state, level.basis()).expect("same dimension");
        Self {
            sigma: sigma.clone(),
            level: level.clone(),
            lambda,
            ln_z,
            state,
            g,
            c,
        }
    }

    pub fn sigma(&self) -> &DensityOperator {
        &self.sigma
    }

    pub fn level(&self) -> &LevelOfDescription {
        &self.level
    }

    /// Lagrange parameters on the level basis.
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// The same parameters re-expressed on the level's generators.
    pub fn generator_lagrange(&self) -> Vec<f64> {
        self.level.generator_lagrange(&self.lambda)
    }

    pub fn ln_z(&self) -> f64 {
        self.ln_z
    }

    pub fn state(&self) -> &DensityOperator {
        &self.state
    }

    /// Expectation values of the level basis.
    pub fn expectations(&self) -> &[f64] {
        &self.g
    }

    /// Expectation values of the level's generators.
    pub fn generator_expectations(&self) -> Vec<f64> {
        self.level
            .generators()
            .iter()
            .map(|x| expectation(&self.state, x).expect("same dimension"))
            .collect()
    }

    /// `C_ab`, the metric in Lagrange coordinates.
    pub fn correlation(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// Number of Lagrange parameters, `dim G - 1`.
    pub fn n_params(&self) -> usize {
        self.lambda.len()
    }

    /// Same reference state and identical level basis.
    pub fn same_manifold(&self, other: &GibbsModel) -> bool {
        self.sigma.approx_eq(&other.sigma, 1e-12) && self.level.same_basis(&other.level, 1e-12)
    }

    /// This state as a point of the manifold of a finer level with the same reference.
    pub fn embed(&self, finer: &LevelOfDescription) -> Result<GibbsModel> {
        check_sigma(&self.sigma, finer)?;
        let mut x = HermitianOperator::zero(finer.dim_hilbert());
        for (l, b) in self.lambda.iter().zip(self.level.basis()) {
            x = x.add_scaled(*l, b);
        }
        let (_, coeffs) = finer.expand(&x)?;
        GibbsModel::new(&self.sigma, finer, coeffs)
    }
}

/// The manifold point at `lambda`.
pub fn gibbs_state(sigma: &DensityOperator, level: &LevelOfDescription, lambda: Vec<f64>) -> Result<GibbsModel> {
    GibbsModel::new(sigma, level, lambda)
}

/// `pi^sigma_G`: the manifold point whose basis expectations equal `target`.
pub fn project(target: &[f64], sigma: &DensityOperator, level: &LevelOfDescription) -> Result<GibbsModel> {
    check_sigma(sigma, level)?;
    check_lambda_len(level, target.len())?;
    if target.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite target expectation".into()));
    }
    let n = target.len();
    let base = log_base(sigma);
    let tol = TOL_G * (1.0 + inf_norm(target));
    let dual = |m: &GibbsModel| m.ln_z + dot(&m.lambda, target);
    let residual = |m: &GibbsModel| inf_norm(&target.iter().zip(&m.g).map(|(t, g)| t - g).collect::<Vec<_>>());

    let mut model = GibbsModel::assemble(sigma, level, &base, vec![0.0; n]);
    let mut res = residual(&model);
    let mut polish = 0;
    let infeasible = |m: &GibbsModel, it: usize, r: f64| Error::Infeasible {
        iterations: it,
        lambda: m.lambda.clone(),
        lambda_norm: inf_norm(&m.lambda),
        residual: r,
    };

    for it in 0..MAX_ITER {
        if res <= tol {
            if polish == POLISH_STEPS {
                break;
            }
            polish += 1;
        }
        let grad: Vec<f64> = target.iter().zip(&model.g).map(|(t, g)| t - g).collect();
        let step = newton_direction(&model.c, &grad);
        let gamma = dual(&model);
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let lambda: Vec<f64> = model.lambda.iter().zip(&step).map(|(l, s)| l - scale * s).collect();
            let cand = GibbsModel::assemble(sigma, level, &base, lambda);
            let r = residual(&cand);
            let g_new = dual(&cand);
            let slack = 1e-14 * gamma.abs().max(1.0);
            if g_new.is_finite() && (g_new < gamma || (g_new <= gamma + slack && r < res)) {
                accepted = Some((cand, r));
                break;
            }
            scale *= 0.5;
        }
        match accepted {
            Some((cand, r)) => {
                if polish > 0 && r >= res {
                    break;
                }
                model = cand;
                res = r;
            }
            None => {
                if res <= tol {
                    break;
                }
                if model.state.is_clamped() || inf_norm(&model.lambda) > 0.1 * LAMBDA_MAX {
                    return Err(infeasible(&model, it + 1, res));
                }
                return Err(Error::NotConverged {
                    iterations: it + 1,
                    residual: res,
                });
            }
        }
        if inf_norm(&model.lambda) > LAMBDA_MAX {
            return Err(infeasible(&model, it + 1, res));
        }
        log::trace!("newton iteration {it}: residual {res:e}");
    }
    if res > tol {
        if model.state.is_clamped() || inf_norm(&model.lambda) > 0.1 * LAMBDA_MAX {
            return Err(infeasible(&model, MAX_ITER, res));
        }
        return Err(Error::NotConverged {
            iterations: MAX_ITER,
            residual: res,
        });
    }
    Ok(model)
}

/// `project` with targets given as expectations of the level's generators.
pub fn project_generator_means(
    means: &[f64],
    sigma: &DensityOperator,
    level: &LevelOfDescription,
) -> Result<GibbsModel> {
    project(&level.basis_means(means)?, sigma, level)
}

/// `pi^sigma_G(rho)`.
pub fn project_state(rho: &DensityOperator, sigma: &DensityOperator, level: &LevelOfDescription) -> Result<GibbsModel> {
    check_sigma(rho, level)?;
    let target: Vec<f64> = level
        .basis()
        .iter()
        .map(|b| expectation(rho, b))
        .collect::<Result<_>>()?;
    project(&target, sigma, level)
}

/// `S(omega || omega')` from manifold coordinates alone.
pub fn manifold_relative_entropy(omega: &GibbsModel, other: &GibbsModel) -> Result<f64> {
    if !omega.same_manifold(other) {
        return Err(Error::ManifoldMismatch);
    }
    let cross: f64 = other
        .lambda
        .iter()
        .zip(&omega.lambda)
        .zip(&omega.g)
        .map(|((lp, l), g)| (lp - l) * g)
        .sum();
    Ok((cross + other.ln_z - omega.ln_z).max(0.0))
}

/// `N dfᵀ C(rho)⁻¹ df` with `df = g(mu) - g(rho)`.
pub fn chi_squared(mu: &GibbsModel, rho: &GibbsModel, n: f64) -> Result<f64> {
    if !mu.same_manifold(rho) {
        return Err(Error::ManifoldMismatch);
    }
    chi_squared_means(&mu.g, rho, n)
}

/// `chi_squared` against basis expectations `f` rather than a model.
pub fn chi_squared_means(f: &[f64], rho: &GibbsModel, n: f64) -> Result<f64> {
    check_lambda_len(&rho.level, f.len())?;
    if f.is_empty() {
        return Ok(0.0);
    }
    let df: Vec<f64> = f.iter().zip(&rho.g).map(|(a, b)| a - b).collect();
    let x = solve_spd(&rho.c, &df)?;
    Ok((n * dot(&df, &x)).max(0.0))
}

/// Coordinates for the volume element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VolumeCoords {
    /// `sqrt det C`.
    Lagrange,
    /// `sqrt det C⁻¹`.
    Expectation,
    /// Spherical Bloch coordinates `(r, theta, phi)` on the full qubit level.
    BlochSpherical,
}

pub fn volume_weight(omega: &GibbsModel, coords: VolumeCoords) -> Result<f64> {
    match coords {
        VolumeCoords::Lagrange => Ok(omega.c.determinant().max(0.0).sqrt()),
        VolumeCoords::Expectation => {
            let det = omega.c.determinant();
            if det <= 0.0 {
                return Err(Error::NotPositiveDefinite);
            }
            Ok(1.0 / det.sqrt())
        }
        VolumeCoords::BlochSpherical => {
            let b = model_to_bloch(omega)?;
            Ok(bloch_volume_element(b.r, b.theta))
        }
    }
}

/// `ln Z + lambda . g`.
pub fn thermodynamic_entropy(omega: &GibbsModel) -> f64 {
    omega.ln_z + dot(&omega.lambda, &omega.g)
}

/// `A = -T ln Z`. With an energy observable among the generators, the free energy
/// follows as `F = U - T S` from [`GibbsModel::generator_expectations`] and
/// [`thermodynamic_entropy`].
pub fn grand_potential(omega: &GibbsModel, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::Domain(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    Ok(-temperature * omega.ln_z)
}

/// A qubit state in spherical coordinates.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BlochVector {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

fn check_r(r: f64) -> Result<()> {
    if !(0.0..=BLOCH_R_MAX).contains(&r) {
        return Err(Error::Domain(format!(
            "Bloch length must lie in [0, 1 - 1e-9], got {r}"
        )));
    }
    Ok(())
}

impl BlochVector {
    pub fn new(r: f64, theta: f64, phi: f64) -> Result<Self> {
        check_r(r)?;
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::Domain(format!("theta must lie in [0, pi], got {theta}")));
        }
        if !phi.is_finite() {
            return Err(Error::Domain("phi must be finite".into()));
        }
        Ok(Self {
            r,
            theta,
            phi: phi.rem_euclid(2.0 * PI),
        })
    }

    pub fn from_cartesian(v: [f64; 3]) -> Result<Self> {
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        check_r(r)?;
        if r == 0.0 {
            return Ok(Self {
                r,
                theta: 0.0,
                phi: 0.0,
            });
        }
        let theta = (v[2] / r).clamp(-1.0, 1.0).acos();
        let phi = v[1].atan2(v[0]).rem_euclid(2.0 * PI);
        Ok(Self { r, theta, phi })
    }

    pub fn direction(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    pub fn cartesian(&self) -> [f64; 3] {
        self.direction().map(|x| self.r * x)
    }

    /// `(1 + r n.sigma) / 2`.
    pub fn state(&self) -> DensityOperator {
        let v = self.cartesian();
        let [x, y, z] = HermitianOperator::pauli();
        let op = HermitianOperator::identity(2)
            .add_scaled(v[0], &x)
            .add_scaled(v[1], &y)
            .add_scaled(v[2], &z)
            .scale(0.5);
        DensityOperator::new(op).expect("interior Bloch vector")
    }

    /// `-atanh(r) n`.
    pub fn lagrange(&self) -> [f64; 3] {
        let a = self.r.atanh();
        self.direction().map(|x| -a * x)
    }
}

/// `Z = 2 / sqrt(1 - r^2)` for the uniform reference.
pub fn bloch_partition(r: f64) -> Result<f64> {
    check_r(r)?;
    Ok(2.0 / (1.0 - r * r).sqrt())
}

/// The model on the full qubit level with uniform reference.
pub fn bloch_to_model(b: &BlochVector) -> Result<GibbsModel> {
    check_r(b.r)?;
    GibbsModel::new(
        &DensityOperator::uniform(2),
        &LevelOfDescription::pauli(),
        b.lagrange().to_vec(),
    )
}

pub fn model_to_bloch(omega: &GibbsModel) -> Result<BlochVector> {
    if omega.state.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: omega.state.dim(),
        });
    }
    let v = HermitianOperator::pauli().map(|p| expectation(&omega.state, &p).expect("qubit"));
    BlochVector::from_cartesian(v)
}

/// Diagonal of the metric in `(r, theta, phi)`:
/// `(1/(1-r^2), r atanh r, r atanh r sin^2 theta)`.
pub fn bloch_metric(r: f64, theta: f64) -> Result<[f64; 3]> {
    check_r(r)?;
    let ra = r * r.atanh();
    let s = if theta == 0.0 || theta == PI { 0.0 } else { theta.sin() };
    Ok([1.0 / (1.0 - r * r), ra, ra * s * s])
}

/// `sqrt` of the metric determinant in spherical Bloch coordinates.
pub fn bloch_volume_element(r: f64, theta: f64) -> f64 {
    if r == 0.0 || theta == 0.0 || theta == PI || r > BLOCH_R_MAX {
        return 0.0;
    }
    r * r.atanh() * theta.sin() / (1.0 - r * r).sqrt()
}

/// Closed-form qubit relative entropy `S(a || b)`.
pub fn bloch_relative_entropy(a: &BlochVector, b: &BlochVector) -> Result<f64> {
    check_r(a.r)?;
    check_r(b.r)?;
    let (na, nb) = (a.direction(), b.direction());
    let cos = na[0] * nb[0] + na[1] * nb[1] + na[2] * nb[2];
    let s = a.r * a.r.atanh() - a.r * b.r.atanh() * cos + 0.5 * ((1.0 - a.r * a.r) / (1.0 - b.r * b.r)).ln();
    Ok(s.max(0.0))
}

/// The Hilbert-Schmidt Pauli level used by the Bloch closed forms.
pub fn qubit_level(axes: &[usize]) -> LevelOfDescription {
    let paulis = HermitianOperator::pauli();
    let gens = axes.iter().map(|&i| paulis[i].clone()).collect();
    LevelOfDescription::new(2, gens, Metric::HilbertSchmidt).expect("qubit level")
}
