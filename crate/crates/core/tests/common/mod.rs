#![allow(dead_code)]

use gibbsfit::levels::{LevelOfDescription, Metric};
use gibbsfit::state_space::{DensityOperator, HermitianOperator, C64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gauss(r: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u: f64 = r.gen_range(f64::EPSILON..1.0);
    let v: f64 = r.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

pub fn random_matrix(r: &mut ChaCha8Rng, d: usize) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |_, _| C64::new(gauss(r), gauss(r)))
}

pub fn random_hermitian(r: &mut ChaCha8Rng, d: usize) -> HermitianOperator {
    let a = random_matrix(r, d);
    HermitianOperator::from_matrix((&a + a.adjoint()) * C64::new(0.5, 0.0)).unwrap()
}

pub fn random_diagonal(r: &mut ChaCha8Rng, d: usize) -> HermitianOperator {
    HermitianOperator::diagonal((0..d).map(|_| gauss(r)).collect())
}

/// A full-rank state mixed with the identity so that its spectrum stays well away
/// from zero.
pub fn random_state(r: &mut ChaCha8Rng, d: usize) -> DensityOperator {
    let a = random_matrix(r, d);
    let m = &a * a.adjoint();
    let tr: f64 = (0..d).map(|i| m[(i, i)].re).sum();
    let w = 0.15;
    let mix = m * C64::new((1.0 - w) / tr, 0.0) + DMatrix::identity(d, d) * C64::new(w / d as f64, 0.0);
    DensityOperator::new(HermitianOperator::from_matrix_with_tol(mix, 1e-12).unwrap()).unwrap()
}

pub fn random_distribution(r: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..d).map(|_| r.gen_range(0.2..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

pub fn random_unitary(r: &mut ChaCha8Rng, d: usize) -> DMatrix<C64> {
    random_matrix(r, d).qr().q()
}

/// A level with `k` random generators, scaled down so that projections stay
/// comfortably inside the state space.
pub fn random_level(r: &mut ChaCha8Rng, d: usize, k: usize, metric: Metric) -> LevelOfDescription {
    let gens = (0..k).map(|_| random_hermitian(r, d).scale(0.5)).collect();
    LevelOfDescription::new(d, gens, metric).unwrap()
}

pub fn random_lambda(r: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * gauss(r)).collect()
}

/// `∫_0^1 tr(sigma^nu X sigma^(1-nu) Y) dnu` by composite Simpson on 1024 panels.
pub fn kmb_quadrature(sigma: &DensityOperator, x: &HermitianOperator, y: &HermitianOperator) -> f64 {
    let panels = 1024;
    let h = 1.0 / panels as f64;
    let xm = x.to_matrix();
    let ym = y.to_matrix();
    let f = |nu: f64| {
        let a = sigma.power(nu).to_matrix();
        let b = sigma.power(1.0 - nu).to_matrix();
        (a * &xm * b * &ym).trace().re
    };
    let mut acc = f(0.0) + f(1.0);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    acc * h / 3.0
}

pub fn wolf_generators() -> Vec<HermitianOperator> {
    vec![
        HermitianOperator::diagonal((1..=6).map(|i| i as f64 - 3.5).collect()),
        HermitianOperator::diagonal(vec![1.0, 1.0, -2.0, -2.0, 1.0, 1.0]),
    ]
}

pub const WOLF_COUNTS: [u64; 6] = [3246, 3449, 2897, 2841, 3635, 3932];
