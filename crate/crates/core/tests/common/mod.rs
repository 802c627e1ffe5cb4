//! Shared helpers and independent oracles for the integration suites.
#![allow(dead_code)]

use knotstrength::model::{CellGrid, ModelParams};
use knotstrength::simulator::{generate_dataset, SimConfig, SimulatedSpecimen};
use knotstrength::Specimen;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub fn simulate(n: usize, cells: usize, lambda: f64, seed: u64) -> Vec<SimulatedSpecimen> {
    let cfg = SimConfig {
        n,
        grid: CellGrid::standard().with_cells(cells).unwrap(),
        lambda,
        seed,
        ..SimConfig::default()
    };
    generate_dataset(&cfg).unwrap()
}

pub fn specimens(sims: &[SimulatedSpecimen]) -> Vec<Specimen> {
    sims.iter().map(|s| s.specimen.clone()).collect()
}

/// Stationary AR(1) covariance σ²ρ^|j−k|/(1−ρ²).
pub fn ar1_covariance(cells: usize, rho: f64, sigma: f64) -> DMatrix<f64> {
    let v = sigma * sigma / (1.0 - rho * rho);
    DMatrix::from_fn(cells, cells, |j, k| v * rho.powi((j as i32 - k as i32).abs()))
}

/// Dense multivariate-normal log-density via Cholesky.
pub fn mvn_logpdf(x: &[f64], mean: &[f64], cov: &DMatrix<f64>) -> f64 {
    let n = x.len();
    let chol = cov.clone().cholesky().expect("covariance must be positive definite");
    let r = DVector::from_iterator(n, x.iter().zip(mean).map(|(a, b)| a - b));
    let sol = chol.solve(&r);
    let quad = r.dot(&sol);
    let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    -0.5 * (n as f64 * LN_2PI + log_det + quad)
}

/// Draws from N(mean, cov) through the Cholesky factor, independent of the crate's
/// sequential AR(1) sampler.
pub struct MvnSampler {
    mean: Vec<f64>,
    l: DMatrix<f64>,
}

impl MvnSampler {
    pub fn new(mean: Vec<f64>, cov: &DMatrix<f64>) -> Self {
        let l = cov.clone().cholesky().unwrap().l();
        Self { mean, l }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.mean.len();
        let z = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let x = &self.l * z;
        x.iter().zip(&self.mean).map(|(a, b)| a + b).collect()
    }
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Standard error of the mean.
pub fn se(v: &[f64]) -> f64 {
    let m = mean(v);
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (var / v.len() as f64).sqrt()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub fn truth() -> ModelParams {
    ModelParams::SIMULATION_TRUTH
}
