//! Synthetic specimens from the generative model.
//!
//! Per specimen, in order: MOE covariate, clear-wood AR(1) profile, Poisson knot
//! count with uniform centroids on the wide face, Bernoulli edge flags, gamma
//! volumes, knot-adjusted profile and finally the observed minimum and its cell.
//! Specimen `i` draws from its own RNG stream, so output does not depend on
//! evaluation order.

use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Gamma, Normal, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    adjust_strength, ar1_sample, distance_matrix, knot_effects, observed_strength, weight_matrix, CellGrid,
    DecayKernel, Knot, ModelParams, Observation, Specimen,
};
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub grid: CellGrid,
    pub kernel: DecayKernel,
    pub truth: ModelParams,
    /// Knots per square inch of wide face. Zero gives clear specimens.
    pub lambda: f64,
    pub p_edge: f64,
    pub volume_shape: f64,
    pub volume_scale: f64,
    pub moe_mean: f64,
    pub moe_sd: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 120,
            grid: CellGrid::standard(),
            kernel: DecayKernel::Exponential,
            truth: ModelParams::SIMULATION_TRUTH,
            lambda: 0.01,
            p_edge: 0.6,
            volume_shape: 2.0,
            volume_scale: 6.0,
            moe_mean: 1.9,
            moe_sd: 0.25,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.truth.validate()?;
        if self.n == 0 {
            return Err(Error::invalid("simulation", "n must be at least 1"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid("simulation", "lambda must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.p_edge) {
            return Err(Error::invalid("simulation", "p_edge must lie in [0, 1]"));
        }
        if !(self.volume_shape > 0.0 && self.volume_scale > 0.0) {
            return Err(Error::invalid("simulation", "gamma shape and scale must be positive"));
        }
        if !(self.moe_sd >= 0.0 && self.moe_mean.is_finite()) {
            return Err(Error::invalid("simulation", "invalid MOE distribution"));
        }
        Ok(())
    }
}

/// A generated specimen with its hidden strength profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSpecimen {
    pub specimen: Specimen,
    /// Clear-wood strengths X.
    pub clear: Vec<f64>,
    /// Knot-adjusted strengths Y.
    pub adjusted: Vec<f64>,
}

pub fn generate_specimen<R: Rng + ?Sized>(rng: &mut R, cfg: &SimConfig, id: String) -> Result<SimulatedSpecimen> {
    let grid = &cfg.grid;
    let truth = &cfg.truth;

    let moe = Normal::new(cfg.moe_mean, cfg.moe_sd)
        .map_err(|e| Error::invalid("simulation", e.to_string()))?
        .sample(rng);

    let clear = ar1_sample(rng, truth.mean_strength(moe), truth.rho, truth.sigma, grid.cells());

    let expected = cfg.lambda * grid.span() * grid.width();
    let count = if expected > 0.0 {
        Poisson::new(expected)
            .map_err(|e| Error::invalid("simulation", e.to_string()))?
            .sample(rng) as usize
    } else {
        0
    };
    let centroids: Vec<(f64, f64)> = (0..count)
        .map(|_| (rng.random::<f64>() * grid.span(), rng.random::<f64>() * grid.width()))
        .collect();
    let edge_dist = Bernoulli::new(cfg.p_edge).map_err(|e| Error::invalid("simulation", e.to_string()))?;
    let edges: Vec<bool> = (0..count).map(|_| edge_dist.sample(rng)).collect();
    let gamma =
        Gamma::new(cfg.volume_shape, cfg.volume_scale).map_err(|e| Error::invalid("simulation", e.to_string()))?;
    let volumes: Vec<f64> = (0..count).map(|_| gamma.sample(rng)).collect();

    let knots: Vec<Knot> = centroids
        .iter()
        .zip(&edges)
        .zip(&volumes)
        .map(|((&(lx, ly), &edge), &volume)| Knot { lx, ly, volume, edge })
        .collect();

    let distances = distance_matrix(grid, &knots);
    let weights = weight_matrix(&distances, truth.beta, grid.d_max(), cfg.kernel)?;
    let effects = knot_effects(&knots, truth.gamma0, truth.gamma1);
    let adjusted = adjust_strength(&clear, &weights, &effects);
    let (uts, failure_cell) = observed_strength(&adjusted);

    Ok(SimulatedSpecimen {
        specimen: Specimen {
            id,
            moe,
            knots,
            observation: Some(Observation { uts, failure_cell }),
        },
        clear,
        adjusted,
    })
}

pub fn specimen_id(i: usize) -> String {
    format!("S{:04}", i + 1)
}

/// `cfg.n` independent specimens, in index order.
pub fn generate_dataset(cfg: &SimConfig) -> Result<Vec<SimulatedSpecimen>> {
    cfg.validate()?;
    (0..cfg.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(cfg.seed, Purpose::Simulate, i as u64);
            generate_specimen(&mut rng, cfg, specimen_id(i))
        })
        .collect()
}
