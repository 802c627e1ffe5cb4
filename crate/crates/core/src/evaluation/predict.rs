//! Posterior predictive strength of a specimen from its MOE and knots.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{
    adjust_strength, ar1_sample, distance_matrix, knot_effects, observed_strength, weight_matrix, CellGrid,
    DecayKernel, ModelParams, Specimen,
};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictiveSummary {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub draws: usize,
}

impl PredictiveSummary {
    /// Mean and central `level` interval of predictive draws.
    pub fn from_draws(draws: &[f64], level: f64) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::invalid("predictive draws", "empty"));
        }
        let tail = (1.0 - level) / 2.0;
        let q = stats::quantiles(draws, &[tail, 1.0 - tail]);
        Ok(Self {
            mean: stats::mean(draws),
            lower: q[0],
            upper: q[1],
            draws: draws.len(),
        })
    }

    pub fn interval_length(&self) -> f64 {
        self.upper - self.lower
    }
}

/// One simulated UTS per (parameter draw × rep): a fresh clear-wood profile, the
/// knot adjustment under that draw's β and γ, and the minimum over cells. Any recorded
/// observation on `specimen` is ignored.
pub fn predict_strength<R: Rng + ?Sized>(
    draws: &[ModelParams],
    specimen: &Specimen,
    grid: &CellGrid,
    kernel: DecayKernel,
    rng: &mut R,
    reps_per_draw: usize,
) -> Result<Vec<f64>> {
    if draws.is_empty() {
        return Err(Error::invalid("predictive draws", "no posterior draws"));
    }
    if reps_per_draw == 0 {
        return Err(Error::invalid("predictive draws", "reps_per_draw must be positive"));
    }
    let distances = distance_matrix(grid, &specimen.knots);
    let mut out = Vec::with_capacity(draws.len() * reps_per_draw);
    for theta in draws {
        let weights = weight_matrix(&distances, theta.beta, grid.d_max(), kernel)?;
        let effects = knot_effects(&specimen.knots, theta.gamma0, theta.gamma1);
        let mu = theta.mean_strength(specimen.moe);
        for _ in 0..reps_per_draw {
            let clear = ar1_sample(rng, mu, theta.rho, theta.sigma, grid.cells());
            let adjusted = adjust_strength(&clear, &weights, &effects);
            out.push(observed_strength(&adjusted).0);
        }
    }
    Ok(out)
}
