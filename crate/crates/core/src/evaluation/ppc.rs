//! Posterior predictive checks on five summary statistics of the UTS sample.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{CellGrid, DecayKernel, ModelParams, Specimen};
use crate::rng::{self, Purpose};
use crate::stats;

use super::predict::predict_strength;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestQuantity {
    Mean,
    Sd,
    P10,
    P50,
    P90,
}

impl TestQuantity {
    pub const ALL: [TestQuantity; 5] = [Self::Mean, Self::Sd, Self::P10, Self::P50, Self::P90];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::Sd => "sd",
            Self::P10 => "p10",
            Self::P50 => "p50",
            Self::P90 => "p90",
        }
    }

    pub fn compute(&self, values: &[f64]) -> f64 {
        match self {
            Self::Mean => stats::mean(values),
            Self::Sd => stats::sd(values),
            Self::P10 => stats::quantiles(values, &[0.1])[0],
            Self::P50 => stats::quantiles(values, &[0.5])[0],
            Self::P90 => stats::quantiles(values, &[0.9])[0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantityCheck {
    pub quantity: TestQuantity,
    /// One value per posterior draw used.
    pub replicated: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
    pub observed: f64,
    /// Fraction of replicated values at or above the observed value.
    pub p_value: f64,
}

impl QuantityCheck {
    pub fn covers_observed(&self) -> bool {
        self.lower <= self.observed && self.observed <= self.upper
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpcReport {
    pub checks: Vec<QuantityCheck>,
}

impl PpcReport {
    pub fn covered(&self) -> usize {
        self.checks.iter().filter(|c| c.covers_observed()).count()
    }
}

/// Replicates the whole UTS sample once per draw, conditional on each specimen's
/// MOE and knots. Draw `d` uses its own RNG stream.
pub fn posterior_predictive_check(
    draws: &[ModelParams],
    specimens: &[Specimen],
    grid: &CellGrid,
    kernel: DecayKernel,
    seed: u64,
) -> Result<PpcReport> {
    if draws.is_empty() {
        return Err(Error::invalid("ppc", "no posterior draws"));
    }
    if specimens.is_empty() {
        return Err(Error::invalid("ppc", "no specimens"));
    }
    let observed: Vec<f64> = specimens
        .iter()
        .map(|s| {
            s.observation
                .map(|o| o.uts)
                .ok_or_else(|| Error::invalid("ppc", format!("specimen {} has no observed UTS", s.id)))
        })
        .collect::<Result<_>>()?;

    let replicated: Vec<[f64; 5]> = draws
        .par_iter()
        .enumerate()
        .map(|(d, theta)| {
            let mut rng = rng::stream(seed, Purpose::Ppc, d as u64);
            let sample = specimens
                .iter()
                .map(|s| predict_strength(std::slice::from_ref(theta), s, grid, kernel, &mut rng, 1).map(|v| v[0]))
                .collect::<Result<Vec<f64>>>()?;
            let mut q = [0.0; 5];
            for (slot, t) in q.iter_mut().zip(TestQuantity::ALL) {
                *slot = t.compute(&sample);
            }
            Ok(q)
        })
        .collect::<Result<_>>()?;

    let checks = TestQuantity::ALL
        .iter()
        .enumerate()
        .map(|(i, &quantity)| {
            let values: Vec<f64> = replicated.iter().map(|r| r[i]).collect();
            let obs = quantity.compute(&observed);
            let bounds = stats::quantiles(&values, &[0.025, 0.975]);
            let p_value = values.iter().filter(|&&v| v >= obs).count() as f64 / values.len() as f64;
            QuantityCheck {
                quantity,
                replicated: values,
                lower: bounds[0],
                upper: bounds[1],
                observed: obs,
                p_value,
            }
        })
        .collect();
    Ok(PpcReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{generate_dataset, SimConfig};

    #[test]
    fn single_draw_gives_length_one_vectors() {
        let cfg = SimConfig {
            n: 20,
            seed: 5,
            ..SimConfig::default()
        };
        let data: Vec<Specimen> = generate_dataset(&cfg)
            .unwrap()
            .into_iter()
            .map(|s| s.specimen)
            .collect();
        let report =
            posterior_predictive_check(&[ModelParams::SIMULATION_TRUTH], &data, &cfg.grid, cfg.kernel, 1).unwrap();
        assert_eq!(report.checks.len(), 5);
        for c in &report.checks {
            assert_eq!(c.replicated.len(), 1);
            assert_eq!(c.lower, c.upper);
        }
    }

    #[test]
    fn unobserved_specimen_rejected() {
        let s = Specimen {
            id: "x".into(),
            moe: 2.0,
            knots: vec![],
            observation: None,
        };
        assert!(posterior_predictive_check(
            &[ModelParams::SIMULATION_TRUTH],
            &[s],
            &CellGrid::standard(),
            DecayKernel::Exponential,
            0
        )
        .is_err());
    }
}
