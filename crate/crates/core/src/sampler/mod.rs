//! Multi-chain HMC over the augmented posterior.
//!
//! Each chain runs plain HMC: the trajectory length is drawn uniformly from
//! `1..=L` every iteration, the step size is tuned by dual averaging during warmup,
//! and the diagonal metric is re-estimated over expanding windows. Chains run on the
//! rayon pool with independent RNG streams and only meet at the final gather.

pub mod adapt;
pub mod diagnostics;
pub mod hmc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CellGrid, DecayKernel, ModelParams, Specimen};
use crate::posterior::{AugmentedPosterior, PriorSpec};
use crate::rng::{self, Purpose};
use crate::stats;

pub use adapt::{DualAverage, RunningVariance, WindowSchedule};
pub use diagnostics::{bulk_ess, split_rhat};
pub use hmc::{find_reasonable_step_size, hmc_iterate, leapfrog, HmcState, LogDensity, Transition};

/// Largest post-warmup divergence fraction a chain may have before the run fails.
pub const MAX_DIVERGENCE_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HmcConfig {
    pub chains: usize,
    /// Total iterations per chain, warmup included.
    pub iterations: usize,
    pub warmup: usize,
    pub target_accept: f64,
    pub max_leapfrog_steps: usize,
    /// Integration time (in metric-whitened units) targeted by the trajectory length;
    /// `L = ⌈1.5·time/ε⌉` and each iteration uses a uniform draw from `1..=L` steps.
    pub integration_time: f64,
    pub adapt_mass: bool,
    pub initial_step_size: f64,
    /// Keep latent strengths of every retained draw (memory heavy).
    pub retain_latents: bool,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for HmcConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            iterations: 10_000,
            warmup: 5_000,
            target_accept: 0.8,
            max_leapfrog_steps: 1024,
            integration_time: 4.0,
            adapt_mass: true,
            initial_step_size: 0.1,
            retain_latents: false,
            seed: 0,
        }
    }
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 {
            return Err(Error::invalid("hmc config", "need at least one chain"));
        }
        if self.warmup >= self.iterations {
            return Err(Error::invalid("hmc config", "warmup must be smaller than iterations"));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::invalid("hmc config", "target_accept must lie in (0, 1)"));
        }
        if self.max_leapfrog_steps == 0 {
            return Err(Error::invalid("hmc config", "max_leapfrog_steps must be positive"));
        }
        if !(self.integration_time > 0.0 && self.initial_step_size > 0.0) {
            return Err(Error::invalid(
                "hmc config",
                "integration_time and initial_step_size must be positive",
            ));
        }
        Ok(())
    }

    pub fn retained(&self) -> usize {
        self.iterations - self.warmup
    }

    fn max_steps(&self, step_size: f64) -> usize {
        let l = (1.5 * self.integration_time / step_size).ceil();
        if l.is_finite() {
            (l as usize).clamp(1, self.max_leapfrog_steps)
        } else {
            self.max_leapfrog_steps
        }
    }
}

/// Adaptation outcome and post-warmup statistics for one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRun {
    pub step_size: f64,
    pub inv_mass: Vec<f64>,
    pub max_leapfrog_steps: usize,
    pub divergences: usize,
    pub mean_accept: f64,
    pub retained: usize,
}

impl ChainRun {
    pub fn divergence_fraction(&self) -> f64 {
        self.divergences as f64 / self.retained.max(1) as f64
    }
}

/// Warmup (step size and metric) followed by `iterations − warmup` recorded transitions.
/// `record` sees every post-warmup state in order.
pub fn run_chain<T, R, F>(target: &T, init: Vec<f64>, cfg: &HmcConfig, rng: &mut R, mut record: F) -> Result<ChainRun>
where
    T: LogDensity + ?Sized,
    R: Rng + ?Sized,
    F: FnMut(&HmcState) -> Result<()>,
{
    let dim = target.dim();
    let mut state = HmcState::new(target, init)?;
    let mut inv_mass = vec![1.0; dim];
    let (step_size, inv_mass) = adapt_warmup(target, &mut state, &mut inv_mass, cfg, rng);

    let limit = cfg.max_steps(step_size);
    let mut divergences = 0;
    let mut accept_sum = 0.0;
    let retained = cfg.retained();
    for _ in 0..retained {
        let n = rng.random_range(1..=limit);
        let t = hmc_iterate(target, &mut state, step_size, n, &inv_mass, rng);
        divergences += t.divergent as usize;
        accept_sum += t.accept_stat;
        record(&state)?;
    }
    Ok(ChainRun {
        step_size,
        inv_mass,
        max_leapfrog_steps: limit,
        divergences,
        mean_accept: accept_sum / retained.max(1) as f64,
        retained,
    })
}

/// Runs the warmup phase in place and returns the frozen (step size, inverse mass).
pub fn adapt_warmup<T, R>(
    target: &T,
    state: &mut HmcState,
    inv_mass: &mut Vec<f64>,
    cfg: &HmcConfig,
    rng: &mut R,
) -> (f64, Vec<f64>)
where
    T: LogDensity + ?Sized,
    R: Rng + ?Sized,
{
    let mut step = find_reasonable_step_size(target, state, inv_mass, cfg.initial_step_size, rng);
    if cfg.warmup == 0 {
        return (step, inv_mass.clone());
    }
    let schedule = WindowSchedule::new(cfg.warmup);
    let mut dual = DualAverage::new(step, cfg.target_accept);
    let mut window = RunningVariance::new(target.dim());
    for it in 0..cfg.warmup {
        let n = rng.random_range(1..=cfg.max_steps(step));
        let t = hmc_iterate(target, state, step, n, inv_mass, rng);
        dual.update(t.accept_stat);
        step = dual.current();
        if cfg.adapt_mass && schedule.in_slow_phase(it) {
            window.add(&state.z);
            if schedule.ends_window(it) {
                *inv_mass = window.inverse_mass();
                window.reset();
                step = find_reasonable_step_size(target, state, inv_mass, step, rng);
                dual = DualAverage::new(step, cfg.target_accept);
            }
        }
    }
    (dual.final_step(), inv_mass.clone())
}

/// Draws of the full state vector from a low-dimensional target, one entry per chain.
pub fn sample_chains<T, I>(target: &T, cfg: &HmcConfig, init: I) -> Result<Vec<(Vec<Vec<f64>>, ChainRun)>>
where
    T: LogDensity,
    I: Fn(usize, &mut rng::ChaCha8Rng) -> Vec<f64> + Sync,
{
    cfg.validate()?;
    (0..cfg.chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(cfg.seed, Purpose::Chain, c as u64);
            let z0 = init(c, &mut rng);
            let mut draws = Vec::with_capacity(cfg.retained());
            let run = run_chain(target, z0, cfg, &mut rng, |s| {
                draws.push(s.z.clone());
                Ok(())
            })?;
            Ok((draws, run))
        })
        .collect()
}

/// Constrained draws of θ for one chain.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChainDraws {
    pub theta: Vec<ModelParams>,
    pub log_posterior: Vec<f64>,
    /// Per draw, the concatenated latent strengths `Y₋obs` of all specimens.
    pub latents: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PosteriorDraws {
    pub chains: Vec<ChainDraws>,
}

impl PosteriorDraws {
    pub fn total(&self) -> usize {
        self.chains.iter().map(|c| c.theta.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Values of parameter `p` (index into [`ModelParams::NAMES`]) per chain.
    pub fn parameter_chains(&self, p: usize) -> Vec<Vec<f64>> {
        self.chains
            .iter()
            .map(|c| c.theta.iter().map(|t| t.to_array()[p]).collect())
            .collect()
    }

    pub fn pooled(&self) -> Vec<ModelParams> {
        self.chains.iter().flat_map(|c| c.theta.iter().copied()).collect()
    }

    /// At most `max` pooled draws, evenly spaced through the pooled sequence.
    pub fn thinned(&self, max: usize) -> Vec<ModelParams> {
        let all = self.pooled();
        if max == 0 || all.len() <= max {
            return all;
        }
        (0..max).map(|i| all[i * all.len() / max]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterDiagnostics {
    pub name: &'static str,
    pub rhat: Option<f64>,
    pub ess_bulk: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub parameters: Vec<ParameterDiagnostics>,
    pub chains: Vec<ChainRun>,
    /// Some chain exceeded [`MAX_DIVERGENCE_FRACTION`].
    pub failed: bool,
}

impl Diagnostics {
    pub fn compute(draws: &PosteriorDraws, chains: Vec<ChainRun>) -> Self {
        let parameters = ModelParams::NAMES
            .iter()
            .enumerate()
            .map(|(p, &name)| {
                let per_chain = draws.parameter_chains(p);
                ParameterDiagnostics {
                    name,
                    rhat: split_rhat(&per_chain),
                    ess_bulk: bulk_ess(&per_chain),
                }
            })
            .collect();
        let failed = chains.iter().any(|c| c.divergence_fraction() > MAX_DIVERGENCE_FRACTION);
        Self {
            parameters,
            chains,
            failed,
        }
    }

    pub fn max_rhat(&self) -> f64 {
        self.parameters
            .iter()
            .map(|p| p.rhat.unwrap_or(f64::INFINITY))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct Fit {
    pub draws: PosteriorDraws,
    pub diagnostics: Diagnostics,
}

/// Fits the model to observed specimens with `cfg.chains` parallel chains.
pub fn run_chains(
    specimens: &[Specimen],
    grid: CellGrid,
    kernel: DecayKernel,
    prior: PriorSpec,
    cfg: &HmcConfig,
) -> Result<Fit> {
    cfg.validate()?;
    let posterior = AugmentedPosterior::new(specimens, grid, kernel, prior)?;
    run_chains_on(&posterior, cfg)
}

pub fn run_chains_on(posterior: &AugmentedPosterior, cfg: &HmcConfig) -> Result<Fit> {
    cfg.validate()?;
    let results: Vec<(ChainDraws, ChainRun)> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(cfg.seed, Purpose::Chain, c as u64);
            // audit stream for the invariant spot checks, kept apart from the chain's own draws
            let mut audit = rng::stream(cfg.seed, Purpose::Chain, (1 << 32) + c as u64);
            let init = posterior.initial_state(&mut rng);
            let mut out = ChainDraws {
                theta: Vec::with_capacity(cfg.retained()),
                log_posterior: Vec::with_capacity(cfg.retained()),
                latents: cfg.retain_latents.then(Vec::new),
            };
            let run = run_chain(posterior, init, cfg, &mut rng, |s| {
                let theta = posterior.params(&s.z);
                if audit.random::<f64>() < 0.01 {
                    theta
                        .validate()
                        .map_err(|e| Error::SamplerFailed(format!("chain {c}: {e}")))?;
                    if !posterior.latents_satisfy_truncation(&s.z) {
                        return Err(Error::SamplerFailed(format!(
                            "chain {c}: latent strength at or below observed UTS"
                        )));
                    }
                }
                out.theta.push(theta);
                out.log_posterior.push(s.logp);
                if let Some(l) = out.latents.as_mut() {
                    l.push(
                        posterior
                            .latent_blocks(&s.z)?
                            .into_iter()
                            .flat_map(|b| b.y_minus_obs)
                            .collect(),
                    );
                }
                Ok(())
            })?;
            Ok((out, run))
        })
        .collect::<Result<_>>()?;

    let (chains, runs): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let draws = PosteriorDraws { chains };
    let diagnostics = Diagnostics::compute(&draws, runs);
    Ok(Fit { draws, diagnostics })
}

/// Per-parameter quantile rows.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    pub probs: Vec<f64>,
    pub rows: Vec<(&'static str, Vec<f64>)>,
}

/// Pooled quantiles of every parameter, linear interpolation between order statistics.
pub fn posterior_quantiles(draws: &PosteriorDraws, probs: &[f64]) -> Result<QuantileTable> {
    if draws.is_empty() {
        return Err(Error::invalid("draws", "no posterior draws"));
    }
    let rows = ModelParams::NAMES
        .iter()
        .enumerate()
        .map(|(p, &name)| {
            let pooled: Vec<f64> = draws.parameter_chains(p).concat();
            (name, stats::quantiles(&pooled, probs))
        })
        .collect();
    Ok(QuantileTable {
        probs: probs.to_vec(),
        rows,
    })
}

pub const SUMMARY_PROBS: [f64; 3] = [0.5, 0.025, 0.975];
