//! K-fold cross-validation of point predictions and 95% intervals.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{CellGrid, DecayKernel, Specimen};
use crate::posterior::PriorSpec;
use crate::rng::{self, Purpose};
use crate::sampler::{run_chains, HmcConfig};
use crate::stats;

use super::ols::{ols_fit, ols_predict_interval};
use super::predict::{predict_strength, PredictiveSummary};

/// Nominal level of every prediction interval.
pub const INTERVAL_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

impl From<PredictiveSummary> for Prediction {
    fn from(s: PredictiveSummary) -> Self {
        Self {
            mean: s.mean,
            lower: s.lower,
            upper: s.upper,
        }
    }
}

/// A model that can be trained on observed specimens and score held-out ones.
pub trait Predictor: Sync {
    fn name(&self) -> String;
    /// `seed` is specific to the fold being evaluated.
    fn fit_predict(&self, train: &[Specimen], test: &[Specimen], seed: u64) -> Result<Vec<Prediction>>;
}

fn observed_uts(specimens: &[Specimen]) -> Result<Vec<f64>> {
    specimens
        .iter()
        .map(|s| {
            s.observation
                .map(|o| o.uts)
                .ok_or_else(|| Error::invalid("specimen", format!("{} has no observed UTS", s.id)))
        })
        .collect()
}

fn regression_predictions(
    train_rows: Vec<Vec<f64>>,
    train: &[Specimen],
    test_rows: Vec<Vec<f64>>,
) -> Result<Vec<Prediction>> {
    let fit = ols_fit(&train_rows, &observed_uts(train)?)?;
    test_rows
        .iter()
        .map(|x| {
            let (mean, lower, upper) = ols_predict_interval(&fit, x, INTERVAL_LEVEL)?;
            Ok(Prediction { mean, lower, upper })
        })
        .collect()
}

/// UTS on MOE.
#[derive(Debug, Clone, Copy, Default)]
pub struct Regression1;

impl Predictor for Regression1 {
    fn name(&self) -> String {
        "regression1".into()
    }

    fn fit_predict(&self, train: &[Specimen], test: &[Specimen], _seed: u64) -> Result<Vec<Prediction>> {
        let rows = |s: &[Specimen]| s.iter().map(|s| vec![s.moe]).collect();
        regression_predictions(rows(train), train, rows(test))
    }
}

/// UTS on MOE and the largest knot volume (zero for clear specimens).
#[derive(Debug, Clone, Copy, Default)]
pub struct Regression2;

impl Predictor for Regression2 {
    fn name(&self) -> String {
        "regression2".into()
    }

    fn fit_predict(&self, train: &[Specimen], test: &[Specimen], seed: u64) -> Result<Vec<Prediction>> {
        // an all-clear training set leaves the knot column identically zero
        if train.iter().all(|s| s.max_volume() == 0.0) {
            return Regression1.fit_predict(train, test, seed);
        }
        let rows = |s: &[Specimen]| s.iter().map(|s| vec![s.moe, s.max_volume()]).collect();
        regression_predictions(rows(train), train, rows(test))
    }
}

/// Full HMC fit on the training folds, then posterior predictive summaries.
#[derive(Debug, Clone)]
pub struct BayesianModel {
    /// Grid on which the failure cells in the data are recorded.
    pub data_grid: CellGrid,
    /// Grid used for fitting; failure cells are remapped onto it when it differs.
    pub grid: CellGrid,
    pub kernel: DecayKernel,
    pub prior: PriorSpec,
    pub hmc: HmcConfig,
    /// Pooled draws kept for prediction (evenly thinned).
    pub predictive_draws: usize,
    pub reps_per_draw: usize,
}

impl BayesianModel {
    pub fn new(grid: CellGrid, kernel: DecayKernel, prior: PriorSpec, hmc: HmcConfig) -> Self {
        Self {
            data_grid: grid,
            grid,
            kernel,
            prior,
            hmc,
            predictive_draws: 2000,
            reps_per_draw: 1,
        }
    }
}

/// Copies of `specimens` with failure cells moved from `from` onto `to`.
pub fn remap_failure_cells(specimens: &[Specimen], from: &CellGrid, to: &CellGrid) -> Vec<Specimen> {
    specimens
        .iter()
        .map(|s| {
            let mut s = s.clone();
            if let Some(obs) = s.observation.as_mut() {
                obs.failure_cell = to.remap_cell(from, obs.failure_cell);
            }
            s
        })
        .collect()
}

impl Predictor for BayesianModel {
    fn name(&self) -> String {
        "bayesian".into()
    }

    fn fit_predict(&self, train: &[Specimen], test: &[Specimen], seed: u64) -> Result<Vec<Prediction>> {
        let train = if self.grid == self.data_grid {
            train.to_vec()
        } else {
            remap_failure_cells(train, &self.data_grid, &self.grid)
        };
        let cfg = HmcConfig {
            seed,
            ..self.hmc.clone()
        };
        let fit = run_chains(&train, self.grid, self.kernel, self.prior, &cfg)?;
        if fit.diagnostics.failed {
            return Err(Error::SamplerFailed("divergence fraction exceeded in a CV fit".into()));
        }
        let draws = fit.draws.thinned(self.predictive_draws);
        test.par_iter()
            .enumerate()
            .map(|(i, s)| {
                let mut rng = rng::stream(seed, Purpose::Predict, i as u64);
                let d = predict_strength(&draws, s, &self.grid, self.kernel, &mut rng, self.reps_per_draw)?;
                Ok(PredictiveSummary::from_draws(&d, INTERVAL_LEVEL)?.into())
            })
            .collect()
    }
}

/// Seeded random partition: positions of a shuffled index list are dealt round-robin,
/// so fold sizes differ by at most one. Entry `i` is the fold of specimen `i`.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::invalid("cross-validation", "need at least two folds"));
    }
    if n / k < 2 {
        return Err(Error::invalid(
            "cross-validation",
            format!("{n} specimens leave a fold with fewer than 2 members for k = {k}"),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, Purpose::Folds, 0));
    let mut folds = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        folds[i] = pos % k;
    }
    Ok(folds)
}

/// Point estimate and standard error (sd of per-specimen contributions over √n).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metric {
    pub value: f64,
    pub se: f64,
}

impl Metric {
    fn of(contributions: &[f64]) -> Self {
        Self {
            value: stats::mean(contributions),
            se: stats::sd(contributions) / (contributions.len() as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCv {
    pub name: String,
    /// Held-out prediction per specimen, in input order.
    pub predictions: Vec<Prediction>,
    pub mean_prediction: Metric,
    pub mspe: Metric,
    pub mape: Metric,
    pub interval_length: Metric,
}

impl ModelCv {
    pub fn from_predictions(name: String, predictions: Vec<Prediction>, observed: &[f64]) -> Result<Self> {
        if predictions.len() != observed.len() || observed.is_empty() {
            return Err(Error::invalid(
                "cross-validation",
                "prediction and observation counts differ",
            ));
        }
        let err: Vec<f64> = predictions.iter().zip(observed).map(|(p, y)| p.mean - y).collect();
        let sq: Vec<f64> = err.iter().map(|e| e * e).collect();
        let abs: Vec<f64> = err.iter().map(|e| e.abs()).collect();
        let means: Vec<f64> = predictions.iter().map(|p| p.mean).collect();
        let lengths: Vec<f64> = predictions.iter().map(|p| p.upper - p.lower).collect();
        Ok(Self {
            name,
            mean_prediction: Metric::of(&means),
            mspe: Metric::of(&sq),
            mape: Metric::of(&abs),
            interval_length: Metric::of(&lengths),
            predictions,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub folds: Vec<usize>,
    pub observed: Vec<f64>,
    pub models: Vec<ModelCv>,
}

impl CvReport {
    pub fn model(&self, name: &str) -> Option<&ModelCv> {
        self.models.iter().find(|m| m.name == name)
    }
}

/// Fits every model on each set of `k − 1` folds and predicts the held-out fold.
/// Folds run concurrently; fold `f` is fitted with seed `child_seed(seed, f)`.
pub fn kfold_cv(specimens: &[Specimen], k: usize, models: &[&dyn Predictor], seed: u64) -> Result<CvReport> {
    let folds = fold_assignment(specimens.len(), k, seed)?;
    kfold_cv_with_folds(specimens, folds, models, seed)
}

/// Cross-validation over a given fold assignment (`folds[i]` in `0..k`, every fold non-empty).
pub fn kfold_cv_with_folds(
    specimens: &[Specimen],
    folds: Vec<usize>,
    models: &[&dyn Predictor],
    seed: u64,
) -> Result<CvReport> {
    let observed = observed_uts(specimens)?;
    if folds.len() != specimens.len() {
        return Err(Error::invalid(
            "cross-validation",
            "fold vector length differs from the sample",
        ));
    }
    let k = folds.iter().max().map_or(0, |m| m + 1);
    if k < 2 || (0..k).any(|f| !folds.contains(&f)) {
        return Err(Error::invalid(
            "cross-validation",
            "need at least two non-empty folds numbered from 0",
        ));
    }
    let mut reports = Vec::with_capacity(models.len());
    for model in models {
        let per_fold: Vec<(Vec<usize>, Vec<Prediction>)> = (0..k)
            .into_par_iter()
            .map(|f| {
                let (test_idx, train_idx): (Vec<usize>, Vec<usize>) =
                    (0..specimens.len()).partition(|&i| folds[i] == f);
                let train: Vec<Specimen> = train_idx.iter().map(|&i| specimens[i].clone()).collect();
                let test: Vec<Specimen> = test_idx.iter().map(|&i| specimens[i].without_observation()).collect();
                let preds = model.fit_predict(&train, &test, rng::child_seed(seed, f as u64))?;
                if preds.len() != test.len() {
                    return Err(Error::invalid(
                        "cross-validation",
                        "model returned the wrong number of predictions",
                    ));
                }
                Ok((test_idx, preds))
            })
            .collect::<Result<_>>()?;
        let mut predictions = vec![
            Prediction {
                mean: f64::NAN,
                lower: f64::NAN,
                upper: f64::NAN
            };
            specimens.len()
        ];
        for (idx, preds) in per_fold {
            for (i, p) in idx.into_iter().zip(preds) {
                predictions[i] = p;
            }
        }
        reports.push(ModelCv::from_predictions(model.name(), predictions, &observed)?);
    }
    Ok(CvReport {
        folds,
        observed,
        models: reports,
    })
}

/// MSPE over the specimens with `selected[i]` set.
pub fn subgroup_mspe(model: &ModelCv, observed: &[f64], selected: &[bool]) -> Result<f64> {
    if selected.len() != observed.len() || model.predictions.len() != observed.len() {
        return Err(Error::invalid("subgroup", "selection length differs from the sample"));
    }
    let sq: Vec<f64> = model
        .predictions
        .iter()
        .zip(observed)
        .zip(selected)
        .filter(|(_, &s)| s)
        .map(|((p, y), _)| (p.mean - y).powi(2))
        .collect();
    if sq.is_empty() {
        return Err(Error::invalid("subgroup", "predicate selects no specimens"));
    }
    Ok(stats::mean(&sq))
}

/// Nominal lumber thickness in inches.
pub const NOMINAL_THICKNESS: f64 = 1.5;
/// A knot is "large" when its volume exceeds this fraction of one cell's volume.
pub const LARGE_KNOT_FRACTION: f64 = 0.10;
pub const MIN_LARGE_KNOTS: usize = 3;

/// Built-in subgroup: at least three knots larger than 10% of the physical cell volume
/// (cell length × width × thickness).
pub fn many_large_knots(specimen: &Specimen, grid: &CellGrid, thickness: f64) -> bool {
    let threshold = LARGE_KNOT_FRACTION * grid.cell_length() * grid.width() * thickness;
    specimen.knots.iter().filter(|k| k.volume > threshold).count() >= MIN_LARGE_KNOTS
}
