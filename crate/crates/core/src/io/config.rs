//! Run configuration, loaded from a TOML file.
//!
//! Every key is optional and defaults to the reference setup (24 cells over a 96 in
//! span of 5.5 in wide lumber, exponential decay, 4 chains of 10000 iterations with
//! 5000 warmup). Unknown keys are rejected.
//!
//! ```toml
//! seed = 20240611
//!
//! [grid]
//! cells = 24
//! kernel = "exponential"    # or "power", "gaussian"
//!
//! [hmc]
//! chains = 4
//! iterations = 10000
//! warmup = 5000
//!
//! [simulate]
//! n = 120
//! truth = { eta0 = 3.0, eta1 = 1.5, rho = 0.7, sigma = 0.8, beta = 0.5, gamma0 = 0.25, gamma1 = 0.15 }
//!
//! [paths]
//! out_dir = "results"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::evaluation::cv::NOMINAL_THICKNESS;
use crate::model::{CellGrid, DecayKernel, ModelParams};
use crate::posterior::PriorSpec;
use crate::sampler::HmcConfig;
use crate::simulator::SimConfig;

use super::read_text;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub cells: usize,
    pub span: f64,
    pub width: f64,
    pub d_max: f64,
    /// Lumber thickness, used only by the large-knot subgroup.
    pub thickness: f64,
    pub kernel: DecayKernel,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = CellGrid::standard();
        Self {
            cells: g.cells(),
            span: g.span(),
            width: g.width(),
            d_max: g.d_max(),
            thickness: NOMINAL_THICKNESS,
            kernel: DecayKernel::Exponential,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub n: usize,
    pub lambda: f64,
    pub p_edge: f64,
    pub volume_shape: f64,
    pub volume_scale: f64,
    pub moe_mean: f64,
    pub moe_sd: f64,
    pub truth: ModelParams,
}

impl Default for SimulateSection {
    fn default() -> Self {
        let s = SimConfig::default();
        Self {
            n: s.n,
            lambda: s.lambda,
            p_edge: s.p_edge,
            volume_shape: s.volume_shape,
            volume_scale: s.volume_scale,
            moe_mean: s.moe_mean,
            moe_sd: s.moe_sd,
            truth: s.truth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvSection {
    pub folds: usize,
    /// Cell count of the Bayesian fit; defaults to the data grid.
    pub fit_cells: Option<usize>,
    pub predictive_draws: usize,
    pub reps_per_draw: usize,
    /// Run the HMC model as well as the regressions.
    pub bayesian: bool,
}

impl Default for CvSection {
    fn default() -> Self {
        Self {
            folds: 5,
            fit_cells: None,
            predictive_draws: 2000,
            reps_per_draw: 1,
            bayesian: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpcSection {
    /// Posterior draws replicated (evenly thinned from the saved draws).
    pub draws: usize,
    pub bins: usize,
}

impl Default for PpcSection {
    fn default() -> Self {
        Self { draws: 1000, bins: 30 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictSection {
    pub draws: usize,
    pub reps_per_draw: usize,
}

impl Default for PredictSection {
    fn default() -> Self {
        Self {
            draws: 2000,
            reps_per_draw: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsSection {
    pub specimens: PathBuf,
    pub knots: PathBuf,
    pub truth: PathBuf,
    pub draws: PathBuf,
    /// Directory for reports, diagnostics and predictions.
    pub out_dir: PathBuf,
    /// Optional column-mapping file for externally produced tables.
    pub mapping: Option<PathBuf>,
}

impl Default for PathsSection {
    fn default() -> Self {
        Self {
            specimens: "specimens.csv".into(),
            knots: "knots.csv".into(),
            truth: "truth.csv".into(),
            draws: "draws.csv".into(),
            out_dir: ".".into(),
            mapping: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub grid: GridSection,
    pub prior: PriorSpec,
    pub hmc: HmcConfig,
    pub simulate: SimulateSection,
    pub cv: CvSection,
    pub ppc: PpcSection,
    pub predict: PredictSection,
    pub paths: PathsSection,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&read_text(path)?).map_err(|e| {
            Error::Config(format!(
                "{}: {}",
                path.display(),
                e.to_string().trim_start_matches("configuration: ")
            ))
        })
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        self.grid().map_err(cfg_err)?;
        if !(self.grid.thickness > 0.0 && self.grid.thickness.is_finite()) {
            return Err(Error::Config("grid.thickness must be positive".into()));
        }
        self.prior.validate().map_err(cfg_err)?;
        self.hmc.validate().map_err(cfg_err)?;
        self.sim_config().and_then(|s| s.validate()).map_err(cfg_err)?;
        if self.cv.folds < 2 {
            return Err(Error::Config("cv.folds must be at least 2".into()));
        }
        if let Some(j) = self.cv.fit_cells {
            self.grid().and_then(|g| g.with_cells(j)).map_err(cfg_err)?;
        }
        if self.cv.predictive_draws == 0 || self.cv.reps_per_draw == 0 {
            return Err(Error::Config(
                "cv.predictive_draws and cv.reps_per_draw must be positive".into(),
            ));
        }
        if self.ppc.draws == 0 || self.ppc.bins == 0 {
            return Err(Error::Config("ppc.draws and ppc.bins must be positive".into()));
        }
        if self.predict.draws == 0 || self.predict.reps_per_draw == 0 {
            return Err(Error::Config(
                "predict.draws and predict.reps_per_draw must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<CellGrid> {
        CellGrid::new(self.grid.cells, self.grid.span, self.grid.width, self.grid.d_max)
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let s = &self.simulate;
        Ok(SimConfig {
            n: s.n,
            grid: self.grid()?,
            kernel: self.grid.kernel,
            truth: s.truth,
            lambda: s.lambda,
            p_edge: s.p_edge,
            volume_shape: s.volume_shape,
            volume_scale: s.volume_scale,
            moe_mean: s.moe_mean,
            moe_sd: s.moe_sd,
            seed: self.seed,
        })
    }

    /// HMC settings carrying the run seed.
    pub fn hmc_config(&self) -> HmcConfig {
        HmcConfig {
            seed: self.seed,
            ..self.hmc.clone()
        }
    }
}
