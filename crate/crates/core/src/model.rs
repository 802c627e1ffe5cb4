//! Forward model: cell geometry, knot distances and weights, the AR(1) clear-wood
//! process, and the knot-adjusted strength profile whose minimum is the observed UTS.
//!
//! Units are fixed throughout the crate: strengths in psi×10³, MOE in psi×10⁶,
//! lengths in inches and knot volumes in cubic inches.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Longitudinal partition of the test span into equal cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGrid {
    cells: usize,
    span: f64,
    width: f64,
    d_max: f64,
}

impl CellGrid {
    pub fn new(cells: usize, span: f64, width: f64, d_max: f64) -> Result<Self> {
        if cells == 0 {
            return Err(Error::invalid("grid", "cell count must be at least 1"));
        }
        for (name, v) in [("span", span), ("width", width), ("d_max", d_max)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid("grid", format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            cells,
            span,
            width,
            d_max,
        })
    }

    /// 24 four-inch cells over the 96 in span of a 2x6, knots influential up to 96 in.
    pub fn standard() -> Self {
        Self {
            cells: 24,
            span: 96.0,
            width: 5.5,
            d_max: 96.0,
        }
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn cell_length(&self) -> f64 {
        self.span / self.cells as f64
    }

    /// Same geometry with a different number of cells.
    pub fn with_cells(&self, cells: usize) -> Result<Self> {
        Self::new(cells, self.span, self.width, self.d_max)
    }

    /// Centroid of cell `j` (1-based).
    pub fn centroid(&self, j: usize) -> (f64, f64) {
        debug_assert!(j >= 1 && j <= self.cells);
        ((j as f64 - 0.5) * self.cell_length(), self.width / 2.0)
    }

    /// Maps a 1-based cell index on `from` to the cell of this grid containing the
    /// centroid of that cell. A centroid falling on a boundary goes to the lower cell.
    pub fn remap_cell(&self, from: &CellGrid, cell: usize) -> usize {
        let (x, _) = from.centroid(cell);
        let pos = x / self.cell_length();
        let idx = pos.ceil() as usize;
        idx.clamp(1, self.cells)
    }
}

/// A knot reduced to its wide-face centroid, displaced volume and edge flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    /// Longitudinal centroid from the start of the test span (may lie in the grips).
    pub lx: f64,
    /// Transverse centroid on the wide face.
    pub ly: f64,
    pub volume: f64,
    pub edge: bool,
}

impl Knot {
    pub fn validate(&self, grid: &CellGrid) -> Result<()> {
        if !self.lx.is_finite() || !self.ly.is_finite() || !self.volume.is_finite() {
            return Err(Error::invalid("knot", "coordinates and volume must be finite"));
        }
        if self.volume < 0.0 {
            return Err(Error::invalid("knot", format!("negative volume {}", self.volume)));
        }
        if self.ly < 0.0 || self.ly > grid.width() {
            return Err(Error::invalid(
                "knot",
                format!("ly {} outside [0, {}]", self.ly, grid.width()),
            ));
        }
        Ok(())
    }
}

/// Outcome of the destructive test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub uts: f64,
    /// 1-based cell where fracture initiated.
    pub failure_cell: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Specimen {
    pub id: String,
    pub moe: f64,
    pub knots: Vec<Knot>,
    pub observation: Option<Observation>,
}

impl Specimen {
    pub fn validate(&self, grid: &CellGrid) -> Result<()> {
        if !self.moe.is_finite() {
            return Err(Error::invalid("specimen", format!("{}: non-finite MOE", self.id)));
        }
        for k in &self.knots {
            k.validate(grid)
                .map_err(|e| Error::invalid("specimen", format!("{}: {e}", self.id)))?;
        }
        if let Some(obs) = self.observation {
            if !obs.uts.is_finite() {
                return Err(Error::invalid("specimen", format!("{}: non-finite uts", self.id)));
            }
            if obs.failure_cell < 1 || obs.failure_cell > grid.cells() {
                return Err(Error::invalid(
                    "specimen",
                    format!(
                        "{}: failure cell {} outside 1..={}",
                        self.id,
                        obs.failure_cell,
                        grid.cells()
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn max_volume(&self) -> f64 {
        self.knots.iter().map(|k| k.volume).fold(0.0, f64::max)
    }

    pub fn without_observation(&self) -> Specimen {
        Specimen {
            observation: None,
            ..self.clone()
        }
    }
}

/// θ = (η₀, η₁, ρ, σ, β, γ₀, γ₁).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub eta0: f64,
    pub eta1: f64,
    pub rho: f64,
    pub sigma: f64,
    pub beta: f64,
    pub gamma0: f64,
    pub gamma1: f64,
}

impl ModelParams {
    pub const NAMES: [&'static str; 7] = ["eta0", "eta1", "rho", "sigma", "beta", "gamma0", "gamma1"];

    /// Generating values of the simulation study.
    pub const SIMULATION_TRUTH: ModelParams = ModelParams {
        eta0: 3.0,
        eta1: 1.5,
        rho: 0.7,
        sigma: 0.8,
        beta: 0.5,
        gamma0: 0.25,
        gamma1: 0.15,
    };

    pub fn validate(&self) -> Result<()> {
        let arr = self.to_array();
        if arr.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("parameters", "non-finite component"));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::invalid("parameters", format!("rho {} not in (0, 1)", self.rho)));
        }
        for (name, v) in [
            ("sigma", self.sigma),
            ("beta", self.beta),
            ("gamma0", self.gamma0),
            ("gamma1", self.gamma1),
        ] {
            if v <= 0.0 {
                return Err(Error::invalid("parameters", format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; 7] {
        [
            self.eta0,
            self.eta1,
            self.rho,
            self.sigma,
            self.beta,
            self.gamma0,
            self.gamma1,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            eta0: v[0],
            eta1: v[1],
            rho: v[2],
            sigma: v[3],
            beta: v[4],
            gamma0: v[5],
            gamma1: v[6],
        }
    }

    /// Stationary mean of the clear-wood process for a specimen with this MOE.
    pub fn mean_strength(&self, moe: f64) -> f64 {
        self.eta0 + self.eta1 * moe
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayKernel {
    #[default]
    Exponential,
    Power,
    Gaussian,
}

impl DecayKernel {
    /// h(d) without the cutoff indicator. Power is infinite at d = 0.
    #[inline]
    pub fn eval(&self, d: f64, beta: f64) -> f64 {
        match self {
            DecayKernel::Exponential => (-beta * d).exp(),
            DecayKernel::Power => d.powf(-beta),
            DecayKernel::Gaussian => (-beta * d * d).exp(),
        }
    }

    /// ∂h/∂β divided by h, i.e. ∂ log h / ∂β.
    #[inline]
    pub fn dlog_dbeta(&self, d: f64) -> f64 {
        match self {
            DecayKernel::Exponential => -d,
            DecayKernel::Power => -d.ln(),
            DecayKernel::Gaussian => -d * d,
        }
    }
}

pub fn cell_centroids(grid: &CellGrid) -> Vec<(f64, f64)> {
    (1..=grid.cells()).map(|j| grid.centroid(j)).collect()
}

/// J×K Euclidean distances between cell centroids and knot centroids.
pub fn distance_matrix(grid: &CellGrid, knots: &[Knot]) -> DMatrix<f64> {
    DMatrix::from_fn(grid.cells(), knots.len(), |j, k| {
        let (cx, cy) = grid.centroid(j + 1);
        (knots[k].lx - cx).hypot(knots[k].ly - cy)
    })
}

pub fn weight_matrix(distances: &DMatrix<f64>, beta: f64, d_max: f64, kernel: DecayKernel) -> Result<DMatrix<f64>> {
    if !(beta > 0.0) {
        return Err(Error::invalid(
            "decay rate",
            format!("beta must be positive, got {beta}"),
        ));
    }
    let mut w = DMatrix::zeros(distances.nrows(), distances.ncols());
    for k in 0..distances.ncols() {
        for j in 0..distances.nrows() {
            let d = distances[(j, k)];
            if d > d_max {
                continue;
            }
            if kernel == DecayKernel::Power && d == 0.0 {
                return Err(Error::KernelSingularity {
                    cell: j + 1,
                    knot: k + 1,
                });
            }
            w[(j, k)] = kernel.eval(d, beta);
        }
    }
    Ok(w)
}

/// Per-knot strength reduction before distance weighting: γ₁·Z for edge knots, γ₀·Z otherwise.
pub fn knot_effects(knots: &[Knot], gamma0: f64, gamma1: f64) -> Vec<f64> {
    knots
        .iter()
        .map(|k| if k.edge { gamma1 } else { gamma0 } * k.volume)
        .collect()
}

/// Y = X − W·effects.
pub fn adjust_strength(clear: &[f64], weights: &DMatrix<f64>, effects: &[f64]) -> Vec<f64> {
    assert_eq!(clear.len(), weights.nrows());
    assert_eq!(effects.len(), weights.ncols());
    clear
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let reduction: f64 = effects.iter().enumerate().map(|(k, e)| weights[(j, k)] * e).sum();
            x - reduction
        })
        .collect()
}

/// (min Y, 1-based argmin); ties go to the lowest index.
pub fn observed_strength(adjusted: &[f64]) -> (f64, usize) {
    assert!(!adjusted.is_empty(), "strength profile must have at least one cell");
    let mut best = 0;
    for (j, &y) in adjusted.iter().enumerate().skip(1) {
        if y < adjusted[best] {
            best = j;
        }
    }
    (adjusted[best], best + 1)
}

/// Stationary AR(1) draw with marginal mean `mu` and innovation sd `sigma`.
pub fn ar1_sample<R: Rng + ?Sized>(rng: &mut R, mu: f64, rho: f64, sigma: f64, cells: usize) -> Vec<f64> {
    let mut x = Vec::with_capacity(cells);
    if cells == 0 {
        return x;
    }
    let sd0 = sigma / (1.0 - rho * rho).sqrt();
    let z: f64 = rng.sample(StandardNormal);
    x.push(mu + sd0 * z);
    for j in 1..cells {
        let z: f64 = rng.sample(StandardNormal);
        let prev = x[j - 1];
        x.push((1.0 - rho) * mu + rho * prev + sigma * z);
    }
    x
}

/// Sequential (innovation-form) log-density of a stationary AR(1) vector.
pub fn ar1_logpdf(x: &[f64], mu: f64, rho: f64, sigma: f64) -> Result<f64> {
    if x.iter().any(|v| !v.is_finite()) || !mu.is_finite() {
        return Err(Error::NonFinite("AR(1) input".into()));
    }
    if !(rho > 0.0 && rho < 1.0) || !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(
            "AR(1) parameters",
            format!("need 0 < rho < 1 and sigma > 0, got rho={rho}, sigma={sigma}"),
        ));
    }
    if x.is_empty() {
        return Ok(0.0);
    }
    let one_m_rho2 = 1.0 - rho * rho;
    let var0 = sigma * sigma / one_m_rho2;
    let a0 = x[0] - mu;
    let mut lp = -0.5 * (LN_2PI + var0.ln() + a0 * a0 / var0);
    let var = sigma * sigma;
    let log_var = var.ln();
    for j in 1..x.len() {
        let r = x[j] - ((1.0 - rho) * mu + rho * x[j - 1]);
        lp -= 0.5 * (LN_2PI + log_var + r * r / var);
    }
    Ok(lp)
}
