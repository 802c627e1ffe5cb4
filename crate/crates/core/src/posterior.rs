//! Latent-augmented posterior over θ and the unobserved cell strengths.
//!
//! Sampling happens on an unconstrained vector
//! `z = [η₀, η₁, logit ρ, log σ, log β, log γ₀, log γ₁, w…]` with one `w` per
//! non-failure cell. The latents are non-centred through the AR(1) innovations. Walking
//! outwards from the failure cell, each cell's clear strength given its neighbour
//! towards the failure cell is normal with sd σ, truncated so that Yⱼ > Y_obs. `w` is
//! the standard-normal variate whose quantile is that truncated normal's quantile:
//! `log Φc(qⱼ) = log Φc(αⱼ) + log Φc(wⱼ)`, `aⱼ = ρ·a_prev + σ·qⱼ`, where `αⱼ` is the
//! standardized truncation bound. The truncation holds by construction and each `w`
//! is a priori N(0, 1) whatever θ is, so the sampler does not have to drag thousands of
//! latents along every time ρ or σ moves. The density on this scale is
//! `log N(a_f) + Σ [log Φc(αⱼ) + log φ(wⱼ)]`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ar1_logpdf, CellGrid, DecayKernel, ModelParams, Specimen};
use crate::stats::{norm_log_sf, norm_log_sf_inv};

/// Number of model parameters at the head of the unconstrained vector.
pub const THETA_DIM: usize = 7;

/// Median of the standard half-normal distribution.
const HALF_NORMAL_MEDIAN: f64 = 0.674_489_750_196_081_7;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorSpec {
    /// Normal sd for η₀ and η₁.
    pub sd_eta: f64,
    /// ρ ~ N(rho_loc, rho_scale²) truncated to (0, 1).
    pub rho_loc: f64,
    pub rho_scale: f64,
    /// Half-normal scale for β, γ₀, γ₁.
    pub half_normal_scale: f64,
    /// Half-Cauchy scale for σ.
    pub cauchy_scale: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            sd_eta: 10.0,
            rho_loc: 0.5,
            rho_scale: 0.5,
            half_normal_scale: 1.0,
            cauchy_scale: 5.0,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sd_eta", self.sd_eta),
            ("rho_scale", self.rho_scale),
            ("half_normal_scale", self.half_normal_scale),
            ("cauchy_scale", self.cauchy_scale),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid("prior", format!("{name} must be positive")));
            }
        }
        if !self.rho_loc.is_finite() {
            return Err(Error::invalid("prior", "rho_loc must be finite"));
        }
        Ok(())
    }

    /// Componentwise prior medians, with ρ at its location.
    pub fn medians(&self) -> ModelParams {
        let hn = self.half_normal_scale * HALF_NORMAL_MEDIAN;
        ModelParams {
            eta0: 0.0,
            eta1: 0.0,
            rho: self.rho_loc.clamp(0.05, 0.95),
            sigma: self.cauchy_scale,
            beta: hn,
            gamma0: hn,
            gamma1: hn,
        }
    }
}

/// Log prior density up to θ-free constants. Caller must pass valid parameters.
pub fn log_prior(params: &ModelParams, prior: &PriorSpec) -> f64 {
    let eta_var = prior.sd_eta * prior.sd_eta;
    let hn_var = prior.half_normal_scale * prior.half_normal_scale;
    let rho_dev = (params.rho - prior.rho_loc) / prior.rho_scale;
    let sigma_ratio = params.sigma / prior.cauchy_scale;
    -0.5 * (params.eta0 * params.eta0 + params.eta1 * params.eta1) / eta_var
        - 0.5 * rho_dev * rho_dev
        - 0.5 * (params.beta * params.beta + params.gamma0 * params.gamma0 + params.gamma1 * params.gamma1) / hn_var
        - (1.0 + sigma_ratio * sigma_ratio).ln()
}

/// ∂ log_prior / ∂θ in constrained coordinates.
fn grad_log_prior(params: &ModelParams, prior: &PriorSpec) -> [f64; THETA_DIM] {
    let eta_var = prior.sd_eta * prior.sd_eta;
    let hn_var = prior.half_normal_scale * prior.half_normal_scale;
    let c2 = prior.cauchy_scale * prior.cauchy_scale;
    [
        -params.eta0 / eta_var,
        -params.eta1 / eta_var,
        -(params.rho - prior.rho_loc) / (prior.rho_scale * prior.rho_scale),
        -2.0 * params.sigma / (c2 + params.sigma * params.sigma),
        -params.beta / hn_var,
        -params.gamma0 / hn_var,
        -params.gamma1 / hn_var,
    ]
}

/// Latent strengths of one specimen's non-failure cells, in cell order.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentBlock {
    pub specimen_index: usize,
    pub y_minus_obs: Vec<f64>,
}

#[derive(Debug, Clone)]
struct SpecimenTerms {
    moe: f64,
    uts: f64,
    /// 0-based failure cell.
    failure: usize,
    knots: usize,
    /// Row-major J×K.
    distances: Vec<f64>,
    volumes: Vec<f64>,
    edge: Vec<bool>,
    latent_offset: usize,
}

/// The augmented posterior for a fixed dataset. Distances are precomputed; weights
/// are rebuilt from β at every evaluation.
#[derive(Debug, Clone)]
pub struct AugmentedPosterior {
    grid: CellGrid,
    kernel: DecayKernel,
    prior: PriorSpec,
    terms: Vec<SpecimenTerms>,
    dim: usize,
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// φ(x)/Φc(x) given log Φc(x).
fn hazard_from_log_sf(x: f64, log_sf: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI - log_sf).exp()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl AugmentedPosterior {
    pub fn new(specimens: &[Specimen], grid: CellGrid, kernel: DecayKernel, prior: PriorSpec) -> Result<Self> {
        prior.validate()?;
        let cells = grid.cells();
        let mut terms = Vec::with_capacity(specimens.len());
        let mut offset = THETA_DIM;
        for s in specimens {
            s.validate(&grid)?;
            let obs = s.observation.ok_or_else(|| {
                Error::invalid(
                    "specimen",
                    format!(
                        "{} has no observed uts/failure cell and cannot enter the likelihood",
                        s.id
                    ),
                )
            })?;
            let k = s.knots.len();
            let mut distances = Vec::with_capacity(cells * k);
            for j in 1..=cells {
                let (cx, cy) = grid.centroid(j);
                for (idx, knot) in s.knots.iter().enumerate() {
                    let d = (knot.lx - cx).hypot(knot.ly - cy);
                    if kernel == DecayKernel::Power && d == 0.0 {
                        return Err(Error::KernelSingularity { cell: j, knot: idx + 1 });
                    }
                    distances.push(d);
                }
            }
            terms.push(SpecimenTerms {
                moe: s.moe,
                uts: obs.uts,
                failure: obs.failure_cell - 1,
                knots: k,
                distances,
                volumes: s.knots.iter().map(|k| k.volume).collect(),
                edge: s.knots.iter().map(|k| k.edge).collect(),
                latent_offset: offset,
            });
            offset += cells - 1;
        }
        Ok(Self {
            grid,
            kernel,
            prior,
            terms,
            dim: offset,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_specimens(&self) -> usize {
        self.terms.len()
    }

    pub fn grid(&self) -> &CellGrid {
        &self.grid
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    /// Constrained θ encoded in the head of `z`.
    pub fn params(&self, z: &[f64]) -> ModelParams {
        ModelParams {
            eta0: z[0],
            eta1: z[1],
            rho: sigmoid(z[2]),
            sigma: z[3].exp(),
            beta: z[4].exp(),
            gamma0: z[5].exp(),
            gamma1: z[6].exp(),
        }
    }

    /// Full adjusted-strength vector Y of specimen `i` implied by `z`.
    pub fn strengths(&self, z: &[f64], i: usize) -> Result<Vec<f64>> {
        let t = &self.terms[i];
        let params = self.params(z);
        let mut s = Scratch::default();
        self.knot_reductions(t, &params, &mut s);
        self.walk(t, z, &params, &mut s)?;
        Ok((0..self.grid.cells()).map(|j| t.uts + s.gap[j]).collect())
    }

    pub fn latent_blocks(&self, z: &[f64]) -> Result<Vec<LatentBlock>> {
        (0..self.terms.len())
            .map(|i| {
                let mut y = self.strengths(z, i)?;
                y.remove(self.terms[i].failure);
                Ok(LatentBlock {
                    specimen_index: i,
                    y_minus_obs: y,
                })
            })
            .collect()
    }

    fn latent_index(t: &SpecimenTerms, j: usize) -> usize {
        t.latent_offset + if j < t.failure { j } else { j - 1 }
    }

    /// Cells in the order the walk visits them: rightwards from the failure cell, then
    /// leftwards. Each cell's predecessor is its neighbour towards the failure cell.
    fn walk_order(&self, t: &SpecimenTerms) -> impl DoubleEndedIterator<Item = (usize, usize)> {
        let f = t.failure;
        (f + 1..self.grid.cells())
            .map(|j| (j, j - 1))
            .chain((0..f).rev().map(|j| (j, j + 1)))
    }

    /// Knot effects, weights at the current β, and each cell's total reduction.
    fn knot_reductions(&self, t: &SpecimenTerms, params: &ModelParams, s: &mut Scratch) {
        let cells = self.grid.cells();
        let d_max = self.grid.d_max();
        s.effects.clear();
        s.effects.extend(
            t.volumes
                .iter()
                .zip(&t.edge)
                .map(|(v, &e)| if e { params.gamma1 } else { params.gamma0 } * v),
        );
        s.weights.clear();
        s.weights.resize(cells * t.knots, 0.0);
        for (w, &d) in s.weights.iter_mut().zip(&t.distances) {
            if d <= d_max {
                *w = self.kernel.eval(d, params.beta);
            }
        }
        s.reduction.clear();
        s.reduction.extend((0..cells).map(|j| {
            let row = &s.weights[j * t.knots..(j + 1) * t.knots];
            row.iter().zip(&s.effects).map(|(w, e)| w * e).sum::<f64>()
        }));
    }

    /// Maps one specimen's latents to strengths and returns its log density on the
    /// latent scale. Needs [`knot_reductions`](Self::knot_reductions) first. Fills the
    /// centred clear strengths `a`, the standardized bounds `alpha`, the quantiles `q`
    /// and the gaps Y − Y_obs.
    fn walk(&self, t: &SpecimenTerms, z: &[f64], params: &ModelParams, s: &mut Scratch) -> Result<f64> {
        let cells = self.grid.cells();
        let (rho, sigma) = (params.rho, params.sigma);
        let mu = params.mean_strength(t.moe);
        for v in [
            &mut s.a,
            &mut s.alpha,
            &mut s.q,
            &mut s.gap,
            &mut s.log_sf_alpha,
            &mut s.log_sf_w,
        ] {
            v.clear();
            v.resize(cells, 0.0);
        }
        let f = t.failure;
        let a_f = t.uts + s.reduction[f] - mu;
        s.a[f] = a_f;
        let var = sigma * sigma / ((1.0 - rho) * (1.0 + rho));
        let mut lp = -LN_SQRT_2PI - 0.5 * var.ln() - 0.5 * a_f * a_f / var;
        for (j, prev) in self.walk_order(t) {
            let w = z[Self::latent_index(t, j)];
            let m = rho * s.a[prev];
            let alpha = (t.uts + s.reduction[j] - mu - m) / sigma;
            let log_tail = norm_log_sf(alpha);
            let log_sf_w = norm_log_sf(w);
            let q = norm_log_sf_inv(log_tail + log_sf_w);
            let gap = sigma * (q - alpha);
            if !(gap > 0.0 && gap.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "latent strength of cell {} at its bound",
                    j + 1
                )));
            }
            s.a[j] = m + sigma * q;
            s.alpha[j] = alpha;
            s.q[j] = q;
            s.gap[j] = gap;
            s.log_sf_alpha[j] = log_tail;
            s.log_sf_w[j] = log_sf_w;
            lp += log_tail - 0.5 * w * w - LN_SQRT_2PI;
        }
        Ok(lp)
    }

    /// Inverse of [`params`](Self::params) plus latents: builds `z` from constrained values.
    pub fn to_unconstrained(&self, params: &ModelParams, latents: &[LatentBlock]) -> Result<Vec<f64>> {
        params.validate()?;
        if latents.len() != self.terms.len() {
            return Err(Error::invalid(
                "latents",
                format!("expected {} blocks, got {}", self.terms.len(), latents.len()),
            ));
        }
        let mut z = vec![0.0; self.dim];
        z[0] = params.eta0;
        z[1] = params.eta1;
        z[2] = logit(params.rho);
        z[3] = params.sigma.ln();
        z[4] = params.beta.ln();
        z[5] = params.gamma0.ln();
        z[6] = params.gamma1.ln();
        let mut s = Scratch::default();
        for block in latents {
            let t = self
                .terms
                .get(block.specimen_index)
                .ok_or_else(|| Error::invalid("latents", format!("no specimen {}", block.specimen_index)))?;
            if block.y_minus_obs.len() != self.grid.cells() - 1 {
                return Err(Error::invalid("latents", "block length must be J - 1"));
            }
            for &y in &block.y_minus_obs {
                if !(y > t.uts) {
                    return Err(Error::invalid(
                        "latents",
                        format!(
                            "specimen {}: latent {y} not above observed {}",
                            block.specimen_index, t.uts
                        ),
                    ));
                }
            }
            self.knot_reductions(t, params, &mut s);
            let mu = params.mean_strength(t.moe);
            let mut a = vec![0.0; self.grid.cells()];
            a[t.failure] = t.uts + s.reduction[t.failure] - mu;
            for (j, prev) in self.walk_order(t) {
                let idx = Self::latent_index(t, j);
                let y = block.y_minus_obs[idx - t.latent_offset];
                let alpha = (t.uts + s.reduction[j] - mu - params.rho * a[prev]) / params.sigma;
                let q = alpha + (y - t.uts) / params.sigma;
                z[idx] = norm_log_sf_inv(norm_log_sf(q) - norm_log_sf(alpha));
                a[j] = y + s.reduction[j] - mu;
            }
        }
        if let Some(i) = z.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("unconstrained coordinate {i}")));
        }
        Ok(z)
    }

    /// Likelihood factor of the augmented posterior at constrained values: the AR(1)
    /// density of the clear strengths X = Y + W·effects.
    pub fn augmented_loglik(&self, params: &ModelParams, latents: &[LatentBlock]) -> Result<f64> {
        params.validate()?;
        let mut s = Scratch::default();
        let mut total = 0.0;
        for block in latents {
            let t = self
                .terms
                .get(block.specimen_index)
                .ok_or_else(|| Error::invalid("latents", format!("no specimen {}", block.specimen_index)))?;
            if block.y_minus_obs.len() != self.grid.cells() - 1 || block.y_minus_obs.iter().any(|&y| !(y > t.uts)) {
                return Err(Error::invalid(
                    "latents",
                    format!("specimen {}: block violates truncation or length", block.specimen_index),
                ));
            }
            self.knot_reductions(t, params, &mut s);
            let mut x = block.y_minus_obs.clone();
            x.insert(t.failure, t.uts);
            for (v, r) in x.iter_mut().zip(&s.reduction) {
                *v += r;
            }
            total += ar1_logpdf(&x, params.mean_strength(t.moe), params.rho, params.sigma)?;
        }
        Ok(total)
    }

    fn theta_log_jacobian(z: &[f64]) -> f64 {
        let rho = sigmoid(z[2]);
        z[3] + z[4] + z[5] + z[6] + rho.ln() + (1.0 - rho).ln()
    }

    /// Log-Jacobian of the unconstrained-to-constrained map at `z`. Each latent adds
    /// log σ + log Φc(α) + log φ(w) − log φ(q).
    pub fn log_jacobian(&self, z: &[f64]) -> Result<f64> {
        let params = self.params(z);
        let mut s = Scratch::default();
        let mut total = Self::theta_log_jacobian(z);
        for t in &self.terms {
            self.knot_reductions(t, &params, &mut s);
            self.walk(t, z, &params, &mut s)?;
            for (j, _) in self.walk_order(t) {
                let w = z[Self::latent_index(t, j)];
                let q = s.q[j];
                total += params.sigma.ln() + norm_log_sf(s.alpha[j]) - 0.5 * w * w + 0.5 * q * q;
            }
        }
        Ok(total)
    }

    pub fn log_density(&self, z: &[f64]) -> Result<f64> {
        self.evaluate(z, None)
    }

    /// Log density and its gradient (written into `grad`).
    pub fn log_density_and_gradient(&self, z: &[f64], grad: &mut [f64]) -> Result<f64> {
        self.evaluate(z, Some(grad))
    }

    fn evaluate(&self, z: &[f64], mut grad: Option<&mut [f64]>) -> Result<f64> {
        if z.len() != self.dim {
            return Err(Error::invalid(
                "state",
                format!("expected dimension {}, got {}", self.dim, z.len()),
            ));
        }
        if let Some(i) = z.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("state coordinate {i}")));
        }
        let params = self.params(z);
        if !(params.rho > 0.0 && params.rho < 1.0) || params.sigma == 0.0 || params.beta == 0.0 {
            return Err(Error::NonFinite("transformed parameters (saturated)".into()));
        }
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }

        let mut scratch = Scratch::default();
        let mut logp = log_prior(&params, &self.prior) + Self::theta_log_jacobian(z);
        for (i, t) in self.terms.iter().enumerate() {
            let lp = self.specimen_term(t, z, &params, &mut scratch, grad.as_deref_mut())?;
            if !lp.is_finite() {
                return Err(Error::NonFinite(format!("likelihood of specimen {i}")));
            }
            logp += lp;
        }
        if !logp.is_finite() {
            return Err(Error::NonFinite("log density".into()));
        }

        if let Some(g) = grad {
            // g[..7] holds constrained-θ derivatives; add the prior, then chain rule.
            let gp = grad_log_prior(&params, &self.prior);
            for (a, b) in g.iter_mut().zip(gp) {
                *a += b;
            }
            let rho = params.rho;
            g[2] = g[2] * rho * (1.0 - rho) + (1.0 - 2.0 * rho);
            g[3] = g[3] * params.sigma + 1.0;
            g[4] = g[4] * params.beta + 1.0;
            g[5] = g[5] * params.gamma0 + 1.0;
            g[6] = g[6] * params.gamma1 + 1.0;
            if let Some(i) = g.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("gradient coordinate {i}")));
            }
        }
        Ok(logp)
    }

    /// One specimen's log density on the latent scale. With `grad`, adds the
    /// constrained-θ derivatives into `grad[..7]` and the latent derivatives into the
    /// specimen's block.
    fn specimen_term(
        &self,
        t: &SpecimenTerms,
        z: &[f64],
        params: &ModelParams,
        s: &mut Scratch,
        grad: Option<&mut [f64]>,
    ) -> Result<f64> {
        self.knot_reductions(t, params, s);
        let lp = self.walk(t, z, params, s)?;
        let Some(g) = grad else {
            return Ok(lp);
        };

        // Reverse pass over the walk. `adj_a[j]` collects ∂lp/∂a_j from the cell that
        // uses a_j as its predecessor.
        let cells = self.grid.cells();
        let (rho, sigma) = (params.rho, params.sigma);
        s.adj_a.clear();
        s.adj_a.resize(cells, 0.0);
        s.adj_r.clear();
        s.adj_r.resize(cells, 0.0);
        let (mut d_mu, mut d_rho, mut d_sigma) = (0.0, 0.0, 0.0);
        for (j, prev) in self.walk_order(t).rev() {
            let idx = Self::latent_index(t, j);
            let w = z[idx];
            let (alpha, q) = (s.alpha[j], s.q[j]);
            // Hazards from the stored tails; log Φc(q) is the sum of the other two.
            let h_alpha = hazard_from_log_sf(alpha, s.log_sf_alpha[j]);
            let h_w = hazard_from_log_sf(w, s.log_sf_w[j]);
            let h_q = hazard_from_log_sf(q, s.log_sf_alpha[j] + s.log_sf_w[j]);
            // a_j = m + σ q, with log Φc(q) = log Φc(α) + log Φc(w)
            let d_a = s.adj_a[j];
            let mut d_m = d_a;
            d_sigma += d_a * q;
            let d_q = d_a * sigma;
            let d_alpha = d_q * h_alpha / h_q - h_alpha;
            g[idx] += d_q * h_w / h_q - w;
            // α = (b − m)/σ with b = Y_obs + r_j − μ
            let d_b = d_alpha / sigma;
            d_m -= d_b;
            d_sigma -= d_alpha * alpha / sigma;
            s.adj_r[j] += d_b;
            d_mu -= d_b;
            // m = ρ a_prev
            d_rho += d_m * s.a[prev];
            s.adj_a[prev] += d_m * rho;
        }
        let f = t.failure;
        let a_f = s.a[f];
        let one_minus = (1.0 - rho) * (1.0 + rho);
        let var = sigma * sigma / one_minus;
        let d_af = s.adj_a[f] - a_f / var;
        s.adj_r[f] += d_af;
        d_mu -= d_af;
        let d_var = -0.5 / var + 0.5 * a_f * a_f / (var * var);
        d_sigma += d_var * 2.0 * var / sigma;
        d_rho += d_var * var * 2.0 * rho / one_minus;

        g[0] += d_mu;
        g[1] += d_mu * t.moe;
        g[2] += d_rho;
        g[3] += d_sigma;
        let mut d_beta = 0.0;
        let mut d_g0 = 0.0;
        let mut d_g1 = 0.0;
        for k in 0..t.knots {
            let mut weighted = 0.0;
            let mut weighted_dbeta = 0.0;
            for j in 0..cells {
                let idx = j * t.knots + k;
                let w = s.weights[idx];
                if w != 0.0 {
                    let ga = s.adj_r[j] * w;
                    weighted += ga;
                    weighted_dbeta += ga * self.kernel.dlog_dbeta(t.distances[idx]);
                }
            }
            d_beta += weighted_dbeta * s.effects[k];
            if t.edge[k] {
                d_g1 += weighted * t.volumes[k];
            } else {
                d_g0 += weighted * t.volumes[k];
            }
        }
        g[4] += d_beta;
        g[5] += d_g0;
        g[6] += d_g1;
        Ok(lp)
    }

    /// Starting point: θ at the prior medians and latents just above the observed UTS.
    pub fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let medians = self.prior.medians();
        let latent_gap = Normal::new(0.5, 0.1).expect("valid normal");
        let blocks: Vec<LatentBlock> = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| LatentBlock {
                specimen_index: i,
                y_minus_obs: (1..self.grid.cells())
                    .map(|_| t.uts + f64::abs(latent_gap.sample(rng)).max(1e-6))
                    .collect(),
            })
            .collect();
        self.to_unconstrained(&medians, &blocks)
            .expect("initial latents lie above the observed strengths")
    }

    /// True when every latent strength in `z` lies strictly above its specimen's UTS.
    pub fn latents_satisfy_truncation(&self, z: &[f64]) -> bool {
        (0..self.terms.len()).all(|i| {
            let t = &self.terms[i];
            self.strengths(z, i)
                .is_ok_and(|y| y.iter().enumerate().all(|(j, &y)| j == t.failure || y > t.uts))
        })
    }
}

#[derive(Default)]
struct Scratch {
    effects: Vec<f64>,
    weights: Vec<f64>,
    reduction: Vec<f64>,
    a: Vec<f64>,
    alpha: Vec<f64>,
    q: Vec<f64>,
    gap: Vec<f64>,
    log_sf_alpha: Vec<f64>,
    log_sf_w: Vec<f64>,
    adj_a: Vec<f64>,
    adj_r: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Knot, Observation};
    use approx::assert_relative_eq;

    fn base() -> ModelParams {
        ModelParams::SIMULATION_TRUTH
    }

    #[test]
    fn eta_prior_difference() {
        let prior = PriorSpec::default();
        let at = |eta0| log_prior(&ModelParams { eta0, ..base() }, &prior);
        assert_relative_eq!(at(0.0) - at(10.0), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn rho_prior_mode() {
        let prior = PriorSpec::default();
        let at = |rho| log_prior(&ModelParams { rho, ..base() }, &prior);
        for rho in [0.1, 0.3, 0.49, 0.51, 0.7, 0.95] {
            assert!(at(0.5) > at(rho));
        }
    }

    #[test]
    fn sigma_prior_half_peak_at_scale() {
        let prior = PriorSpec::default();
        let at = |sigma| log_prior(&ModelParams { sigma, ..base() }, &prior);
        assert_relative_eq!(at(5.0) - at(1e-300), 0.5f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn prior_medians() {
        let m = PriorSpec::default().medians();
        assert_eq!(m.rho, 0.5);
        assert_eq!(m.sigma, 5.0);
        assert_relative_eq!(m.beta, 0.6744897501960817);
    }

    #[test]
    fn missing_observation_is_rejected() {
        let s = Specimen {
            id: "a".into(),
            moe: 1.9,
            knots: vec![],
            observation: None,
        };
        let err = AugmentedPosterior::new(
            &[s],
            CellGrid::standard(),
            DecayKernel::Exponential,
            PriorSpec::default(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn transform_round_trip() {
        let grid = CellGrid::new(3, 12.0, 5.5, 96.0).unwrap();
        let s = Specimen {
            id: "a".into(),
            moe: 2.0,
            knots: vec![Knot {
                lx: 3.0,
                ly: 1.0,
                volume: 5.0,
                edge: true,
            }],
            observation: Some(Observation {
                uts: 4.0,
                failure_cell: 2,
            }),
        };
        let post = AugmentedPosterior::new(&[s], grid, DecayKernel::Exponential, PriorSpec::default()).unwrap();
        let latents = vec![LatentBlock {
            specimen_index: 0,
            y_minus_obs: vec![4.5, 6.25],
        }];
        let z = post.to_unconstrained(&base(), &latents).unwrap();
        assert_eq!(post.strengths(&z, 0).unwrap().len(), 3);
        let back = post.latent_blocks(&z).unwrap();
        assert_relative_eq!(back[0].y_minus_obs[0], 4.5, max_relative = 1e-12);
        assert_relative_eq!(back[0].y_minus_obs[1], 6.25, max_relative = 1e-12);
        let p = post.params(&z);
        for (a, b) in p.to_array().iter().zip(base().to_array()) {
            assert_relative_eq!(*a, b, max_relative = 1e-14);
        }
        let bad = vec![LatentBlock {
            specimen_index: 0,
            y_minus_obs: vec![3.9, 6.0],
        }];
        assert!(post.to_unconstrained(&base(), &bad).is_err());
    }

    #[test]
    fn non_finite_state_names_coordinate() {
        let grid = CellGrid::new(2, 12.0, 5.5, 96.0).unwrap();
        let s = Specimen {
            id: "a".into(),
            moe: 2.0,
            knots: vec![],
            observation: Some(Observation {
                uts: 4.0,
                failure_cell: 1,
            }),
        };
        let post = AugmentedPosterior::new(&[s], grid, DecayKernel::Exponential, PriorSpec::default()).unwrap();
        let mut z = vec![0.0; post.dim()];
        z[7] = f64::NAN;
        match post.log_density(&z) {
            Err(Error::NonFinite(msg)) => assert!(msg.contains('7'), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
