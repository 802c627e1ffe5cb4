//! Bayesian spatial model for the tensile strength of knot-bearing lumber.
//!
//! A specimen is split into `J` cells whose knot-free strengths follow a stationary
//! AR(1) process. Every knot lowers nearby cells by a distance-decayed multiple of its
//! volume, and the specimen fails at its weakest cell. The crate covers forward
//! simulation ([`simulator`]), Hamiltonian Monte Carlo over the latent-augmented
//! posterior ([`posterior`], [`sampler`]), and predictive evaluation against
//! regression baselines ([`evaluation`]). [`io`] and [`cli`] handle files and the
//! command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` is how NaN gets rejected

pub mod cli;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod model;
pub mod posterior;
pub mod rng;
pub mod sampler;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};
pub use model::{CellGrid, DecayKernel, Knot, ModelParams, Observation, Specimen};
pub use posterior::{AugmentedPosterior, PriorSpec};
