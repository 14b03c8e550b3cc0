//! Simulation and Bayesian inference for comparing test-negative
//! case-control (TNCC) and crude vaccine-effectiveness estimators.
//!
//! The population is split into two latent healthcare-seeking subsets `s`.
//! Each individual is vaccinated (`v`), infected (`l`) and hospitalised
//! (`h`) with Beta-distributed probabilities `p, r, j, q`; only
//! hospitalised individuals are tested. The crate draws cohorts from that
//! model, computes the closed-form estimators, and samples the posterior of
//! the log odds ratio `t0 = logit(j1) - logit(j0)` by Gibbs sampling over
//! count vectors.

pub mod checks;
pub mod config;
pub mod error;
pub mod estimators;
pub mod generator;
pub mod harness;
pub mod model;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod sampler;
mod sampling;
pub mod stats;

pub use error::{Error, Result};
pub use model::{
    make_beta, named_prior, BetaParams, CohortCounts, ModelParams, ObservedClass, ObservedData,
    PriorName, PriorSpec,
};
pub use rng::RngState;
