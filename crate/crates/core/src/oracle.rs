//! Exact posterior for tiny datasets, used to validate the Gibbs sampler.
//!
//! With the probabilities integrated out, a complete assignment of latent
//! attributes has marginal likelihood equal to the product, over the 13
//! Beta priors, of `B(prior + counts) / B(prior)`. Members of an
//! observation class are exchangeable, so assignments are enumerated as
//! per-class count vectors, each weighted by its multinomial coefficient.

use std::collections::HashMap;

use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};
use crate::estimators::log_odds_ratio;
use crate::model::{BetaParams, CohortCounts, ObservedData, PriorSpec};
use crate::rng::RngState;
use crate::sampler::PROB_CLAMP;
use crate::sampling::beta;
use crate::stats::{centile_sorted, mean, sorted};

/// Largest dataset the oracle accepts.
pub const MAX_INDIVIDUALS: u64 = 12;
/// Largest number of per-class count configurations enumerated.
pub const MAX_CONFIGS: u64 = 5_000_000;

fn ln_beta(b: BetaParams) -> f64 {
    ln_gamma(b.a0) + ln_gamma(b.a1) - ln_gamma(b.a0 + b.a1)
}

fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// `log` of the prior-predictive probability of one labelled assignment
/// with the given completed counts.
pub fn log_marginal_likelihood(prior: &PriorSpec, counts: &CohortCounts) -> f64 {
    let term =
        |b: BetaParams, n0: u64, n1: u64| ln_beta(b.updated(n0 as f64, n1 as f64)) - ln_beta(b);
    let c = |s, v, l, h| counts.count_where(s, v, l, h);
    let mut total = term(
        prior.alpha,
        c(Some(0), None, None, None),
        c(Some(1), None, None, None),
    );
    for s in 0..2 {
        total += term(
            prior.beta[s],
            c(Some(s), Some(0), None, None),
            c(Some(s), Some(1), None, None),
        );
    }
    for v in 0..2 {
        total += term(
            prior.gamma[v],
            c(None, Some(v), Some(0), None),
            c(None, Some(v), Some(1), None),
        );
    }
    for s in 0..2 {
        for l in 0..2 {
            for v in 0..2 {
                total += term(
                    prior.delta[s][l][v],
                    counts.get(s, v, l, 0),
                    counts.get(s, v, l, 1),
                );
            }
        }
    }
    total
}

fn binomial_coeff(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// All ways to write `n` as an ordered sum of `parts` non-negative integers.
fn compositions(n: u64, parts: usize) -> Vec<Vec<u64>> {
    if parts == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(n - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// A distinct completed population with its normalised posterior weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedConfig {
    pub counts: CohortCounts,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct ExactPosterior {
    prior: PriorSpec,
    configs: Vec<WeightedConfig>,
    cumulative: Vec<f64>,
    /// Number of per-class count configurations enumerated.
    pub enumerated: u64,
}

impl ExactPosterior {
    pub fn new(obs: &ObservedData, prior: &PriorSpec) -> Result<Self> {
        prior.validate()?;
        if obs.total() > MAX_INDIVIDUALS {
            return Err(invalid(format!(
                "exact posterior supports at most {MAX_INDIVIDUALS} individuals, got {}",
                obs.total()
            )));
        }
        let classes: Vec<_> = obs
            .classes()
            .iter()
            .map(|c| (c, c.compatible_cells()))
            .collect();
        let size: u64 = classes
            .iter()
            .map(|(c, cells)| {
                binomial_coeff(c.count + cells.len() as u64 - 1, cells.len() as u64 - 1)
            })
            .product();
        if size > MAX_CONFIGS {
            return Err(invalid(format!(
                "{size} configurations exceed the enumeration limit of {MAX_CONFIGS}"
            )));
        }

        // per class: (completed counts contributed, multinomial coefficient)
        let per_class: Vec<Vec<(CohortCounts, f64)>> = classes
            .iter()
            .map(|(class, cells)| {
                compositions(class.count, cells.len())
                    .into_iter()
                    .map(|alloc| {
                        let mut counts = CohortCounts::default();
                        let mut log_coeff = ln_factorial(class.count);
                        for (&[s, v, l], &k) in cells.iter().zip(&alloc) {
                            counts.add(s, v, l, class.hospitalised as usize, k);
                            log_coeff -= ln_factorial(k);
                        }
                        (counts, log_coeff.exp().round())
                    })
                    .collect()
            })
            .collect();

        // labellings grouped by completed counts; at most 12! so exact in f64
        let mut combined: HashMap<CohortCounts, f64> = HashMap::new();
        combined.insert(CohortCounts::default(), 1.0);
        let mut enumerated = 1u64;
        for options in &per_class {
            enumerated *= options.len() as u64;
            let mut next: HashMap<CohortCounts, f64> = HashMap::new();
            for (base, coeff) in &combined {
                for (add, c) in options {
                    let mut counts = *base;
                    for (k, n) in add.cells() {
                        counts.add(k[0], k[1], k[2], k[3], n);
                    }
                    *next.entry(counts).or_default() += coeff * c;
                }
            }
            combined = next;
        }

        let log_weights: Vec<(CohortCounts, f64)> = combined
            .into_iter()
            .map(|(counts, coeff)| (counts, coeff.ln() + log_marginal_likelihood(prior, &counts)))
            .collect();
        let max = log_weights
            .iter()
            .map(|(_, lw)| *lw)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut configs: Vec<WeightedConfig> = log_weights
            .into_iter()
            .map(|(counts, lw)| WeightedConfig {
                counts,
                weight: (lw - max).exp(),
            })
            .collect();
        // canonical order so sampling is reproducible
        configs.sort_by_key(|c| c.counts.n);
        let total: f64 = configs.iter().map(|c| c.weight).sum();
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(configs.len());
        for c in configs.iter_mut() {
            c.weight /= total;
            acc += c.weight;
            cumulative.push(acc);
        }
        Ok(ExactPosterior {
            prior: *prior,
            configs,
            cumulative,
            enumerated,
        })
    }

    pub fn configs(&self) -> &[WeightedConfig] {
        &self.configs
    }

    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> &WeightedConfig {
        let u: f64 = rng.random::<f64>() * self.cumulative.last().copied().unwrap_or(1.0);
        let i = self.cumulative.partition_point(|c| *c <= u);
        &self.configs[i.min(self.configs.len() - 1)]
    }

    /// One exact posterior draw of `t0`: a configuration by weight, then
    /// `j0`, `j1` from their conditional Beta posteriors.
    pub fn draw_t0(&self, rng: &mut RngState) -> f64 {
        let counts = self.pick(rng).counts;
        let mut j = [0.0; 2];
        for (v, jv) in j.iter_mut().enumerate() {
            let n0 = counts.count_where(None, Some(v), Some(0), None) as f64;
            let n1 = counts.count_where(None, Some(v), Some(1), None) as f64;
            *jv =
                beta(self.prior.gamma[v].updated(n0, n1), rng).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        }
        log_odds_ratio(j[0], j[1]).expect("clamped into (0, 1)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSummary {
    pub c2_5: f64,
    pub c97_5: f64,
    pub mean_t0: f64,
    pub n_configs: usize,
}

pub fn exact_posterior_t0(
    obs: &ObservedData,
    prior: &PriorSpec,
    n_draws: usize,
    rng: &mut RngState,
) -> Result<OracleSummary> {
    if n_draws == 0 {
        return Err(invalid("need at least one draw"));
    }
    let post = ExactPosterior::new(obs, prior)?;
    let draws = sorted((0..n_draws).map(|_| post.draw_t0(rng)));
    Ok(OracleSummary {
        c2_5: centile_sorted(&draws, 0.025),
        c97_5: centile_sorted(&draws, 0.975),
        mean_t0: mean(&draws),
        n_configs: post.configs.len(),
    })
}
